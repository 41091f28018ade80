#include "choir/ad/kernels.hpp"

#include <algorithm>
#include <vector>

// Every output element accumulates its products in ascending order of the
// contracted index, so results do not depend on how rows are blocked.
namespace choir::inline CHOIR_PRECISION_NS::ad::kernels {

namespace {

// o_r[j] += a_r * b[j] for four output rows sharing one b row.
inline void axpy4(real* o0, real* o1, real* o2, real* o3, real a0, real a1, real a2, real a3,
                  const real* b, std::size_t C) {
  for (std::size_t j = 0; j < C; ++j) {
    const real v = b[j];
    o0[j] += a0 * v;
    o1[j] += a1 * v;
    o2[j] += a2 * v;
    o3[j] += a3 * v;
  }
}

inline void axpy1(real* o, real a, const real* b, std::size_t C) {
  for (std::size_t j = 0; j < C; ++j) o[j] += a * b[j];
}

}  // namespace

void gemm_nn(const real* a, const real* b, real* out, std::size_t R, std::size_t K, std::size_t C) {
  std::size_t i = 0;
  for (; i + 4 <= R; i += 4) {
    real* o = out + i * C;
    const real* ar = a + i * K;
    for (std::size_t k = 0; k < K; ++k) {
      axpy4(o, o + C, o + 2 * C, o + 3 * C, ar[k], ar[K + k], ar[2 * K + k], ar[3 * K + k], b + k * C, C);
    }
  }
  for (; i < R; ++i) {
    real* o = out + i * C;
    const real* ar = a + i * K;
    for (std::size_t k = 0; k < K; ++k) axpy1(o, ar[k], b + k * C, C);
  }
}

void gemm_nt(const real* a, const real* b, real* out, std::size_t R, std::size_t K, std::size_t C) {
  // Transpose b (C x K) to K x C and accumulate each row from zero before
  // adding it to the output.
  std::vector<real> bt(K * C);
  for (std::size_t j = 0; j < C; ++j)
    for (std::size_t k = 0; k < K; ++k) bt[k * C + j] = b[j * K + k];
  std::vector<real> acc(4 * C);
  std::size_t i = 0;
  for (; i + 4 <= R; i += 4) {
    std::fill(acc.begin(), acc.end(), 0.0);
    real* c0 = acc.data();
    const real* ar = a + i * K;
    for (std::size_t k = 0; k < K; ++k) {
      axpy4(c0, c0 + C, c0 + 2 * C, c0 + 3 * C, ar[k], ar[K + k], ar[2 * K + k], ar[3 * K + k], bt.data() + k * C,
            C);
    }
    real* o = out + i * C;
    for (std::size_t j = 0; j < 4 * C; ++j) o[j] += acc[j];
  }
  for (; i < R; ++i) {
    std::fill(acc.begin(), acc.begin() + static_cast<std::ptrdiff_t>(C), 0.0);
    const real* ar = a + i * K;
    for (std::size_t k = 0; k < K; ++k) axpy1(acc.data(), ar[k], bt.data() + k * C, C);
    real* o = out + i * C;
    for (std::size_t j = 0; j < C; ++j) o[j] += acc[j];
  }
}

void gemm_tn(const real* a, const real* b, real* out, std::size_t N, std::size_t R, std::size_t C) {
  std::size_t i = 0;
  for (; i + 4 <= R; i += 4) {
    real* o = out + i * C;
    for (std::size_t n = 0; n < N; ++n) {
      const real* an = a + n * R + i;
      axpy4(o, o + C, o + 2 * C, o + 3 * C, an[0], an[1], an[2], an[3], b + n * C, C);
    }
  }
  for (; i < R; ++i) {
    real* o = out + i * C;
    for (std::size_t n = 0; n < N; ++n) axpy1(o, a[n * R + i], b + n * C, C);
  }
}

}  // namespace choir::inline CHOIR_PRECISION_NS::ad::kernels
