#pragma once

#include "choir/ad/real.hpp"
#include <cstddef>

// Dense row-major GEMM kernels. Each output element accumulates over the
// inner dimension in ascending order regardless of its position, so results
// are bitwise invariant under row permutations of the left operand.
// All kernels accumulate into `out`.
namespace choir::inline CHOIR_PRECISION_NS::ad::kernels {

// out(R x C) += a(R x K) * b(K x C)
void gemm_nn(const real* a, const real* b, real* out, std::size_t R, std::size_t K, std::size_t C);
// out(R x C) += a(R x K) * b(C x K)^T
void gemm_nt(const real* a, const real* b, real* out, std::size_t R, std::size_t K, std::size_t C);
// out(R x C) += a(N x R)^T * b(N x C)
void gemm_tn(const real* a, const real* b, real* out, std::size_t N, std::size_t R, std::size_t C);

}  // namespace choir::inline CHOIR_PRECISION_NS::ad::kernels
