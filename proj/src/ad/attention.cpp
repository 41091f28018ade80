#include "choir/ad/attention.hpp"

#include <cmath>

#include "choir/ad/ops.hpp"
#include "choir/error.hpp"

namespace choir::inline CHOIR_PRECISION_NS::ad {

AttentionResult scaled_dot_product_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                             std::size_t heads) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) throw ShapeError("attention: operands must be matrices");
  const std::size_t C = q.cols();
  if (heads == 0 || C % heads != 0) {
    throw ShapeError("attention: width " + std::to_string(C) + " not divisible by " + std::to_string(heads) +
                     " heads");
  }
  if (k.cols() != C || v.cols() != C || k.rows() != v.rows()) {
    throw ShapeError("attention: incompatible shapes q" + shape_str(q.shape()) + " k" + shape_str(k.shape()) +
                     " v" + shape_str(v.shape()));
  }
  const std::size_t d = C / heads;
  const real inv_sqrt_d = 1.0 / std::sqrt(static_cast<real>(d));

  AttentionResult result;
  std::vector<Tensor> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor qh = heads == 1 ? q : slice(q, Axis::Cols, h * d, d);
    Tensor kh = heads == 1 ? k : slice(k, Axis::Cols, h * d, d);
    Tensor vh = heads == 1 ? v : slice(v, Axis::Cols, h * d, d);
    Tensor w = softmax_rows(scale(matmul_nt(qh, kh), inv_sqrt_d));
    outs.push_back(matmul(w, vh));
    result.weights.push_back(w);
  }
  result.output = heads == 1 ? outs.front() : concat(outs, Axis::Cols);
  return result;
}

}  // namespace choir::inline CHOIR_PRECISION_NS::ad
