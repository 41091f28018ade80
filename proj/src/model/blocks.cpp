#include "choir/model/blocks.hpp"

#include "choir/ad/attention.hpp"
#include "choir/ad/ops.hpp"
#include "choir/error.hpp"

namespace choir::inline CHOIR_PRECISION_NS::model {

ParallelCrossAttention::ParallelCrossAttention(nn::ParameterSet& params, const std::string& name, std::size_t width,
                                               std::size_t heads, nn::Rng& rng)
    : heads_(heads) {
  if (heads == 0 || width % heads != 0) {
    throw ShapeError("parallel cross-attention '" + name + "': width " + std::to_string(width) +
                     " not divisible by " + std::to_string(heads) + " heads");
  }
  q_ = nn::Linear(params, name + ".q", width, width, false, rng);
  for (std::size_t b = 0; b < 2; ++b) {
    const std::string bn = name + ".branch" + std::to_string(b);
    k_[b] = nn::Linear(params, bn + ".k", width, width, false, rng);
    v_[b] = nn::Linear(params, bn + ".v", width, width, false, rng);
    out_[b] = nn::Linear(params, bn + ".out", width, width, true, rng);
  }
  fusion_ = nn::Mlp(params, name + ".fusion", {2 * width, 2 * width, width}, rng);
  norm_ = nn::LayerNorm(params, name + ".norm", width);
}

Tensor ParallelCrossAttention::operator()(const Tensor& query, const Tensor& kv0, const Tensor& kv1, Trace* trace,
                                          real dropout, nn::Rng* dropout_rng) const {
  Tensor q = q_(query);
  const Tensor* kv[2] = {&kv0, &kv1};
  Tensor outs[2];
  for (std::size_t b = 0; b < 2; ++b) {
    Tensor k = k_[b](*kv[b]);
    Tensor v = v_[b](*kv[b]);
    outs[b] = out_[b](ad::scaled_dot_product_attention(q, k, v, heads_).output);
    if (trace) trace->branch[b] = {*kv[b], k, v, outs[b]};
  }
  if (trace) {
    trace->query_input = query;
    trace->q = q;
  }
  Tensor fused = fusion_(ad::concat({outs[0], outs[1]}, ad::Axis::Cols));
  if (dropout_rng && dropout > 0.0) fused = ad::dropout(fused, dropout, *dropout_rng);
  return norm_(ad::add(query, fused));
}

}  // namespace choir::inline CHOIR_PRECISION_NS::model
