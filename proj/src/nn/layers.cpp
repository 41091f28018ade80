#include "choir/nn/layers.hpp"

#include <cmath>

#include "choir/ad/ops.hpp"
#include "choir/error.hpp"

namespace choir::inline CHOIR_PRECISION_NS::nn {

Tensor ParameterSet::add(const std::string& name, ad::Shape shape, std::vector<real> values) {
  if (contains(name)) throw UsageError("parameter '" + name + "' registered twice");
  Tensor t = Tensor::parameter(std::move(shape), std::move(values));
  entries_.emplace_back(name, t);
  return t;
}

Tensor ParameterSet::uniform(const std::string& name, ad::Shape shape, std::size_t fan_in, Rng& rng) {
  // Drawn in double so every precision build starts from the same values.
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<real> values(ad::numel(shape));
  for (real& v : values) v = dist(rng);
  return add(name, std::move(shape), std::move(values));
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& [_, t] : entries_) out.push_back(t);
  return out;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return t;
  throw UsageError("unknown parameter '" + name + "'");
}

bool ParameterSet::contains(const std::string& name) const {
  for (const auto& [n, _] : entries_)
    if (n == name) return true;
  return false;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : entries_) n += t.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [_, t] : entries_) t.zero_grad();
}

Linear::Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, bool bias,
               Rng& rng) {
  weight_ = params.uniform(name + ".weight", {in, out}, in, rng);
  if (bias) bias_ = params.uniform(name + ".bias", {1, out}, in, rng);
}

Tensor Linear::operator()(const Tensor& x) const {
  Tensor y = ad::matmul(x, weight_);
  return bias_.defined() ? ad::add(y, bias_) : y;
}

Mlp::Mlp(ParameterSet& params, const std::string& name, const std::vector<std::size_t>& widths, Rng& rng) {
  if (widths.size() < 2) throw UsageError("mlp '" + name + "' needs at least two widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers_.emplace_back(params, name + "." + std::to_string(i), widths[i], widths[i + 1], true, rng);
  }
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](h);
    if (i + 1 < layers_.size()) h = ad::gelu(h);
  }
  return h;
}

LayerNorm::LayerNorm(ParameterSet& params, const std::string& name, std::size_t width, real eps) : eps_(eps) {
  gain_ = params.add(name + ".gain", {1, width}, std::vector<real>(width, 1.0));
  bias_ = params.add(name + ".bias", {1, width}, std::vector<real>(width, 0.0));
}

Tensor LayerNorm::operator()(const Tensor& x) const {
  return ad::add(ad::mul(ad::layer_norm_rows(x, eps_), gain_), bias_);
}

MultiHeadAttention::MultiHeadAttention(ParameterSet& params, const std::string& name, std::size_t width,
                                       std::size_t heads, bool out_bias, Rng& rng)
    : heads_(heads) {
  if (heads == 0 || width % heads != 0) {
    throw ShapeError("attention '" + name + "': width " + std::to_string(width) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  q_ = Linear(params, name + ".q", width, width, false, rng);
  k_ = Linear(params, name + ".k", width, width, false, rng);
  v_ = Linear(params, name + ".v", width, width, false, rng);
  out_ = Linear(params, name + ".out", width, width, out_bias, rng);
}

Tensor MultiHeadAttention::operator()(const Tensor& query, const Tensor& context, Trace* trace) const {
  Tensor q = q_(query);
  Tensor k = k_(context);
  Tensor v = v_(context);
  auto att = ad::scaled_dot_product_attention(q, k, v, heads_);
  if (trace) {
    trace->q = q;
    trace->k = k;
    trace->v = v;
    trace->attended = att.output;
    trace->weights = att.weights;
  }
  return out_(att.output);
}

}  // namespace choir::inline CHOIR_PRECISION_NS::nn
