#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "choir/ad/attention.hpp"
#include "choir/ad/tensor.hpp"

namespace choir::inline CHOIR_PRECISION_NS::nn {

using ad::Tensor;
using Rng = std::mt19937_64;

// Named parameters in registration order. The order is part of the
// checkpoint format and of the optimizer state layout.
class ParameterSet {
 public:
  Tensor add(const std::string& name, ad::Shape shape, std::vector<real> values);
  // uniform(-1/sqrt(fan_in), +1/sqrt(fan_in))
  Tensor uniform(const std::string& name, ad::Shape shape, std::size_t fan_in, Rng& rng);

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, bool bias, Rng& rng);

  Tensor operator()(const Tensor& x) const;

  const Tensor& weight() const { return weight_; }  // in x out
  const Tensor& bias() const { return bias_; }      // 1 x out, undefined when bias-free
  bool has_bias() const { return bias_.defined(); }

 private:
  Tensor weight_;
  Tensor bias_;
};

// Linear layers with GELU between consecutive layers (none after the last).
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterSet& params, const std::string& name, const std::vector<std::size_t>& widths, Rng& rng);

  Tensor operator()(const Tensor& x) const;
  const std::vector<Linear>& layers() const { return layers_; }

 private:
  std::vector<Linear> layers_;
};

// Row-wise layer normalization with learned gain and bias.
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterSet& params, const std::string& name, std::size_t width, real eps = 1e-5);

  Tensor operator()(const Tensor& x) const;

 private:
  Tensor gain_;
  Tensor bias_;
  real eps_ = 1e-5;
};

// Multi-head attention with bias-free q/k/v projections and an output
// projection. With all-zero key/value inputs the value path is exactly zero.
class MultiHeadAttention {
 public:
  struct Trace {
    Tensor q, k, v;       // projected inputs
    Tensor attended;      // heads concatenated, before output projection
    std::vector<Tensor> weights;
  };

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterSet& params, const std::string& name, std::size_t width, std::size_t heads,
                     bool out_bias, Rng& rng);

  Tensor operator()(const Tensor& query, const Tensor& context, Trace* trace = nullptr) const;

  const Linear& q_proj() const { return q_; }
  const Linear& k_proj() const { return k_; }
  const Linear& v_proj() const { return v_; }
  const Linear& out_proj() const { return out_; }
  std::size_t heads() const { return heads_; }

 private:
  Linear q_, k_, v_, out_;
  std::size_t heads_ = 1;
};

}  // namespace choir::inline CHOIR_PRECISION_NS::nn
