#pragma once

#include <array>
#include <string>

#include "choir/ad/tensor.hpp"
#include "choir/nn/layers.hpp"

namespace choir::inline CHOIR_PRECISION_NS::model {

using ad::Tensor;

// One query stream attending to two key/value streams in parallel, fused by
// an MLP over the concatenated branch outputs, with a residual and layer norm.
// The shared query projection and the per-branch key/value projections are
// bias-free.
class ParallelCrossAttention {
 public:
  struct BranchTrace {
    Tensor input;  // key/value source after modulation
    Tensor k, v;   // projected keys and values
    Tensor output; // branch output after its output projection
  };
  struct Trace {
    Tensor query_input;
    Tensor q;
    std::array<BranchTrace, 2> branch;
  };

  ParallelCrossAttention() = default;
  ParallelCrossAttention(nn::ParameterSet& params, const std::string& name, std::size_t width, std::size_t heads,
                         nn::Rng& rng);

  // `dropout_rng` enables dropout on the fused update when non-null.
  Tensor operator()(const Tensor& query, const Tensor& kv0, const Tensor& kv1, Trace* trace = nullptr,
                    real dropout = 0.0, nn::Rng* dropout_rng = nullptr) const;

  const nn::Linear& q_proj() const { return q_; }
  const nn::Linear& k_proj(std::size_t branch) const { return k_[branch]; }
  const nn::Linear& v_proj(std::size_t branch) const { return v_[branch]; }

 private:
  std::size_t heads_ = 1;
  nn::Linear q_;
  std::array<nn::Linear, 2> k_, v_, out_;
  nn::Mlp fusion_;
  nn::LayerNorm norm_;
};

}  // namespace choir::inline CHOIR_PRECISION_NS::model
