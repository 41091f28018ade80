#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "choir/ad/tensor.hpp"

namespace choir::inline CHOIR_PRECISION_NS::ad {

struct AdamState {
  real beta1 = 0.9;
  real beta2 = 0.999;
  real eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<std::vector<real>> m;  // first moments, one per parameter
  std::vector<std::vector<real>> v;  // second moments, one per parameter
};

// Adam with bias correction. Parameters without a populated gradient are
// treated as having a zero gradient.
class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, real beta1 = 0.9, real beta2 = 0.999, real eps = 1e-8);

  void step(real lr);
  void zero_grad();

  const AdamState& state() const { return state_; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

// Cosine annealing from `initial_lr` at epoch 0 towards 0 at `total_epochs`.
real cosine_lr(std::size_t epoch, std::size_t total_epochs, real initial_lr);

}  // namespace choir::inline CHOIR_PRECISION_NS::ad
