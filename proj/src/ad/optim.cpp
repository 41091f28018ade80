#include "choir/ad/optim.hpp"

#include <cmath>
#include <numbers>

#include "choir/error.hpp"

namespace choir::inline CHOIR_PRECISION_NS::ad {

Adam::Adam(std::vector<Tensor> params, real beta1, real beta2, real eps) : params_(std::move(params)) {
  state_.beta1 = beta1;
  state_.beta2 = beta2;
  state_.eps = eps;
  for (const auto& p : params_) {
    if (!p.requires_grad()) throw UsageError("adam: tensor #" + std::to_string(p.id()) + " is not a parameter");
    state_.m.emplace_back(p.size(), 0.0);
    state_.v.emplace_back(p.size(), 0.0);
  }
}

void Adam::step(real lr) {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw UsageError("adam: learning rate must be positive");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    for (real g : params_[i].grad()) {
      if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient in parameter " + std::to_string(i));
    }
  }
  ++state_.t;
  const real b1 = state_.beta1, b2 = state_.beta2;
  const real c1 = 1.0 - std::pow(b1, static_cast<real>(state_.t));
  const real c2 = 1.0 - std::pow(b2, static_cast<real>(state_.t));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto values = params_[i].mutable_values();
    auto grad = params_[i].grad();
    auto& m = state_.m[i];
    auto& v = state_.v[i];
    const bool has = params_[i].has_grad();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const real g = has ? grad[j] : 0.0;
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const real mhat = m[j] / c1;
      const real vhat = v[j] / c2;
      values[j] -= lr * mhat / (std::sqrt(vhat) + state_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

real cosine_lr(std::size_t epoch, std::size_t total_epochs, real initial_lr) {
  if (total_epochs == 0) throw UsageError("cosine_lr: total_epochs must be positive");
  const real progress = static_cast<real>(epoch) / static_cast<real>(total_epochs);
  return 0.5 * initial_lr * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace choir::inline CHOIR_PRECISION_NS::ad
