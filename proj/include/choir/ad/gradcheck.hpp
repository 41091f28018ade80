#pragma once

#include <functional>
#include <span>
#include <string>

#include "choir/ad/tensor.hpp"

namespace choir::inline CHOIR_PRECISION_NS::ad {

// Relative error used by the checks: |analytic - central| / max(1e-8, |central|).
real relative_error(real analytic, real central);

// Compares the autodiff gradient of the scalar f at x against central
// differences with step h and returns the largest relative error over the
// coordinates of x. f is evaluated twice at x first; differing results
// (non-deterministic f) or non-finite values raise an error.
real finite_difference_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, real h = 1e-5);

struct GradCheckReport {
  real max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst;  // "param[i]: analytic vs central"
};

// Same check over every coordinate of every tensor in `params` (which must
// be parameters read by `loss`). Values are restored afterwards.
GradCheckReport gradient_check(const std::function<Tensor()>& loss, std::span<Tensor> params, real h = 1e-5);

}  // namespace choir::inline CHOIR_PRECISION_NS::ad
