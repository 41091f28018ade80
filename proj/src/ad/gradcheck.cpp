#include "choir/ad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "choir/error.hpp"

namespace choir::inline CHOIR_PRECISION_NS::ad {

real relative_error(real analytic, real central) {
  return std::fabs(analytic - central) / std::max<real>(1e-8, std::fabs(central));
}

namespace {

real evaluate(const std::function<Tensor()>& loss) {
  NoGradScope no_grad;
  const real v = loss().item();
  if (!std::isfinite(v)) throw NumericError("gradient check: function returned a non-finite value");
  return v;
}

}  // namespace

GradCheckReport gradient_check(const std::function<Tensor()>& loss, std::span<Tensor> params, real h) {
  if (!(h > 0.0)) throw UsageError("gradient check: step must be positive");
  for (auto& p : params) p.zero_grad();

  real base = 0.0;
  {
    Graph graph;
    GraphScope scope(graph);
    Tensor l = loss();
    base = l.item();
    graph.backward(l);
  }
  if (!std::isfinite(base)) throw NumericError("gradient check: function returned a non-finite value");
  const real again = evaluate(loss);
  if (again != base || evaluate(loss) != base) {
    throw UsageError("gradient check: function is not deterministic at the base point");
  }

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& p = params[pi];
    std::vector<real> analytic(p.size(), 0.0);
    if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
    auto values = p.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const real x0 = values[i];
      values[i] = x0 + h;
      const real fp = evaluate(loss);
      values[i] = x0 - h;
      const real fm = evaluate(loss);
      values[i] = x0;
      const real central = (fp - fm) / (2.0 * h);
      const real err = relative_error(analytic[i], central);
      ++report.coordinates;
      if (err > report.max_relative_error || report.worst.empty()) {
        report.max_relative_error = std::max(report.max_relative_error, err);
        std::ostringstream os;
        os.precision(10);
        os << "param " << pi << "[" << i << "]: analytic " << analytic[i] << " vs central " << central;
        report.worst = os.str();
      }
    }
  }
  for (auto& p : params) p.zero_grad();
  return report;
}

real finite_difference_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, real h) {
  Tensor param = Tensor::parameter(x.shape(), std::vector<real>(x.values().begin(), x.values().end()));
  std::vector<Tensor> params{param};
  return gradient_check([&] { return f(param); }, params, h).max_relative_error;
}

}  // namespace choir::inline CHOIR_PRECISION_NS::ad
