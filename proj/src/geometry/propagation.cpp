#include "choir/geometry/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "choir/error.hpp"
#include "choir/geometry/knn.hpp"

namespace choir::geometry {

void AffordanceSeed::validate(std::size_t n) const {
  std::vector<char> mark(n, 0);
  for (std::size_t i : red) {
    if (i >= n) throw DataError("affordance seed: red index " + std::to_string(i) + " out of range");
    mark[i] = 1;
  }
  for (std::size_t i : blue) {
    if (i >= n) throw DataError("affordance seed: blue index " + std::to_string(i) + " out of range");
    if (mark[i] == 1) throw DataError("affordance seed: index " + std::to_string(i) + " is both red and blue");
  }
}

Eigen::MatrixXd seed_affinity(std::span<const Vec3> points, const AffordanceSeed& seed, std::size_t k) {
  const std::size_t n = points.size();
  seed.validate(n);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (seed.red.empty() || seed.blue.empty() || k == 0) return A;
  KnnGraph g = knn_among(points, seed.red, seed.blue, k);
  for (std::size_t r = 0; r < seed.red.size(); ++r) {
    for (std::size_t j = 0; j < g.k; ++j) {
      A(static_cast<Eigen::Index>(seed.red[r]), static_cast<Eigen::Index>(g.neighbors[r * g.k + j])) =
          g.distances[r * g.k + j];
    }
  }
  return A;
}

Eigen::MatrixXd normalized_affinity(std::span<const Vec3> points, const AffordanceSeed& seed, std::size_t k) {
  const Eigen::MatrixXd A = seed_affinity(points, seed, k);
  const Eigen::MatrixXd W = 0.5 * (A + A.transpose());
  Eigen::VectorXd d = W.rowwise().sum();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (d[i] == 0.0) d[i] = 1.0;
  const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
  return s.asDiagonal() * W * s.asDiagonal();
}

Eigen::VectorXd seed_indicator(std::size_t n, const AffordanceSeed& seed) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i : seed.red) y[static_cast<Eigen::Index>(i)] = 1.0;
  return y;
}

namespace {

[[noreturn]] void singular(const char* what, double rcond) {
  std::ostringstream os;
  os << "propagate_affordance: singular " << what << " (reciprocal condition estimate " << rcond << ")";
  throw NumericError(os.str());
}

}  // namespace

Eigen::VectorXd propagate_raw(std::span<const Vec3> points, const AffordanceSeed& seed,
                              const PropagationOptions& options) {
  if (!(options.alpha >= 0.0 && options.alpha < 1.0)) {
    throw UsageError("propagate_affordance: alpha must lie in [0, 1)");
  }
  const std::size_t n = points.size();
  const Eigen::VectorXd y = seed_indicator(n, seed);
  const Eigen::MatrixXd S = normalized_affinity(points, seed, options.k);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(S.rows(), S.cols());
  constexpr double kMinRcond = 1e-14;

  if (options.form == PropagationForm::Standard) {
    const Eigen::MatrixXd M = I - options.alpha * S;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    const double rc = lu.rcond();
    if (!(rc > kMinRcond)) singular("system I - alpha*Shat", rc);
    return lu.solve(y);
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
  const double rc = (n == 0 || !lu.isInvertible()) ? 0.0 : lu.rcond();
  if (!(rc > kMinRcond)) singular("normalized affinity Shat", rc);
  return (I - options.alpha * lu.inverse()) * y;
}

std::vector<double> normalize_affordance(const Eigen::VectorXd& raw, const AffordanceSeed& seed) {
  const std::size_t n = static_cast<std::size_t>(raw.size());
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  const double span = hi - lo;
  std::vector<char> labeled(n, 0);
  for (std::size_t i : seed.blue) labeled[i] = 1;
  for (std::size_t i : seed.red) labeled[i] = 2;
  for (std::size_t i = 0; i < n; ++i) {
    if (labeled[i] == 0) continue;
    if (labeled[i] == 2) {
      out[i] = 1.0;
    } else if (span > 0.0) {
      out[i] = std::clamp((raw[static_cast<Eigen::Index>(i)] - lo) / span, 0.0, 1.0);
    }
  }
  return out;
}

std::vector<double> propagate_affordance(std::span<const Vec3> points, const AffordanceSeed& seed,
                                         const PropagationOptions& options) {
  return normalize_affordance(propagate_raw(points, seed, options), seed);
}

Eigen::VectorXd propagate_iterative(std::span<const Vec3> points, const AffordanceSeed& seed, double alpha,
                                    std::size_t k, double tol, std::size_t max_iters) {
  const Eigen::VectorXd y = seed_indicator(points.size(), seed);
  const Eigen::MatrixXd S = normalized_affinity(points, seed, k);
  Eigen::VectorXd s = y;
  for (std::size_t it = 0; it < max_iters; ++it) {
    Eigen::VectorXd next = alpha * (S * s) + y;
    const double delta = (next - s).cwiseAbs().maxCoeff();
    s = std::move(next);
    if (delta < tol) break;
  }
  return s;
}

}  // namespace choir::geometry
