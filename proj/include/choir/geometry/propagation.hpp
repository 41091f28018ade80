#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "choir/geometry/types.hpp"

namespace choir::geometry {

// Annotated seed regions: `red` is the high-probability interaction region,
// `blue` the adjacent region that labels may spread into.
struct AffordanceSeed {
  std::vector<std::size_t> red;
  std::vector<std::size_t> blue;

  // Throws DataError unless both sets are disjoint subsets of [0, n).
  void validate(std::size_t n) const;
};

enum class PropagationForm {
  // S = (I - alpha * Shat)^-1 Y
  Standard,
  // S = (I - alpha * Shat^-1) Y, the inverse placed on the normalized
  // affinity alone. Kept for comparison; usually singular.
  InverseOnAffinity,
};

struct PropagationOptions {
  double alpha = 0.995;
  std::size_t k = 5;
  PropagationForm form = PropagationForm::Standard;
};

// A_ij = ||v_i - v_j|| for red i and blue j among the k nearest blue points
// of v_i, else 0.
Eigen::MatrixXd seed_affinity(std::span<const Vec3> points, const AffordanceSeed& seed, std::size_t k);

// D^-1/2 W D^-1/2 with W = (A + A^T)/2; zero-degree rows use degree 1.
Eigen::MatrixXd normalized_affinity(std::span<const Vec3> points, const AffordanceSeed& seed, std::size_t k);

// One-hot indicator of the red set.
Eigen::VectorXd seed_indicator(std::size_t n, const AffordanceSeed& seed);

// Unnormalized propagated scores. Throws NumericError with a reciprocal
// condition estimate when the system is singular.
Eigen::VectorXd propagate_raw(std::span<const Vec3> points, const AffordanceSeed& seed,
                              const PropagationOptions& options = {});

// Min-max normalizes raw scores to [0, 1], zeroes points outside red and
// blue, and sets red points to 1.
std::vector<double> normalize_affordance(const Eigen::VectorXd& raw, const AffordanceSeed& seed);

// Per-point affordance probabilities in [0, 1].
std::vector<double> propagate_affordance(std::span<const Vec3> points, const AffordanceSeed& seed,
                                         const PropagationOptions& options = {});

// Fixed-point iteration S <- alpha * Shat * S + Y until the largest update
// falls below `tol` (or `max_iters`). Returns raw scores.
Eigen::VectorXd propagate_iterative(std::span<const Vec3> points, const AffordanceSeed& seed, double alpha,
                                    std::size_t k, double tol = 1e-13, std::size_t max_iters = 200000);

}  // namespace choir::geometry
