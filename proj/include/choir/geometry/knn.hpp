#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "choir/geometry/types.hpp"

namespace choir::geometry {

// k nearest neighbors per source point, row-major (source * k + j).
// Distances ascend within a row; equal distances are ordered by index.
struct KnnGraph {
  std::size_t k = 0;
  std::vector<std::size_t> neighbors;
  std::vector<double> distances;

  std::size_t sources() const { return k == 0 ? 0 : neighbors.size() / k; }
  std::span<const std::size_t> row(std::size_t i) const { return {neighbors.data() + i * k, k}; }
};

// Exact k nearest neighbors of every point among all other points.
// Requires points.size() > k >= 1.
KnnGraph knn_graph(std::span<const Vec3> points, std::size_t k);

// For each index in `sources`, its min(k, |candidates|) nearest points among
// `candidates` (a point is never its own neighbor). Rows shorter than k are
// not padded: `k` of the result is min(k, |candidates|).
KnnGraph knn_among(std::span<const Vec3> points, std::span<const std::size_t> sources,
                   std::span<const std::size_t> candidates, std::size_t k);

}  // namespace choir::geometry
