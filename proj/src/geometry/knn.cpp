#include "choir/geometry/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "choir/error.hpp"

namespace choir::geometry {

namespace {

void nearest(std::span<const Vec3> points, std::size_t src, std::span<const std::size_t> candidates, std::size_t k,
             std::vector<std::pair<double, std::size_t>>& scratch, KnnGraph& out) {
  scratch.clear();
  const Vec3& p = points[src];
  for (std::size_t c : candidates) {
    if (c == src) continue;
    scratch.emplace_back((points[c] - p).squaredNorm(), c);
  }
  const std::size_t take = std::min(k, scratch.size());
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(take), scratch.end());
  for (std::size_t j = 0; j < take; ++j) {
    out.neighbors.push_back(scratch[j].second);
    out.distances.push_back(std::sqrt(scratch[j].first));
  }
}

}  // namespace

KnnGraph knn_graph(std::span<const Vec3> points, std::size_t k) {
  if (k == 0 || points.size() <= k) {
    throw UsageError("knn_graph: need more than k points (N=" + std::to_string(points.size()) +
                     ", k=" + std::to_string(k) + ")");
  }
  for (const auto& p : points)
    if (!p.allFinite()) throw DataError("knn_graph: non-finite point");
  std::vector<std::size_t> all(points.size());
  std::iota(all.begin(), all.end(), 0);
  KnnGraph g;
  g.k = k;
  g.neighbors.reserve(points.size() * k);
  g.distances.reserve(points.size() * k);
  std::vector<std::pair<double, std::size_t>> scratch;
  scratch.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) nearest(points, i, all, k, scratch, g);
  return g;
}

KnnGraph knn_among(std::span<const Vec3> points, std::span<const std::size_t> sources,
                   std::span<const std::size_t> candidates, std::size_t k) {
  KnnGraph g;
  std::size_t available = candidates.size();
  for (std::size_t s : sources) {
    if (s >= points.size()) throw DataError("knn_among: source index out of range");
    // A source that is itself a candidate cannot be its own neighbor.
    if (std::find(candidates.begin(), candidates.end(), s) != candidates.end()) {
      available = std::min(available, candidates.size() - 1);
    }
  }
  for (std::size_t c : candidates)
    if (c >= points.size()) throw DataError("knn_among: candidate index out of range");
  g.k = std::min(k, available);
  if (g.k == 0) return g;
  std::vector<std::pair<double, std::size_t>> scratch;
  for (std::size_t s : sources) nearest(points, s, candidates, g.k, scratch, g);
  return g;
}

}  // namespace choir::geometry
