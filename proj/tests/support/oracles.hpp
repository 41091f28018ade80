#pragma once

// Brute-force reference implementations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "choir/ad/tensor.hpp"
#include "choir/geometry/mesh.hpp"
#include "choir/geometry/propagation.hpp"

namespace choir::testing {

// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    std::swap(a[c], a[p]);
    std::swap(b[c], b[p]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

// Raw propagation scores built from the definition with a brute-force
// neighbor search.
inline std::vector<double> oracle_propagation(const geometry::Points& pts, const geometry::AffordanceSeed& seed,
                                              std::size_t k, double alpha) {
  const std::size_t n = pts.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (auto i : seed.red) {
    std::vector<std::pair<double, std::size_t>> cand;
    for (auto j : seed.blue) cand.emplace_back((pts[i] - pts[j]).norm(), j);
    std::sort(cand.begin(), cand.end());
    for (std::size_t m = 0; m < std::min(k, cand.size()); ++m) a[i][cand[m].second] = cand[m].first;
  }
  std::vector<double> deg(n, 0.0);
  std::vector<std::vector<double>> w(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      w[i][j] = 0.5 * (a[i][j] + a[j][i]);
      deg[i] += w[i][j];
    }
  for (auto& d : deg)
    if (d == 0.0) d = 1.0;
  std::vector<std::vector<double>> m(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m[i][j] = (i == j ? 1.0 : 0.0) - alpha * w[i][j] / std::sqrt(deg[i] * deg[j]);
  std::vector<double> y(n, 0.0);
  for (auto i : seed.red) y[i] = 1.0;
  return gauss_solve(m, y);
}

inline std::vector<std::vector<double>> floyd_warshall(const geometry::TemplateMesh& m) {
  const std::size_t n = m.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (const auto& f : m.faces)
    for (int e = 0; e < 3; ++e) {
      const auto a = f[e], b = f[(e + 1) % 3];
      const double w = (m.vertices[a] - m.vertices[b]).norm();
      d[a][b] = std::min(d[a][b], w);
      d[b][a] = std::min(d[b][a], w);
    }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

// Mean over predicted vertices of the all-pairs distance to the nearest
// ground-truth vertex, in centimeters.
inline double oracle_geodesic_cm(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& gt,
                                 const std::vector<std::vector<double>>& d) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pred[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < gt.size(); ++j)
      if (gt[j]) best = std::min(best, d[i][j]);
    total += best;
    ++count;
  }
  return 100.0 * total / static_cast<double>(count);
}

inline double pairwise_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  double hits = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      pairs += 1.0;
      hits += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return hits / pairs;
}

inline double enumerated_aiou(const std::vector<double>& p, const std::vector<double>& g) {
  double total = 0.0;
  for (int i = 1; i <= 99; ++i) {
    const double th = i / 100.0;
    std::set<std::size_t> P, G, I, U;
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p[k] >= th) P.insert(k);
      if (g[k] > 0.0) G.insert(k);
    }
    std::set_intersection(P.begin(), P.end(), G.begin(), G.end(), std::inserter(I, I.begin()));
    std::set_union(P.begin(), P.end(), G.begin(), G.end(), std::inserter(U, U.begin()));
    total += U.empty() ? 1.0 : static_cast<double>(I.size()) / static_cast<double>(U.size());
  }
  return total / 99.0;
}

inline double enumerated_sim(const std::vector<double>& p, const std::vector<double>& q) {
  long double sp = 0, sq = 0, s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i];
    sq += q[i];
  }
  for (std::size_t i = 0; i < p.size(); ++i) s += std::min(p[i] / sp, q[i] / sq);
  return static_cast<double>(s);
}

// dL/dW for z = o W, given dL/dz: o^T delta.
inline std::vector<double> outer_grad(const ad::Tensor& o, std::span<const double> delta, std::size_t out_cols) {
  const std::size_t R = o.rows(), K = o.cols();
  std::vector<double> g(K * out_cols, 0.0);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t c = 0; c < out_cols; ++c) g[k * out_cols + c] += o.values()[r * K + k] * delta[r * out_cols + c];
  return g;
}

}  // namespace choir::testing
