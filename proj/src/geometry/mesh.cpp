#include "choir/geometry/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>

#include "choir/error.hpp"

namespace choir::geometry {

std::string_view body_part_name(BodyPart part) {
  switch (part) {
    case BodyPart::Head: return "head";
    case BodyPart::Torso: return "torso";
    case BodyPart::Back: return "back";
    case BodyPart::Arms: return "arms";
    case BodyPart::Hands: return "hands";
    case BodyPart::Pelvis: return "pelvis";
    case BodyPart::Thighs: return "thighs";
    case BodyPart::Legs: return "legs";
    case BodyPart::Feet: return "feet";
  }
  return "unknown";
}

void TemplateMesh::validate() const {
  if (parts.size() != vertices.size()) throw DataError("template mesh: part labels do not cover every vertex");
  for (const auto& f : faces)
    for (auto v : f)
      if (v >= vertices.size()) throw DataError("template mesh: face references missing vertex");
  if (!is_connected(edge_graph(*this))) throw DataError("template mesh: edge graph is disconnected");
}

namespace {

// Body radius (meters) as a function of normalized height u (0 = top).
double radius_at(double u) {
  if (u < 0.13) return 0.10;
  if (u < 0.16) return 0.06;
  if (u < 0.55) return 0.18;
  if (u < 0.65) return 0.17;
  if (u < 0.93) return 0.12 - 0.06 * (u - 0.65) / 0.28;
  return 0.08;
}

BodyPart part_at(double u, double theta) {
  const double side = std::fabs(std::sin(theta));
  const bool front = std::cos(theta) >= 0.0;
  if (u < 0.13) return BodyPart::Head;
  if (u < 0.45) return side >= 0.7 ? BodyPart::Arms : (front ? BodyPart::Torso : BodyPart::Back);
  if (u < 0.55) return side >= 0.7 ? BodyPart::Hands : (front ? BodyPart::Torso : BodyPart::Back);
  if (u < 0.65) return BodyPart::Pelvis;
  if (u < 0.80) return BodyPart::Thighs;
  if (u < 0.93) return BodyPart::Legs;
  return BodyPart::Feet;
}

}  // namespace

TemplateMesh make_template_mesh(std::size_t vertex_count) {
  std::size_t segments = 0;
  for (std::size_t s : {16u, 12u, 8u, 6u, 4u, 3u}) {
    if (vertex_count % s == 0 && vertex_count / s >= 3) {
      segments = s;
      break;
    }
  }
  if (segments == 0) {
    throw UsageError("template mesh: cannot arrange " + std::to_string(vertex_count) + " vertices into rings");
  }
  const std::size_t rings = vertex_count / segments;
  constexpr double kHeight = 1.7;

  TemplateMesh mesh;
  mesh.vertices.reserve(vertex_count);
  mesh.parts.reserve(vertex_count);
  for (std::size_t r = 0; r < rings; ++r) {
    const double u = static_cast<double>(r) / static_cast<double>(rings - 1);
    const double rho = radius_at(u);
    for (std::size_t s = 0; s < segments; ++s) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(s) / static_cast<double>(segments);
      mesh.vertices.emplace_back(rho * std::cos(theta), rho * std::sin(theta), kHeight * (1.0 - u));
      mesh.parts.push_back(part_at(u, theta));
    }
  }
  auto id = [segments](std::size_t r, std::size_t s) {
    return static_cast<std::uint32_t>(r * segments + (s % segments));
  };
  for (std::size_t r = 0; r + 1 < rings; ++r) {
    for (std::size_t s = 0; s < segments; ++s) {
      mesh.faces.push_back({id(r, s), id(r + 1, s), id(r + 1, s + 1)});
      mesh.faces.push_back({id(r, s), id(r + 1, s + 1), id(r, s + 1)});
    }
  }
  return mesh;
}

EdgeGraph edge_graph(const TemplateMesh& mesh) {
  EdgeGraph g;
  g.adjacency.resize(mesh.vertices.size());
  auto link = [&](std::uint32_t a, std::uint32_t b) {
    auto& adj = g.adjacency[a];
    if (std::any_of(adj.begin(), adj.end(), [b](const auto& e) { return e.first == b; })) return;
    const double w = (mesh.vertices[a] - mesh.vertices[b]).norm();
    adj.emplace_back(b, w);
    g.adjacency[b].emplace_back(a, w);
  };
  for (const auto& f : mesh.faces) {
    for (auto v : f)
      if (v >= mesh.vertices.size()) throw DataError("edge_graph: face references missing vertex");
    link(f[0], f[1]);
    link(f[1], f[2]);
    link(f[2], f[0]);
  }
  return g;
}

bool is_connected(const EdgeGraph& graph) {
  const std::size_t n = graph.adjacency.size();
  if (n == 0) return true;
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const auto v = stack.back();
    stack.pop_back();
    for (const auto& [u, _] : graph.adjacency[v]) {
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count == n;
}

std::vector<double> geodesic_distances(const EdgeGraph& graph, std::span<const std::uint32_t> sources) {
  const std::size_t n = graph.adjacency.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (auto s : sources) {
    if (s >= n) throw DataError("geodesic_distances: source out of range");
    dist[s] = 0.0;
    queue.emplace(0.0, s);
  }
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (const auto& [u, w] : graph.adjacency[v]) {
      const double nd = d + w;
      if (nd < dist[u]) {
        dist[u] = nd;
        queue.emplace(nd, u);
      }
    }
  }
  return dist;
}

GeodesicError geodesic_error(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                             const EdgeGraph& graph) {
  const std::size_t n = graph.adjacency.size();
  if (predicted.size() != n || truth.size() != n) {
    throw ShapeError("geodesic_error: masks of size " + std::to_string(predicted.size()) + "/" +
                     std::to_string(truth.size()) + " for a mesh of " + std::to_string(n) + " vertices");
  }
  if (!is_connected(graph)) throw DataError("geodesic_error: mesh edge graph is disconnected");
  GeodesicError result;
  std::vector<std::uint32_t> sources;
  std::size_t predicted_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (truth[i]) sources.push_back(static_cast<std::uint32_t>(i));
    if (predicted[i]) ++predicted_count;
  }
  if (predicted_count == 0) {
    result.empty_prediction = true;
    return result;
  }
  if (sources.empty()) {
    result.empty_ground_truth = true;
    return result;
  }
  const auto dist = geodesic_distances(graph, sources);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (predicted[i]) total += dist[i];
  result.centimeters = 100.0 * total / static_cast<double>(predicted_count);
  return result;
}

GeodesicError geodesic_error(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                             const TemplateMesh& mesh) {
  return geodesic_error(predicted, truth, edge_graph(mesh));
}

}  // namespace choir::geometry
