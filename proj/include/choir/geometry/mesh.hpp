#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "choir/geometry/types.hpp"

namespace choir::geometry {

enum class BodyPart : std::uint8_t { Head, Torso, Back, Arms, Hands, Pelvis, Thighs, Legs, Feet };
inline constexpr std::size_t kBodyPartCount = 9;

std::string_view body_part_name(BodyPart part);

using Face = std::array<std::uint32_t, 3>;

// Fixed-topology body surrogate: a closed-ring tube with labeled regions.
struct TemplateMesh {
  Points vertices;  // meters
  std::vector<Face> faces;
  std::vector<BodyPart> parts;  // one per vertex

  std::size_t size() const { return vertices.size(); }
  // Throws DataError if a face references a missing vertex or the edge graph
  // is disconnected.
  void validate() const;
};

// Procedural template with `vertex_count` vertices, arranged as rings of
// 16, 12, 8, 6, 4 or 3 vertices (the largest that divides the count with at
// least three rings).
TemplateMesh make_template_mesh(std::size_t vertex_count = 512);

// Undirected edge adjacency weighted by Euclidean edge length.
struct EdgeGraph {
  std::vector<std::vector<std::pair<std::uint32_t, double>>> adjacency;
};

EdgeGraph edge_graph(const TemplateMesh& mesh);
bool is_connected(const EdgeGraph& graph);

// Shortest edge-path distance from every vertex to the nearest source
// (infinity when unreachable or no sources).
std::vector<double> geodesic_distances(const EdgeGraph& graph, std::span<const std::uint32_t> sources);

struct GeodesicError {
  double centimeters = 0.0;
  bool empty_prediction = false;    // defined as 0 cm
  bool empty_ground_truth = false;  // undefined; reported as 0 cm
};

// Mean over predicted vertices of the geodesic distance to the nearest
// ground-truth vertex, in centimeters. Inputs are per-vertex 0/1 masks.
GeodesicError geodesic_error(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                             const TemplateMesh& mesh);
GeodesicError geodesic_error(std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> truth,
                             const EdgeGraph& graph);

}  // namespace choir::geometry
