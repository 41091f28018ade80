#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "choir/geometry/mesh.hpp"

namespace choir::io {

// ASCII PLY with xyz positions, an optional per-vertex "quality" scalar and
// optional triangle faces.
struct PlyData {
  geometry::Points vertices;
  std::vector<geometry::Face> faces;
  std::optional<std::vector<double>> quality;
  std::vector<std::string> comments;
};

// Throws DataError on malformed input.
PlyData read_ply(const std::filesystem::path& path);
PlyData parse_ply(const std::string& text);

std::string format_ply(const PlyData& ply);
void write_ply(const std::filesystem::path& path, const PlyData& ply);

}  // namespace choir::io
