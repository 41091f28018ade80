#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "choir/geometry/types.hpp"

namespace choir::geometry {

inline constexpr double kDefaultContactThreshold = 0.02;  // meters

// 1 for each body vertex whose nearest scene point lies within `threshold`.
// An empty scene yields all zeros.
std::vector<std::uint8_t> contact_from_distance(std::span<const Vec3> body, std::span<const Vec3> scene,
                                                double threshold = kDefaultContactThreshold);

}  // namespace choir::geometry
