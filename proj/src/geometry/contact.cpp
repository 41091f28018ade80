#include "choir/geometry/contact.hpp"

#include "choir/error.hpp"

namespace choir::geometry {

std::vector<std::uint8_t> contact_from_distance(std::span<const Vec3> body, std::span<const Vec3> scene,
                                                double threshold) {
  if (!(threshold > 0.0)) throw UsageError("contact_from_distance: threshold must be positive");
  std::vector<std::uint8_t> out(body.size(), 0);
  for (std::size_t i = 0; i < body.size(); ++i) {
    for (const auto& p : scene) {
      if ((body[i] - p).norm() <= threshold) {
        out[i] = 1;
        break;
      }
    }
  }
  return out;
}

}  // namespace choir::geometry
