#pragma once

#include <array>
#include <span>
#include <vector>

#include "choir/geometry/types.hpp"

namespace choir::geometry {

// Rigid head pose: translation in meters and a rotation matrix.
struct HeadPose {
  Vec3 t = Vec3::Zero();
  Mat3 R = Mat3::Identity();
};

using HeadTrajectory = std::vector<HeadPose>;

// Per-frame pose delta against frame 0: (t_i - t_0, R_0^T R_i) flattened to
// 3 translation values followed by 9 row-major rotation values.
using MotionFrame = std::array<double, 12>;

struct RelativeMotion {
  std::vector<MotionFrame> frames;

  std::size_t size() const { return frames.size(); }
};

bool is_rotation(const Mat3& R, double tol = 1e-9);

// Throws DataError when a pose rotation is not orthonormal with det 1.
RelativeMotion relative_motion(std::span<const HeadPose> trajectory);

Mat3 rot_x(double radians);
Mat3 rot_y(double radians);
Mat3 rot_z(double radians);

// Geodesic angle of a rotation in radians, in [0, pi].
double rotation_angle(const Mat3& R);

}  // namespace choir::geometry
