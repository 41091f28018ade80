#include "choir/geometry/pose.hpp"

#include <algorithm>
#include <cmath>

#include "choir/error.hpp"

namespace choir::geometry {

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  const double orth = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return orth <= tol && std::fabs(R.determinant() - 1.0) <= tol;
}

RelativeMotion relative_motion(std::span<const HeadPose> trajectory) {
  if (trajectory.empty()) throw DataError("relative_motion: empty trajectory");
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    if (!is_rotation(trajectory[i].R)) {
      throw DataError("relative_motion: pose " + std::to_string(i) + " has a non-orthonormal rotation");
    }
  }
  const HeadPose& first = trajectory.front();
  const Mat3 inv0 = first.R.transpose();
  RelativeMotion out;
  out.frames.reserve(trajectory.size());
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    MotionFrame f{};
    if (i == 0) {
      f = {0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1};
    } else {
      const Vec3 dt = trajectory[i].t - first.t;
      const Mat3 dR = inv0 * trajectory[i].R;
      for (int k = 0; k < 3; ++k) f[k] = dt[k];
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) f[3 + 3 * r + c] = dR(r, c);
    }
    out.frames.push_back(f);
  }
  return out;
}

Mat3 rot_x(double a) {
  Mat3 R;
  R << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return R;
}

Mat3 rot_y(double a) {
  Mat3 R;
  R << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return R;
}

Mat3 rot_z(double a) {
  Mat3 R;
  R << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return R;
}

double rotation_angle(const Mat3& R) {
  return std::acos(std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0));
}

}  // namespace choir::geometry
