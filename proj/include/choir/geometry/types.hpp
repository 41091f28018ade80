#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

namespace choir::geometry {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points = std::vector<Vec3>;

}  // namespace choir::geometry
