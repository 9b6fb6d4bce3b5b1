#pragma once

#include <Eigen/Core>

namespace tfgsmooth {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat15 = Eigen::Matrix<double, 15, 15>;

// Tangent vectors are always ordered (rotation, velocity, position,
// accelerometer bias, gyroscope bias), three components each.
using Tangent = Vec15;

inline constexpr int kRot = 0;
inline constexpr int kVel = 3;
inline constexpr int kPos = 6;
inline constexpr int kBa = 9;
inline constexpr int kBw = 12;
inline constexpr int kStateDim = 15;

}  // namespace tfgsmooth
