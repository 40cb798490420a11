#pragma once

#include <Eigen/Dense>

namespace ersd {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Magnetic field in tesla.
using FieldVector = Vec3;

inline constexpr const char* kVersion = "0.3.0";

}  // namespace ersd
