#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace nvie {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using ComplexVec3 = Eigen::Vector3cd;
/// 3x3 complex matrix; row-major semantics (entry (a,b) is row a, column b).
using ComplexDyadic = Eigen::Matrix3cd;
using RealDyadic = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kFourPi = 4.0 * std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

}  // namespace nvie
