#pragma once

#include <complex>

#include <Eigen/Dense>

namespace cascade {

using Complex = std::complex<double>;
using Vec4c = Eigen::Vector4cd;
using Mat4c = Eigen::Matrix4cd;

inline constexpr double kPi = 3.14159265358979323846;

// Planck constant in ueV*ps; converts the fine-structure splitting to the
// exciton precession period T_P = h / delta.
inline constexpr double kPlanckUevPs = 4135.667696;

// Gaussian FWHM = 2.3548 sigma.
inline constexpr double kFwhmSigmaFactor = 2.3548;

}  // namespace cascade
