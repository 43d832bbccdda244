#include "cascade/polarization.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cascade {

namespace {
// Amplitudes below this are snapped to an exact pole so H and V come out as
// exactly (1,0) and (0,1).
constexpr double kPoleTol = 1e-14;
}  // namespace

PolarizationState PolarizationState::from_angles(double theta, double phi) {
  if (!std::isfinite(theta) || !std::isfinite(phi)) {
    throw std::invalid_argument("polarization angles must be finite");
  }
  if (theta < -1e-12 || theta > kPi + 1e-12) {
    throw std::invalid_argument("theta must lie in [0, pi]");
  }
  theta = std::clamp(theta, 0.0, kPi);
  phi = std::fmod(phi, 2.0 * kPi);
  if (phi < 0.0) phi += 2.0 * kPi;

  const double ah = std::cos(0.5 * theta);
  const double av = std::sin(0.5 * theta);
  if (ah < kPoleTol) return PolarizationState(0.0, Complex(1.0, 0.0));
  if (av < kPoleTol) return PolarizationState(1.0, Complex(0.0, 0.0));
  return PolarizationState(ah, std::polar(av, phi));
}

PolarizationState PolarizationState::from_amplitudes(Complex a_h, Complex a_v) {
  if (!std::isfinite(a_h.real()) || !std::isfinite(a_h.imag()) ||
      !std::isfinite(a_v.real()) || !std::isfinite(a_v.imag())) {
    throw std::invalid_argument("polarization amplitudes must be finite");
  }
  const double n = std::sqrt(std::norm(a_h) + std::norm(a_v));
  if (n < 1e-12) {
    throw std::invalid_argument("polarization amplitudes must not both vanish");
  }
  a_h /= n;
  a_v /= n;
  if (std::abs(a_h) < kPoleTol) return PolarizationState(0.0, Complex(1.0, 0.0));
  // Remove the global phase so a_H is real and non-negative.
  const Complex u = std::conj(a_h) / std::abs(a_h);
  a_h *= u;
  a_v *= u;
  if (std::abs(a_v) < kPoleTol) return PolarizationState(1.0, Complex(0.0, 0.0));
  return PolarizationState(a_h.real(), a_v);
}

double PolarizationState::theta() const {
  return 2.0 * std::atan2(std::abs(a_v_), a_h_);
}

double PolarizationState::phi() const {
  if (a_h_ < kPoleTol || std::abs(a_v_) < kPoleTol) return 0.0;
  double p = std::arg(a_v_);
  if (p < 0.0) p += 2.0 * kPi;
  return p;
}

PolarizationState named_state(Pol name) {
  switch (name) {
    case Pol::H:
      return PolarizationState::from_angles(0.0, 0.0);
    case Pol::V:
      return PolarizationState::from_angles(kPi, 0.0);
    case Pol::D:
      return PolarizationState::from_angles(0.5 * kPi, 0.0);
    case Pol::Dbar:
      return PolarizationState::from_angles(0.5 * kPi, kPi);
    case Pol::L:
      return PolarizationState::from_angles(0.5 * kPi, 0.5 * kPi);
    case Pol::R:
      return PolarizationState::from_angles(0.5 * kPi, 1.5 * kPi);
  }
  throw std::invalid_argument("unknown polarization name");
}

PolarizationState named_state(std::string_view name) {
  if (name == "H") return named_state(Pol::H);
  if (name == "V") return named_state(Pol::V);
  if (name == "D") return named_state(Pol::D);
  if (name == "Dbar") return named_state(Pol::Dbar);
  if (name == "L") return named_state(Pol::L);
  if (name == "R") return named_state(Pol::R);
  throw std::invalid_argument("unknown polarization name: " + std::string(name));
}

std::string_view to_string(Pol name) {
  switch (name) {
    case Pol::H:
      return "H";
    case Pol::V:
      return "V";
    case Pol::D:
      return "D";
    case Pol::Dbar:
      return "Dbar";
    case Pol::L:
      return "L";
    case Pol::R:
      return "R";
  }
  return "?";
}

double overlap_probability(const PolarizationState& a,
                           const PolarizationState& b) {
  const Complex inner = a.a_h() * b.a_h() + std::conj(a.a_v()) * b.a_v();
  return std::norm(inner);
}

Vec4c pair_ket(const PolarizationState& p1, const PolarizationState& p2) {
  Vec4c v;
  v(0) = p1.a_h() * p2.a_h();
  v(1) = p1.a_h() * p2.a_v();
  v(2) = p1.a_v() * p2.a_h();
  v(3) = p1.a_v() * p2.a_v();
  return v;
}

Mat4c pair_projector(const PolarizationState& p1, const PolarizationState& p2) {
  const Vec4c v = pair_ket(p1, p2);
  return v * v.adjoint();
}

}  // namespace cascade
