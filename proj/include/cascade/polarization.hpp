#pragma once

#include <array>
#include <string_view>

#include "cascade/types.hpp"

namespace cascade {

/// Pure polarization state of one photon, stored as a normalized Jones vector
/// (a_H, a_V). Constructed from Poincare angles via a_H = cos(theta/2),
/// a_V = e^{i phi} sin(theta/2); the stored gauge keeps a_H real and
/// non-negative, and phi is canonicalized to 0 at the poles where it is
/// undefined.
class PolarizationState {
 public:
  /// theta in [0, pi], phi reduced modulo 2*pi. Throws std::invalid_argument
  /// on non-finite or out-of-range input.
  static PolarizationState from_angles(double theta, double phi);

  /// Normalizes and fixes the global phase. Throws on a zero or non-finite
  /// vector.
  static PolarizationState from_amplitudes(Complex a_h, Complex a_v);

  double a_h() const { return a_h_; }
  Complex a_v() const { return a_v_; }

  double theta() const;
  /// In [0, 2*pi); 0 at the poles.
  double phi() const;

 private:
  PolarizationState(double a_h, Complex a_v) : a_h_(a_h), a_v_(a_v) {}

  double a_h_;
  Complex a_v_;
};

enum class Pol { H, V, D, Dbar, L, R };

inline constexpr std::array<Pol, 6> kNamedPols = {Pol::H,    Pol::V, Pol::D,
                                                  Pol::Dbar, Pol::L, Pol::R};

PolarizationState named_state(Pol name);
/// Accepts "H", "V", "D", "Dbar", "L", "R"; throws on anything else.
PolarizationState named_state(std::string_view name);
std::string_view to_string(Pol name);

/// Born-rule overlap |<a|b>|^2.
double overlap_probability(const PolarizationState& a,
                           const PolarizationState& b);

/// Two-photon product ket in the fixed {H1H2, H1V2, V1H2, V1V2} basis.
Vec4c pair_ket(const PolarizationState& p1, const PolarizationState& p2);

/// Rank-one projector |P1 P2><P1 P2| in the same basis.
Mat4c pair_projector(const PolarizationState& p1, const PolarizationState& p2);

}  // namespace cascade
