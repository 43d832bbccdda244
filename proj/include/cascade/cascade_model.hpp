#pragma once

#include "cascade/polarization.hpp"
#include "cascade/types.hpp"

namespace cascade {

/// Physical parameters of the biexciton-exciton cascade source and the
/// detection chain. precession_ps and delta_uev always satisfy
/// T_P = h / delta; use the factories to keep them consistent.
struct CascadeParams {
  double delta_uev = 34.0;      // exciton fine-structure splitting
  double precession_ps = kPlanckUevPs / 34.0;  // T_P = h / delta
  double tau_x_ps = 410.0;      // exciton radiative lifetime
  double tau_xx_ps = 260.0;     // biexciton radiative lifetime
  double eta = 1e-3;            // per-arm harvesting/detection efficiency
  double irf_fwhm_ps = 42.0;    // pair-response FWHM; 0 = ideal detectors

  static CascadeParams from_delta(double delta_uev, double tau_x_ps,
                                  double tau_xx_ps, double eta,
                                  double irf_fwhm_ps);
  static CascadeParams from_precession(double precession_ps, double tau_x_ps,
                                       double tau_xx_ps, double eta,
                                       double irf_fwhm_ps);

  double omega_ps() const { return 2.0 * kPi / precession_ps; }
  /// Throws std::invalid_argument on non-positive times, eta outside [0, 1],
  /// or a precession period inconsistent with the splitting beyond 0.1%.
  void validate() const;
};

/// sin(x)/x with sinc(0) = 1.
double sinc(double x);

/// Per-detector timing jitter implied by the pair-response FWHM: the pair
/// width is shared equally between the two detectors.
double irf_detector_sigma_ps(const CascadeParams& params);
double irf_pair_sigma_ps(const CascadeParams& params);

/// Exciton recombination rate density p_X0(t) = e^{-t/tau_X}/tau_X for
/// t >= 0, zero for t < 0.
double exciton_decay_rate(double t_ps, const CascadeParams& params);

/// Two-photon polarization ket at exciton recombination delay t (the time
/// between the two emissions): (|HH> + e^{-i 2 pi t / T_P} |VV>) / sqrt(2).
Vec4c two_photon_state(double t_ps, const CascadeParams& params);

/// Outer product of two_photon_state with itself.
Mat4c density_matrix(double t_ps, const CascadeParams& params);

/// Precomputed coefficients of the joint projection probability
/// |<P1 P2 | psi(t)>|^2 = (a^2 + b^2 + 2 a b cos(phase_sum + 2 pi t/T_P)) / 2.
struct PairAmplitudeCoeffs {
  double a = 0.0;          // cos(theta1/2) cos(theta2/2)
  double b = 0.0;          // sin(theta1/2) sin(theta2/2)
  double phase_sum = 0.0;  // phi1 + phi2

  static PairAmplitudeCoeffs from(const PolarizationState& p1,
                                  const PolarizationState& p2);
  double probability(double t_ps, const CascadeParams& params) const;
};

/// |<P1 P2 | psi(t)>|^2 for any finite t.
double pair_projection_probability(double t_ps, const PolarizationState& p1,
                                   const PolarizationState& p2,
                                   const CascadeParams& params);

/// Coincidence rate density p_X0(t) |<P1 P2|psi(t)>|^2. Throws
/// std::invalid_argument for t < 0 (the exciton photon cannot precede the
/// biexciton photon).
double coincidence_rate(double t_ps, const PolarizationState& p1,
                        const PolarizationState& p2,
                        const CascadeParams& params);

/// One row of the five-row closed-form rate table for analyzer pairs whose
/// polar angles lie on {0, pi/2, pi}.
struct RateCase {
  int table_row = 0;        // 1..5
  double prefactor = 0.0;   // constant factor relative to p_X0(t)
  bool oscillates = false;  // row 5 only
  double phase = 0.0;       // phi1 + phi2 reduced to [0, 2*pi)

  /// Rate relative to p_X0(t): prefactor, or for row 5
  /// prefactor * (1 + cos(phase + 2 pi t / T_P)).
  double rate_relative(double t_ps, const CascadeParams& params) const;
};

/// Classifies an analyzer pair into its table row. Throws
/// std::invalid_argument if either polar angle is not one of {0, pi/2, pi}.
RateCase classify_rate(const PolarizationState& p1,
                       const PolarizationState& p2);

/// Probability that a generated pair passes both analyzers, integrated over
/// all recombination delays (detection efficiency not included).
double integrated_pair_probability(const PolarizationState& p1,
                                   const PolarizationState& p2,
                                   const CascadeParams& params);

/// Negativity of the uniform time average of density_matrix over any window
/// of width delta_t: (1/2) |sinc(pi delta_t / T_P)|. Throws for
/// delta_t <= 0.
double windowed_negativity_analytic(double delta_t_ps,
                                    const CascadeParams& params);

}  // namespace cascade
