#include "cascade/cascade_model.hpp"

#include <cmath>
#include <stdexcept>

namespace cascade {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument(std::string(what) + " must be finite");
  }
}

// Matches a polar angle against {0, pi/2, pi}; returns -1 when none applies.
int pole_class(double theta) {
  constexpr double tol = 1e-9;
  if (std::abs(theta) < tol) return 0;
  if (std::abs(theta - 0.5 * kPi) < tol) return 1;
  if (std::abs(theta - kPi) < tol) return 2;
  return -1;
}

}  // namespace

CascadeParams CascadeParams::from_delta(double delta_uev, double tau_x_ps,
                                        double tau_xx_ps, double eta,
                                        double irf_fwhm_ps) {
  CascadeParams p;
  p.delta_uev = delta_uev;
  p.precession_ps = kPlanckUevPs / delta_uev;
  p.tau_x_ps = tau_x_ps;
  p.tau_xx_ps = tau_xx_ps;
  p.eta = eta;
  p.irf_fwhm_ps = irf_fwhm_ps;
  p.validate();
  return p;
}

CascadeParams CascadeParams::from_precession(double precession_ps,
                                             double tau_x_ps, double tau_xx_ps,
                                             double eta, double irf_fwhm_ps) {
  CascadeParams p;
  p.precession_ps = precession_ps;
  p.delta_uev = kPlanckUevPs / precession_ps;
  p.tau_x_ps = tau_x_ps;
  p.tau_xx_ps = tau_xx_ps;
  p.eta = eta;
  p.irf_fwhm_ps = irf_fwhm_ps;
  p.validate();
  return p;
}

void CascadeParams::validate() const {
  require_finite(delta_uev, "delta_uev");
  require_finite(precession_ps, "precession_ps");
  require_finite(tau_x_ps, "tau_x_ps");
  require_finite(tau_xx_ps, "tau_xx_ps");
  require_finite(eta, "eta");
  require_finite(irf_fwhm_ps, "irf_fwhm_ps");
  if (delta_uev <= 0.0) throw std::invalid_argument("delta_uev must be > 0");
  if (precession_ps <= 0.0) {
    throw std::invalid_argument("precession_ps must be > 0");
  }
  if (tau_x_ps <= 0.0) throw std::invalid_argument("tau_x_ps must be > 0");
  if (tau_xx_ps <= 0.0) throw std::invalid_argument("tau_xx_ps must be > 0");
  if (eta < 0.0 || eta > 1.0) {
    throw std::invalid_argument("eta must lie in [0, 1]");
  }
  if (irf_fwhm_ps < 0.0) {
    throw std::invalid_argument("irf_fwhm_ps must be >= 0");
  }
  const double derived = kPlanckUevPs / delta_uev;
  if (std::abs(precession_ps - derived) > 1e-3 * precession_ps) {
    throw std::invalid_argument(
        "precession_ps inconsistent with delta_uev (T_P = h / delta)");
  }
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(x) / x;
}

double irf_pair_sigma_ps(const CascadeParams& params) {
  return params.irf_fwhm_ps / kFwhmSigmaFactor;
}

double irf_detector_sigma_ps(const CascadeParams& params) {
  return irf_pair_sigma_ps(params) / std::sqrt(2.0);
}

double exciton_decay_rate(double t_ps, const CascadeParams& params) {
  if (t_ps < 0.0) return 0.0;
  return std::exp(-t_ps / params.tau_x_ps) / params.tau_x_ps;
}

Vec4c two_photon_state(double t_ps, const CascadeParams& params) {
  require_finite(t_ps, "t_ps");
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Vec4c psi = Vec4c::Zero();
  psi(0) = inv_sqrt2;
  psi(3) = std::polar(inv_sqrt2, -params.omega_ps() * t_ps);
  return psi;
}

Mat4c density_matrix(double t_ps, const CascadeParams& params) {
  const Vec4c psi = two_photon_state(t_ps, params);
  return psi * psi.adjoint();
}

PairAmplitudeCoeffs PairAmplitudeCoeffs::from(const PolarizationState& p1,
                                              const PolarizationState& p2) {
  PairAmplitudeCoeffs c;
  c.a = p1.a_h() * p2.a_h();
  c.b = std::abs(p1.a_v()) * std::abs(p2.a_v());
  c.phase_sum = std::arg(p1.a_v()) + std::arg(p2.a_v());
  return c;
}

double PairAmplitudeCoeffs::probability(double t_ps,
                                        const CascadeParams& params) const {
  const double arg = phase_sum + params.omega_ps() * t_ps;
  return 0.5 * (a * a + b * b + 2.0 * a * b * std::cos(arg));
}

double pair_projection_probability(double t_ps, const PolarizationState& p1,
                                   const PolarizationState& p2,
                                   const CascadeParams& params) {
  require_finite(t_ps, "t_ps");
  return PairAmplitudeCoeffs::from(p1, p2).probability(t_ps, params);
}

double coincidence_rate(double t_ps, const PolarizationState& p1,
                        const PolarizationState& p2,
                        const CascadeParams& params) {
  require_finite(t_ps, "t_ps");
  if (t_ps < 0.0) {
    throw std::invalid_argument(
        "coincidence_rate: negative recombination delay");
  }
  return exciton_decay_rate(t_ps, params) *
         pair_projection_probability(t_ps, p1, p2, params);
}

double RateCase::rate_relative(double t_ps, const CascadeParams& params) const {
  if (!oscillates) return prefactor;
  return prefactor * (1.0 + std::cos(phase + params.omega_ps() * t_ps));
}

RateCase classify_rate(const PolarizationState& p1,
                       const PolarizationState& p2) {
  const int c1 = pole_class(p1.theta());
  const int c2 = pole_class(p2.theta());
  if (c1 < 0 || c2 < 0) {
    throw std::invalid_argument(
        "classify_rate: polar angles must lie on {0, pi/2, pi}");
  }
  RateCase rc;
  const bool pole1 = (c1 != 1);
  const bool pole2 = (c2 != 1);
  if (pole1 && pole2) {
    if (c1 == c2) {
      rc.table_row = 1;
      rc.prefactor = 0.5;
    } else {
      rc.table_row = 2;
      rc.prefactor = 0.0;
    }
    return rc;
  }
  if (pole1) {
    rc.table_row = 3;
    rc.prefactor = 0.25;
    return rc;
  }
  if (pole2) {
    rc.table_row = 4;
    rc.prefactor = 0.25;
    return rc;
  }
  rc.table_row = 5;
  rc.prefactor = 0.25;
  rc.oscillates = true;
  double phase = std::fmod(p1.phi() + p2.phi(), 2.0 * kPi);
  if (phase < 0.0) phase += 2.0 * kPi;
  rc.phase = phase;
  return rc;
}

double integrated_pair_probability(const PolarizationState& p1,
                                   const PolarizationState& p2,
                                   const CascadeParams& params) {
  // Integral of p_X0(t) |<P1 P2|psi(t)>|^2 over t >= 0. The oscillating term
  // picks up the Lorentzian suppression 1 / (1 + (omega tau)^2) and a phase
  // rotation by atan(omega tau), both written out explicitly here.
  const PairAmplitudeCoeffs c = PairAmplitudeCoeffs::from(p1, p2);
  const double wt = params.omega_ps() * params.tau_x_ps;
  const double denom = 1.0 + wt * wt;
  const double osc =
      (std::cos(c.phase_sum) - wt * std::sin(c.phase_sum)) / denom;
  return 0.5 * (c.a * c.a + c.b * c.b + 2.0 * c.a * c.b * osc);
}

double windowed_negativity_analytic(double delta_t_ps,
                                    const CascadeParams& params) {
  require_finite(delta_t_ps, "delta_t_ps");
  if (delta_t_ps <= 0.0) {
    throw std::invalid_argument(
        "windowed_negativity_analytic: window width must be > 0");
  }
  return 0.5 * std::abs(sinc(kPi * delta_t_ps / params.precession_ps));
}

}  // namespace cascade
