#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cascade/cascade_model.hpp"
#include "cascade/tomography.hpp"
#include "cascade/types.hpp"

namespace cascade {

/// Gaussian detection-chain response acting on the photon-pair time
/// difference.
struct Irf {
  double fwhm_ps = 42.0;
  double sigma_ps() const { return fwhm_ps / kFwhmSigmaFactor; }
};

/// A curve sampled on a uniform grid of bins; values live at bin centers.
struct SampledCurve {
  double t0_ps = 0.0;  // left edge of bin 0
  double bin_ps = 0.0;
  std::vector<double> values;

  int n_bins() const { return static_cast<int>(values.size()); }
  double t_center(int k) const { return t0_ps + (k + 0.5) * bin_ps; }
  double integral() const;  // sum * bin width
};

struct ConvolutionResult {
  SampledCurve curve;
  bool coarse_grid_warning = false;  // bin wider than sigma/2
};

/// Discrete convolution with the IRF on the curve's own grid. The kernel is
/// normalized to unit sum, so the integral is preserved whenever the grid
/// extends well past the curve's support.
ConvolutionResult convolve(const SampledCurve& curve, const Irf& irf);

/// Per-bin (data - model) / sqrt(model). Bins with model <= 0 are excluded
/// and reported as NaN to keep indices aligned.
std::vector<double> residuals_normalized(std::span<const double> data,
                                         std::span<const double> model);

struct FitResult {
  double tau_r_ps = 0.0;
  double tau_r_sigma_ps = 0.0;
  double scale = 0.0;           // shared amplitude across all 16 curves
  double chi2_per_dof = 0.0;    // Pearson, bins with expected >= 0.5
  double deviance = 0.0;        // Poisson deviance at the minimum
  bool converged = false;
  bool coarse_grid_warning = false;
  double precession_ps = 0.0;   // fixed input, echoed for the report
  double irf_fwhm_ps = 0.0;     // fixed input, echoed for the report
  double t0_ps = 0.0;           // grid of the curves below
  double bin_ps = 0.0;
  std::vector<std::vector<double>> model_counts;  // [setting][bin]
  std::vector<std::vector<double>> residuals;     // normalized, NaN = excluded
};

/// Single-lifetime fit across all 16 time-difference histograms. Free
/// parameters: the exciton lifetime and one shared scale (profiled out in
/// closed form); the precession period and the IRF stay fixed. Minimizes the
/// summed Poisson deviance; the 1-sigma bound comes from the deviance
/// profile at +1.
FitResult fit_tau_r(const TomographyInput& input, const CascadeParams& params,
                    const Irf& irf);

/// Expected counts per bin for every default setting at the given lifetime
/// and unit scale: the rate model sampled on the grid (zero before time
/// zero), convolved with the IRF, times the bin width.
std::vector<std::vector<double>> model_curves(const TomographyInput& input,
                                              const CascadeParams& params,
                                              double tau_x_ps, const Irf& irf,
                                              bool* coarse_warning = nullptr);

/// Negativity the reconstruction pipeline should see for events whose
/// measured time difference falls in [lo, hi), given exponential emission
/// weighting and Gaussian jitter of the measured time. Brute-force
/// quadrature; closed form when the IRF width is zero.
double negativity_window_model(double lo_ps, double hi_ps,
                               const CascadeParams& params);

/// Ideal sinc-law negativity attenuated by the jitter factor
/// exp(-2 pi^2 sigma_pair^2 / T_P^2): the window-average analytic value for
/// a jitter-smeared square window. Always <= the ideal curve.
double negativity_sinc_irf(double delta_t_ps, const CascadeParams& params);

struct SweepPoint {
  double delta_t_ps = 0.0;
  double n_data = 0.0;       // reconstructed negativity from the data
  double n_sigma = 0.0;      // bootstrap standard deviation
  double n_ideal = 0.0;      // (1/2)|sinc(pi dT / T_P)|
  double n_irf_model = 0.0;  // negativity_window_model for [0, dT)
  bool low_stats = false;
};

/// Negativity of the state reconstructed from all events with time
/// difference in [0, dT), for each dT on the grid, next to the analytic
/// companion curves.
std::vector<SweepPoint> negativity_vs_window(const TomographyInput& input,
                                             const CascadeParams& params,
                                             std::span<const double> delta_t_grid,
                                             int n_resamples,
                                             std::uint64_t seed);

}  // namespace cascade
