#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cascade/simulator.hpp"
#include "cascade/types.hpp"

namespace cascade {

/// The informationally complete analyzer set {H, V, D, L} x {H, V, D, L},
/// setting_id = 4 * arm1_index + arm2_index in row-major order.
std::vector<ProjectionSetting> default_settings();

/// Per-setting time-difference histograms on a shared binning, the raw
/// material for windowed density-matrix reconstruction. Counts are real so
/// exact model probabilities can stand in for data.
struct TomographyInput {
  double bin_ps = 0.0;
  std::vector<std::vector<double>> counts;  // [setting][bin], 16 settings
  double t0_ps = 0.0;                       // left edge of bin 0

  static TomographyInput from_histograms(const std::vector<HistogramDt>& hists);
  static TomographyInput from_events(std::span<const CoincidenceRecord> events,
                                     double bin_ps, double t_max_ps);

  void validate() const;
  int n_bins() const;
  double bin_center(int k) const { return t0_ps + (k + 0.5) * bin_ps; }

  /// Sums counts over bins whose centers fall in [t_start, t_start + window).
  std::array<double, 16> window_counts(double t_start_ps,
                                       double window_ps) const;
};

enum class ReconstructionMethod { linear, mle };

struct ReconstructionResult {
  Mat4c rho = Mat4c::Zero();
  ReconstructionMethod method = ReconstructionMethod::linear;
  double log_likelihood = 0.0;  // meaningful for mle only
  bool converged = true;
  int iterations = 0;
};

/// Inverts the 16x16 design built from the default settings' projectors.
/// The result is Hermitian with unit trace by construction but may have
/// negative eigenvalues at finite statistics.
ReconstructionResult linear_reconstruct(const std::array<double, 16>& counts);

/// Maximum-likelihood refinement over physical states rho = T T^dag / tr,
/// T lower-triangular complex (16 real parameters). Poisson likelihood with
/// expected counts N * tr(proj * rho), N the rectilinear quadruple sum.
ReconstructionResult mle_reconstruct(const std::array<double, 16>& counts,
                                     const Mat4c* init = nullptr);

ReconstructionResult reconstruct(const std::array<double, 16>& counts,
                                 ReconstructionMethod method);

/// Eigenvalue clipping plus renormalization; used to seed the MLE, never
/// reported as a result on its own.
Mat4c project_to_physical(const Mat4c& rho);

struct BootstrapUncertainty {
  Eigen::Matrix4d sigma_re = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d sigma_im = Eigen::Matrix4d::Zero();
  double negativity_sigma = 0.0;
  int n_valid = 0;  // resamples that yielded a usable window
};

/// Parametric Poisson bootstrap: resample each setting count, reconstruct,
/// report per-element and negativity standard deviations.
BootstrapUncertainty bootstrap_uncertainty(const std::array<double, 16>& counts,
                                           int n_resamples,
                                           std::uint64_t seed,
                                           ReconstructionMethod method);

struct WindowReconstruction {
  double t_start_ps = 0.0;
  double t_end_ps = 0.0;
  ReconstructionResult recon;
  double total_counts = 0.0;  // all 16 settings inside the window
  bool low_stats = false;     // under 100 events total
  double negativity = 0.0;
  double negativity_sigma = 0.0;  // 0 when bootstrap was skipped
  BootstrapUncertainty uncertainty;
};

/// Stepped-window reconstruction over [t_start, t_stop). Windows whose
/// rectilinear normalization vanishes are skipped rather than aborting the
/// series. n_resamples = 0 skips the bootstrap.
std::vector<WindowReconstruction> reconstruct_time_series(
    const TomographyInput& input, double window_ps, double step_ps,
    double t_start_ps, double t_stop_ps, ReconstructionMethod method,
    int n_resamples, std::uint64_t seed);

}  // namespace cascade
