#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cascade/cascade_model.hpp"
#include "cascade/random.hpp"

namespace cascade {

struct ProjectionSetting {
  int setting_id = 0;
  PolarizationState p1 = named_state(Pol::H);  // biexciton-arm analyzer
  PolarizationState p2 = named_state(Pol::H);  // exciton-arm analyzer
};

struct CoincidenceRecord {
  std::int64_t pulse_index = 0;
  int setting_id = 0;
  double t1_ps = 0.0;  // biexciton photon detection time within the pulse
  double t2_ps = 0.0;  // exciton photon detection time within the pulse
};

inline bool operator==(const CoincidenceRecord& a, const CoincidenceRecord& b) {
  return a.pulse_index == b.pulse_index && a.setting_id == b.setting_id &&
         a.t1_ps == b.t1_ps && a.t2_ps == b.t2_ps;
}

struct RunConfig {
  CascadeParams params;
  std::vector<ProjectionSetting> settings;
  std::int64_t pulses_per_setting = 0;
  std::uint64_t rng_seed = 1;
  double repetition_period_ps = 1e6 / 76.0;
  int threads = 0;  // 0 picks the hardware concurrency

  /// Throws std::invalid_argument on hard errors; returns soft warnings
  /// (e.g. a repetition period too close to the emission timescales).
  std::vector<std::string> validate() const;
};

struct Emission {
  double t_xx_ps = 0.0;  // biexciton photon emission time
  double t_x_ps = 0.0;   // exciton photon emission time (>= t_xx_ps)
};

/// Draws one cascade: t_xx ~ Exp(tau_XX), then t_x - t_xx ~ Exp(tau_X).
Emission sample_emission(RandomStream& rng, const CascadeParams& params);

/// Applies the joint analyzer projection and the eta^2 detection roll,
/// then jitters both timestamps independently. Empty when the pair is not
/// detected.
std::optional<CoincidenceRecord> detect_pair(RandomStream& rng,
                                             const Emission& emission,
                                             const ProjectionSetting& setting,
                                             const CascadeParams& params,
                                             std::int64_t pulse_index = 0);

struct RunResult {
  std::vector<CoincidenceRecord> events;  // sorted by (setting_id, pulse_index)
  bool partial = false;  // true when the run stopped early (allocation failure)
  std::vector<std::string> warnings;
};

/// Runs pulses_per_setting excitation cycles for every setting. Each
/// (setting, pulse-block) pair owns an independent seed-derived RNG stream,
/// so the output is identical for any thread count.
RunResult run_experiment(const RunConfig& config);

struct Histogram2D {
  double bin_ps = 0.0;
  int n_bins = 0;  // per axis, covering [0, n_bins * bin_ps)
  std::vector<std::int64_t> counts;  // row-major over (t1 bin, t2 bin)

  std::int64_t at(int i1, int i2) const { return counts[i1 * n_bins + i2]; }
  std::int64_t total() const;
};

Histogram2D histogram_2d(std::span<const CoincidenceRecord> events,
                         double bin_ps, double t_max_ps);

struct HistogramDt {
  double bin_ps = 0.0;
  double t_max_ps = 0.0;  // bins cover [-t_max_ps, t_max_ps)
  std::vector<std::int64_t> counts;

  int n_bins() const { return static_cast<int>(counts.size()); }
  double bin_lo(int k) const { return -t_max_ps + k * bin_ps; }
  double bin_center(int k) const { return bin_lo(k) + 0.5 * bin_ps; }
  std::int64_t total() const;
};

/// Histogram of t2 - t1. Negative bins exist so detector jitter that flips
/// the apparent order stays visible.
HistogramDt histogram_dt(std::span<const CoincidenceRecord> events,
                         double bin_ps, double t_max_ps);

/// One Delta-t histogram per setting_id in [0, n_settings), shared binning.
std::vector<HistogramDt> histograms_dt_by_setting(
    std::span<const CoincidenceRecord> events, int n_settings, double bin_ps,
    double t_max_ps);

}  // namespace cascade
