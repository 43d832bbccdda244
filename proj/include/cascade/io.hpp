#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cascade/analysis.hpp"
#include "cascade/cascade_model.hpp"
#include "cascade/simulator.hpp"
#include "cascade/tomography.hpp"

namespace cascade {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// The full key-value configuration document. Defaults reproduce the
/// reference source and detection chain.
struct ToolConfig {
  // [cascade]
  double delta_uev = 34.0;
  double tau_x_ps = 410.0;
  double tau_xx_ps = 260.0;
  double eta = 1e-3;
  double irf_fwhm_ps = 42.0;
  // [run]
  std::int64_t pulses_per_setting = 100000;
  std::uint64_t seed = 1;
  double repetition_mhz = 76.0;
  // [analysis]
  double bin_ps = 6.0;
  double window_ps = 24.0;
  double dt_max_ps = 1800.0;

  CascadeParams params() const;
  double repetition_period_ps() const { return 1e6 / repetition_mhz; }
  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

/// Strict INI subset: sections [cascade], [run], [analysis]; unknown
/// sections or keys are rejected with a message naming them.
ToolConfig parse_config_text(const std::string& text);
ToolConfig read_config_file(const std::string& path);

/// Fixed section and key order with round-trip-exact numbers; input to the
/// config hash and the header echo of every output file.
std::string canonical_config_text(const ToolConfig& config);

/// FNV-1a 64-bit hash of the canonical text, as 16 hex digits.
std::string config_hash(const ToolConfig& config);

struct EventFileData {
  ToolConfig config;
  std::string hash;  // as recorded in the file header
  std::vector<ProjectionSetting> settings;
  std::vector<CoincidenceRecord> events;
};

/// Text event list: "# cascade-events v1" header, config echo, settings
/// table, then one "pulse_index setting_id t1_ps t2_ps" line per
/// coincidence with 6 fractional digits. Events must arrive strictly
/// increasing in (setting_id, pulse_index).
void write_event_file(const std::string& path, const ToolConfig& config,
                      const std::vector<ProjectionSetting>& settings,
                      std::span<const CoincidenceRecord> events);

/// Parses and validates an event file; malformed content raises DataError.
EventFileData read_event_file(const std::string& path);

/// Raises MissingSettingsError (listing the absent ids) unless the file's
/// settings are exactly the default 16-projection set.
void require_default_settings(const EventFileData& data);

/// Writes via a temporary file in the same directory plus rename.
void write_text_atomic(const std::string& path, const std::string& text);

void write_histogram_dt_csv(const std::string& path, const HistogramDt& hist,
                            const ProjectionSetting& setting,
                            const std::string& hash);
void write_histogram_2d_csv(const std::string& path, const Histogram2D& hist,
                            const ProjectionSetting& setting,
                            const std::string& hash);

struct MatrixSeriesRow {
  double t_start_ps = 0.0;
  double t_end_ps = 0.0;
  Mat4c rho = Mat4c::Zero();
  double negativity = 0.0;
  double negativity_sigma = 0.0;
  bool low_stats = false;
};

void write_matrix_series_csv(const std::string& path,
                             std::span<const WindowReconstruction> series,
                             const std::string& hash);
/// Validates Hermiticity and unit trace of every row within 1e-9.
std::vector<MatrixSeriesRow> read_matrix_series_csv(const std::string& path);

void write_sweep_csv(const std::string& path,
                     std::span<const SweepPoint> points,
                     const std::string& hash);

void write_fit_report(const std::string& path, const FitResult& fit,
                      const std::string& hash);
void write_fit_curves_csv(const std::string& path, const FitResult& fit,
                          const std::string& hash);

}  // namespace cascade
