#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "cascade/analysis.hpp"
#include "cascade/errors.hpp"
#include "cascade/io.hpp"
#include "cascade/simulator.hpp"
#include "cascade/tomography.hpp"

namespace {

using namespace cascade;

std::string setting_file_name(const char* prefix, int setting_id) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_s%02d.csv", prefix, setting_id);
  return buf;
}

void run_simulate(const std::string& config_path, const std::string& out_path,
                  bool seed_given, std::uint64_t seed, int threads) {
  ToolConfig config = read_config_file(config_path);
  if (seed_given) config.seed = seed;

  RunConfig run;
  run.params = config.params();
  run.settings = default_settings();
  run.pulses_per_setting = config.pulses_per_setting;
  run.rng_seed = config.seed;
  run.repetition_period_ps = config.repetition_period_ps();
  run.threads = threads;

  const RunResult result = run_experiment(run);
  for (const auto& w : result.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  if (result.partial) {
    std::cerr << "warning: run stopped early; the event list is truncated\n";
  }
  write_event_file(out_path, config, run.settings, result.events);
  std::cout << "wrote " << result.events.size() << " events for "
            << run.settings.size() << " settings to " << out_path << "\n";
}

void run_histogram(const std::string& events_path, double bin_ps,
                   bool bin_given, const std::string& mode, double t_max_ps,
                   bool t_max_given, const std::string& out_dir) {
  const EventFileData data = read_event_file(events_path);
  const double bin = bin_given ? bin_ps : data.config.bin_ps;
  const double t_max = t_max_given ? t_max_ps : data.config.dt_max_ps;
  if (!(bin > 0.0) || !(t_max > 0.0)) {
    throw ConfigError("bin and time range must be positive");
  }
  const std::string hash = config_hash(data.config);
  std::filesystem::create_directories(out_dir);

  const int n_settings = static_cast<int>(data.settings.size());
  if (mode == "dt") {
    const auto hists =
        histograms_dt_by_setting(data.events, n_settings, bin, t_max);
    for (int s = 0; s < n_settings; ++s) {
      write_histogram_dt_csv(
          out_dir + "/" + setting_file_name("histogram_dt", s),
          hists[static_cast<std::size_t>(s)],
          data.settings[static_cast<std::size_t>(s)], hash);
    }
  } else {
    for (int s = 0; s < n_settings; ++s) {
      std::vector<CoincidenceRecord> subset;
      for (const auto& e : data.events) {
        if (e.setting_id == s) subset.push_back(e);
      }
      write_histogram_2d_csv(
          out_dir + "/" + setting_file_name("histogram_2d", s),
          histogram_2d(subset, bin, t_max),
          data.settings[static_cast<std::size_t>(s)], hash);
    }
  }
  std::cout << "wrote " << n_settings << " " << mode << " histograms to "
            << out_dir << "\n";
}

void run_tomograph(const std::string& events_path, double window_ps,
                   bool window_given, double step_ps, bool step_given,
                   const std::string& method_name, double bin_ps,
                   bool bin_given, double t_stop_ps, bool t_stop_given,
                   int resamples, const std::string& out_path) {
  const EventFileData data = read_event_file(events_path);
  require_default_settings(data);

  const CascadeParams params = data.config.params();
  const double window = window_given ? window_ps : data.config.window_ps;
  const double step = step_given ? step_ps : window;
  const double bin = bin_given ? bin_ps : data.config.bin_ps;
  const double t_stop = t_stop_given ? t_stop_ps : 3.0 * params.precession_ps;
  const ReconstructionMethod method = method_name == "linear"
                                          ? ReconstructionMethod::linear
                                          : ReconstructionMethod::mle;

  const TomographyInput input =
      TomographyInput::from_events(data.events, bin, data.config.dt_max_ps);
  const auto series = reconstruct_time_series(input, window, step, 0.0, t_stop,
                                              method, resamples,
                                              data.config.seed);
  write_matrix_series_csv(out_path, series, config_hash(data.config));
  std::cout << "wrote " << series.size() << " windows to " << out_path << "\n";
}

void run_sweep(const std::string& events_path, double dt_min, double dt_max,
               int steps, double bin_ps, bool bin_given, int resamples,
               const std::string& out_path) {
  const EventFileData data = read_event_file(events_path);
  require_default_settings(data);

  if (!(dt_min > 0.0) || !(dt_max >= dt_min) || steps < 1) {
    throw ConfigError(
        "sweep needs 0 < dtmin <= dtmax and at least one step");
  }
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    grid.push_back(steps == 1 ? dt_min
                              : dt_min + (dt_max - dt_min) * i / (steps - 1));
  }

  const double bin = bin_given ? bin_ps : data.config.bin_ps;
  const TomographyInput input =
      TomographyInput::from_events(data.events, bin, data.config.dt_max_ps);
  const auto points = negativity_vs_window(input, data.config.params(), grid,
                                           resamples, data.config.seed);
  write_sweep_csv(out_path, points, config_hash(data.config));
  std::cout << "wrote " << points.size() << " sweep points to " << out_path
            << "\n";
}

void run_fit(const std::string& events_path, double bin_ps, bool bin_given,
             double t_max_ps, bool t_max_given, const std::string& report_path,
             const std::string& curves_path) {
  const EventFileData data = read_event_file(events_path);
  require_default_settings(data);

  const CascadeParams params = data.config.params();
  const double bin = bin_given ? bin_ps : data.config.bin_ps;
  const double t_max = t_max_given ? t_max_ps : data.config.dt_max_ps;
  const TomographyInput input =
      TomographyInput::from_events(data.events, bin, t_max);

  const FitResult fit =
      fit_tau_r(input, params, Irf{params.irf_fwhm_ps});
  const std::string hash = config_hash(data.config);
  write_fit_report(report_path, fit, hash);
  write_fit_curves_csv(curves_path, fit, hash);
  std::cout << "tau_r_ps = " << format_double(fit.tau_r_ps) << " +- "
            << format_double(fit.tau_r_sigma_ps)
            << " (chi2/dof = " << format_double(fit.chi2_per_dof) << ")\n";
  if (!fit.converged) {
    throw FitError("lifetime fit did not converge; the report holds the best "
                   "iterate");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulation and analysis of polarization-entangled photon "
               "pairs from a quantum-dot radiative cascade"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "generate a synthetic coincidence event file");
  std::string config_path;
  std::string sim_out = "events.txt";
  std::uint64_t seed = 0;
  int threads = 0;
  simulate->add_option("--config", config_path, "configuration file")
      ->required();
  simulate->add_option("--out", sim_out, "output event file");
  auto* seed_opt =
      simulate->add_option("--seed", seed, "override the configured seed");
  simulate->add_option("--threads", threads,
                       "worker threads (0 = all cores)");

  // histogram
  auto* histogram = app.add_subcommand(
      "histogram", "bin an event file into per-setting histograms");
  std::string hist_events;
  std::string hist_mode = "dt";
  std::string hist_out_dir = ".";
  double hist_bin = 0.0;
  double hist_t_max = 0.0;
  histogram->add_option("events", hist_events, "event file")->required();
  auto* hist_bin_opt =
      histogram->add_option("--bin-ps", hist_bin, "bin width in ps");
  histogram->add_option("--mode", hist_mode, "dt or 2d")
      ->check(CLI::IsMember({"dt", "2d"}));
  auto* hist_t_max_opt = histogram->add_option(
      "--t-max-ps", hist_t_max, "histogram range in ps");
  histogram->add_option("--out-dir", hist_out_dir, "output directory")
      ->required();

  // tomograph
  auto* tomograph = app.add_subcommand(
      "tomograph", "reconstruct the density matrix in stepped time windows");
  std::string tomo_events;
  std::string tomo_out;
  std::string tomo_method = "mle";
  double tomo_window = 0.0;
  double tomo_step = 0.0;
  double tomo_bin = 0.0;
  double tomo_t_stop = 0.0;
  int tomo_resamples = 100;
  tomograph->add_option("events", tomo_events, "event file")->required();
  auto* tomo_window_opt =
      tomograph->add_option("--window-ps", tomo_window, "window width in ps");
  auto* tomo_step_opt =
      tomograph->add_option("--step-ps", tomo_step, "window step in ps");
  tomograph->add_option("--method", tomo_method, "linear or mle")
      ->check(CLI::IsMember({"linear", "mle"}));
  auto* tomo_bin_opt =
      tomograph->add_option("--bin-ps", tomo_bin, "histogram bin in ps");
  auto* tomo_t_stop_opt = tomograph->add_option(
      "--t-stop", tomo_t_stop, "end of the scanned range in ps");
  tomograph->add_option("--resamples", tomo_resamples,
                        "bootstrap resamples (0 = skip uncertainties)");
  tomograph->add_option("--out", tomo_out, "output CSV")->required();

  // negativity-sweep
  auto* sweep = app.add_subcommand(
      "negativity-sweep", "negativity against the accepted window width");
  std::string sweep_events;
  std::string sweep_out;
  double sweep_dt_min = 18.0;
  double sweep_dt_max = 288.0;
  int sweep_steps = 16;
  double sweep_bin = 0.0;
  int sweep_resamples = 100;
  sweep->add_option("events", sweep_events, "event file")->required();
  sweep->add_option("--dtmin", sweep_dt_min, "smallest window in ps");
  sweep->add_option("--dtmax", sweep_dt_max, "largest window in ps");
  sweep->add_option("--steps", sweep_steps, "number of grid points");
  auto* sweep_bin_opt =
      sweep->add_option("--bin-ps", sweep_bin, "histogram bin in ps");
  sweep->add_option("--resamples", sweep_resamples,
                    "bootstrap resamples (0 = skip uncertainties)");
  sweep->add_option("--out", sweep_out, "output CSV")->required();

  // fit
  auto* fit = app.add_subcommand(
      "fit", "single-lifetime fit across all 16 convolved curves");
  std::string fit_events;
  std::string fit_report;
  std::string fit_curves;
  double fit_bin = 0.0;
  double fit_t_max = 0.0;
  fit->add_option("events", fit_events, "event file")->required();
  auto* fit_bin_opt = fit->add_option("--bin-ps", fit_bin, "bin width in ps");
  auto* fit_t_max_opt =
      fit->add_option("--t-max-ps", fit_t_max, "histogram range in ps");
  fit->add_option("--out-report", fit_report, "fit report path")->required();
  fit->add_option("--out-curves", fit_curves, "model curves CSV path")
      ->required();

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) {
      run_simulate(config_path, sim_out, seed_opt->count() > 0, seed, threads);
    } else if (histogram->parsed()) {
      run_histogram(hist_events, hist_bin, hist_bin_opt->count() > 0,
                    hist_mode, hist_t_max, hist_t_max_opt->count() > 0,
                    hist_out_dir);
    } else if (tomograph->parsed()) {
      run_tomograph(tomo_events, tomo_window, tomo_window_opt->count() > 0,
                    tomo_step, tomo_step_opt->count() > 0, tomo_method,
                    tomo_bin, tomo_bin_opt->count() > 0, tomo_t_stop,
                    tomo_t_stop_opt->count() > 0, tomo_resamples, tomo_out);
    } else if (sweep->parsed()) {
      run_sweep(sweep_events, sweep_dt_min, sweep_dt_max, sweep_steps,
                sweep_bin, sweep_bin_opt->count() > 0, sweep_resamples,
                sweep_out);
    } else if (fit->parsed()) {
      run_fit(fit_events, fit_bin, fit_bin_opt->count() > 0, fit_t_max,
              fit_t_max_opt->count() > 0, fit_report, fit_curves);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const MissingSettingsError& e) {
    std::cerr << "missing settings: " << e.what() << "\n";
    return 4;
  } catch (const EmptyWindowError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const FitError& e) {
    std::cerr << "fit error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
