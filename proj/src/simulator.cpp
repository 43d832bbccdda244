#include "cascade/simulator.hpp"

#include <atomic>
#include <cmath>
#include <cstddef>
#include <new>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace cascade {

namespace {

/// Pulses handled per RNG stream. Fixing the block size decouples the
/// sequence of random draws from the thread count.
constexpr std::int64_t kBlockPulses = 65536;

}  // namespace

std::vector<std::string> RunConfig::validate() const {
  params.validate();
  if (settings.empty()) {
    throw std::invalid_argument("run config needs at least one analyzer setting");
  }
  for (std::size_t i = 0; i < settings.size(); ++i) {
    if (settings[i].setting_id != static_cast<int>(i)) {
      throw std::invalid_argument(
          "setting ids must be 0..n-1 in listing order");
    }
  }
  if (pulses_per_setting <= 0) {
    throw std::invalid_argument("pulses_per_setting must be positive");
  }
  if (!(repetition_period_ps > 0.0) || !std::isfinite(repetition_period_ps)) {
    throw std::invalid_argument("repetition_period_ps must be positive");
  }
  if (threads < 0) {
    throw std::invalid_argument("threads must be >= 0");
  }

  std::vector<std::string> warnings;
  const double emission_span = 5.0 * (params.tau_xx_ps + params.tau_x_ps);
  if (repetition_period_ps < emission_span) {
    warnings.push_back(
        "repetition period " + std::to_string(repetition_period_ps) +
        " ps is shorter than ~5 lifetimes (" + std::to_string(emission_span) +
        " ps); cascades from adjacent pulses will overlap");
  }
  return warnings;
}

Emission sample_emission(RandomStream& rng, const CascadeParams& params) {
  Emission e;
  e.t_xx_ps = rng.exponential(params.tau_xx_ps);
  e.t_x_ps = e.t_xx_ps + rng.exponential(params.tau_x_ps);
  return e;
}

std::optional<CoincidenceRecord> detect_pair(RandomStream& rng,
                                             const Emission& emission,
                                             const ProjectionSetting& setting,
                                             const CascadeParams& params,
                                             std::int64_t pulse_index) {
  const double delay = emission.t_x_ps - emission.t_xx_ps;
  const double q = pair_projection_probability(delay, setting.p1, setting.p2,
                                               params);
  const double accept = params.eta * params.eta * q;
  if (rng.uniform() >= accept) return std::nullopt;

  CoincidenceRecord rec;
  rec.pulse_index = pulse_index;
  rec.setting_id = setting.setting_id;
  rec.t1_ps = emission.t_xx_ps;
  rec.t2_ps = emission.t_x_ps;
  if (params.irf_fwhm_ps > 0.0) {
    const double sigma = irf_detector_sigma_ps(params);
    const auto [z1, z2] = rng.normal_pair();
    rec.t1_ps += sigma * z1;
    rec.t2_ps += sigma * z2;
  }
  return rec;
}

RunResult run_experiment(const RunConfig& config) {
  RunResult result;
  result.warnings = config.validate();

  const std::int64_t n_settings =
      static_cast<std::int64_t>(config.settings.size());
  const std::int64_t n_blocks =
      (config.pulses_per_setting + kBlockPulses - 1) / kBlockPulses;
  const std::int64_t n_tasks = n_settings * n_blocks;

  std::vector<std::vector<CoincidenceRecord>> slots(
      static_cast<std::size_t>(n_tasks));
  std::atomic<std::int64_t> next_task{0};
  std::atomic<bool> failed{false};

  auto worker = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::int64_t task = next_task.fetch_add(1);
      if (task >= n_tasks) break;
      const std::int64_t s = task / n_blocks;
      const std::int64_t b = task % n_blocks;
      const auto& setting = config.settings[static_cast<std::size_t>(s)];
      RandomStream rng(derive_stream_seed(config.rng_seed,
                                          static_cast<std::uint64_t>(s),
                                          static_cast<std::uint64_t>(b)));
      const std::int64_t first = b * kBlockPulses;
      const std::int64_t last =
          std::min(first + kBlockPulses, config.pulses_per_setting);
      auto& out = slots[static_cast<std::size_t>(task)];
      try {
        for (std::int64_t pulse = first; pulse < last; ++pulse) {
          const Emission e = sample_emission(rng, config.params);
          if (auto rec = detect_pair(rng, e, setting, config.params, pulse)) {
            out.push_back(*rec);
          }
        }
      } catch (const std::bad_alloc&) {
        out = {};
        failed.store(true, std::memory_order_relaxed);
        break;
      }
    }
  };

  int n_threads = config.threads > 0
                      ? config.threads
                      : static_cast<int>(
                            std::max(1u, std::thread::hardware_concurrency()));
  n_threads = static_cast<int>(
      std::min<std::int64_t>(n_threads, std::max<std::int64_t>(1, n_tasks)));

  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  result.partial = failed.load();
  std::size_t total = 0;
  for (const auto& slot : slots) total += slot.size();
  result.events.reserve(total);
  // Slot order is (setting, block), and pulse indices grow inside a block,
  // so plain concatenation already yields the canonical event order.
  for (auto& slot : slots) {
    result.events.insert(result.events.end(), slot.begin(), slot.end());
    slot = {};
  }
  return result;
}

std::int64_t Histogram2D::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t HistogramDt::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

Histogram2D histogram_2d(std::span<const CoincidenceRecord> events,
                         double bin_ps, double t_max_ps) {
  if (!(bin_ps > 0.0) || !(t_max_ps > 0.0)) {
    throw std::invalid_argument("histogram bin and range must be positive");
  }
  Histogram2D h;
  h.bin_ps = bin_ps;
  h.n_bins = static_cast<int>(std::ceil(t_max_ps / bin_ps - 1e-9));
  h.n_bins = std::max(h.n_bins, 1);
  h.counts.assign(static_cast<std::size_t>(h.n_bins) * h.n_bins, 0);
  for (const auto& e : events) {
    const int i1 = static_cast<int>(std::floor(e.t1_ps / bin_ps));
    const int i2 = static_cast<int>(std::floor(e.t2_ps / bin_ps));
    if (i1 < 0 || i1 >= h.n_bins || i2 < 0 || i2 >= h.n_bins) continue;
    ++h.counts[static_cast<std::size_t>(i1) * h.n_bins + i2];
  }
  return h;
}

HistogramDt histogram_dt(std::span<const CoincidenceRecord> events,
                         double bin_ps, double t_max_ps) {
  if (!(bin_ps > 0.0) || !(t_max_ps > 0.0)) {
    throw std::invalid_argument("histogram bin and range must be positive");
  }
  const int n_side =
      std::max(1, static_cast<int>(std::ceil(t_max_ps / bin_ps - 1e-9)));
  HistogramDt h;
  h.bin_ps = bin_ps;
  h.t_max_ps = n_side * bin_ps;
  h.counts.assign(static_cast<std::size_t>(2) * n_side, 0);
  for (const auto& e : events) {
    const double dt = e.t2_ps - e.t1_ps;
    // floor(dt / bin) keeps a bin edge exactly at zero.
    const int k = n_side + static_cast<int>(std::floor(dt / bin_ps));
    if (k < 0 || k >= h.n_bins()) continue;
    ++h.counts[static_cast<std::size_t>(k)];
  }
  return h;
}

std::vector<HistogramDt> histograms_dt_by_setting(
    std::span<const CoincidenceRecord> events, int n_settings, double bin_ps,
    double t_max_ps) {
  if (n_settings <= 0) {
    throw std::invalid_argument("n_settings must be positive");
  }
  std::vector<HistogramDt> out;
  out.reserve(static_cast<std::size_t>(n_settings));
  const HistogramDt empty = histogram_dt({}, bin_ps, t_max_ps);
  for (int s = 0; s < n_settings; ++s) out.push_back(empty);
  const int n_side = empty.n_bins() / 2;
  for (const auto& e : events) {
    if (e.setting_id < 0 || e.setting_id >= n_settings) {
      throw std::invalid_argument("event setting_id outside the settings list");
    }
    auto& h = out[static_cast<std::size_t>(e.setting_id)];
    const double dt = e.t2_ps - e.t1_ps;
    const int k = n_side + static_cast<int>(std::floor(dt / bin_ps));
    if (k < 0 || k >= h.n_bins()) continue;
    ++h.counts[static_cast<std::size_t>(k)];
  }
  return out;
}

}  // namespace cascade
