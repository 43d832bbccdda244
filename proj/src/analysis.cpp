#include "cascade/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cascade/errors.hpp"
#include "cascade/metrics.hpp"
#include "cascade/random.hpp"

namespace cascade {

namespace {

double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/// Composite Simpson rule over [a, b] with n (even) intervals.
template <typename F>
auto simpson(F f, double a, double b, int n) -> decltype(f(a)) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  auto sum = f(a) + f(b);
  for (int k = 1; k < n; ++k) {
    sum += f(a + k * h) * (k % 2 == 1 ? 4.0 : 2.0);
  }
  return sum * (h / 3.0);
}

struct DevianceContext {
  const TomographyInput& input;
  const CascadeParams& params;
  const Irf& irf;
  double total_counts;

  /// Poisson deviance at the given lifetime, with the shared scale profiled
  /// out analytically (the minimizing scale is total data / total model).
  double operator()(double tau, double* scale_out = nullptr,
                    std::vector<std::vector<double>>* model_out = nullptr,
                    bool* coarse = nullptr) const {
    auto model = model_curves(input, params, tau, irf, coarse);
    double model_total = 0.0;
    for (const auto& curve : model) {
      for (double m : curve) model_total += m;
    }
    if (!(model_total > 0.0)) {
      throw FitError("rate model vanishes on the whole histogram grid");
    }
    const double scale = total_counts / model_total;
    if (scale_out) *scale_out = scale;

    double dev = 0.0;
    for (int v = 0; v < 16; ++v) {
      const auto& data = input.counts[static_cast<std::size_t>(v)];
      auto& curve = model[static_cast<std::size_t>(v)];
      for (std::size_t k = 0; k < curve.size(); ++k) {
        curve[k] *= scale;
        const double m = curve[k];
        const double n = data[k];
        if (n > 0.0) {
          dev += 2.0 * (m - n + n * std::log(n / std::max(m, 1e-300)));
        } else {
          dev += 2.0 * m;
        }
      }
    }
    if (model_out) *model_out = std::move(model);
    return dev;
  }
};

}  // namespace

double SampledCurve::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * bin_ps;
}

ConvolutionResult convolve(const SampledCurve& curve, const Irf& irf) {
  if (!(curve.bin_ps > 0.0)) {
    throw std::invalid_argument("curve bin width must be positive");
  }
  if (!(irf.fwhm_ps >= 0.0) || !std::isfinite(irf.fwhm_ps)) {
    throw std::invalid_argument("IRF width must be finite and >= 0");
  }
  ConvolutionResult out;
  out.curve = curve;
  const double sigma = irf.sigma_ps();
  if (sigma == 0.0) return out;

  out.coarse_grid_warning = curve.bin_ps > 0.5 * sigma;
  const int half = static_cast<int>(std::ceil(6.0 * sigma / curve.bin_ps));
  std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
  double norm = 0.0;
  for (int j = -half; j <= half; ++j) {
    const double u = j * curve.bin_ps / sigma;
    kernel[static_cast<std::size_t>(j + half)] = std::exp(-0.5 * u * u);
    norm += kernel[static_cast<std::size_t>(j + half)];
  }
  for (double& w : kernel) w /= norm;

  const int n = curve.n_bins();
  std::fill(out.curve.values.begin(), out.curve.values.end(), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    const int j_lo = std::max(-half, i - n + 1);
    const int j_hi = std::min(half, i);
    for (int j = j_lo; j <= j_hi; ++j) {
      acc += kernel[static_cast<std::size_t>(j + half)] *
             curve.values[static_cast<std::size_t>(i - j)];
    }
    out.curve.values[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

std::vector<double> residuals_normalized(std::span<const double> data,
                                         std::span<const double> model) {
  if (data.size() != model.size()) {
    throw std::invalid_argument("data and model must share binning");
  }
  std::vector<double> res(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    res[k] = model[k] > 0.0
                 ? (data[k] - model[k]) / std::sqrt(model[k])
                 : std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

std::vector<std::vector<double>> model_curves(const TomographyInput& input,
                                              const CascadeParams& params,
                                              double tau_x_ps, const Irf& irf,
                                              bool* coarse_warning) {
  input.validate();
  if (!(tau_x_ps > 0.0)) {
    throw std::invalid_argument("lifetime must be positive");
  }
  CascadeParams p = params;
  p.tau_x_ps = tau_x_ps;

  const double sigma = irf.sigma_ps();
  const int n = input.n_bins();
  const int pad =
      sigma > 0.0
          ? static_cast<int>(std::ceil(8.0 * sigma / input.bin_ps))
          : 0;
  SampledCurve extended;
  extended.bin_ps = input.bin_ps;
  extended.t0_ps = input.t0_ps - pad * input.bin_ps;
  extended.values.assign(static_cast<std::size_t>(n + 2 * pad), 0.0);

  const auto settings = default_settings();
  std::vector<std::vector<double>> out;
  out.reserve(16);
  bool coarse = false;
  for (const auto& setting : settings) {
    const auto coeffs = PairAmplitudeCoeffs::from(setting.p1, setting.p2);
    for (int k = 0; k < extended.n_bins(); ++k) {
      const double t = extended.t_center(k);
      extended.values[static_cast<std::size_t>(k)] =
          t < 0.0 ? 0.0
                  : exciton_decay_rate(t, p) * coeffs.probability(t, p);
    }
    ConvolutionResult conv = convolve(extended, irf);
    coarse = coarse || conv.coarse_grid_warning;
    std::vector<double> curve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      curve[static_cast<std::size_t>(k)] =
          conv.curve.values[static_cast<std::size_t>(k + pad)] * input.bin_ps;
    }
    out.push_back(std::move(curve));
  }
  if (coarse_warning) *coarse_warning = coarse;
  return out;
}

FitResult fit_tau_r(const TomographyInput& input, const CascadeParams& params,
                    const Irf& irf) {
  input.validate();
  double total = 0.0;
  for (const auto& c : input.counts) {
    for (double v : c) total += v;
  }
  if (!(total > 0.0)) {
    throw EmptyWindowError("histograms hold no events to fit");
  }

  const DevianceContext dev{input, params, irf, total};
  constexpr double kTauLo = 5.0;
  constexpr double kTauHi = 4000.0;

  // Coarse log-spaced scan to bracket the minimum, then golden-section.
  constexpr int kScan = 80;
  double best_tau = kTauLo;
  double best_dev = std::numeric_limits<double>::infinity();
  int best_idx = 0;
  std::vector<double> taus(kScan);
  for (int i = 0; i < kScan; ++i) {
    taus[static_cast<std::size_t>(i)] =
        kTauLo * std::pow(kTauHi / kTauLo, static_cast<double>(i) / (kScan - 1));
    const double d = dev(taus[static_cast<std::size_t>(i)]);
    if (d < best_dev) {
      best_dev = d;
      best_tau = taus[static_cast<std::size_t>(i)];
      best_idx = i;
    }
  }

  bool converged = best_idx > 0 && best_idx < kScan - 1;
  double lo = taus[static_cast<std::size_t>(std::max(0, best_idx - 1))];
  double hi = taus[static_cast<std::size_t>(std::min(kScan - 1, best_idx + 1))];
  if (converged) {
    constexpr double kGolden = 0.6180339887498949;
    double x1 = hi - kGolden * (hi - lo);
    double x2 = lo + kGolden * (hi - lo);
    double f1 = dev(x1);
    double f2 = dev(x2);
    while (hi - lo > 0.005) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - kGolden * (hi - lo);
        f1 = dev(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + kGolden * (hi - lo);
        f2 = dev(x2);
      }
    }
    best_tau = 0.5 * (lo + hi);
    best_dev = std::min(f1, f2);
  }

  FitResult result;
  result.tau_r_ps = best_tau;
  result.converged = converged;
  result.deviance = best_dev;
  result.precession_ps = params.precession_ps;
  result.irf_fwhm_ps = irf.fwhm_ps;
  result.t0_ps = input.t0_ps;
  result.bin_ps = input.bin_ps;

  // 1-sigma from the deviance profile: where it rises by exactly 1.
  auto cross = [&](double inner, double outer) {
    const double target = best_dev + 1.0;
    if (dev(outer) < target) return std::numeric_limits<double>::quiet_NaN();
    double a = inner;
    double b = outer;
    for (int i = 0; i < 60 && std::abs(b - a) > 1e-4; ++i) {
      const double mid = 0.5 * (a + b);
      (dev(mid) < target ? a : b) = mid;
    }
    return 0.5 * (a + b);
  };
  const double up = cross(best_tau, kTauHi);
  const double down = cross(best_tau, kTauLo);
  if (std::isfinite(up) && std::isfinite(down)) {
    result.tau_r_sigma_ps = 0.5 * (up - down);
  } else {
    result.tau_r_sigma_ps = std::numeric_limits<double>::quiet_NaN();
  }

  // Final model, Pearson chi-square, and per-curve residuals.
  dev(best_tau, &result.scale, &result.model_counts,
      &result.coarse_grid_warning);
  double chi2 = 0.0;
  long long n_used = 0;
  result.residuals.reserve(16);
  for (int v = 0; v < 16; ++v) {
    const auto& data = input.counts[static_cast<std::size_t>(v)];
    const auto& model = result.model_counts[static_cast<std::size_t>(v)];
    result.residuals.push_back(residuals_normalized(data, model));
    for (std::size_t k = 0; k < model.size(); ++k) {
      if (model[k] >= 0.5) {
        const double d = data[k] - model[k];
        chi2 += d * d / model[k];
        ++n_used;
      }
    }
  }
  const long long dof = std::max<long long>(1, n_used - 2);
  result.chi2_per_dof = chi2 / static_cast<double>(dof);
  return result;
}

double negativity_window_model(double lo_ps, double hi_ps,
                               const CascadeParams& params) {
  if (!(hi_ps > lo_ps)) {
    throw std::invalid_argument("window must have positive width");
  }
  const double tau = params.tau_x_ps;
  const double omega = params.omega_ps();
  const double sigma = irf_pair_sigma_ps(params);

  if (sigma == 0.0) {
    const double lo = std::max(lo_ps, 0.0);
    if (hi_ps <= lo) {
      throw EmptyWindowError("window lies before any emission");
    }
    const Complex a(1.0 / tau, -omega);
    const Complex num = std::exp(-a * lo) - std::exp(-a * hi_ps);
    const double den = std::exp(-lo / tau) - std::exp(-hi_ps / tau);
    return std::abs(num) / (2.0 * tau * std::abs(a) * den);
  }

  // The weight of emission delay t is the chance its jittered copy lands in
  // the window.
  auto weight = [&](double t) {
    return std_normal_cdf((hi_ps - t) / sigma) -
           std_normal_cdf((lo_ps - t) / sigma);
  };
  const double t_hi = hi_ps + 10.0 * sigma;
  const int n = std::max(4000, static_cast<int>(t_hi / 0.25));
  const Complex num = simpson(
      [&](double t) {
        return std::exp(-t / tau) * weight(t) *
               std::exp(Complex(0.0, omega * t));
      },
      0.0, t_hi, n);
  const double den = simpson(
      [&](double t) { return std::exp(-t / tau) * weight(t); }, 0.0, t_hi, n);
  if (!(den > 1e-300)) {
    throw EmptyWindowError("window weight vanishes");
  }
  return std::abs(num) / (2.0 * den);
}

double negativity_sinc_irf(double delta_t_ps, const CascadeParams& params) {
  const double sigma = irf_pair_sigma_ps(params);
  const double x = kPi * sigma / params.precession_ps;
  return windowed_negativity_analytic(delta_t_ps, params) *
         std::exp(-2.0 * x * x);
}

std::vector<SweepPoint> negativity_vs_window(const TomographyInput& input,
                                             const CascadeParams& params,
                                             std::span<const double> delta_t_grid,
                                             int n_resamples,
                                             std::uint64_t seed) {
  input.validate();
  std::vector<SweepPoint> out;
  out.reserve(delta_t_grid.size());
  std::uint64_t index = 0;
  for (double dt : delta_t_grid) {
    if (!(dt > 0.0)) {
      throw ConfigError("window widths must be positive");
    }
    SweepPoint point;
    point.delta_t_ps = dt;
    point.n_ideal = windowed_negativity_analytic(dt, params);
    point.n_irf_model = negativity_window_model(0.0, dt, params);

    const auto counts = input.window_counts(0.0, dt);
    double total = 0.0;
    for (double c : counts) total += c;
    point.low_stats = total < 100.0;
    try {
      const ReconstructionResult rec = mle_reconstruct(counts);
      point.n_data = negativity(rec.rho).value;
      if (n_resamples > 0) {
        point.n_sigma =
            bootstrap_uncertainty(counts, n_resamples,
                                  derive_stream_seed(seed, 0x73776565u, index),
                                  ReconstructionMethod::mle)
                .negativity_sigma;
      }
    } catch (const EmptyWindowError&) {
      point.n_data = std::numeric_limits<double>::quiet_NaN();
      point.n_sigma = std::numeric_limits<double>::quiet_NaN();
      point.low_stats = true;
    }
    out.push_back(point);
    ++index;
  }
  return out;
}

}  // namespace cascade
