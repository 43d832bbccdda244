// Unit tests for the analysis layer: IRF convolution, residual diagnostics,
// the shared-lifetime fit, and the window-negativity model curves.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cascade/analysis.hpp"
#include "cascade/cascade_model.hpp"
#include "cascade/errors.hpp"
#include "cascade/metrics.hpp"
#include "cascade/polarization.hpp"
#include "cascade/tomography.hpp"
#include "oracle_util.hpp"

using namespace cascade;

namespace {

CascadeParams params_irf(double irf_fwhm_ps) {
  return CascadeParams::from_precession(122.0, 410.0, 260.0, 1e-3,
                                        irf_fwhm_ps);
}

/// Empty input shell fixing the grid; counts follow from the model curves.
TomographyInput grid_shell(double bin_ps, double t0_ps, int n_bins) {
  TomographyInput input;
  input.bin_ps = bin_ps;
  input.t0_ps = t0_ps;
  input.counts.assign(16, std::vector<double>(static_cast<std::size_t>(n_bins),
                                              0.0));
  return input;
}

/// Noise-free data: unit model curves at the given lifetime, scaled to a
/// target total event count.
TomographyInput noise_free_input(const CascadeParams& params, double tau_x_ps,
                                 const Irf& irf, double bin_ps, double t0_ps,
                                 int n_bins, double total_events) {
  TomographyInput input = grid_shell(bin_ps, t0_ps, n_bins);
  auto model = model_curves(input, params, tau_x_ps, irf);
  double total = 0.0;
  for (const auto& c : model) {
    for (double v : c) total += v;
  }
  const double scale = total_events / total;
  for (int v = 0; v < 16; ++v) {
    for (int k = 0; k < n_bins; ++k) {
      input.counts[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] =
          scale * model[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)];
    }
  }
  return input;
}

double max_finite_abs(const std::vector<std::vector<double>>& rows) {
  double m = 0.0;
  for (const auto& row : rows) {
    for (double v : row) {
      if (std::isfinite(v)) m = std::max(m, std::abs(v));
    }
  }
  return m;
}

/// Independent weight for a jittered time landing in [lo, hi): numeric
/// integral of the Gaussian density, no error functions involved.
double window_weight(double t, double lo, double hi, double sigma) {
  return oracle::integrate(
      [&](double u) {
        const double z = (u - t) / sigma;
        return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * kPi));
      },
      lo, hi, 400);
}

}  // namespace

TEST_CASE("convolving a spike yields a unit-integral Gaussian of the "
          "response width") {
  SampledCurve curve;
  curve.bin_ps = 2.0;
  curve.t0_ps = -200.0;
  curve.values.assign(200, 0.0);
  curve.values[100] = 7.0;  // spike at t = 1 (center of bin 100)
  const double spike_integral = curve.integral();

  const Irf irf{42.0};
  const double sigma = irf.sigma_ps();
  const ConvolutionResult out = convolve(curve, irf);
  CHECK_FALSE(out.coarse_grid_warning);
  CHECK(std::abs(out.curve.integral() - spike_integral) < 1e-12);

  // Peak at the spike bin, symmetric around it, Gaussian second moment.
  int peak = 0;
  for (int k = 0; k < out.curve.n_bins(); ++k) {
    if (out.curve.values[static_cast<std::size_t>(k)] >
        out.curve.values[static_cast<std::size_t>(peak)]) {
      peak = k;
    }
  }
  CHECK(peak == 100);
  for (int j = 1; j < 40; ++j) {
    CHECK(out.curve.values[static_cast<std::size_t>(100 + j)] ==
          doctest::Approx(out.curve.values[static_cast<std::size_t>(100 - j)])
              .epsilon(1e-12));
  }
  double mass = 0.0, mean = 0.0;
  for (int k = 0; k < out.curve.n_bins(); ++k) {
    mass += out.curve.values[static_cast<std::size_t>(k)];
    mean += out.curve.values[static_cast<std::size_t>(k)] * out.curve.t_center(k);
  }
  mean /= mass;
  double var = 0.0;
  for (int k = 0; k < out.curve.n_bins(); ++k) {
    const double d = out.curve.t_center(k) - mean;
    var += out.curve.values[static_cast<std::size_t>(k)] * d * d;
  }
  var /= mass;
  CHECK(var == doctest::Approx(sigma * sigma).epsilon(1e-3));
}

TEST_CASE("convolution preserves the emission-curve integral on a grid with "
          "margins") {
  const auto p = params_irf(42.0);
  const auto h = named_state(Pol::H);
  SampledCurve curve;
  curve.bin_ps = 3.0;
  curve.t0_ps = -150.0;
  curve.values.assign(1550, 0.0);  // covers [-150, 4500)
  for (int k = 0; k < curve.n_bins(); ++k) {
    const double t = curve.t_center(k);
    curve.values[static_cast<std::size_t>(k)] =
        t < 0.0 ? 0.0 : coincidence_rate(t, h, h, p);
  }
  const ConvolutionResult out = convolve(curve, Irf{42.0});
  CHECK(std::abs(out.curve.integral() - curve.integral()) <
        1e-6 * curve.integral());
}

TEST_CASE("convolution is linear in the input curve") {
  oracle::Rng rng(77);
  SampledCurve f, g;
  f.bin_ps = g.bin_ps = 4.0;
  f.t0_ps = g.t0_ps = 0.0;
  f.values.resize(100);
  g.values.resize(100);
  for (int k = 0; k < 100; ++k) {
    f.values[static_cast<std::size_t>(k)] = rng.uniform(0.0, 10.0);
    g.values[static_cast<std::size_t>(k)] = rng.uniform(0.0, 10.0);
  }
  SampledCurve combo = f;
  for (int k = 0; k < 100; ++k) {
    combo.values[static_cast<std::size_t>(k)] =
        2.5 * f.values[static_cast<std::size_t>(k)] -
        0.5 * g.values[static_cast<std::size_t>(k)];
  }
  const Irf irf{30.0};
  const auto cf = convolve(f, irf).curve;
  const auto cg = convolve(g, irf).curve;
  const auto cc = convolve(combo, irf).curve;
  for (int k = 0; k < 100; ++k) {
    CHECK(std::abs(cc.values[static_cast<std::size_t>(k)] -
                   (2.5 * cf.values[static_cast<std::size_t>(k)] -
                    0.5 * cg.values[static_cast<std::size_t>(k)])) < 1e-10);
  }
}

TEST_CASE("a grid coarser than half the response width raises the warning") {
  SampledCurve curve;
  curve.t0_ps = 0.0;
  curve.values.assign(50, 1.0);
  const Irf irf{42.0};  // sigma ~ 17.84, so the threshold bin is ~8.92

  curve.bin_ps = 10.0;
  CHECK(convolve(curve, irf).coarse_grid_warning);
  curve.bin_ps = 6.0;
  CHECK_FALSE(convolve(curve, irf).coarse_grid_warning);

  curve.bin_ps = 0.0;
  CHECK_THROWS_AS(convolve(curve, irf), std::invalid_argument);
  curve.bin_ps = 6.0;
  CHECK_THROWS_AS(convolve(curve, Irf{-1.0}), std::invalid_argument);
}

TEST_CASE("a zero-width response leaves the curve untouched") {
  SampledCurve curve;
  curve.bin_ps = 5.0;
  curve.t0_ps = -20.0;
  curve.values = {1.0, 4.0, 2.0, 8.0, 0.5};
  const ConvolutionResult out = convolve(curve, Irf{0.0});
  CHECK_FALSE(out.coarse_grid_warning);
  CHECK(out.curve.values == curve.values);
}

TEST_CASE("smearing lifts the co-circular curve at zero delay") {
  const auto p = params_irf(42.0);
  const auto l = named_state(Pol::L);
  SampledCurve curve;
  curve.bin_ps = 3.0;
  curve.t0_ps = -150.0;
  curve.values.assign(700, 0.0);
  for (int k = 0; k < curve.n_bins(); ++k) {
    const double t = curve.t_center(k);
    curve.values[static_cast<std::size_t>(k)] =
        t < 0.0 ? 0.0 : coincidence_rate(t, l, l, p);
  }
  const auto smeared = convolve(curve, Irf{42.0}).curve;
  const int k0 = 50;  // bin [0, 3)
  CHECK(curve.t_center(k0) == 1.5);
  CHECK(smeared.values[k0] > 0.0);
  CHECK(smeared.values[k0] > 5.0 * curve.values[k0]);
}

TEST_CASE("normalized residuals vanish on exact data and flag dead model "
          "bins") {
  const std::vector<double> model = {4.0, 9.0, 0.0, 16.0};
  const std::vector<double> data = {4.0, 9.0, 3.0, 16.0};
  const auto res = residuals_normalized(data, model);
  REQUIRE(res.size() == 4);
  CHECK(res[0] == 0.0);
  CHECK(res[1] == 0.0);
  CHECK(std::isnan(res[2]));
  CHECK(res[3] == 0.0);

  const std::vector<double> one_data = {13.0};
  const std::vector<double> one_model = {9.0};
  const auto shifted = residuals_normalized(one_data, one_model);
  CHECK(shifted[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-15));

  const std::vector<double> short_model = {1.0, 2.0};
  CHECK_THROWS_AS(residuals_normalized(data, short_model),
                  std::invalid_argument);
}

TEST_CASE("Poisson fluctuations produce standard-normal residuals") {
  oracle::Rng rng(999);
  std::vector<double> model(2000), data(2000);
  for (int k = 0; k < 2000; ++k) {
    model[static_cast<std::size_t>(k)] = 50.0 + 1000.0 * std::exp(-k / 500.0);
    data[static_cast<std::size_t>(k)] = static_cast<double>(
        rng.poisson(model[static_cast<std::size_t>(k)]));
  }
  const auto res = residuals_normalized(data, model);
  int inside = 0;
  double worst = 0.0;
  for (double r : res) {
    if (std::abs(r) <= 3.0) ++inside;
    worst = std::max(worst, std::abs(r));
  }
  CHECK(inside >= static_cast<int>(0.99 * res.size()));
  CHECK(worst < 5.0);
}

TEST_CASE("a wrong lifetime leaves structured residuals the fit would see") {
  const auto p = params_irf(42.0);
  const Irf irf{42.0};
  const auto right = noise_free_input(p, 410.0, irf, 6.0, -60.0, 310, 4e6);
  const auto wrong_model = model_curves(right, p, 205.0, irf);

  // Rescale the wrong model to the same total so only the shape differs.
  double data_total = 0.0, model_total = 0.0;
  for (int v = 0; v < 16; ++v) {
    for (std::size_t k = 0; k < wrong_model[static_cast<std::size_t>(v)].size();
         ++k) {
      data_total += right.counts[static_cast<std::size_t>(v)][k];
      model_total += wrong_model[static_cast<std::size_t>(v)][k];
    }
  }
  int structured = 0;
  for (int v = 0; v < 16; ++v) {
    std::vector<double> scaled = wrong_model[static_cast<std::size_t>(v)];
    for (double& m : scaled) m *= data_total / model_total;
    for (double r :
         residuals_normalized(right.counts[static_cast<std::size_t>(v)],
                              scaled)) {
      if (std::isfinite(r) && std::abs(r) > 3.0) ++structured;
    }
  }
  CHECK(structured > 10);
}

TEST_CASE("the lifetime fit recovers noise-free curves to a tenth of a "
          "picosecond") {
  const auto p = params_irf(42.0);
  const Irf irf{42.0};
  const auto input = noise_free_input(p, 410.0, irf, 6.0, -60.0, 310, 1e6);
  const FitResult fit = fit_tau_r(input, p, irf);
  CHECK(fit.converged);
  CHECK(std::abs(fit.tau_r_ps - 410.0) < 0.1);
  CHECK(fit.chi2_per_dof < 1e-4);
  CHECK(fit.deviance < 1e-2);
  CHECK_FALSE(fit.coarse_grid_warning);
  CHECK(std::isfinite(fit.tau_r_sigma_ps));
  CHECK(fit.tau_r_sigma_ps > 0.01);
  CHECK(max_finite_abs(fit.residuals) < 0.05);
  REQUIRE(fit.model_counts.size() == 16);
  REQUIRE(fit.residuals.size() == 16);
  CHECK(fit.precession_ps == p.precession_ps);
  CHECK(fit.irf_fwhm_ps == 42.0);
  CHECK(fit.bin_ps == 6.0);
  CHECK(fit.t0_ps == -60.0);

  // The profiled scale matches the generated amplitude.
  double total = 0.0;
  for (const auto& c : input.counts) {
    for (double v : c) total += v;
  }
  double model_total = 0.0;
  const auto unit = model_curves(input, p, fit.tau_r_ps, irf);
  for (const auto& c : unit) {
    for (double v : c) model_total += v;
  }
  CHECK(fit.scale == doctest::Approx(total / model_total).epsilon(1e-12));
}

TEST_CASE("the lifetime fit is scale invariant") {
  const auto p = params_irf(42.0);
  const Irf irf{42.0};
  const auto small = noise_free_input(p, 410.0, irf, 6.0, -60.0, 310, 1e4);
  TomographyInput big = small;
  for (auto& row : big.counts) {
    for (double& v : row) v *= 100.0;
  }
  const double tau_small = fit_tau_r(small, p, irf).tau_r_ps;
  const double tau_big = fit_tau_r(big, p, irf).tau_r_ps;
  CHECK(std::abs(tau_small - tau_big) < 1e-6);
}

TEST_CASE("the lifetime fit handles Poisson data at full statistics") {
  const auto p = params_irf(42.0);
  const Irf irf{42.0};
  TomographyInput input = noise_free_input(p, 410.0, irf, 6.0, -60.0, 310, 4e6);
  oracle::Rng rng(2025);
  for (auto& row : input.counts) {
    for (double& v : row) v = static_cast<double>(rng.poisson(v));
  }
  const FitResult fit = fit_tau_r(input, p, irf);
  CHECK(fit.converged);
  CHECK(fit.tau_r_ps > 400.0);
  CHECK(fit.tau_r_ps < 420.0);
  CHECK(fit.chi2_per_dof < 1.5);
  CHECK(fit.tau_r_sigma_ps > 0.05);
  CHECK(fit.tau_r_sigma_ps < 2.0);
}

TEST_CASE("the fitted uncertainty halves when statistics quadruple") {
  const auto p = params_irf(42.0);
  const Irf irf{42.0};
  const auto base = noise_free_input(p, 410.0, irf, 6.0, -60.0, 310, 1e5);
  TomographyInput quad = base;
  for (auto& row : quad.counts) {
    for (double& v : row) v *= 4.0;
  }
  const double s1 = fit_tau_r(base, p, irf).tau_r_sigma_ps;
  const double s4 = fit_tau_r(quad, p, irf).tau_r_sigma_ps;
  REQUIRE(std::isfinite(s1));
  REQUIRE(std::isfinite(s4));
  CHECK(std::abs(s1 / s4 - 2.0) < 0.06);
}

TEST_CASE("empty histograms cannot be fitted") {
  const auto p = params_irf(42.0);
  const auto input = grid_shell(6.0, -60.0, 100);
  CHECK_THROWS_AS(fit_tau_r(input, p, Irf{42.0}), EmptyWindowError);
}

TEST_CASE("a lifetime beyond the scan range stops unconverged at the edge") {
  const auto p = params_irf(42.0);
  const Irf irf{42.0};
  const auto input = noise_free_input(p, 4500.0, irf, 6.0, -60.0, 310, 1e5);
  const FitResult fit = fit_tau_r(input, p, irf);
  CHECK_FALSE(fit.converged);
  CHECK(fit.tau_r_ps == doctest::Approx(4000.0).epsilon(1e-9));
}

TEST_CASE("coarse histogram binning propagates into the fit report") {
  const auto p = params_irf(42.0);
  const Irf irf{42.0};
  const auto coarse = noise_free_input(p, 410.0, irf, 10.0, -60.0, 186, 1e5);
  CHECK(fit_tau_r(coarse, p, irf).coarse_grid_warning);
}

TEST_CASE("model curves ignore the biexciton lifetime and reject bad input") {
  const auto a = params_irf(42.0);
  auto b = a;
  b.tau_xx_ps = 100.0;
  const auto shell = grid_shell(6.0, -60.0, 200);
  const auto ca = model_curves(shell, a, 410.0, Irf{42.0});
  const auto cb = model_curves(shell, b, 410.0, Irf{42.0});
  REQUIRE(ca.size() == 16);
  for (int v = 0; v < 16; ++v) {
    CHECK(ca[static_cast<std::size_t>(v)] == cb[static_cast<std::size_t>(v)]);
  }
  CHECK_THROWS_AS(model_curves(shell, a, 0.0, Irf{42.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(model_curves(shell, a, -5.0, Irf{42.0}),
                  std::invalid_argument);

  // The crossed rectilinear settings are exactly dark in the model.
  double hv_total = 0.0;
  for (double v : ca[1]) hv_total += v;
  CHECK(hv_total == 0.0);
}

TEST_CASE("jitter-free window negativity matches direct quadrature and its "
          "closed form") {
  const auto p = params_irf(0.0);
  const double tau = 410.0;
  const double omega = p.omega_ps();
  oracle::Rng rng(808);
  for (int i = 0; i < 40; ++i) {
    const double lo_raw = rng.uniform(-50.0, 300.0);
    const double hi = lo_raw + rng.uniform(5.0, 400.0);
    if (hi <= 0.0) continue;
    const double lo = std::max(lo_raw, 0.0);

    const Complex num = oracle::integrate(
        [&](double t) {
          return std::exp(-t / tau) * std::polar(1.0, omega * t);
        },
        lo, hi, 40000);
    const double den = oracle::integrate(
        [&](double t) { return std::exp(-t / tau); }, lo, hi, 40000);
    const double expected = std::abs(num) / (2.0 * den);
    CHECK(std::abs(negativity_window_model(lo_raw, hi, p) - expected) < 1e-9);
  }
}

TEST_CASE("the full-period window keeps a residual negativity from the "
          "exponential weighting") {
  const auto p = params_irf(0.0);
  const double value = negativity_window_model(0.0, 122.0, p);
  // Flat weighting would average the corner to zero over a full period; the
  // exponential tilt leaves |1 - e^{-T/tau}| / (2 tau |1/tau - i w| (1 - e^{-T/tau})).
  const Complex a(1.0 / 410.0, -p.omega_ps());
  const double expected = 1.0 / (2.0 * 410.0 * std::abs(a));
  CHECK(value == doctest::Approx(expected).epsilon(1e-12));
  CHECK(value > 0.02);
  CHECK(value < 0.03);
  CHECK(std::abs(windowed_negativity_analytic(122.0, p)) < 1e-15);
}

TEST_CASE("narrow anchored windows approach the ideal sinc value") {
  const auto p = params_irf(0.0);
  // Over [0, 24) the exponential barely tilts the average.
  CHECK(negativity_window_model(0.0, 24.0, p) ==
        doctest::Approx(windowed_negativity_analytic(24.0, p)).epsilon(2e-3));
}

TEST_CASE("window negativity model raises the empty-window error when no "
          "emission can land inside") {
  const auto ideal = params_irf(0.0);
  CHECK_THROWS_AS(negativity_window_model(-10.0, -1.0, ideal),
                  EmptyWindowError);
  CHECK_THROWS_AS(negativity_window_model(5.0, 5.0, ideal),
                  std::invalid_argument);
  CHECK_THROWS_AS(negativity_window_model(9.0, 3.0, ideal),
                  std::invalid_argument);

  const auto jittered = params_irf(42.0);
  CHECK_THROWS_AS(negativity_window_model(-5000.0, -4900.0, jittered),
                  EmptyWindowError);
}

TEST_CASE("jittered window negativity matches an independent double "
          "quadrature") {
  const auto p = params_irf(42.0);
  const double sigma = irf_pair_sigma_ps(p);
  const double tau = 410.0;
  const double omega = p.omega_ps();
  for (double hi : {24.0, 61.0, 122.0, 200.0}) {
    const double lo = 0.0;
    const double t_hi = hi + 12.0 * sigma;
    const Complex num = oracle::integrate(
        [&](double t) {
          return std::exp(-t / tau) * window_weight(t, lo, hi, sigma) *
                 std::polar(1.0, omega * t);
        },
        0.0, t_hi, 20000);
    const double den = oracle::integrate(
        [&](double t) {
          return std::exp(-t / tau) * window_weight(t, lo, hi, sigma);
        },
        0.0, t_hi, 20000);
    const double expected = std::abs(num) / (2.0 * den);
    CHECK(std::abs(negativity_window_model(lo, hi, p) - expected) < 1e-6);
  }
}

TEST_CASE("the jitter attenuation factor matches the smeared-window Fourier "
          "average") {
  const auto p = params_irf(42.0);
  const double sigma = irf_pair_sigma_ps(p);
  const double x = kPi * sigma / 122.0;
  const double factor = std::exp(-2.0 * x * x);
  CHECK(factor == doctest::Approx(0.6558).epsilon(2e-4));

  for (double dt : {24.0, 61.0, 100.0}) {
    const double ideal = windowed_negativity_analytic(dt, p);
    const double value = negativity_sinc_irf(dt, p);
    CHECK(value == doctest::Approx(ideal * factor).epsilon(1e-12));
    CHECK(value <= ideal);

    // Independent oracle: average the rotating corner over a smeared square
    // window placed far from zero so no truncation interferes.
    const double lo = 800.0;
    const double hi = lo + dt;
    const double omega = p.omega_ps();
    const Complex num = oracle::integrate(
        [&](double t) {
          return window_weight(t, lo, hi, sigma) *
                 std::polar(1.0, omega * t);
        },
        lo - 12.0 * sigma, hi + 12.0 * sigma, 20000);
    const double den = oracle::integrate(
        [&](double t) { return window_weight(t, lo, hi, sigma); },
        lo - 12.0 * sigma, hi + 12.0 * sigma, 20000);
    CHECK(std::abs(value - std::abs(num) / (2.0 * den)) < 1e-6);
  }
}

TEST_CASE("negativity sweep reconstructs the discrete window averages of "
          "exact inputs") {
  const auto p = params_irf(42.0);
  const auto settings = default_settings();
  TomographyInput input = grid_shell(6.0, 0.0, 61);  // covers [0, 366)
  for (int v = 0; v < 16; ++v) {
    const auto& s = settings[static_cast<std::size_t>(v)];
    for (int k = 0; k < 61; ++k) {
      input.counts[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] =
          2000.0 *
          pair_projection_probability(input.bin_center(k), s.p1, s.p2, p);
    }
  }

  const std::vector<double> grid = {61.0, 122.0, 183.0, 244.0, 305.0};
  const auto sweep = negativity_vs_window(input, p, grid, 0, 3);
  REQUIRE(sweep.size() == 5);

  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const auto& pt = sweep[i];
    CHECK(pt.delta_t_ps == grid[i]);
    CHECK(pt.n_ideal ==
          doctest::Approx(windowed_negativity_analytic(grid[i], p))
              .epsilon(1e-14));
    CHECK(pt.n_irf_model ==
          doctest::Approx(negativity_window_model(0.0, grid[i], p))
              .epsilon(1e-12));
    CHECK_FALSE(pt.low_stats);
    CHECK(pt.n_sigma == 0.0);

    // Oracle: the reconstruction of summed exact bins is the discrete
    // average of the model state over the covered bin centers.
    Complex corner = 0.0;
    int m = 0;
    for (int k = 0; k < input.n_bins(); ++k) {
      const double c = input.bin_center(k);
      if (c < 0.0 || c >= grid[i]) continue;
      corner += std::polar(0.5, p.omega_ps() * c);
      ++m;
    }
    const double expected = std::abs(corner) / static_cast<double>(m);
    CHECK(std::abs(pt.n_data - expected) < 1e-6);
  }

  // The ideal column crosses zero exactly at one full period.
  CHECK(sweep[1].n_ideal < 1e-3);
  CHECK(sweep[1].n_data > 0.0);  // binning plus weighting keep data above it
}

TEST_CASE("negativity sweep declines monotonically inside the first period") {
  const auto p = params_irf(0.0);
  const auto settings = default_settings();
  TomographyInput input = grid_shell(6.0, 0.0, 21);
  for (int v = 0; v < 16; ++v) {
    const auto& s = settings[static_cast<std::size_t>(v)];
    for (int k = 0; k < 21; ++k) {
      input.counts[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] =
          1000.0 *
          pair_projection_probability(input.bin_center(k), s.p1, s.p2, p);
    }
  }
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(12.0 * i);
  const auto sweep = negativity_vs_window(input, p, grid, 0, 3);
  REQUIRE(sweep.size() == 10);
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    CHECK(sweep[i].n_data <= sweep[i - 1].n_data + 1e-9);
    CHECK(sweep[i].n_ideal <= sweep[i - 1].n_ideal + 1e-12);
  }
}

TEST_CASE("negativity sweep flags unusable inputs instead of aborting") {
  const auto p = params_irf(42.0);
  TomographyInput dead = grid_shell(6.0, 0.0, 30);
  const std::vector<double> grid = {60.0, 120.0};
  const auto sweep = negativity_vs_window(dead, p, grid, 0, 3);
  REQUIRE(sweep.size() == 2);
  for (const auto& pt : sweep) {
    CHECK(std::isnan(pt.n_data));
    CHECK(std::isnan(pt.n_sigma));
    CHECK(pt.low_stats);
    CHECK(pt.n_ideal > 0.0);
  }

  const std::vector<double> bad = {60.0, 0.0};
  CHECK_THROWS_AS(negativity_vs_window(dead, p, bad, 0, 3), ConfigError);
}

TEST_CASE("negativity sweep bootstraps a positive uncertainty from counting "
          "noise") {
  const auto p = params_irf(42.0);
  const auto settings = default_settings();
  TomographyInput input = grid_shell(6.0, 0.0, 41);
  oracle::Rng rng(616);
  for (int v = 0; v < 16; ++v) {
    const auto& s = settings[static_cast<std::size_t>(v)];
    for (int k = 0; k < 41; ++k) {
      const double mu =
          800.0 *
          pair_projection_probability(input.bin_center(k), s.p1, s.p2, p);
      input.counts[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)] =
          static_cast<double>(rng.poisson(mu));
    }
  }
  const std::vector<double> grid = {61.0, 122.0};
  const auto sweep = negativity_vs_window(input, p, grid, 25, 3);
  REQUIRE(sweep.size() == 2);
  for (const auto& pt : sweep) {
    CHECK(std::isfinite(pt.n_data));
    CHECK(pt.n_sigma > 0.0);
    CHECK_FALSE(pt.low_stats);
  }
}
