#include "cascade/tomography.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cascade/errors.hpp"
#include "cascade/metrics.hpp"
#include "cascade/polarization.hpp"
#include "cascade/random.hpp"

namespace cascade {

namespace {

constexpr int kQuadrupleIds[4] = {0, 1, 4, 5};  // HH, HV, VH, VV

const std::array<Mat4c, 16>& projectors() {
  static const std::array<Mat4c, 16> table = [] {
    std::array<Mat4c, 16> t;
    const auto settings = default_settings();
    for (int v = 0; v < 16; ++v) {
      t[static_cast<std::size_t>(v)] =
          pair_projector(settings[static_cast<std::size_t>(v)].p1,
                         settings[static_cast<std::size_t>(v)].p2);
    }
    return t;
  }();
  return table;
}

/// Real basis of Hermitian 4x4 matrices: the four diagonal units, then a
/// symmetric and an antisymmetric combination per off-diagonal pair.
const std::array<Mat4c, 16>& hermitian_basis() {
  static const std::array<Mat4c, 16> table = [] {
    std::array<Mat4c, 16> t;
    int k = 0;
    for (int i = 0; i < 4; ++i) {
      Mat4c m = Mat4c::Zero();
      m(i, i) = 1.0;
      t[static_cast<std::size_t>(k++)] = m;
    }
    for (int i = 0; i < 4; ++i) {
      for (int j = i + 1; j < 4; ++j) {
        Mat4c s = Mat4c::Zero();
        s(i, j) = 1.0;
        s(j, i) = 1.0;
        t[static_cast<std::size_t>(k++)] = s;
        Mat4c a = Mat4c::Zero();
        a(i, j) = Complex(0.0, 1.0);
        a(j, i) = Complex(0.0, -1.0);
        t[static_cast<std::size_t>(k++)] = a;
      }
    }
    return t;
  }();
  return table;
}

using Design = Eigen::Matrix<double, 16, 16>;

const Eigen::FullPivLU<Design>& design_lu() {
  static const Eigen::FullPivLU<Design> lu = [] {
    Design a;
    for (int v = 0; v < 16; ++v) {
      for (int k = 0; k < 16; ++k) {
        a(v, k) = (projectors()[static_cast<std::size_t>(v)] *
                   hermitian_basis()[static_cast<std::size_t>(k)])
                      .trace()
                      .real();
      }
    }
    return Eigen::FullPivLU<Design>(a);
  }();
  return lu;
}

double quadruple_sum(const std::array<double, 16>& counts) {
  double n = 0.0;
  for (int id : kQuadrupleIds) n += counts[static_cast<std::size_t>(id)];
  return n;
}

void check_counts(const std::array<double, 16>& counts) {
  for (double c : counts) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw std::invalid_argument("projection counts must be finite and >= 0");
    }
  }
}

/// Parameter packing for the Cholesky-style factor: 4 real diagonal entries,
/// then (re, im) per strictly lower entry in row-major order.
Mat4c unpack_factor(const Eigen::VectorXd& x) {
  Mat4c t = Mat4c::Zero();
  for (int i = 0; i < 4; ++i) t(i, i) = x(i);
  int k = 4;
  for (int i = 1; i < 4; ++i) {
    for (int j = 0; j < i; ++j) {
      t(i, j) = Complex(x(k), x(k + 1));
      k += 2;
    }
  }
  return t;
}

Eigen::VectorXd pack_factor(const Mat4c& t) {
  Eigen::VectorXd x(16);
  for (int i = 0; i < 4; ++i) x(i) = t(i, i).real();
  int k = 4;
  for (int i = 1; i < 4; ++i) {
    for (int j = 0; j < i; ++j) {
      x(k) = t(i, j).real();
      x(k + 1) = t(i, j).imag();
      k += 2;
    }
  }
  return x;
}

struct Likelihood {
  const std::array<double, 16>& counts;
  double n_total;  // rectilinear quadruple normalization

  double expected(const Mat4c& rho, int v) const {
    const double mu =
        (projectors()[static_cast<std::size_t>(v)] * rho).trace().real();
    return n_total * std::max(mu, 0.0);
  }

  /// Negative Poisson log-likelihood sum(mu - n ln mu).
  double value(const Mat4c& t) const {
    const Mat4c m = t * t.adjoint();
    const double s = m.trace().real();
    if (!(s > 0.0) || !std::isfinite(s)) return 1e300;
    const Mat4c rho = m / s;
    double f = 0.0;
    for (int v = 0; v < 16; ++v) {
      const double mu = expected(rho, v);
      const double n = counts[static_cast<std::size_t>(v)];
      f += mu;
      if (n > 0.0) f -= n * std::log(std::max(mu, 1e-300));
    }
    return f;
  }

  Eigen::VectorXd gradient(const Mat4c& t) const {
    const Mat4c m = t * t.adjoint();
    const double s = m.trace().real();
    const Mat4c rho = m / s;
    Mat4c g = Mat4c::Zero();
    for (int v = 0; v < 16; ++v) {
      const double mu = expected(rho, v);
      const double n = counts[static_cast<std::size_t>(v)];
      const double coeff = n_total * (1.0 - n / std::max(mu, 1e-300));
      g += coeff * projectors()[static_cast<std::size_t>(v)];
    }
    const double trace_term = (g * rho).trace().real();
    const Mat4c g_tilde = (g - trace_term * Mat4c::Identity()) / s;
    // With f depending on t only through t t^dag / tr, the chain rule gives
    // df/dRe t_pq = 2 Re v_qp and df/dIm t_pq = -2 Im v_qp for v below.
    const Mat4c v = t.adjoint() * g_tilde;
    Eigen::VectorXd grad(16);
    for (int i = 0; i < 4; ++i) grad(i) = 2.0 * v(i, i).real();
    int k = 4;
    for (int i = 1; i < 4; ++i) {
      for (int j = 0; j < i; ++j) {
        grad(k) = 2.0 * v(j, i).real();
        grad(k + 1) = -2.0 * v(j, i).imag();
        k += 2;
      }
    }
    return grad;
  }
};

}  // namespace

std::vector<ProjectionSetting> default_settings() {
  const Pol basis[4] = {Pol::H, Pol::V, Pol::D, Pol::L};
  std::vector<ProjectionSetting> settings;
  settings.reserve(16);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      ProjectionSetting s;
      s.setting_id = 4 * i + j;
      s.p1 = named_state(basis[i]);
      s.p2 = named_state(basis[j]);
      settings.push_back(s);
    }
  }
  return settings;
}

TomographyInput TomographyInput::from_histograms(
    const std::vector<HistogramDt>& hists) {
  if (hists.size() != 16) {
    throw std::invalid_argument("tomography needs exactly 16 settings");
  }
  TomographyInput input;
  input.bin_ps = hists[0].bin_ps;
  input.t0_ps = -hists[0].t_max_ps;
  input.counts.reserve(16);
  for (const auto& h : hists) {
    if (h.bin_ps != hists[0].bin_ps || h.t_max_ps != hists[0].t_max_ps) {
      throw std::invalid_argument("tomography histograms must share binning");
    }
    input.counts.emplace_back(h.counts.begin(), h.counts.end());
  }
  return input;
}

TomographyInput TomographyInput::from_events(
    std::span<const CoincidenceRecord> events, double bin_ps,
    double t_max_ps) {
  return from_histograms(
      histograms_dt_by_setting(events, 16, bin_ps, t_max_ps));
}

void TomographyInput::validate() const {
  if (counts.size() != 16) {
    throw std::invalid_argument("tomography needs exactly 16 settings");
  }
  if (!(bin_ps > 0.0)) {
    throw std::invalid_argument("tomography bin width must be positive");
  }
  for (const auto& c : counts) {
    if (c.size() != counts[0].size()) {
      throw std::invalid_argument("tomography histograms must share binning");
    }
  }
}

int TomographyInput::n_bins() const {
  return counts.empty() ? 0 : static_cast<int>(counts[0].size());
}

std::array<double, 16> TomographyInput::window_counts(
    double t_start_ps, double window_ps) const {
  validate();
  std::array<double, 16> out{};
  const int n = n_bins();
  for (int k = 0; k < n; ++k) {
    const double c = bin_center(k);
    if (c < t_start_ps || c >= t_start_ps + window_ps) continue;
    for (int v = 0; v < 16; ++v) {
      out[static_cast<std::size_t>(v)] +=
          counts[static_cast<std::size_t>(v)][static_cast<std::size_t>(k)];
    }
  }
  return out;
}

ReconstructionResult linear_reconstruct(const std::array<double, 16>& counts) {
  check_counts(counts);
  const double n = quadruple_sum(counts);
  if (!(n > 0.0)) {
    throw EmptyWindowError(
        "no events in the rectilinear quadruple; window normalization is zero");
  }
  const auto& lu = design_lu();
  if (!lu.isInvertible()) {
    throw ConfigError("projection design matrix is singular");
  }
  Eigen::Matrix<double, 16, 1> p;
  for (int v = 0; v < 16; ++v) p(v) = counts[static_cast<std::size_t>(v)] / n;
  const Eigen::Matrix<double, 16, 1> x = lu.solve(p);
  Mat4c rho = Mat4c::Zero();
  for (int k = 0; k < 16; ++k) {
    rho += x(k) * hermitian_basis()[static_cast<std::size_t>(k)];
  }
  rho /= rho.trace().real();  // exact up to rounding already

  ReconstructionResult result;
  result.rho = rho;
  result.method = ReconstructionMethod::linear;
  result.converged = true;
  result.iterations = 0;
  return result;
}

Mat4c project_to_physical(const Mat4c& rho) {
  const Mat4c sym = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat4c> eig(sym);
  Eigen::Vector4d vals = eig.eigenvalues();
  for (int i = 0; i < 4; ++i) vals(i) = std::max(vals(i), 0.0);
  const double total = vals.sum();
  if (!(total > 0.0)) return Mat4c::Identity() / 4.0;
  Mat4c out = eig.eigenvectors() * (vals / total).asDiagonal().toDenseMatrix() *
              eig.eigenvectors().adjoint();
  return 0.5 * (out + out.adjoint());
}

ReconstructionResult mle_reconstruct(const std::array<double, 16>& counts,
                                     const Mat4c* init) {
  check_counts(counts);
  const double n_total = quadruple_sum(counts);
  if (!(n_total > 0.0)) {
    throw EmptyWindowError(
        "no events in the rectilinear quadruple; window normalization is zero");
  }

  Mat4c rho0 = init ? project_to_physical(*init)
                    : project_to_physical(linear_reconstruct(counts).rho);
  // A small ridge keeps the factorization strictly positive definite.
  const double ridge = 1e-12;
  rho0 = (rho0 + ridge * Mat4c::Identity()) / (1.0 + 4.0 * ridge);
  Eigen::LLT<Mat4c> llt(rho0);
  if (llt.info() != Eigen::Success) {
    rho0 = (rho0 + 1e-9 * Mat4c::Identity()) / (1.0 + 4e-9);
    llt.compute(rho0);
  }
  Mat4c t = llt.matrixL();

  const Likelihood lik{counts, n_total};
  Eigen::VectorXd x = pack_factor(t);
  double f = lik.value(unpack_factor(x));
  Eigen::VectorXd g = lik.gradient(unpack_factor(x));

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(16, 16);
  constexpr int kMaxIter = 2000;
  constexpr double kGradTol = 1e-8;
  constexpr double kRelTol = 1e-12;

  bool converged = false;
  int iter = 0;
  for (; iter < kMaxIter; ++iter) {
    if (g.norm() < kGradTol) {
      converged = true;
      break;
    }
    Eigen::VectorXd d = -h_inv * g;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      h_inv.setIdentity();
      d = -g;
      slope = g.dot(d);
    }

    double alpha = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      f_new = lik.value(unpack_factor(x + alpha * d));
      if (f_new <= f + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // stalled; report best iterate unconverged

    const Eigen::VectorXd x_new = x + alpha * d;
    const Eigen::VectorXd g_new = lik.gradient(unpack_factor(x_new));
    const Eigen::VectorXd s = alpha * d;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(16, 16);
      const double rho_bfgs = 1.0 / sy;
      h_inv = (eye - rho_bfgs * s * y.transpose()) * h_inv *
                  (eye - rho_bfgs * y * s.transpose()) +
              rho_bfgs * s * s.transpose();
    } else {
      h_inv.setIdentity();
    }

    const double df = std::abs(f - f_new);
    x = x_new;
    g = g_new;
    f = f_new;
    if (df < kRelTol * std::max(1.0, std::abs(f))) {
      converged = true;  // likelihood has flattened out
      ++iter;
      break;
    }
  }

  const Mat4c t_final = unpack_factor(x);
  const Mat4c m = t_final * t_final.adjoint();
  ReconstructionResult result;
  result.rho = m / m.trace().real();
  result.rho = 0.5 * (result.rho + result.rho.adjoint());
  result.method = ReconstructionMethod::mle;
  result.log_likelihood = -f;
  result.converged = converged;
  result.iterations = iter;
  return result;
}

ReconstructionResult reconstruct(const std::array<double, 16>& counts,
                                 ReconstructionMethod method) {
  return method == ReconstructionMethod::linear ? linear_reconstruct(counts)
                                                : mle_reconstruct(counts);
}

BootstrapUncertainty bootstrap_uncertainty(const std::array<double, 16>& counts,
                                           int n_resamples,
                                           std::uint64_t seed,
                                           ReconstructionMethod method) {
  if (n_resamples < 2) {
    throw ConfigError("bootstrap needs at least 2 resamples");
  }
  check_counts(counts);

  RandomStream rng(derive_stream_seed(seed, 0x626F6F74u, 0));
  std::vector<double> negs;
  std::vector<Mat4c> rhos;
  negs.reserve(static_cast<std::size_t>(n_resamples));
  rhos.reserve(static_cast<std::size_t>(n_resamples));
  for (int r = 0; r < n_resamples; ++r) {
    std::array<double, 16> resampled{};
    for (int v = 0; v < 16; ++v) {
      resampled[static_cast<std::size_t>(v)] = static_cast<double>(
          rng.poisson(counts[static_cast<std::size_t>(v)]));
    }
    try {
      const ReconstructionResult rec = reconstruct(resampled, method);
      rhos.push_back(rec.rho);
      negs.push_back(negativity(rec.rho).value);
    } catch (const EmptyWindowError&) {
      // A resample can lose the whole quadruple at very low counts.
    }
  }
  if (rhos.size() < 2) {
    throw EmptyWindowError("too few usable bootstrap resamples");
  }

  const double n = static_cast<double>(rhos.size());
  BootstrapUncertainty out;
  out.n_valid = static_cast<int>(rhos.size());

  Eigen::Matrix4d mean_re = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d mean_im = Eigen::Matrix4d::Zero();
  for (const auto& rho : rhos) {
    mean_re += rho.real();
    mean_im += rho.imag();
  }
  mean_re /= n;
  mean_im /= n;
  Eigen::Matrix4d var_re = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d var_im = Eigen::Matrix4d::Zero();
  for (const auto& rho : rhos) {
    var_re += (rho.real() - mean_re).cwiseAbs2();
    var_im += (rho.imag() - mean_im).cwiseAbs2();
  }
  out.sigma_re = (var_re / (n - 1.0)).cwiseSqrt();
  out.sigma_im = (var_im / (n - 1.0)).cwiseSqrt();

  double neg_mean = 0.0;
  for (double v : negs) neg_mean += v;
  neg_mean /= n;
  double neg_var = 0.0;
  for (double v : negs) neg_var += (v - neg_mean) * (v - neg_mean);
  out.negativity_sigma = std::sqrt(neg_var / (n - 1.0));
  return out;
}

std::vector<WindowReconstruction> reconstruct_time_series(
    const TomographyInput& input, double window_ps, double step_ps,
    double t_start_ps, double t_stop_ps, ReconstructionMethod method,
    int n_resamples, std::uint64_t seed) {
  input.validate();
  if (!(window_ps > 0.0) || !(step_ps > 0.0)) {
    throw ConfigError("window and step must be positive");
  }
  if (window_ps < input.bin_ps) {
    throw ConfigError("window must be at least one histogram bin wide");
  }

  std::vector<WindowReconstruction> series;
  std::uint64_t window_index = 0;
  for (double t = t_start_ps; t + window_ps <= t_stop_ps + 1e-9;
       t += step_ps, ++window_index) {
    const auto counts = input.window_counts(t, window_ps);
    double total = 0.0;
    for (double c : counts) total += c;

    WindowReconstruction w;
    w.t_start_ps = t;
    w.t_end_ps = t + window_ps;
    w.total_counts = total;
    w.low_stats = total < 100.0;
    try {
      w.recon = reconstruct(counts, method);
    } catch (const EmptyWindowError&) {
      continue;  // keep going; this window has nothing to reconstruct
    }
    w.negativity = negativity(w.recon.rho).value;
    if (n_resamples > 0) {
      try {
        w.uncertainty = bootstrap_uncertainty(
            counts, n_resamples, derive_stream_seed(seed, 0x77696Eu, window_index),
            method);
        w.negativity_sigma = w.uncertainty.negativity_sigma;
      } catch (const EmptyWindowError&) {
        w.negativity_sigma = 0.0;
      }
    }
    series.push_back(std::move(w));
  }
  return series;
}

}  // namespace cascade
