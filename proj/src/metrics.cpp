#include "cascade/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace cascade {

Mat4c partial_transpose(const Mat4c& rho) {
  Mat4c out;
  for (int r = 0; r < 4; ++r) {
    const int i = r >> 1, j = r & 1;
    for (int c = 0; c < 4; ++c) {
      const int k = c >> 1, l = c & 1;
      out(r, c) = rho(2 * i + l, 2 * k + j);
    }
  }
  return out;
}

NegativityValue negativity(const Mat4c& rho) {
  const double trace_err = std::abs(rho.trace() - Complex(1.0, 0.0));
  if (trace_err > 1e-6) {
    throw std::invalid_argument("negativity: input trace must be 1");
  }
  const double herm_err = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm_err > 1e-6) {
    throw std::invalid_argument("negativity: input must be Hermitian");
  }
  const Mat4c sym = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat4c> es(partial_transpose(sym));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("negativity: eigensolver failed");
  }
  NegativityValue nv;
  for (int i = 0; i < 4; ++i) {
    const double lambda = es.eigenvalues()(i);
    if (lambda < -1e-9) {
      nv.negative_eigenvalues.push_back(lambda);
      nv.value -= lambda;
    }
  }
  if (nv.value > 0.5) nv.value = 0.5;
  return nv;
}

BellFidelity bell_fidelity(const Mat4c& rho, double phase) {
  const Complex corner = rho(0, 3);
  const double diag = 0.5 * (rho(0, 0).real() + rho(3, 3).real());
  BellFidelity f;
  f.value = diag + (corner * std::polar(1.0, -phase)).real();
  f.max_value = diag + std::abs(corner);
  double mp = std::arg(corner);
  if (mp < 0.0) mp += 2.0 * kPi;
  f.max_phase = std::abs(corner) > 0.0 ? mp : 0.0;
  return f;
}

Mat4c window_average_density_matrix(double t0_ps, double delta_t_ps,
                                    const CascadeParams& params) {
  if (!(delta_t_ps > 0.0) || !std::isfinite(delta_t_ps) ||
      !std::isfinite(t0_ps)) {
    throw std::invalid_argument(
        "window_average_density_matrix: bad window bounds");
  }
  const double w = params.omega_ps();
  // (1/dt) * integral of e^{i w t} / 2 over the window.
  const Complex corner = (std::polar(1.0, w * (t0_ps + delta_t_ps)) -
                          std::polar(1.0, w * t0_ps)) /
                         (Complex(0.0, 1.0) * w * delta_t_ps * 2.0);
  Mat4c rho = Mat4c::Zero();
  rho(0, 0) = 0.5;
  rho(3, 3) = 0.5;
  rho(0, 3) = corner;
  rho(3, 0) = std::conj(corner);
  return rho;
}

double window_average_negativity(double t0_ps, double delta_t_ps,
                                 const CascadeParams& params) {
  return negativity(window_average_density_matrix(t0_ps, delta_t_ps, params))
      .value;
}

double trace_distance(const Mat4c& a, const Mat4c& b) {
  Eigen::SelfAdjointEigenSolver<Mat4c> es(0.5 * (a - b) +
                                          0.5 * (a - b).adjoint());
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace cascade
