#pragma once

#include <vector>

#include "cascade/cascade_model.hpp"
#include "cascade/types.hpp"

namespace cascade {

/// Transpose of the second photon's indices: element ((i,j),(k,l)) of the
/// input lands at ((i,l),(k,j)).
Mat4c partial_transpose(const Mat4c& rho);

struct NegativityValue {
  double value = 0.0;  // sum of |negative eigenvalues|, in [0, 1/2]
  std::vector<double> negative_eigenvalues;  // the raw (negative) values
};

/// Entanglement negativity of a two-photon density matrix. Requires a
/// Hermitian matrix with trace within 1e-6 of one; eigenvalues of the partial
/// transpose in [-1e-9, 0) are treated as zero.
NegativityValue negativity(const Mat4c& rho);

struct BellFidelity {
  double value = 0.0;      // fidelity at the requested phase
  double max_value = 0.0;  // maximum over the phase
  double max_phase = 0.0;  // phase attaining the maximum, in [0, 2*pi)
};

/// Overlap with the phase-parameterized Bell state
/// (|HH> + e^{-i phase} |VV>) / sqrt(2).
BellFidelity bell_fidelity(const Mat4c& rho, double phase);

/// Uniform average of density_matrix(t) over [t0, t0 + delta_t], via the
/// closed-form integral of the oscillating corner.
Mat4c window_average_density_matrix(double t0_ps, double delta_t_ps,
                                    const CascadeParams& params);

/// Negativity of window_average_density_matrix, evaluated through the
/// eigenvalue route. Equals windowed_negativity_analytic for every t0.
double window_average_negativity(double t0_ps, double delta_t_ps,
                                 const CascadeParams& params);

/// (1/2) * trace norm of (a - b); handy for reconstruction error checks.
double trace_distance(const Mat4c& a, const Mat4c& b);

}  // namespace cascade
