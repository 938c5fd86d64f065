#pragma once

#include "sbl/linop.hpp"
#include "sbl/rng.hpp"

#include <optional>

namespace sbl::probes {

using linop::Index;
using linop::Matrix;
using linop::Vector;

/// D×K matrix of Rademacher (±1) probe vectors.
struct ProbeMatrix {
  Matrix values;
  /// Seed the draw came from, when drawn through the seeded overload.
  std::optional<std::uint64_t> seed;

  Index dimension() const noexcept { return values.rows(); }
  Index count() const noexcept { return values.cols(); }
};

struct DiagonalEstimate {
  /// Unbiased per-coordinate estimate; entries may be negative.
  Vector s;
  Index probes = 0;
};

/// I.i.d. ±1 entries with equal probability. Consumes one 64-bit draw per 64
/// entries, column-major.
ProbeMatrix draw_rademacher(Index dimension, Index count, Rng& rng);
ProbeMatrix draw_rademacher(Index dimension, Index count, std::uint64_t seed);

/// s_j = (1/K) Σ_k P_jk X_jk, where X = M P for the matrix M whose diagonal
/// is being estimated.
DiagonalEstimate estimate_diagonal_rademacher(const ProbeMatrix& probes, const Matrix& X);

/// s_j = Σ_k P_jk X_jk / Σ_k P_jk² for any zero-mean i.i.d. probe law.
/// Throws DomainError if a row of P is identically zero.
DiagonalEstimate estimate_diagonal_general(const Matrix& probes, const Matrix& X);

/// Standard deviation of the Rademacher estimator for an explicit square M:
/// ν_j = sqrt((1/K) Σ_{j' ≠ j} M_{jj'}²).
Vector rademacher_std(const Matrix& M, Index probes);

/// ‖Φ_SᵀΦ_S − I‖₂ (spectral norm), the isometry defect of a column subset.
double isometry_defect(const Matrix& phi_support);

/// Limiting bound on the active-coordinate estimator std for a converged
/// SBL covariance with Θ = I:
///   (1/√K) · ‖Φ_SᵀΦ_S − I‖₂ / (β σ²_min(Φ_S)).
/// Returns +inf when Φ_S is rank deficient.
double active_std_bound(const Matrix& phi_support, double beta, Index probes);

}  // namespace sbl::probes
