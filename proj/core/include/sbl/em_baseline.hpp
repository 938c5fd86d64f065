#pragma once

#include "sbl/precision.hpp"
#include "sbl/problem.hpp"

#include <optional>
#include <vector>

namespace sbl::em {

/// Largest D for which the dense baseline will materialize Σ.
inline constexpr Index kMaxDenseDimension = 4096;

struct DensePosterior {
  Vector mu;
  Matrix Sigma;
};

/// Σ = (βΦᵀΦ + diag α)⁻¹ by Cholesky, μ = βΣΦᵀy.
/// Throws DomainError above kMaxDenseDimension and NumericalError if the
/// factorization fails.
DensePosterior exact_e_step(const SblProblem& problem, const Vector& alpha);

/// Same posterior through the N×N inner inverse
///   Σ = C − CΦᵀ(I/β + ΦCΦᵀ)⁻¹ΦC,  C = diag(α)⁻¹.
DensePosterior woodbury_e_step(const SblProblem& problem, const Vector& alpha);

/// log N(y; 0, I/β + Φ diag(α)⁻¹ Φᵀ).
double log_marginal_likelihood(const SblProblem& problem, const Vector& alpha);

enum class Route { Dense, Woodbury };

struct EmConfig {
  int iterations = 50;
  Route route = Route::Dense;
  double clamp_max = kDefaultClampMax;
  double floor_eps = kDefaultFloorEps;
  bool track_log_likelihood = false;
};

struct EmResult {
  PrecisionState state;
  DensePosterior posterior;
  /// NRMSE (%) of μ after every E-step; empty without ground truth.
  std::vector<double> nrmse_trace;
  /// Marginal log-likelihood of the α used by every E-step, when tracked.
  std::vector<double> log_likelihood_trace;
  std::vector<double> iteration_seconds;
};

/// EM from α = 1: T E-steps, with an M-step α_j ← 1/(μ_j² + Σ_jj) after
/// every E-step but the last (mirrors cofem::run_cofem).
EmResult run_em(const SblProblem& problem, const EmConfig& cfg,
                const std::optional<Vector>& truth = std::nullopt);

}  // namespace sbl::em
