#pragma once

#include "sbl/cg.hpp"
#include "sbl/precision.hpp"
#include "sbl/problem.hpp"
#include "sbl/rng.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace sbl::cofem {

enum class Variant { Standard, NonNegative };

struct CofemConfig {
  int iterations = 50;  ///< T, number of E-steps
  int probes = 20;      ///< K
  cg::CgConfig cg;
  std::uint64_t seed = 0;
  Variant variant = Variant::Standard;
  double clamp_max = kDefaultClampMax;
  double floor_eps = kDefaultFloorEps;
  /// Multi-task only: reuse task 0's probes for every task instead of
  /// drawing an independent stream per task.
  bool share_probes_across_tasks = false;

  void validate() const;
};

/// Posterior mean and estimated posterior variances from one E-step.
struct PosteriorEstimate {
  Vector mu;
  Vector s;
  cg::CgReport cg_report;
};

struct IterationDiagnostics {
  int iteration = 0;
  int cg_steps = 0;
  double cg_relative_residual = 0.0;
  bool cg_converged = false;
  double seconds = 0.0;
};

/// Called after every E-step with the state it used and its estimates.
using IterationObserver =
    std::function<void(const PrecisionState&, std::span<const PosteriorEstimate>)>;

struct CofemResult {
  PrecisionState state;
  PosteriorEstimate estimate;
  std::vector<IterationDiagnostics> diagnostics;
};

struct MultiTaskResult {
  PrecisionState state;
  std::vector<PosteriorEstimate> estimates;
  std::vector<IterationDiagnostics> diagnostics;
};

/// Probes for iteration `iteration` and task `task`, from the dedicated
/// probe stream of `seed`.
Rng probe_rng(std::uint64_t seed, int iteration, std::size_t task);

/// Covariance-free E-step: solves A[X | μ] = [P | βΦᵀy] with preconditioned
/// CG (preconditioner rebuilt from the current α) and estimates diag(A⁻¹)
/// from the probe columns.
PosteriorEstimate e_step(const SblProblem& problem, const PrecisionState& state,
                         const CofemConfig& cfg, Rng& rng);

/// α_j ← 1 / max(μ_j² + s_j, floor_eps), clamped.
PrecisionState m_step(const PosteriorEstimate& est, const PrecisionState& state);

/// M-step under the rectified-Gaussian prior (see rectified_second_moment).
PrecisionState m_step_nonneg(const PosteriorEstimate& est, const PrecisionState& state);

/// T E-steps starting from α = 1, with an M-step after every E-step but the
/// last.
CofemResult run_cofem(const SblProblem& problem, const CofemConfig& cfg,
                      const IterationObserver& observer = {});

/// Multi-task CoFEM: per-task E-steps batched into one CG call, and a shared
/// M-step α_j ← L / max(Σ_ℓ E[z²_ℓj], floor_eps).
MultiTaskResult run_cofem_multitask(const MultiTaskProblem& problem, const CofemConfig& cfg,
                                    const IterationObserver& observer = {});

/// Posterior probability that z_j = 0 under the diagonal rectified-Gaussian
/// approximation: ½·erfc(μ/sqrt(2s)), s floored at floor_eps.
double zero_probability(double mu, double variance, double floor_eps = kDefaultFloorEps);

struct FilteredMode {
  Vector z;                      ///< length D, nonnegative
  std::vector<Index> support;    ///< selected indices S
  bool empty_support = false;
  int solver_iterations = 0;
  bool solver_converged = true;
  double objective = 0.0;        ///< value of the ridge objective at the solution
};

/// Point estimate from a non-negative SBL posterior: keep S = {j : P(z_j=0) < q},
/// then solve min_{u ≥ 0} ‖y − Φ_S u‖² + Σ_{j∈S} (α_j/β) u_j².
FilteredMode filtered_mode(const SblProblem& problem, const PrecisionState& state,
                           const PosteriorEstimate& est, double q);

struct NonnegRidgeResult {
  Vector u;
  int iterations = 0;
  bool converged = false;
};

/// min_{u ≥ 0} ‖y − A u‖² + Σ_k weights_k u_k² by accelerated projected
/// gradient, stopped when the projected gradient falls below
/// `tolerance` · ‖Aᵀy‖. The result is then polished by an exact solve on its
/// free set whenever that solve remains feasible and optimal.
NonnegRidgeResult solve_nonneg_ridge(const Matrix& A, const Vector& y, const Vector& weights,
                                     double tolerance = 1e-8, int max_iterations = 200000);

/// Objective ‖y − A u‖² + Σ weights_k u_k².
double nonneg_ridge_objective(const Matrix& A, const Vector& y, const Vector& weights,
                              const Vector& u);

}  // namespace sbl::cofem
