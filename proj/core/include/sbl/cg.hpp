#pragma once

#include "sbl/linop.hpp"

#include <functional>
#include <span>
#include <vector>

namespace sbl::cg {

using linop::Index;
using linop::Matrix;
using linop::Vector;

/// How θ in the diagonal preconditioner M = diag(βθ + α) is chosen.
/// `None` disables preconditioning (M = I).
enum class ThetaPolicy { AllOnes, Jacobi, Custom, None };

/// `Standard` is textbook preconditioned CG (P₀ = M⁻¹B, P ← M⁻¹R + Pη).
/// `AsPrinted` starts from P₀ = B and updates P ← R + Pη while still
/// computing ρ = ⟨R, M⁻¹R⟩; kept only for comparison studies.
enum class Recurrence { Standard, AsPrinted };

struct CgConfig {
  int max_steps = 400;
  double tolerance = 1e-4;
  ThetaPolicy theta_policy = ThetaPolicy::AllOnes;
  Vector custom_theta;
  Recurrence recurrence = Recurrence::Standard;

  /// Throws DomainError if max_steps < 1 or tolerance <= 0.
  void validate() const;
};

/// Diagonal preconditioner; applying M⁻¹ divides elementwise by `diagonal`.
struct Preconditioner {
  Vector theta;
  Vector diagonal;

  Matrix apply_inverse(const Matrix& R) const;
};

/// Builds M = diag(βθ + α) for the given policy. Custom θ must be strictly
/// positive. For ThetaPolicy::None returns the identity.
Preconditioner make_preconditioner(ThetaPolicy policy, const linop::LinearOperator& op,
                                   double beta, const Vector& alpha,
                                   const Vector& custom_theta = Vector());

Preconditioner identity_preconditioner(Index size);

struct CgReport {
  Matrix solution;
  int steps_taken = 0;
  /// ‖R‖_F / ‖B‖_F at exit.
  double final_relative_residual = 0.0;
  bool converged = false;
  /// Columns whose curvature ⟨p, Ap⟩ hit zero; their iterates were frozen.
  std::vector<Index> frozen_columns;
};

/// A group of consecutive right-hand-side columns that share one system
/// matrix and preconditioner.
struct SystemBlock {
  std::reference_wrapper<const linop::SystemMatrix> system;
  std::reference_wrapper<const Preconditioner> preconditioner;
  Index columns;
};

/// Solves A X = B for all columns of B simultaneously with X₀ = 0. Exits
/// early once ‖R‖_F/‖B‖_F ≤ tolerance, otherwise after max_steps steps.
/// Throws NumericalError (with the step index) if iterates become non-finite.
CgReport solve(const linop::SystemMatrix& system, const Matrix& B, const Preconditioner& pre,
               const CgConfig& cfg);

/// As solve(), with column blocks routed to different systems. The stopping
/// test aggregates the residual over all blocks.
CgReport solve_blocks(std::span<const SystemBlock> blocks, const Matrix& B, const CgConfig& cfg);

}  // namespace sbl::cg
