#include "sbl/cofem.hpp"

#include "sbl/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace sbl::cofem {

namespace {

// Norm of the projected gradient of a problem constrained to u >= 0.
double projected_gradient_norm(const Vector& u, const Vector& grad) {
  double sum = 0.0;
  for (Index k = 0; k < u.size(); ++k) {
    const double g = u[k] > 0.0 ? grad[k] : std::min(grad[k], 0.0);
    sum += g * g;
  }
  return std::sqrt(sum);
}

// Quadratic form of the objective: f(u) = uᵀGu - 2bᵀu + yᵀy.
struct Quadratic {
  Matrix G;
  Vector b;

  Vector gradient(const Vector& u) const { return 2.0 * (G * u - b); }
};

// Exact minimiser on the free set of `u`, if it stays strictly feasible and
// the fixed coordinates satisfy the KKT sign condition.
bool polish(const Quadratic& quad, Vector& u, double gradient_tol) {
  std::vector<Index> free;
  for (Index k = 0; k < u.size(); ++k) {
    if (u[k] > 0.0) free.push_back(k);
  }
  Vector candidate = Vector::Zero(u.size());
  if (!free.empty()) {
    const auto m = static_cast<Index>(free.size());
    Matrix g_ff(m, m);
    Vector b_f(m);
    for (Index a = 0; a < m; ++a) {
      b_f[a] = quad.b[free[a]];
      for (Index c = 0; c < m; ++c) g_ff(a, c) = quad.G(free[a], free[c]);
    }
    Eigen::LDLT<Matrix> ldlt(g_ff);
    if (ldlt.info() != Eigen::Success) return false;
    const Vector u_f = ldlt.solve(b_f);
    for (Index a = 0; a < m; ++a) {
      if (!(u_f[a] > 0.0)) return false;
      candidate[free[a]] = u_f[a];
    }
  }
  if (projected_gradient_norm(candidate, quad.gradient(candidate)) > gradient_tol) return false;
  u = candidate;
  return true;
}

}  // namespace

double nonneg_ridge_objective(const Matrix& A, const Vector& y, const Vector& weights,
                              const Vector& u) {
  return (y - A * u).squaredNorm() + weights.dot(u.cwiseAbs2());
}

NonnegRidgeResult solve_nonneg_ridge(const Matrix& A, const Vector& y, const Vector& weights,
                                     double tolerance, int max_iterations) {
  require_shape("solve_nonneg_ridge observation", {A.rows(), 1}, {y.rows(), y.cols()});
  require_shape("solve_nonneg_ridge weights", {A.cols(), 1}, {weights.rows(), weights.cols()});
  if ((weights.array() < 0.0).any()) throw DomainError("solve_nonneg_ridge: negative weight");
  if (!(tolerance > 0.0) || max_iterations < 1) {
    throw DomainError("solve_nonneg_ridge: tolerance must be positive, max_iterations >= 1");
  }

  const Index n = A.cols();
  NonnegRidgeResult result;
  result.u = Vector::Zero(n);
  if (n == 0) {
    result.converged = true;
    return result;
  }

  Quadratic quad;
  quad.G = A.transpose() * A;
  quad.G.diagonal() += weights;
  quad.b = A.transpose() * y;

  const double scale = 2.0 * quad.b.norm();
  if (scale == 0.0) {
    // b = 0 and G is PSD, so u = 0 is optimal.
    result.converged = true;
    return result;
  }
  const double gradient_tol = tolerance * scale;

  const double lipschitz =
      2.0 * Eigen::SelfAdjointEigenSolver<Matrix>(quad.G, Eigen::EigenvaluesOnly)
                .eigenvalues()
                .maxCoeff();
  if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
    throw NumericalError("filtered_mode", "ridge Hessian has no positive eigenvalue");
  }
  const double step = 1.0 / lipschitz;

  Vector u = Vector::Zero(n);
  Vector extrap = u;
  double momentum = 1.0;
  for (int it = 1; it <= max_iterations; ++it) {
    const Vector grad_extrap = quad.gradient(extrap);
    Vector next = (extrap - step * grad_extrap).cwiseMax(0.0);

    // Restart the momentum when the step points uphill.
    if (grad_extrap.dot(next - u) > 0.0) {
      momentum = 1.0;
      next = (u - step * quad.gradient(u)).cwiseMax(0.0);
    }
    const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    extrap = next + ((momentum - 1.0) / next_momentum) * (next - u);
    u = std::move(next);
    momentum = next_momentum;
    result.iterations = it;

    if (projected_gradient_norm(u, quad.gradient(u)) <= gradient_tol) {
      result.converged = true;
      break;
    }
  }

  polish(quad, u, gradient_tol);
  result.u = std::move(u);
  return result;
}

FilteredMode filtered_mode(const SblProblem& problem, const PrecisionState& state,
                           const PosteriorEstimate& est, double q) {
  problem.validate();
  if (!(q > 0.0 && q < 1.0)) throw DomainError("filtered_mode: q must lie in (0, 1)");
  const Index dim = problem.dimension();
  require_shape("filtered_mode alpha", {dim, 1}, {state.alpha.size(), 1});
  require_shape("filtered_mode mu", {dim, 1}, {est.mu.size(), 1});
  require_shape("filtered_mode s", {dim, 1}, {est.s.size(), 1});

  FilteredMode mode;
  mode.z = Vector::Zero(dim);
  for (Index j = 0; j < dim; ++j) {
    if (zero_probability(est.mu[j], est.s[j], state.floor_eps) < q) mode.support.push_back(j);
  }
  if (mode.support.empty()) {
    mode.empty_support = true;
    mode.objective = problem.y.squaredNorm();
    return mode;
  }

  const Matrix phi_s = problem.op.columns(mode.support);
  Vector weights(static_cast<Index>(mode.support.size()));
  for (Index k = 0; k < weights.size(); ++k) {
    weights[k] = state.alpha[mode.support[k]] / problem.beta;
  }
  const auto ridge = solve_nonneg_ridge(phi_s, problem.y, weights);
  for (Index k = 0; k < weights.size(); ++k) mode.z[mode.support[k]] = ridge.u[k];
  mode.solver_iterations = ridge.iterations;
  mode.solver_converged = ridge.converged;
  mode.objective = nonneg_ridge_objective(phi_s, problem.y, weights, ridge.u);
  return mode;
}

}  // namespace sbl::cofem
