#include "sbl/em_baseline.hpp"

#include "sbl/error.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

namespace sbl::em {

namespace {

struct DenseSystem {
  Matrix phi;
  Matrix gram;   // ΦᵀΦ, only for the dense route
  Vector phity;  // Φᵀy
};

void check_guard(const SblProblem& problem) {
  problem.validate();
  if (problem.dimension() > kMaxDenseDimension) {
    throw DomainError("em: dimension " + std::to_string(problem.dimension()) +
                      " exceeds the dense baseline limit " + std::to_string(kMaxDenseDimension));
  }
}

void check_alpha(const SblProblem& problem, const Vector& alpha) {
  require_shape("em alpha", {problem.dimension(), 1}, {alpha.rows(), alpha.cols()});
  if (!((alpha.array() > 0.0).all() && alpha.allFinite())) {
    throw DomainError("em: alpha must be positive and finite");
  }
}

DenseSystem prepare(const SblProblem& problem, bool with_gram) {
  DenseSystem sys;
  sys.phi = problem.op.materialize();
  if (with_gram) {
    sys.gram.noalias() = sys.phi.transpose() * sys.phi;
  }
  sys.phity.noalias() = sys.phi.transpose() * problem.y;
  return sys;
}

DensePosterior dense_posterior(const DenseSystem& sys, double beta, const Vector& alpha) {
  const Index dim = alpha.size();
  Matrix A = beta * sys.gram;
  A.diagonal() += alpha;

  // Jacobi scaling keeps the factorization well conditioned when α spans
  // many orders of magnitude.
  const Vector scale = A.diagonal().cwiseSqrt().cwiseInverse();
  const Matrix scaled = scale.asDiagonal() * A * scale.asDiagonal();
  Eigen::LLT<Matrix> llt(scaled);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("em_baseline", "Cholesky factorization of the posterior precision failed");
  }
  DensePosterior post;
  post.Sigma = llt.solve(Matrix::Identity(dim, dim));
  post.Sigma = scale.asDiagonal() * post.Sigma * scale.asDiagonal();
  post.Sigma = 0.5 * (post.Sigma + post.Sigma.transpose()).eval();
  post.mu.noalias() = beta * (post.Sigma * sys.phity);
  return post;
}

// I/β + Φ C Φᵀ with C = diag(α)⁻¹.
Matrix inner_covariance(const Matrix& phi, double beta, const Vector& alpha) {
  const Matrix scaled = phi * alpha.cwiseInverse().cwiseSqrt().asDiagonal();
  Matrix inner = scaled * scaled.transpose();
  inner.diagonal().array() += 1.0 / beta;
  return inner;
}

DensePosterior woodbury_posterior(const DenseSystem& sys, double beta, const Vector& alpha) {
  const Vector c = alpha.cwiseInverse();
  Eigen::LLT<Matrix> llt(inner_covariance(sys.phi, beta, alpha));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("em_baseline", "Cholesky factorization of the Woodbury inner matrix failed");
  }
  const Matrix phi_c = sys.phi * c.asDiagonal();  // ΦC
  DensePosterior post;
  post.Sigma = -(phi_c.transpose() * llt.solve(phi_c));
  post.Sigma.diagonal() += c;
  post.Sigma = 0.5 * (post.Sigma + post.Sigma.transpose()).eval();
  post.mu.noalias() = beta * (post.Sigma * sys.phity);
  return post;
}

double log_likelihood(const Matrix& phi, const Vector& y, double beta, const Vector& alpha) {
  Eigen::LLT<Matrix> llt(inner_covariance(phi, beta, alpha));
  if (llt.info() != Eigen::Success) {
    throw NumericalError("em_baseline", "marginal covariance is not positive definite");
  }
  const Matrix& L = llt.matrixL();
  const double log_det = 2.0 * L.diagonal().array().log().sum();
  const Vector w = llt.matrixL().solve(y);
  const double n = static_cast<double>(y.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det + w.squaredNorm());
}

}  // namespace

DensePosterior exact_e_step(const SblProblem& problem, const Vector& alpha) {
  check_guard(problem);
  check_alpha(problem, alpha);
  return dense_posterior(prepare(problem, true), problem.beta, alpha);
}

DensePosterior woodbury_e_step(const SblProblem& problem, const Vector& alpha) {
  check_guard(problem);
  check_alpha(problem, alpha);
  return woodbury_posterior(prepare(problem, false), problem.beta, alpha);
}

double log_marginal_likelihood(const SblProblem& problem, const Vector& alpha) {
  problem.validate();
  check_alpha(problem, alpha);
  return log_likelihood(problem.op.materialize(), problem.y, problem.beta, alpha);
}

EmResult run_em(const SblProblem& problem, const EmConfig& cfg, const std::optional<Vector>& truth) {
  check_guard(problem);
  if (cfg.iterations < 1) throw DomainError("EmConfig: iterations must be >= 1");
  if (truth) {
    require_shape("run_em truth", {problem.dimension(), 1}, {truth->rows(), truth->cols()});
    if (truth->squaredNorm() == 0.0) throw DomainError("run_em: ground truth is zero");
  }

  const DenseSystem sys = prepare(problem, cfg.route == Route::Dense);
  EmResult result;
  result.state = PrecisionState::initial(problem.dimension(), cfg.clamp_max, cfg.floor_eps);

  for (int t = 1; t <= cfg.iterations; ++t) {
    const auto start = std::chrono::steady_clock::now();
    if (cfg.track_log_likelihood) {
      result.log_likelihood_trace.push_back(
          log_likelihood(sys.phi, problem.y, problem.beta, result.state.alpha));
    }
    result.posterior = cfg.route == Route::Dense
                           ? dense_posterior(sys, problem.beta, result.state.alpha)
                           : woodbury_posterior(sys, problem.beta, result.state.alpha);
    if (t < cfg.iterations) {
      result.state = result.state.updated(
          gaussian_second_moment(result.posterior.mu, result.posterior.Sigma.diagonal()));
    }
    result.iteration_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (truth) {
      result.nrmse_trace.push_back(100.0 * (result.posterior.mu - *truth).norm() / truth->norm());
    }
  }
  return result;
}

}  // namespace sbl::em
