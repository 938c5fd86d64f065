#include "sbl/cg.hpp"
#include "sbl/error.hpp"
#include "sbl/parallel.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace {

using namespace sbl;
using linop::Index;
using linop::LinearOperator;
using linop::Matrix;
using linop::SystemMatrix;
using linop::Vector;

Matrix gaussian(Index rows, Index cols, unsigned seed, double scale = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

Vector uniform_alpha(Index size, unsigned seed, double lo, double hi) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Vector a(size);
  for (Index j = 0; j < size; ++j) a[j] = u(rng);
  return a;
}

// SystemMatrix with a random dense Φ.
SystemMatrix random_system(Index rows, Index size, unsigned seed, double beta = 1.0) {
  auto op = linop::make_explicit_dense(gaussian(rows, size, seed, 1.0 / std::sqrt(rows)));
  return SystemMatrix(op, beta, uniform_alpha(size, seed + 1000, 0.5, 2.0));
}

cg::CgConfig config(int steps, double tol, cg::ThetaPolicy policy = cg::ThetaPolicy::None) {
  cg::CgConfig cfg;
  cfg.max_steps = steps;
  cfg.tolerance = tol;
  cfg.theta_policy = policy;
  return cfg;
}

TEST(Cg, IdentitySystemConvergesInOneStep) {
  auto op = linop::make_explicit_dense(Matrix::Zero(3, 8));
  const SystemMatrix sys(op, 4.0, Vector::Ones(8));
  const Matrix B = gaussian(8, 5, 1);
  const auto rep = cg::solve(sys, B, cg::identity_preconditioner(8), config(10, 1e-12));
  EXPECT_EQ(rep.steps_taken, 1);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.final_relative_residual, 0.0);
  EXPECT_LT((rep.solution - B).norm(), 1e-15);
}

TEST(Cg, ExactDiagonalPreconditionerConvergesInOneStep) {
  auto op = linop::make_explicit_dense(Matrix::Zero(3, 10));
  const Vector alpha = uniform_alpha(10, 3, 0.1, 50.0);
  const SystemMatrix sys(op, 2.0, alpha);
  const auto pre = cg::make_preconditioner(cg::ThetaPolicy::Jacobi, op, 2.0, alpha);
  const Matrix B = gaussian(10, 4, 2);
  const auto rep = cg::solve(sys, B, pre, config(10, 1e-12));
  EXPECT_EQ(rep.steps_taken, 1);
  EXPECT_TRUE(rep.converged);
  EXPECT_LT((rep.solution - alpha.cwiseInverse().asDiagonal() * B).norm(), 1e-13);
}

TEST(Cg, MatchesDenseSolve) {
  const auto sys = random_system(40, 32, 7);
  const Matrix B = gaussian(32, 5, 8);
  const auto pre = cg::make_preconditioner(cg::ThetaPolicy::AllOnes, sys.op(), sys.beta(),
                                           sys.alpha());
  const auto rep = cg::solve(sys, B, pre, config(32, 1e-10));
  const Matrix expected = oracle::dense_solve(sys.materialize(), B);
  EXPECT_LE(rep.steps_taken, 32);
  EXPECT_LT((rep.solution - expected).norm() / expected.norm(), 1e-6);
}

TEST(Cg, OracleEquivalenceSmallSystems) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const Index D = seed % 2 ? 64 : 16;
    const auto sys = random_system(D / 2, D, 50 + seed, 3.0);
    const Matrix B = gaussian(D, 3, 70 + seed);
    const auto pre = cg::make_preconditioner(cg::ThetaPolicy::AllOnes, sys.op(), sys.beta(),
                                             sys.alpha());
    const auto rep = cg::solve(sys, B, pre, config(static_cast<int>(D), 1e-12));
    const Matrix expected = oracle::dense_solve(sys.materialize(), B);
    for (Index q = 0; q < B.cols(); ++q) {
      EXPECT_LT((rep.solution.col(q) - expected.col(q)).norm() / expected.col(q).norm(), 1e-8);
    }
  }
}

TEST(Cg, ResidualBoundInEnergyNorm) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const Index D = 24 + 4 * (seed % 5);
    const auto sys = random_system(D, D, 300 + seed, 5.0);
    const Matrix A = sys.materialize();
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(A, Eigen::EigenvaluesOnly);
    const double kappa = eig.eigenvalues().maxCoeff() / eig.eigenvalues().minCoeff();
    const Vector b = gaussian(D, 1, 400 + seed);
    const Vector x = oracle::dense_solve(A, b);
    const double x_energy = std::sqrt(x.dot(A * x));
    for (int U = 1; U <= 20; ++U) {
      const auto rep = cg::solve(sys, b, cg::identity_preconditioner(D), config(U, 1e-300));
      const Vector e = rep.solution.col(0) - x;
      const double eps = std::sqrt(e.dot(A * e)) / x_energy;
      EXPECT_LE(eps, 2.0 * std::exp(-U / std::sqrt(kappa))) << "U=" << U << " kappa=" << kappa;
    }
  }
}

TEST(Cg, PreconditionerPolicies) {
  const auto conv = linop::build_exp_convolution(3, 0.5);
  const Vector alpha = Vector::Ones(3);
  const auto all_ones = cg::make_preconditioner(cg::ThetaPolicy::AllOnes, conv, 1e4, alpha);
  EXPECT_TRUE((all_ones.diagonal.array() == 10001.0).all());

  const auto jacobi = cg::make_preconditioner(cg::ThetaPolicy::Jacobi, conv, 1.0, alpha);
  EXPECT_NEAR(jacobi.theta[0], 1.3125, 1e-15);
  EXPECT_NEAR(jacobi.theta[1], 1.25, 1e-15);
  EXPECT_NEAR(jacobi.theta[2], 1.0, 1e-15);

  auto identity = linop::make_explicit_dense(Matrix::Identity(4, 4));
  const auto j2 = cg::make_preconditioner(cg::ThetaPolicy::Jacobi, identity, 2.0, Vector::Ones(4));
  const auto a2 = cg::make_preconditioner(cg::ThetaPolicy::AllOnes, identity, 2.0, Vector::Ones(4));
  EXPECT_TRUE(j2.diagonal.isApprox(a2.diagonal));

  const Vector custom = Vector::Constant(3, 0.5);
  const auto c = cg::make_preconditioner(cg::ThetaPolicy::Custom, conv, 2.0, alpha, custom);
  EXPECT_TRUE((c.diagonal.array() == 2.0).all());
  EXPECT_THROW(cg::make_preconditioner(cg::ThetaPolicy::Custom, conv, 2.0, alpha, -custom),
               DomainError);
  EXPECT_THROW(cg::make_preconditioner(cg::ThetaPolicy::Custom, conv, 2.0, alpha, Vector::Ones(2)),
               DimensionError);

  const auto none = cg::make_preconditioner(cg::ThetaPolicy::None, conv, 2.0, alpha);
  EXPECT_TRUE((none.diagonal.array() == 1.0).all());
}

TEST(Cg, ZeroRightHandSide) {
  const auto sys = random_system(6, 8, 1);
  const auto rep = cg::solve(sys, Matrix::Zero(8, 3), cg::identity_preconditioner(8), config(5, 1e-6));
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.steps_taken, 0);
  EXPECT_EQ(rep.solution.norm(), 0.0);
}

TEST(Cg, ZeroColumnIsFrozen) {
  const auto sys = random_system(10, 12, 2);
  Matrix B = gaussian(12, 3, 3);
  B.col(1).setZero();
  const auto rep = cg::solve(sys, B, cg::identity_preconditioner(12), config(100, 1e-10));
  ASSERT_EQ(rep.frozen_columns.size(), 1u);
  EXPECT_EQ(rep.frozen_columns[0], 1);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.solution.col(1).norm(), 0.0);
  const Matrix expected = oracle::dense_solve(sys.materialize(), B);
  EXPECT_LT((rep.solution - expected).norm() / expected.norm(), 1e-8);
}

TEST(Cg, NonFiniteInputRaisesNumericalError) {
  const auto sys = random_system(5, 6, 4);
  Matrix B = gaussian(6, 2, 5);
  B(2, 1) = std::numeric_limits<double>::quiet_NaN();
  try {
    cg::solve(sys, B, cg::identity_preconditioner(6), config(10, 1e-8));
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_EQ(e.module(), "cg");
    EXPECT_EQ(e.step(), 0);
  }
}

TEST(Cg, RunsExactlyMaxStepsWhenNotConverged) {
  const auto sys = random_system(30, 40, 6, 100.0);
  const auto rep = cg::solve(sys, gaussian(40, 2, 7), cg::identity_preconditioner(40), config(3, 1e-14));
  EXPECT_FALSE(rep.converged);
  EXPECT_EQ(rep.steps_taken, 3);
  EXPECT_GT(rep.final_relative_residual, 1e-14);
}

TEST(Cg, ConvergedReportRespectsTolerance) {
  const auto sys = random_system(30, 40, 8);
  const Matrix B = gaussian(40, 4, 9);
  const auto rep = cg::solve(sys, B, cg::identity_preconditioner(40), config(200, 1e-6));
  ASSERT_TRUE(rep.converged);
  EXPECT_LE(rep.final_relative_residual, 1e-6);
  const Matrix R = B - sys.apply(rep.solution);
  EXPECT_NEAR(R.norm() / B.norm(), rep.final_relative_residual, 1e-8);
}

TEST(Cg, AsPrintedRecurrenceMatchesStandardWithoutPreconditioner) {
  const auto sys = random_system(20, 24, 10);
  const Matrix B = gaussian(24, 3, 11);
  auto cfg = config(15, 1e-12);
  const auto standard = cg::solve(sys, B, cg::identity_preconditioner(24), cfg);
  cfg.recurrence = cg::Recurrence::AsPrinted;
  const auto printed = cg::solve(sys, B, cg::identity_preconditioner(24), cfg);
  EXPECT_TRUE((standard.solution.array() == printed.solution.array()).all());
}

TEST(Cg, BlocksRouteColumnsToTheirSystems) {
  const auto s1 = random_system(10, 16, 12);
  const auto s2 = random_system(14, 16, 13, 4.0);
  const auto p1 = cg::make_preconditioner(cg::ThetaPolicy::AllOnes, s1.op(), s1.beta(), s1.alpha());
  const auto p2 = cg::make_preconditioner(cg::ThetaPolicy::AllOnes, s2.op(), s2.beta(), s2.alpha());
  Matrix B(16, 5);
  B << gaussian(16, 2, 14), gaussian(16, 3, 15);
  const std::vector<cg::SystemBlock> blocks{{s1, p1, 2}, {s2, p2, 3}};
  const auto rep = cg::solve_blocks(blocks, B, config(64, 1e-12));
  const Matrix x1 = oracle::dense_solve(s1.materialize(), B.leftCols(2));
  const Matrix x2 = oracle::dense_solve(s2.materialize(), B.rightCols(3));
  EXPECT_LT((rep.solution.leftCols(2) - x1).norm() / x1.norm(), 1e-9);
  EXPECT_LT((rep.solution.rightCols(3) - x2).norm() / x2.norm(), 1e-9);

  const std::vector<cg::SystemBlock> bad{{s1, p1, 2}};
  EXPECT_THROW(cg::solve_blocks(bad, B, config(5, 1e-6)), DimensionError);
}

TEST(Cg, SingleBlockIsBitIdenticalToSolve) {
  const auto sys = random_system(10, 16, 16);
  const auto pre = cg::make_preconditioner(cg::ThetaPolicy::AllOnes, sys.op(), 1.0, sys.alpha());
  const Matrix B = gaussian(16, 3, 17);
  const auto a = cg::solve(sys, B, pre, config(20, 1e-9));
  const std::vector<cg::SystemBlock> blocks{{sys, pre, 3}};
  const auto b = cg::solve_blocks(blocks, B, config(20, 1e-9));
  EXPECT_TRUE((a.solution.array() == b.solution.array()).all());
  EXPECT_EQ(a.steps_taken, b.steps_taken);
}

TEST(Cg, ColumnResultsIndependentOfBatchingAndThreads) {
  const int before = thread_count();
  const auto sys = random_system(20, 30, 18);
  const Matrix B = gaussian(30, 6, 19);
  auto cfg = config(12, 1e-300);
  set_thread_count(1);
  const auto one = cg::solve(sys, B, cg::identity_preconditioner(30), cfg);
  set_thread_count(3);
  const auto three = cg::solve(sys, B, cg::identity_preconditioner(30), cfg);
  set_thread_count(before);
  EXPECT_TRUE((one.solution.array() == three.solution.array()).all());
  // With a fixed step count each column evolves independently of the others.
  const auto single = cg::solve(sys, B.col(4), cg::identity_preconditioner(30), cfg);
  EXPECT_TRUE((single.solution.col(0).array() == one.solution.col(4).array()).all());
}

TEST(Cg, ConfigValidation) {
  cg::CgConfig cfg;
  cfg.max_steps = 0;
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg.max_steps = 5;
  cfg.tolerance = 0.0;
  EXPECT_THROW(cfg.validate(), DomainError);
}

}  // namespace
