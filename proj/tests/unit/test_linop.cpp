#include "sbl/error.hpp"
#include "sbl/linop.hpp"
#include "sbl/parallel.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace {

using namespace sbl::linop;

// Orthonormal DCT-II matrix, built entry by entry.
Matrix dct_matrix(Index size) {
  Matrix omega(size, size);
  for (Index k = 0; k < size; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / size) : std::sqrt(2.0 / size);
    for (Index n = 0; n < size; ++n) {
      omega(k, n) = s * std::cos(std::numbers::pi * k * (2.0 * n + 1.0) / (2.0 * size));
    }
  }
  return omega;
}

Matrix random_matrix(Index rows, Index cols, unsigned seed) {
  sbl::Rng rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

std::vector<LinearOperator> sample_operators() {
  sbl::Rng rng(11);
  return {
      build_dense_gaussian(20, 48, rng),
      build_undersampled_dct(48, 17, rng),
      build_undersampled_dct(64, 64, rng),
      build_exp_convolution(37, 0.08),
      make_explicit_dense(random_matrix(5, 9, 3)),
  };
}

TEST(Linop, ConvolutionFirstColumnIsFilter) {
  const auto op = build_exp_convolution(3, 0.5);
  Matrix e1 = Matrix::Zero(3, 1);
  e1(0, 0) = 1.0;
  const Matrix out = op.apply(e1);
  EXPECT_NEAR(out(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(out(1, 0), 0.5, 1e-14);
  EXPECT_NEAR(out(2, 0), 0.25, 1e-14);
}

TEST(Linop, ConvolutionFilterValues) {
  const auto op = build_exp_convolution(4, 0.04);
  const Vector f = op.filter();
  ASSERT_EQ(f.size(), 4);
  EXPECT_DOUBLE_EQ(f[0], 1.0);
  EXPECT_NEAR(f[1], 0.96, 1e-15);
  EXPECT_NEAR(f[2], 0.9216, 1e-15);
  EXPECT_NEAR(f[3], 0.884736, 1e-15);
  EXPECT_DOUBLE_EQ(op.decay_rate(), 0.04);
}

TEST(Linop, ConvolutionMaterializesLowerTriangularToeplitz) {
  const Index D = 6;
  const double r = 1.0 - 0.3;
  const Matrix phi = build_exp_convolution(D, 0.3).materialize();
  for (Index i = 0; i < D; ++i) {
    for (Index j = 0; j < D; ++j) {
      const double expected = i >= j ? std::pow(r, static_cast<double>(i - j)) : 0.0;
      EXPECT_NEAR(phi(i, j), expected, 1e-15);
    }
  }
}

TEST(Linop, DctMatchesRowsOfInverseTransform) {
  sbl::Rng rng(5);
  const auto op = build_undersampled_dct(32, 12, rng);
  const Matrix omega_t = dct_matrix(32).transpose();
  const auto mask = op.sample_mask();
  ASSERT_EQ(static_cast<Index>(mask.size()), 12);
  const Matrix phi = op.materialize();
  for (Index i = 0; i < 12; ++i) {
    EXPECT_LT((phi.row(i) - omega_t.row(mask[i])).norm(), 1e-12);
  }
  // Rows of an orthonormal matrix: ΦΦᵀ = I.
  EXPECT_LT((phi * phi.transpose() - Matrix::Identity(12, 12)).norm(), 1e-12);
}

TEST(Linop, DctMaskIsDistinctSortedAndSeeded) {
  sbl::Rng a(9), b(9);
  const auto op1 = build_undersampled_dct(100, 30, a);
  const auto op2 = build_undersampled_dct(100, 30, b);
  const auto m1 = op1.sample_mask();
  const auto m2 = op2.sample_mask();
  ASSERT_TRUE(std::equal(m1.begin(), m1.end(), m2.begin(), m2.end()));
  for (std::size_t i = 1; i < m1.size(); ++i) EXPECT_LT(m1[i - 1], m1[i]);
}

TEST(Linop, FullySampledDctIsOrthogonal) {
  std::vector<Index> mask(16);
  for (Index i = 0; i < 16; ++i) mask[i] = i;
  const Matrix phi = make_undersampled_dct(16, mask).materialize();
  EXPECT_LT((phi.transpose() * phi - Matrix::Identity(16, 16)).norm(), 1e-12);
}

TEST(Linop, DenseGaussianVariance) {
  sbl::Rng rng(1);
  const auto op = build_dense_gaussian(200, 400, rng);
  const Matrix& e = op.dense_entries();
  const double mean = e.mean();
  const double var = (e.array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 4.0 * std::sqrt(1.0 / 200.0 / e.size()));
  EXPECT_NEAR(var, 1.0 / 200.0, 0.05 / 200.0);
}

TEST(Linop, FastPathMatchesNaiveAndMaterialized) {
  for (const auto& op : sample_operators()) {
    SCOPED_TRACE(to_string(op.kind()));
    const Matrix V = random_matrix(op.cols(), 4, 21);
    const Matrix U = random_matrix(op.rows(), 3, 22);
    const Matrix phi = op.materialize();
    const Matrix fast = op.apply(V, Path::Fast);
    const Matrix naive = op.apply(V, Path::Naive);
    EXPECT_LT((fast - naive).norm(), 1e-11 * (1.0 + naive.norm()));
    EXPECT_LT((fast - phi * V).norm(), 1e-11 * (1.0 + naive.norm()));
    const Matrix fast_t = op.apply_adjoint(U, Path::Fast);
    const Matrix naive_t = op.apply_adjoint(U, Path::Naive);
    EXPECT_LT((fast_t - naive_t).norm(), 1e-11 * (1.0 + naive_t.norm()));
    EXPECT_LT((fast_t - phi.transpose() * U).norm(), 1e-11 * (1.0 + naive_t.norm()));
  }
}

TEST(Linop, AdjointIdentity) {
  for (const auto& op : sample_operators()) {
    SCOPED_TRACE(to_string(op.kind()));
    for (unsigned seed = 0; seed < 5; ++seed) {
      const Vector v = random_matrix(op.cols(), 1, 100 + seed);
      const Vector u = random_matrix(op.rows(), 1, 200 + seed);
      const double lhs = u.dot(op.apply(v).col(0));
      const double rhs = v.dot(op.apply_adjoint(u).col(0));
      EXPECT_NEAR(lhs, rhs, 1e-11 * (1.0 + std::abs(lhs)));
    }
  }
}

TEST(Linop, ColumnNormsMatchMaterialization) {
  for (const auto& op : sample_operators()) {
    SCOPED_TRACE(to_string(op.kind()));
    const Vector expected = op.materialize().colwise().squaredNorm().transpose();
    EXPECT_LT((op.column_sq_norms() - expected).norm(), 1e-12 * (1.0 + expected.norm()));
  }
}

TEST(Linop, ColumnsSelectsSubmatrix) {
  for (const auto& op : sample_operators()) {
    const Matrix phi = op.materialize();
    const std::vector<Index> idx{op.cols() - 1, 0, 2};
    const Matrix sub = op.columns(idx);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      EXPECT_LT((sub.col(static_cast<Index>(k)) - phi.col(idx[k])).norm(), 1e-14);
    }
  }
  const auto op = build_exp_convolution(4, 0.1);
  const std::vector<Index> bad{4};
  EXPECT_THROW(op.columns(bad), sbl::DomainError);
}

TEST(Linop, LargeConvolutionFastMatchesNaive) {
  const auto op = build_exp_convolution(1500, 0.02);
  const Matrix V = random_matrix(1500, 2, 8);
  const Matrix fast = op.apply(V);
  const Matrix naive = op.apply(V, Path::Naive);
  EXPECT_LT((fast - naive).norm() / naive.norm(), 1e-12);
}

TEST(Linop, ShapeErrors) {
  const auto op = build_exp_convolution(5, 0.1);
  EXPECT_THROW(op.apply(Matrix::Zero(4, 1)), sbl::DimensionError);
  EXPECT_THROW(op.apply_adjoint(Matrix::Zero(6, 2)), sbl::DimensionError);
  try {
    op.apply(Matrix::Zero(4, 2));
    FAIL();
  } catch (const sbl::DimensionError& e) {
    EXPECT_EQ(e.expected().rows, 5);
    EXPECT_EQ(e.actual().rows, 4);
  }
}

TEST(Linop, ConstructorDomainErrors) {
  sbl::Rng rng(0);
  EXPECT_THROW(build_exp_convolution(5, 0.0), sbl::DomainError);
  EXPECT_THROW(build_exp_convolution(5, 1.0), sbl::DomainError);
  EXPECT_THROW(build_undersampled_dct(10, 11, rng), sbl::DomainError);
  EXPECT_THROW(build_dense_gaussian(0, 5, rng), sbl::DomainError);
  EXPECT_THROW(make_undersampled_dct(8, {1, 1}), sbl::DomainError);
  EXPECT_THROW(make_undersampled_dct(8, {8}), sbl::DomainError);
}

TEST(Linop, SystemMatrixMatchesDense) {
  for (const auto& op : sample_operators()) {
    Vector alpha = Vector::LinSpaced(op.cols(), 0.5, 3.0);
    const SystemMatrix sys(op, 7.5, alpha);
    const Matrix phi = op.materialize();
    Matrix expected = 7.5 * phi.transpose() * phi;
    expected.diagonal() += alpha;
    EXPECT_LT((sys.materialize() - expected).norm(), 1e-10 * expected.norm());
    const Matrix V = random_matrix(op.cols(), 3, 4);
    EXPECT_LT((sys.apply(V) - expected * V).norm(), 1e-10 * (expected * V).norm());
  }
}

TEST(Linop, SystemMatrixRejectsBadParameters) {
  const auto op = build_exp_convolution(3, 0.5);
  EXPECT_THROW(SystemMatrix(op, 0.0, Vector::Ones(3)), sbl::DomainError);
  EXPECT_THROW(SystemMatrix(op, 1.0, Vector::Zero(3)), sbl::DomainError);
  EXPECT_THROW(SystemMatrix(op, 1.0, Vector::Ones(2)), sbl::DimensionError);
}

TEST(Linop, ResultsIndependentOfThreadCount) {
  const int before = sbl::thread_count();
  sbl::Rng rng(2);
  const auto op = build_undersampled_dct(256, 80, rng);
  const Matrix V = random_matrix(256, 9, 6);
  sbl::set_thread_count(1);
  const Matrix one = op.apply_adjoint(op.apply(V));
  sbl::set_thread_count(4);
  const Matrix four = op.apply_adjoint(op.apply(V));
  sbl::set_thread_count(before);
  EXPECT_TRUE((one.array() == four.array()).all());
}

}  // namespace
