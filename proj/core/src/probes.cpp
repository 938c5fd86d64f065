#include "sbl/probes.hpp"

#include "sbl/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <string>

namespace sbl::probes {

ProbeMatrix draw_rademacher(Index dimension, Index count, Rng& rng) {
  if (dimension < 1 || count < 1) {
    throw DomainError("draw_rademacher: dimension and count must be >= 1");
  }
  ProbeMatrix probes;
  probes.values.resize(dimension, count);
  double* data = probes.values.data();
  const Index total = dimension * count;
  std::uint64_t bits = 0;
  for (Index i = 0; i < total; ++i) {
    if (i % 64 == 0) bits = rng();
    data[i] = (bits & 1u) ? 1.0 : -1.0;
    bits >>= 1;
  }
  return probes;
}

ProbeMatrix draw_rademacher(Index dimension, Index count, std::uint64_t seed) {
  Rng rng(seed);
  ProbeMatrix probes = draw_rademacher(dimension, count, rng);
  probes.seed = seed;
  return probes;
}

DiagonalEstimate estimate_diagonal_rademacher(const ProbeMatrix& probes, const Matrix& X) {
  require_shape("estimate_diagonal_rademacher", {probes.values.rows(), probes.values.cols()},
                {X.rows(), X.cols()});
  DiagonalEstimate est;
  est.probes = probes.count();
  est.s = probes.values.cwiseProduct(X).rowwise().sum() / static_cast<double>(est.probes);
  return est;
}

DiagonalEstimate estimate_diagonal_general(const Matrix& probes, const Matrix& X) {
  require_shape("estimate_diagonal_general", {probes.rows(), probes.cols()}, {X.rows(), X.cols()});
  const Vector numerator = probes.cwiseProduct(X).rowwise().sum();
  const Vector denominator = probes.cwiseAbs2().rowwise().sum();
  for (Index j = 0; j < denominator.size(); ++j) {
    if (denominator[j] == 0.0) {
      throw DomainError("estimate_diagonal_general: probe row " + std::to_string(j) +
                        " is identically zero");
    }
  }
  return DiagonalEstimate{numerator.cwiseQuotient(denominator), probes.cols()};
}

Vector rademacher_std(const Matrix& M, Index probes) {
  if (M.rows() != M.cols()) {
    throw DimensionError("rademacher_std", {M.rows(), M.rows()}, {M.rows(), M.cols()});
  }
  if (probes < 1) throw DomainError("rademacher_std: probe count must be >= 1");
  const Vector off_diagonal = M.cwiseAbs2().rowwise().sum() - M.diagonal().cwiseAbs2();
  return (off_diagonal.cwiseMax(0.0) / static_cast<double>(probes)).cwiseSqrt();
}

double isometry_defect(const Matrix& phi_support) {
  Matrix gram = phi_support.transpose() * phi_support;
  gram.diagonal().array() -= 1.0;
  if (gram.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double active_std_bound(const Matrix& phi_support, double beta, Index probes) {
  if (!(beta > 0.0)) throw DomainError("active_std_bound: beta must be positive");
  if (probes < 1) throw DomainError("active_std_bound: probe count must be >= 1");
  if (phi_support.cols() == 0) return 0.0;
  if (phi_support.cols() > phi_support.rows()) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<Matrix> svd(phi_support);
  const double sigma_min = svd.singularValues().minCoeff();
  if (!(sigma_min > 0.0)) return std::numeric_limits<double>::infinity();
  return isometry_defect(phi_support) /
         (std::sqrt(static_cast<double>(probes)) * beta * sigma_min * sigma_min);
}

}  // namespace sbl::probes
