#pragma once

#include "sbl/rng.hpp"

#include <Eigen/Core>

#include <memory>
#include <span>
#include <vector>

namespace sbl::linop {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Kind { DenseGaussian, UndersampledDct, ExpConvolution, ExplicitDense };

/// Which kernel evaluates an operator application. `Naive` is the O(N·D)
/// per-column reference used as a test oracle for the fast transforms; for
/// dense kinds both paths are the same matrix product.
enum class Path { Fast, Naive };

const char* to_string(Kind kind);

/// An N×D dictionary applied without materializing it (for the structured
/// kinds). Immutable after construction; copies share the payload and may be
/// used from several threads at once.
///
/// Implied matrices:
///  - DenseGaussian / ExplicitDense: the stored entries.
///  - UndersampledDct: rows `mask` of the inverse orthonormal DCT-II, so that
///    Φ Φᵀ = I and, under full sampling, Φᵀ Φ = I.
///  - ExpConvolution: N = D lower-triangular Toeplitz matrix whose column j
///    is j zeros followed by φ_0..φ_{D-1-j}, φ_k = (1 - ρ)^k. No wraparound.
class LinearOperator {
 public:
  Index rows() const noexcept;
  Index cols() const noexcept;
  Kind kind() const noexcept;

  /// Column q of the result is Φ·V(:, q). V must have cols() rows.
  Matrix apply(const Matrix& V, Path path = Path::Fast) const;
  /// Column q of the result is Φᵀ·U(:, q). U must have rows() rows.
  Matrix apply_adjoint(const Matrix& U, Path path = Path::Fast) const;

  /// Squared Euclidean norm of every column of Φ.
  Vector column_sq_norms() const;

  /// The explicit N×D matrix. Intended for oracles on small problems.
  Matrix materialize() const;
  /// Explicit N×|indices| submatrix Φ_S.
  Matrix columns(std::span<const Index> indices) const;

  /// Payload accessors; each returns an empty value for other kinds.
  const Matrix& dense_entries() const;
  std::span<const Index> sample_mask() const;
  double decay_rate() const;
  Vector filter() const;

  struct Impl;

 private:
  friend LinearOperator make_explicit_dense(Matrix entries);
  friend LinearOperator build_dense_gaussian(Index rows, Index cols, Rng& rng);
  friend LinearOperator make_undersampled_dct(Index size, std::vector<Index> mask);
  friend LinearOperator build_exp_convolution(Index size, double decay);

  explicit LinearOperator(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

/// Wraps an explicit N×D matrix.
LinearOperator make_explicit_dense(Matrix entries);

/// N×D matrix with i.i.d. N(0, 1/N) entries.
LinearOperator build_dense_gaussian(Index rows, Index cols, Rng& rng);

/// Undersampled DCT with N of the D rows chosen uniformly without
/// replacement. Argument order follows the transform size first.
LinearOperator build_undersampled_dct(Index size, Index rows, Rng& rng);

/// Undersampled DCT with an explicit sampling mask (distinct, in [0, D)).
LinearOperator make_undersampled_dct(Index size, std::vector<Index> mask);

/// D×D truncated exponential convolution with filter φ_k = (1 - ρ)^k.
LinearOperator build_exp_convolution(Index size, double decay);

/// The implicit SPD matrix A = βΦᵀΦ + diag(α).
class SystemMatrix {
 public:
  /// Throws DomainError unless β > 0 and every α_j > 0 (and finite).
  SystemMatrix(LinearOperator op, double beta, Vector alpha);

  const LinearOperator& op() const noexcept { return op_; }
  double beta() const noexcept { return beta_; }
  const Vector& alpha() const noexcept { return alpha_; }
  Index size() const noexcept { return op_.cols(); }

  /// Returns βΦᵀ(ΦV) + diag(α)V without forming a D×D matrix.
  Matrix apply(const Matrix& V) const;

  /// Dense D×D materialization, for oracles.
  Matrix materialize() const;

 private:
  LinearOperator op_;
  double beta_;
  Vector alpha_;
};

}  // namespace sbl::linop
