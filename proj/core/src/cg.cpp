#include "sbl/cg.hpp"

#include "sbl/error.hpp"
#include "sbl/parallel.hpp"

#include <cmath>
#include <string>

namespace sbl::cg {

namespace {

// Sequential left-to-right dot product; the summation order is fixed so
// results do not depend on column placement or thread count.
double ordered_dot(const double* a, const double* b, Index n) {
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

Vector column_dots(const Matrix& A, const Matrix& B) {
  Vector out(A.cols());
  parallel_for(A.cols(), [&](Index q) { out[q] = ordered_dot(A.col(q).data(), B.col(q).data(), A.rows()); });
  return out;
}

double frobenius_sq(const Matrix& A) {
  const Vector per_column = column_dots(A, A);
  double total = 0.0;
  for (Index q = 0; q < per_column.size(); ++q) total += per_column[q];
  return total;
}

}  // namespace

void CgConfig::validate() const {
  if (max_steps < 1) throw DomainError("CgConfig: max_steps must be >= 1");
  if (!(tolerance > 0.0)) throw DomainError("CgConfig: tolerance must be > 0");
  if (theta_policy == ThetaPolicy::Custom) {
    if (custom_theta.size() == 0 || !(custom_theta.array() > 0.0).all()) {
      throw DomainError("CgConfig: custom theta must be non-empty and strictly positive");
    }
  }
}

Matrix Preconditioner::apply_inverse(const Matrix& R) const {
  if (R.rows() != diagonal.size()) {
    throw DimensionError("Preconditioner::apply_inverse", {diagonal.size(), R.cols()},
                         {R.rows(), R.cols()});
  }
  Matrix out(R.rows(), R.cols());
  parallel_for(R.cols(), [&](Index q) { out.col(q) = R.col(q).cwiseQuotient(diagonal); });
  return out;
}

Preconditioner make_preconditioner(ThetaPolicy policy, const linop::LinearOperator& op,
                                   double beta, const Vector& alpha, const Vector& custom_theta) {
  const Index size = op.cols();
  if (alpha.size() != size) {
    throw DimensionError("make_preconditioner alpha", {size, 1}, {alpha.size(), 1});
  }
  if (!(alpha.array() > 0.0).all()) {
    throw DomainError("make_preconditioner: alpha must be strictly positive");
  }
  Preconditioner pre;
  switch (policy) {
    case ThetaPolicy::None:
      return identity_preconditioner(size);
    case ThetaPolicy::AllOnes:
      pre.theta = Vector::Ones(size);
      break;
    case ThetaPolicy::Jacobi:
      pre.theta = op.column_sq_norms();
      break;
    case ThetaPolicy::Custom:
      if (custom_theta.size() != size) {
        throw DimensionError("make_preconditioner custom theta", {size, 1},
                             {custom_theta.size(), 1});
      }
      if (!(custom_theta.array() > 0.0).all()) {
        throw DomainError("make_preconditioner: custom theta must be strictly positive");
      }
      pre.theta = custom_theta;
      break;
  }
  pre.diagonal = beta * pre.theta + alpha;
  return pre;
}

Preconditioner identity_preconditioner(Index size) {
  return Preconditioner{Vector::Zero(size), Vector::Ones(size)};
}

CgReport solve(const linop::SystemMatrix& system, const Matrix& B, const Preconditioner& pre,
               const CgConfig& cfg) {
  const SystemBlock block{system, pre, B.cols()};
  return solve_blocks(std::span<const SystemBlock>(&block, 1), B, cfg);
}

CgReport solve_blocks(std::span<const SystemBlock> blocks, const Matrix& B, const CgConfig& cfg) {
  cfg.validate();
  const Index size = B.rows();
  const Index width = B.cols();
  Index total = 0;
  for (const auto& block : blocks) {
    if (block.system.get().size() != size) {
      throw DimensionError("cg::solve system", {size, size},
                           {block.system.get().size(), block.system.get().size()});
    }
    if (block.preconditioner.get().diagonal.size() != size) {
      throw DimensionError("cg::solve preconditioner", {size, 1},
                           {block.preconditioner.get().diagonal.size(), 1});
    }
    total += block.columns;
  }
  if (total != width || width < 1) {
    throw DimensionError("cg::solve right-hand side", {size, total}, {B.rows(), B.cols()});
  }

  auto apply_system = [&](const Matrix& V) {
    Matrix out(size, width);
    Index offset = 0;
    for (const auto& block : blocks) {
      out.middleCols(offset, block.columns) =
          block.system.get().apply(V.middleCols(offset, block.columns));
      offset += block.columns;
    }
    return out;
  };
  auto apply_preconditioner = [&](const Matrix& V) {
    Matrix out(size, width);
    Index offset = 0;
    for (const auto& block : blocks) {
      out.middleCols(offset, block.columns) =
          block.preconditioner.get().apply_inverse(V.middleCols(offset, block.columns));
      offset += block.columns;
    }
    return out;
  };

  CgReport report;
  report.solution = Matrix::Zero(size, width);
  Matrix& X = report.solution;

  const double b_norm = std::sqrt(frobenius_sq(B));
  if (!std::isfinite(b_norm)) throw NumericalError("cg", "right-hand side is not finite", 0);
  if (b_norm == 0.0) {
    report.converged = true;
    return report;
  }

  Matrix R = B;
  Matrix W = apply_preconditioner(R);
  Matrix P = cfg.recurrence == Recurrence::Standard ? W : B;
  Vector rho = column_dots(R, W);
  std::vector<bool> frozen(width, false);

  double delta = 1.0;
  report.final_relative_residual = delta;
  if (delta <= cfg.tolerance) {
    report.converged = true;
    return report;
  }

  Vector gamma(width);
  Vector eta(width);
  for (int step = 1; step <= cfg.max_steps; ++step) {
    const Matrix Psi = apply_system(P);
    const Vector pi = column_dots(P, Psi);
    for (Index q = 0; q < width; ++q) {
      if (!frozen[q] && pi[q] == 0.0) {
        frozen[q] = true;
        report.frozen_columns.push_back(q);
      }
      gamma[q] = frozen[q] ? 0.0 : rho[q] / pi[q];
    }
    parallel_for(width, [&](Index q) {
      X.col(q) += gamma[q] * P.col(q);
      R.col(q) -= gamma[q] * Psi.col(q);
    });

    delta = std::sqrt(frobenius_sq(R)) / b_norm;
    report.steps_taken = step;
    report.final_relative_residual = delta;
    if (!std::isfinite(delta)) {
      throw NumericalError("cg", "residual became non-finite", step);
    }
    if (delta <= cfg.tolerance) {
      report.converged = true;
      return report;
    }

    W = apply_preconditioner(R);
    const Vector rho_old = rho;
    rho = column_dots(R, W);
    for (Index q = 0; q < width; ++q) {
      eta[q] = rho_old[q] == 0.0 ? 0.0 : rho[q] / rho_old[q];
    }
    const Matrix& direction = cfg.recurrence == Recurrence::Standard ? W : R;
    parallel_for(width, [&](Index q) { P.col(q) = direction.col(q) + eta[q] * P.col(q); });
  }
  return report;
}

}  // namespace sbl::cg
