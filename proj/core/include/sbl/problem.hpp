#pragma once

#include "sbl/linop.hpp"

#include <vector>

namespace sbl {

using linop::Index;
using linop::Matrix;
using linop::Vector;

/// Observation y ≈ Φz with Gaussian noise of precision β.
struct SblProblem {
  Vector y;
  linop::LinearOperator op;
  double beta = 1.0;

  Index dimension() const noexcept { return op.cols(); }
  /// Throws on shape mismatch or non-positive β.
  void validate() const;
};

/// L observation/dictionary pairs sharing the coefficient dimension D, the
/// noise precision β and one precision vector α.
struct MultiTaskProblem {
  struct Task {
    Vector y;
    linop::LinearOperator op;
  };
  std::vector<Task> tasks;
  double beta = 1.0;

  Index dimension() const;
  SblProblem task_problem(std::size_t task) const;
  void validate() const;
};

}  // namespace sbl
