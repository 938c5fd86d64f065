#include "sbl/precision.hpp"
#include "sbl/problem.hpp"

#include "sbl/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace sbl {

namespace {

// exp(-x²) / erfc(x). Direct evaluation underflows past x ≈ 26; beyond
// that use the continued fraction of erfcx(x) = exp(x²) erfc(x).
double exp_over_erfc(double x) {
  if (x < 25.0) return std::exp(-x * x) / std::erfc(x);
  double tail = x;
  for (int k = 60; k >= 1; --k) tail = x + (0.5 * k) / tail;
  return tail * std::sqrt(std::numbers::pi);
}

}  // namespace

void SblProblem::validate() const {
  if (y.size() != op.rows()) {
    throw DimensionError("SblProblem observation", {op.rows(), 1}, {y.size(), 1});
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw DomainError("SblProblem: beta must be positive and finite");
  }
  if (!y.allFinite()) throw DomainError("SblProblem: observation contains non-finite values");
}

Index MultiTaskProblem::dimension() const { return tasks.empty() ? 0 : tasks.front().op.cols(); }

SblProblem MultiTaskProblem::task_problem(std::size_t task) const {
  return SblProblem{tasks.at(task).y, tasks.at(task).op, beta};
}

void MultiTaskProblem::validate() const {
  if (tasks.empty()) throw DomainError("MultiTaskProblem: needs at least one task");
  const Index dim = dimension();
  for (std::size_t l = 0; l < tasks.size(); ++l) {
    if (tasks[l].op.cols() != dim) {
      throw DimensionError("MultiTaskProblem task " + std::to_string(l) + " dictionary",
                           {tasks[l].op.rows(), dim}, {tasks[l].op.rows(), tasks[l].op.cols()});
    }
    task_problem(l).validate();
  }
}

PrecisionState PrecisionState::initial(Index dimension, double clamp_max, double floor_eps) {
  if (dimension < 1) throw DomainError("PrecisionState: dimension must be >= 1");
  if (!(clamp_max > 0.0) || !(floor_eps > 0.0)) {
    throw DomainError("PrecisionState: clamp_max and floor_eps must be positive");
  }
  return PrecisionState{Vector::Ones(dimension), 1, clamp_max, floor_eps};
}

PrecisionState PrecisionState::updated(const Vector& second_moment, double tasks) const {
  if (second_moment.size() != alpha.size()) {
    throw DimensionError("PrecisionState::updated", {alpha.size(), 1}, {second_moment.size(), 1});
  }
  PrecisionState next = *this;
  next.iteration = iteration + 1;
  for (Index j = 0; j < alpha.size(); ++j) {
    // NaN second moments also land on the floor.
    const double denom = second_moment[j] > floor_eps ? second_moment[j] : floor_eps;
    next.alpha[j] = std::min(tasks / denom, clamp_max);
  }
  return next;
}

Vector gaussian_second_moment(const Vector& mu, const Vector& variance) {
  if (mu.size() != variance.size()) {
    throw DimensionError("gaussian_second_moment", {mu.size(), 1}, {variance.size(), 1});
  }
  return mu.cwiseAbs2() + variance;
}

double rectified_second_moment(double mu, double variance, double floor_eps) {
  const double s = std::max(variance, floor_eps);
  const double xi = mu / std::sqrt(2.0 * s);
  return mu * mu + s + mu * std::sqrt(s / std::numbers::pi) * exp_over_erfc(-xi);
}

Vector rectified_second_moment(const Vector& mu, const Vector& variance, double floor_eps) {
  if (mu.size() != variance.size()) {
    throw DimensionError("rectified_second_moment", {mu.size(), 1}, {variance.size(), 1});
  }
  Vector out(mu.size());
  for (Index j = 0; j < mu.size(); ++j) {
    out[j] = rectified_second_moment(mu[j], variance[j], floor_eps);
  }
  return out;
}

}  // namespace sbl
