#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace sbl {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Shape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

std::string to_string(Shape shape);

/// A matrix or vector argument had the wrong shape.
class DimensionError : public Error {
 public:
  DimensionError(std::string context, Shape expected, Shape actual);

  const std::string& context() const noexcept { return context_; }
  Shape expected() const noexcept { return expected_; }
  Shape actual() const noexcept { return actual_; }

 private:
  std::string context_;
  Shape expected_;
  Shape actual_;
};

/// An argument was outside its admissible domain (non-positive precision,
/// decay rate outside (0, 1), and similar).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Floating-point failure during a computation: divergence, loss of
/// positive definiteness, non-finite intermediate values.
class NumericalError : public Error {
 public:
  NumericalError(std::string module, std::string message, int step = -1);

  const std::string& module() const noexcept { return module_; }
  /// The message without module prefix and step suffix.
  const std::string& detail() const noexcept { return detail_; }
  /// Iteration index at which the failure was detected, or -1.
  int step() const noexcept { return step_; }

 private:
  std::string module_;
  std::string detail_;
  int step_;
};

/// Throws DimensionError unless `actual` equals `expected`.
void require_shape(const char* context, Shape expected, Shape actual);

}  // namespace sbl
