#include "sbl/error.hpp"

#include <sstream>

namespace sbl {

std::string to_string(Shape shape) {
  std::ostringstream os;
  os << shape.rows << "x" << shape.cols;
  return os.str();
}

DimensionError::DimensionError(std::string context, Shape expected, Shape actual)
    : Error(context + ": expected shape " + to_string(expected) + ", got " +
            to_string(actual)),
      context_(std::move(context)),
      expected_(expected),
      actual_(actual) {}

NumericalError::NumericalError(std::string module, std::string message, int step)
    : Error(module + ": " + message +
            (step >= 0 ? " (step " + std::to_string(step) + ")" : std::string())),
      module_(std::move(module)),
      detail_(std::move(message)),
      step_(step) {}

void require_shape(const char* context, Shape expected, Shape actual) {
  if (expected.rows != actual.rows || expected.cols != actual.cols) {
    throw DimensionError(context, expected, actual);
  }
}

}  // namespace sbl
