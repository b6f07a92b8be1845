#include "emoflow/tensor.hpp"

#include "emoflow/errors.hpp"

namespace emoflow {

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_same_shape(const Matrix& a, const Matrix& b, const std::string& what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(what + ": shape " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " does not match " + std::to_string(b.rows()) +
                     "x" + std::to_string(b.cols()));
  }
}

}  // namespace emoflow
