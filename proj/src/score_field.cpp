#include "emoflow/score_field.hpp"

#include "emoflow/errors.hpp"

#include <cmath>
#include <string>

namespace emoflow {

Vector time_embedding(double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw DomainError("time embedding: t = " + std::to_string(t) + " outside [0, 1]");
  constexpr int pairs = kTimeEmbeddingDim / 2;
  Vector e(kTimeEmbeddingDim);
  for (int k = 0; k < pairs; ++k) {
    const double omega = std::pow(1e4, static_cast<double>(k) / (pairs - 1));
    e(2 * k) = std::sin(omega * t);
    e(2 * k + 1) = std::cos(omega * t);
  }
  return e;
}

}  // namespace emoflow
