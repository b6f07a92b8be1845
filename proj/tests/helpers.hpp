#pragma once

#include "emoflow/tensor.hpp"

#include <cmath>

namespace testing {

struct SampleMoments {
  double mean;
  double var;
  double mean_se;
  double var_se;
};

inline SampleMoments sample_moments(const emoflow::Vector& v) {
  const double n = static_cast<double>(v.size());
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / (n - 1);
  const double m4 = (v.array() - mean).pow(4).mean();
  return {mean, var, std::sqrt(var / n), std::sqrt(std::max(m4 - var * var, 0.0) / n)};
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testing
