#pragma once

#include <Eigen/Dense>

#include <string>

namespace emoflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// State tensors are frames x channels. Score fields act on each frame
/// independently, so a batch of independent samples is also just a tall state.
using StateTensor = Matrix;

bool all_finite(const Matrix& m);

void require_same_shape(const Matrix& a, const Matrix& b, const std::string& what);

}  // namespace emoflow
