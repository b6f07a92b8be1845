#include "emoflow/parameters.hpp"

#include "emoflow/errors.hpp"
#include "emoflow/random.hpp"

#include <cmath>

namespace emoflow {

std::size_t ParameterStore::add(std::string name, Matrix init) {
  Matrix grad = Matrix::Zero(init.rows(), init.cols());
  groups_.push_back({std::move(name), std::move(init), std::move(grad)});
  return groups_.size() - 1;
}

Parameter& ParameterStore::find(std::string_view name) {
  for (auto& g : groups_)
    if (g.name == name) return g;
  throw InputError("no parameter group named '" + std::string(name) + "'");
}

const Parameter& ParameterStore::find(std::string_view name) const {
  return const_cast<ParameterStore*>(this)->find(name);
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& g : groups_) n += static_cast<std::size_t>(g.value.size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& g : groups_) g.grad.setZero();
}

void ParameterStore::set_zero() {
  for (auto& g : groups_) g.value.setZero();
}

Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, RandomStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (Eigen::Index r = 0; r < fan_in; ++r)
    for (Eigen::Index c = 0; c < fan_out; ++c) w(r, c) = rng.uniform(-limit, limit);
  return w;
}

}  // namespace emoflow
