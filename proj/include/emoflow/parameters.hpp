#pragma once

#include "emoflow/tensor.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace emoflow {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

/// Named parameter groups, each with a gradient slot of the same shape.
/// Declaration order is the serialization order.
class ParameterStore {
 public:
  std::size_t add(std::string name, Matrix init);

  Parameter& operator[](std::size_t i) { return groups_[i]; }
  const Parameter& operator[](std::size_t i) const { return groups_[i]; }
  Parameter& find(std::string_view name);
  const Parameter& find(std::string_view name) const;

  std::size_t group_count() const { return groups_.size(); }
  std::size_t scalar_count() const;
  std::vector<Parameter>& groups() { return groups_; }
  const std::vector<Parameter>& groups() const { return groups_; }

  void zero_grad();
  void set_zero();

 private:
  std::vector<Parameter> groups_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(Eigen::Index fan_in, Eigen::Index fan_out, class RandomStream& rng);

}  // namespace emoflow
