#pragma once

#include "emoflow/score_field.hpp"

#include <limits>
#include <vector>

namespace testing {

// Returns a fixed linear score and records every context it is called with.
class RecordingField : public emoflow::ScoreField {
 public:
  explicit RecordingField(int nan_on_call = -1) : nan_on_call_(nan_on_call) {}

  emoflow::StateTensor score(const emoflow::StateTensor& x, const emoflow::Matrix& mu, double t,
                             const emoflow::ConditioningContext& ctx) const override {
    calls.push_back(ctx);
    times.push_back(t);
    if (static_cast<int>(calls.size()) == nan_on_call_)
      return emoflow::Matrix::Constant(x.rows(), x.cols(), std::numeric_limits<double>::quiet_NaN());
    const double shift = ctx.emotion ? 1.0 + static_cast<int>(*ctx.emotion) : 0.0;
    return (-(x - mu)).array() + shift;
  }

  mutable std::vector<emoflow::ConditioningContext> calls;
  mutable std::vector<double> times;

 private:
  int nan_on_call_;
};

}  // namespace testing
