#include "emoflow/guidance.hpp"

#include "emoflow/errors.hpp"

#include <cmath>
#include <string>

namespace emoflow {

GuidanceWeight::GuidanceWeight(double w) : w_(w) {
  if (!std::isfinite(w) || w < 0.0)
    throw DomainError("emotion intensity must be finite and non-negative, got " +
                      std::to_string(w));
}

StateTensor combine_scores(const StateTensor& cond, const StateTensor& uncond, GuidanceWeight w) {
  require_same_shape(cond, uncond, "combine_scores");
  const double wv = w.value();
  return (wv * cond.array() - (wv - 1.0) * uncond.array()).matrix();
}

StateTensor guided_score(const ScoreField& field, const StateTensor& x, const Matrix& mu, double t,
                         const Vector& speaker, EmotionLabel emotion, GuidanceWeight w) {
  const ConditioningContext null_ctx{speaker, std::nullopt};
  if (w.value() == 0.0 || !emotion) return field.score(x, mu, t, null_ctx);
  const ConditioningContext cond_ctx{speaker, emotion};
  if (w.value() == 1.0) return field.score(x, mu, t, cond_ctx);
  return combine_scores(field.score(x, mu, t, cond_ctx), field.score(x, mu, t, null_ctx), w);
}

}  // namespace emoflow
