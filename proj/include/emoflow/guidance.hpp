#pragma once

#include "emoflow/score_field.hpp"

namespace emoflow {

/// Emotion intensity w >= 0. 0 is emotion-agnostic, 1 is plain conditional,
/// above 1 amplifies the emotion.
class GuidanceWeight {
 public:
  explicit GuidanceWeight(double w = 1.0);
  double value() const { return w_; }

 private:
  double w_;
};

/// w * cond - (w - 1) * uncond.
StateTensor combine_scores(const StateTensor& cond, const StateTensor& uncond, GuidanceWeight w);

/// Classifier-free guided score. The null branch keeps the speaker
/// embedding. At w = 0 or w = 1 (or a null label) the field is called once.
StateTensor guided_score(const ScoreField& field, const StateTensor& x, const Matrix& mu, double t,
                         const Vector& speaker, EmotionLabel emotion, GuidanceWeight w);

}  // namespace emoflow
