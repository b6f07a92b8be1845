#pragma once

#include "emoflow/emotion.hpp"
#include "emoflow/tensor.hpp"

namespace emoflow {

inline constexpr int kSpeakerDim = 512;
inline constexpr int kEmotionDim = 128;
inline constexpr int kTimeEmbeddingDim = 64;

struct ConditioningContext {
  Vector speaker;  // identity embedding, kSpeakerDim entries
  EmotionLabel emotion;
};

/// S(x_t, mu, t, ctx): an estimate of grad log p_t(x_t | ctx), evaluated
/// frame by frame. Output has the shape of x.
class ScoreField {
 public:
  virtual ~ScoreField() = default;
  virtual StateTensor score(const StateTensor& x, const Matrix& mu, double t,
                            const ConditioningContext& ctx) const = 0;
};

/// Sinusoidal embedding: 32 (sin, cos) pairs with frequencies spaced
/// geometrically from 1 to 1e4.
Vector time_embedding(double t);

}  // namespace emoflow
