#pragma once

#include "emoflow/noise_schedule.hpp"
#include "emoflow/score_field.hpp"

#include <vector>

namespace emoflow {

struct GaussianComponent {
  double weight;
  Vector mean;
  Vector var;  // diagonal
  EmotionLabel label;  // nullopt: unlabeled component
};

/// Exact score of a diagonal Gaussian mixture pushed through the forward
/// process. Each component stays Gaussian under the OU dynamics, so
/// p_t is again a mixture and its score is available in closed form.
///
/// Conditioning on a label restricts to that label's sub-mixture
/// (renormalized). An optional baseline label conditions on the full
/// mixture, so its conditional score equals the unconditional one.
/// The speaker embedding is ignored.
class AnalyticScoreField : public ScoreField {
 public:
  AnalyticScoreField(std::vector<GaussianComponent> components, NoiseSchedule schedule,
                     Vector sigma, EmotionLabel baseline = std::nullopt);

  StateTensor score(const StateTensor& x, const Matrix& mu, double t,
                    const ConditioningContext& ctx) const override;

  /// Null label gives the full (unconditional) mixture.
  StateTensor score(const StateTensor& x, const Matrix& mu, double t, EmotionLabel label) const;

  /// Per-label posterior weights P(label | x_t) of the labeled components,
  /// in kAllEmotions order (zero for absent labels).
  std::vector<double> label_responsibilities(const RowVector& x, const RowVector& mu,
                                             double t) const;

  const std::vector<GaussianComponent>& components() const { return components_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const Vector& sigma() const { return sigma_; }
  Eigen::Index dim() const { return sigma_.size(); }
  bool has_label(Emotion e) const;

 private:
  std::vector<int> active_components(EmotionLabel label) const;

  std::vector<GaussianComponent> components_;
  NoiseSchedule schedule_;
  Vector sigma_;
  EmotionLabel baseline_;
};

}  // namespace emoflow
