#pragma once

#include "emoflow/corpus.hpp"
#include "emoflow/noise_schedule.hpp"
#include "emoflow/text_prior.hpp"
#include "emoflow/toy_score_net.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace emoflow {

struct LossWeights {
  double diffusion = 1.0;
  double prior = 1.0;
  double duration = 0.1;
  double speaker = 0.1;
};

enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
  double learning_rate = 1e-4;
  /// Cosine anneals from learning_rate down to learning_rate * final_lr_fraction.
  LrSchedule lr_schedule = LrSchedule::Constant;
  double final_lr_fraction = 0.1;
  int batch_size = 64;
  int iterations = 2000;
  double null_dropout = 0.10;
  /// Share of each batch drawn from the unlabeled corpus (forced null).
  double unlabeled_fraction = 0.0;
  LossWeights weights;
  std::uint64_t seed = 0;

  void validate() const;
  double learning_rate_at(int iteration) const;
};

/// The step count and annealing used for the 2-component reference task.
TrainConfig toy_task_train_config();

/// Adam with bias correction. Moments mirror the parameter groups.
class AdamState {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  explicit AdamState(const ParameterStore& params);

  /// Throws NumericalError naming the group on a non-finite gradient; no
  /// parameter is touched in that case.
  void step(ParameterStore& params, double learning_rate);

  long step_count() const { return steps_; }
  const std::vector<Matrix>& first_moment() const { return m_; }
  const std::vector<Matrix>& second_moment() const { return v_; }

 private:
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long steps_ = 0;
};

ConditioningContext apply_null_dropout(ConditioningContext ctx, double prob, RandomStream& rng);

inline constexpr double kMinTrainTime = 1e-5;

/// Noised inputs and the exact conditional score target for one batch.
struct NoisedBatch {
  ToyScoreNet::Batch input;
  Matrix x0;
  Matrix target;  // -(x_t - mean_t) / var_t
  Matrix var;     // var_t, per element
  Matrix decay;   // exp(-B(t) / (2 sigma)), per element
};

/// Draws t ~ U[kMinTrainTime, T] per row and x_t from the forward process.
NoisedBatch make_noised_batch(const NoiseSchedule& schedule, const Vector& sigma,
                              const Matrix& x0, const Matrix& mu, const Matrix& speakers,
                              std::vector<EmotionLabel> emotions, RandomStream& rng);

/// mean(var_t * (score - target)^2).
double dsm_objective(const Matrix& score, const NoisedBatch& batch);
Matrix dsm_objective_grad(const Matrix& score, const NoisedBatch& batch);

/// DSM loss of the net on x0 under one context; gradients accumulate in net.
double dsm_loss(ToyScoreNet& net, const NoiseSchedule& schedule, const PriorField& prior,
                const StateTensor& x0, const ConditioningContext& ctx, RandomStream& rng);

/// Tweedie one-step estimate of x0 from x_t and a score.
Matrix denoised_estimate(const NoisedBatch& batch, const Matrix& score);

/// Frozen random two-layer feature extractor: tanh(mel W1) W2, per frame.
class SpeakerFeatureNet {
 public:
  SpeakerFeatureNet(int channels, std::uint64_t seed, int hidden = 64, int features = 32);

  Matrix features(const Matrix& mel) const;
  /// Gradient w.r.t. mel given gradient w.r.t. features.
  Matrix backward(const Matrix& mel, const Matrix& grad_features) const;

  const Matrix& w1() const { return w1_; }
  const Matrix& w2() const { return w2_; }

 private:
  Matrix w1_;
  Matrix w2_;
};

double speaker_feature_loss(const Matrix& generated, const Matrix& reference,
                            const SpeakerFeatureNet& net);
/// d(loss)/d(generated).
Matrix speaker_feature_loss_grad(const Matrix& generated, const Matrix& reference,
                                 const SpeakerFeatureNet& net);

struct Models {
  ToyScoreNet score_net;
  std::optional<TextPriorNet> text_prior;
};

struct LossRecord {
  int iteration = 0;
  double total = 0;
  double diffusion = 0;
  double prior = 0;
  double duration = 0;
  double speaker = 0;
  double null_fraction = 0;  // among labeled draws this iteration
};

struct TrainResult {
  std::vector<LossRecord> history;
  long labeled_draws = 0;
  long null_draws = 0;
  double null_fraction() const {
    return labeled_draws ? static_cast<double>(null_draws) / labeled_draws : 0.0;
  }
};

/// Builds fresh models sized for the data.
Models make_models(const TrainingData& data, std::uint64_t seed);

/// Deterministic given config.seed. Throws DivergenceError with the
/// iteration index on a non-finite loss.
TrainResult train_loop(Models& models, const TrainingData& data, const NoiseSchedule& schedule,
                       const TrainConfig& config);

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history);

}  // namespace emoflow
