#pragma once

#include "emoflow/analytic_score.hpp"
#include "emoflow/random.hpp"

#include <optional>
#include <vector>

namespace emoflow {

/// One emotion's data law: a diagonal Gaussian plus how many examples the
/// corpus holds for it.
struct LabelLaw {
  Emotion label;
  Vector mean;
  Vector var;
  int count = 1000;
};

/// Labeled synthetic data in d dimensions. The optional baseline label
/// (the "Neutral analog") has the full mixture as its conditional law,
/// so guidance on it is a no-op and its Bayes posterior is its prior.
class SyntheticEmotionCorpus {
 public:
  struct Baseline {
    Emotion label = Emotion::Neutral;
    int count = 1000;
  };

  explicit SyntheticEmotionCorpus(std::vector<LabelLaw> laws,
                                  std::optional<Baseline> baseline = std::nullopt);

  /// Labels spaced evenly on a circle of `radius` in the first two
  /// dimensions, isotropic variance `var`.
  static SyntheticEmotionCorpus ring(const std::vector<Emotion>& labels, int dim, double radius,
                                     double var, int count_per_label,
                                     std::optional<Baseline> baseline = std::nullopt);

  int dim() const { return static_cast<int>(laws_.front().mean.size()); }
  const std::vector<LabelLaw>& laws() const { return laws_; }
  const std::optional<Baseline>& baseline() const { return baseline_; }

  /// All labels, non-baseline first in construction order, then baseline.
  std::vector<Emotion> labels() const;
  bool contains(Emotion label) const;
  double label_prior(Emotion label) const;
  const LabelLaw& law(Emotion label) const;

  /// Mixture weight of each law (priors renormalised over non-baseline labels).
  std::vector<double> component_weights() const;

  AnalyticScoreField analytic_field(const NoiseSchedule& schedule, const Vector& sigma) const;

  /// n draws from the label's conditional law, one per row.
  Matrix draw(Emotion label, Eigen::Index n, RandomStream& rng) const;

  /// P(label | x) under the corpus: Gaussian likelihoods and count priors.
  double bayes_probability(const RowVector& x, Emotion label) const;
  /// Posterior over labels() in the same order.
  std::vector<double> bayes_posterior(const RowVector& x) const;

  struct Dataset {
    Matrix x;
    std::vector<Emotion> labels;
  };
  /// Every label's `count` examples, shuffled.
  Dataset draw_dataset(RandomStream& rng) const;

 private:
  std::vector<LabelLaw> laws_;
  std::optional<Baseline> baseline_;
};

/// Unit-norm random identity vectors, one row per synthetic speaker.
Matrix make_speaker_table(int speakers, std::uint64_t seed);

/// A training example. For the mixture task `mel` is a single frame and
/// there are no tokens; for the text task it is a synthetic utterance.
struct Utterance {
  Matrix mel;
  std::vector<int> tokens;
  std::vector<int> durations;
  int speaker = 0;
  EmotionLabel emotion;
};

struct TrainingData {
  std::vector<Utterance> labeled;
  std::vector<Utterance> unlabeled;  // always trained with the null token
  Matrix speakers;
  int channels = 0;
  int vocabulary = 0;  // 0: no text prior
};

TrainingData make_mixture_data(const SyntheticEmotionCorpus& corpus, int speakers,
                               std::uint64_t seed);

struct TextCorpusSpec {
  int vocabulary = 16;
  int channels = 128;
  int utterances = 240;
  int unlabeled_utterances = 0;
  int speakers = 4;
  int min_tokens = 3;
  int max_tokens = 8;
  int max_duration = 6;
  double noise = 0.3;
  double emotion_shift = 1.0;
  double speaker_shift = 0.3;
  std::vector<Emotion> emotions = {Emotion::Anger, Emotion::Disgust, Emotion::Fear,
                                   Emotion::Happy, Emotion::Neutral, Emotion::Sad};
  std::uint64_t seed = 0;
};

/// Utterances built by expanding known per-token mel means with known
/// durations, then adding emotion and speaker offsets plus noise.
TrainingData make_text_data(const TextCorpusSpec& spec);

}  // namespace emoflow
