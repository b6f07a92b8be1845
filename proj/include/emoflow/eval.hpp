#pragma once

#include "emoflow/corpus.hpp"
#include "emoflow/sampler.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace emoflow {

/// Multinomial logistic regression over a fixed label set.
class SoftmaxClassifier {
 public:
  SoftmaxClassifier(std::vector<Emotion> labels, int dim);

  const std::vector<Emotion>& labels() const { return labels_; }
  Vector posterior(const RowVector& x) const;
  double probability(const RowVector& x, Emotion label) const;
  Emotion predict(const RowVector& x) const;
  bool knows(Emotion label) const;

  Matrix& weights() { return weights_; }
  RowVector& bias() { return bias_; }

 private:
  std::vector<Emotion> labels_;
  Matrix weights_;  // dim x labels
  RowVector bias_;
};

struct ClassifierConfig {
  int iterations = 400;
  double learning_rate = 0.05;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct TrainedClassifier {
  SoftmaxClassifier model;
  double heldout_accuracy;
};

/// Full-batch Adam on the cross-entropy. Needs at least two labels.
TrainedClassifier train_toy_classifier(const SyntheticEmotionCorpus& corpus,
                                       const ClassifierConfig& config);

enum class Scorer { Bayes, Classifier };
std::string_view to_string(Scorer s);

struct SweepRow {
  Emotion label;
  double intensity;
  double mean_probability;
  double std_error;
  int samples;
  Scorer scorer;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // sorted by (scorer, label, intensity)

  /// Rows for one label and scorer, in intensity order.
  std::vector<SweepRow> curve(Emotion label, Scorer scorer = Scorer::Bayes) const;
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct SweepOptions {
  std::vector<double> intensities = {0, 1, 2, 4, 8};
  int samples = 2000;
  SamplerConfig sampler;
  Vector speaker;
  const SoftmaxClassifier* classifier = nullptr;
};

/// For each (label, w) draws samples through the guided sampler and
/// averages the target label's posterior. Prior is N(0, I) in the corpus
/// dimension. Cells are independent with seeds derived from (seed, label, w).
SweepReport intensity_sweep(const ScoreField& field, const NoiseSchedule& schedule,
                            const SyntheticEmotionCorpus& corpus,
                            std::span<const Emotion> labels, const SweepOptions& options);

struct AccuracyReport {
  double accuracy = 0;
  std::vector<Emotion> labels;  // classifier label order
  Eigen::MatrixXi confusion;    // rows: intended, cols: predicted

  std::string to_csv() const;
};

AccuracyReport accuracy_report(const SoftmaxClassifier& classifier, const Matrix& samples,
                               std::span<const Emotion> intended);

}  // namespace emoflow
