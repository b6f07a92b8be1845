#pragma once

#include "emoflow/parameters.hpp"
#include "emoflow/random.hpp"
#include "emoflow/score_field.hpp"

#include <vector>

namespace emoflow {

/// Small MLP score estimator applied to each frame:
///   [x | mu | time_embedding(t) | speaker | emotion_table[label]]
///     -> dense(hidden) -> tanh -> dense(hidden) -> tanh -> dense(state_dim)
/// The emotion table has 8 rows; row 7 is the learned null token.
class ToyScoreNet : public ScoreField {
 public:
  static constexpr int kDefaultHidden = 128;

  enum Group : std::size_t { kW1 = 0, kB1, kW2, kB2, kW3, kB3, kEmotionTable, kGroupCount };

  /// Glorot-uniform weights, zero biases, emotion rows N(0, 1) * 0.02.
  ToyScoreNet(int state_dim, RandomStream& init, int hidden = kDefaultHidden);
  /// All parameters zero.
  explicit ToyScoreNet(int state_dim, int hidden = kDefaultHidden);

  int state_dim() const { return state_dim_; }
  int hidden() const { return hidden_; }
  int input_dim() const { return 2 * state_dim_ + kTimeEmbeddingDim + kSpeakerDim + kEmotionDim; }

  StateTensor score(const StateTensor& x, const Matrix& mu, double t,
                    const ConditioningContext& ctx) const override;

  /// One row per training element; each row carries its own time and context.
  struct Batch {
    Matrix x;
    Matrix mu;
    Vector t;
    Matrix speaker;                   // rows x kSpeakerDim
    std::vector<EmotionLabel> emotion;
    Eigen::Index rows() const { return x.rows(); }
  };

  struct Cache {
    Matrix input;
    Matrix h1;
    Matrix h2;
  };

  Matrix forward(const Batch& batch, Cache& cache) const;
  /// Accumulates d(loss)/d(params) given d(loss)/d(output).
  void backward(const Batch& batch, const Cache& cache, const Matrix& grad_output);

  RowVector emotion_embedding(EmotionLabel label) const;

  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

 private:
  void declare_parameters();
  void check_batch(const Batch& batch) const;

  int state_dim_;
  int hidden_;
  ParameterStore params_;
};

}  // namespace emoflow
