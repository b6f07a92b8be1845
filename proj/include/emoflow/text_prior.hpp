#pragma once

#include "emoflow/parameters.hpp"
#include "emoflow/random.hpp"

#include <span>
#include <vector>

namespace emoflow {

inline constexpr int kMaxVocabulary = 64;

struct TokenSequence {
  std::vector<int> tokens;
};

struct EncodedText {
  Matrix token_mu;     // tokens x channels
  Vector log_duration;  // one per token
};

/// Per-token text encoder: embedding lookup, an affine map to a mel-frame
/// mean, and an affine log-duration head. No mixing across tokens.
class TextPriorNet {
 public:
  enum Group : std::size_t {
    kTokenEmbedding = 0,
    kProjection,
    kProjectionBias,
    kDurationWeight,
    kDurationBias,
    kGroupCount
  };

  TextPriorNet(int vocabulary, int channels, RandomStream& init, int embedding_dim = 128);
  /// All parameters zero.
  TextPriorNet(int vocabulary, int channels, int embedding_dim = 128);

  int vocabulary() const { return vocabulary_; }
  int channels() const { return channels_; }
  int embedding_dim() const { return embedding_dim_; }

  void validate(const TokenSequence& seq) const;
  EncodedText encode(const TokenSequence& seq) const;
  /// Accumulates gradients for the given output gradients.
  void backward(const TokenSequence& seq, const Matrix& grad_token_mu,
                const Vector& grad_log_duration);

  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

 private:
  void declare_parameters();

  int vocabulary_;
  int channels_;
  int embedding_dim_;
  ParameterStore params_;
};

/// Repeats row i of token_mu durations[i] times.
Matrix expand(const Matrix& token_mu, std::span<const int> durations);

/// max(1, round-half-up(exp(log_duration))).
std::vector<int> round_durations(const Vector& log_duration);

/// mean of 0.5 (target - mu)^2 over frames and channels.
double prior_loss(const Matrix& frame_mu, const Matrix& target);
/// d(prior_loss)/d(frame_mu).
Matrix prior_loss_grad(const Matrix& frame_mu, const Matrix& target);

/// Mean squared error between log_duration and log(targets).
double duration_loss(const Vector& log_duration, std::span<const int> targets);
Vector duration_loss_grad(const Vector& log_duration, std::span<const int> targets);

/// Sums consecutive rows back onto tokens (adjoint of expand).
Matrix collapse(const Matrix& frame_grad, std::span<const int> durations);

}  // namespace emoflow
