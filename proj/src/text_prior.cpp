#include "emoflow/text_prior.hpp"

#include "emoflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace emoflow {

void TextPriorNet::declare_parameters() {
  params_.add("text.token_embedding", Matrix::Zero(vocabulary_, embedding_dim_));
  params_.add("text.projection", Matrix::Zero(embedding_dim_, channels_));
  params_.add("text.projection_bias", Matrix::Zero(1, channels_));
  params_.add("text.duration_weight", Matrix::Zero(embedding_dim_, 1));
  params_.add("text.duration_bias", Matrix::Zero(1, 1));
}

TextPriorNet::TextPriorNet(int vocabulary, int channels, int embedding_dim)
    : vocabulary_(vocabulary), channels_(channels), embedding_dim_(embedding_dim) {
  if (vocabulary < 1 || vocabulary > kMaxVocabulary)
    throw InputError("text prior: vocabulary size must be in [1, 64]");
  if (channels < 1 || embedding_dim < 1) throw ShapeError("text prior: dimensions must be positive");
  declare_parameters();
}

TextPriorNet::TextPriorNet(int vocabulary, int channels, RandomStream& init, int embedding_dim)
    : TextPriorNet(vocabulary, channels, embedding_dim) {
  params_[kTokenEmbedding].value = init.normal_matrix(vocabulary_, embedding_dim_);
  params_[kProjection].value = glorot_uniform(embedding_dim_, channels_, init);
  params_[kDurationWeight].value = glorot_uniform(embedding_dim_, 1, init);
}

void TextPriorNet::validate(const TokenSequence& seq) const {
  if (seq.tokens.empty()) throw InputError("text prior: empty token sequence");
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    const int id = seq.tokens[i];
    if (id < 0 || id >= vocabulary_)
      throw InputError("text prior: token " + std::to_string(id) + " at position " +
                       std::to_string(i) + " is outside the vocabulary of " +
                       std::to_string(vocabulary_));
  }
}

EncodedText TextPriorNet::encode(const TokenSequence& seq) const {
  validate(seq);
  const auto n = static_cast<Eigen::Index>(seq.tokens.size());
  Matrix emb(n, embedding_dim_);
  for (Eigen::Index i = 0; i < n; ++i) emb.row(i) = params_[kTokenEmbedding].value.row(seq.tokens[i]);
  EncodedText out;
  out.token_mu = emb * params_[kProjection].value;
  out.token_mu.rowwise() += RowVector(params_[kProjectionBias].value);
  out.log_duration = (emb * params_[kDurationWeight].value).col(0).array() +
                     params_[kDurationBias].value(0, 0);
  return out;
}

void TextPriorNet::backward(const TokenSequence& seq, const Matrix& grad_token_mu,
                            const Vector& grad_log_duration) {
  validate(seq);
  const auto n = static_cast<Eigen::Index>(seq.tokens.size());
  if (grad_token_mu.rows() != n || grad_token_mu.cols() != channels_ ||
      grad_log_duration.size() != n)
    throw ShapeError("text prior: gradient shape mismatch");
  Matrix emb(n, embedding_dim_);
  for (Eigen::Index i = 0; i < n; ++i) emb.row(i) = params_[kTokenEmbedding].value.row(seq.tokens[i]);

  params_[kProjection].grad.noalias() += emb.transpose() * grad_token_mu;
  params_[kProjectionBias].grad += grad_token_mu.colwise().sum();
  params_[kDurationWeight].grad.noalias() += emb.transpose() * grad_log_duration;
  params_[kDurationBias].grad(0, 0) += grad_log_duration.sum();

  const Matrix d_emb = grad_token_mu * params_[kProjection].value.transpose() +
                       grad_log_duration * params_[kDurationWeight].value.transpose();
  for (Eigen::Index i = 0; i < n; ++i) params_[kTokenEmbedding].grad.row(seq.tokens[i]) += d_emb.row(i);
}

Matrix expand(const Matrix& token_mu, std::span<const int> durations) {
  if (static_cast<Eigen::Index>(durations.size()) != token_mu.rows())
    throw ShapeError("expand: " + std::to_string(durations.size()) + " durations for " +
                     std::to_string(token_mu.rows()) + " tokens");
  Eigen::Index frames = 0;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] < 1)
      throw InputError("expand: duration " + std::to_string(durations[i]) + " at token " +
                       std::to_string(i) + " must be >= 1");
    frames += durations[i];
  }
  Matrix out(frames, token_mu.cols());
  Eigen::Index f = 0;
  for (std::size_t i = 0; i < durations.size(); ++i)
    for (int k = 0; k < durations[i]; ++k) out.row(f++) = token_mu.row(static_cast<Eigen::Index>(i));
  return out;
}

Matrix collapse(const Matrix& frame_grad, std::span<const int> durations) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(durations.size()), frame_grad.cols());
  Eigen::Index f = 0;
  for (std::size_t i = 0; i < durations.size(); ++i)
    for (int k = 0; k < durations[i]; ++k) out.row(static_cast<Eigen::Index>(i)) += frame_grad.row(f++);
  if (f != frame_grad.rows()) throw ShapeError("collapse: frame count does not match durations");
  return out;
}

std::vector<int> round_durations(const Vector& log_duration) {
  std::vector<int> out(static_cast<std::size_t>(log_duration.size()));
  for (Eigen::Index i = 0; i < log_duration.size(); ++i) {
    const double d = std::floor(std::exp(log_duration(i)) + 0.5);
    out[static_cast<std::size_t>(i)] = d < 1.0 ? 1 : static_cast<int>(std::min(d, 1e6));
  }
  return out;
}

double prior_loss(const Matrix& frame_mu, const Matrix& target) {
  require_same_shape(frame_mu, target, "prior loss");
  if (frame_mu.size() == 0) throw ShapeError("prior loss: empty input");
  return 0.5 * (target - frame_mu).squaredNorm() / static_cast<double>(frame_mu.size());
}

Matrix prior_loss_grad(const Matrix& frame_mu, const Matrix& target) {
  require_same_shape(frame_mu, target, "prior loss");
  return (frame_mu - target) / static_cast<double>(frame_mu.size());
}

namespace {

void check_durations(const Vector& log_duration, std::span<const int> targets) {
  if (static_cast<Eigen::Index>(targets.size()) != log_duration.size() || targets.empty())
    throw ShapeError("duration loss: " + std::to_string(log_duration.size()) +
                     " predictions for " + std::to_string(targets.size()) + " targets");
  for (int d : targets)
    if (d < 1) throw InputError("duration loss: target durations must be >= 1");
}

}  // namespace

double duration_loss(const Vector& log_duration, std::span<const int> targets) {
  check_durations(log_duration, targets);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < log_duration.size(); ++i) {
    const double e = log_duration(i) - std::log(static_cast<double>(targets[i]));
    sum += e * e;
  }
  return sum / static_cast<double>(targets.size());
}

Vector duration_loss_grad(const Vector& log_duration, std::span<const int> targets) {
  check_durations(log_duration, targets);
  Vector g(log_duration.size());
  for (Eigen::Index i = 0; i < log_duration.size(); ++i)
    g(i) = 2.0 * (log_duration(i) - std::log(static_cast<double>(targets[i]))) /
           static_cast<double>(targets.size());
  return g;
}

}  // namespace emoflow
