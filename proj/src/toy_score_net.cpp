#include "emoflow/toy_score_net.hpp"

#include "emoflow/errors.hpp"

#include <string>

namespace emoflow {

void ToyScoreNet::declare_parameters() {
  params_.add("score.w1", Matrix::Zero(input_dim(), hidden_));
  params_.add("score.b1", Matrix::Zero(1, hidden_));
  params_.add("score.w2", Matrix::Zero(hidden_, hidden_));
  params_.add("score.b2", Matrix::Zero(1, hidden_));
  params_.add("score.w3", Matrix::Zero(hidden_, state_dim_));
  params_.add("score.b3", Matrix::Zero(1, state_dim_));
  params_.add("score.emotion_table", Matrix::Zero(kEmotionCount + 1, kEmotionDim));
}

ToyScoreNet::ToyScoreNet(int state_dim, int hidden) : state_dim_(state_dim), hidden_(hidden) {
  if (state_dim < 1 || hidden < 1) throw ShapeError("score net: dimensions must be positive");
  declare_parameters();
}

ToyScoreNet::ToyScoreNet(int state_dim, RandomStream& init, int hidden)
    : ToyScoreNet(state_dim, hidden) {
  params_[kW1].value = glorot_uniform(input_dim(), hidden_, init);
  params_[kW2].value = glorot_uniform(hidden_, hidden_, init);
  params_[kW3].value = glorot_uniform(hidden_, state_dim_, init);
  params_[kEmotionTable].value = init.normal_matrix(kEmotionCount + 1, kEmotionDim) * 0.02;
}

RowVector ToyScoreNet::emotion_embedding(EmotionLabel label) const {
  return params_[kEmotionTable].value.row(table_row(label));
}

StateTensor ToyScoreNet::score(const StateTensor& x, const Matrix& mu, double t,
                               const ConditioningContext& ctx) const {
  require_same_shape(x, mu, "score net: state vs mu");
  if (x.cols() != state_dim_)
    throw ShapeError("score net: expected " + std::to_string(state_dim_) + " channels, got " +
                     std::to_string(x.cols()));
  if (ctx.speaker.size() != kSpeakerDim)
    throw ShapeError("score net: speaker embedding must have 512 entries, got " +
                     std::to_string(ctx.speaker.size()));

  const Matrix& w1 = params_[kW1].value;
  // Time, speaker and emotion are shared by every frame: fold them into a
  // single bias row.
  RowVector shared(input_dim() - 2 * state_dim_);
  shared << time_embedding(t).transpose(), ctx.speaker.transpose(), emotion_embedding(ctx.emotion);
  const RowVector c = shared * w1.bottomRows(shared.size()) + params_[kB1].value;

  Matrix pre = x * w1.topRows(state_dim_) + mu * w1.middleRows(state_dim_, state_dim_);
  pre.rowwise() += c;
  const Matrix h1 = pre.array().tanh();
  Matrix pre2 = h1 * params_[kW2].value;
  pre2.rowwise() += RowVector(params_[kB2].value);
  const Matrix h2 = pre2.array().tanh();
  Matrix out = h2 * params_[kW3].value;
  out.rowwise() += RowVector(params_[kB3].value);
  return out;
}

void ToyScoreNet::check_batch(const Batch& b) const {
  const Eigen::Index n = b.x.rows();
  if (b.x.cols() != state_dim_ || b.mu.rows() != n || b.mu.cols() != state_dim_ ||
      b.t.size() != n || b.speaker.rows() != n || b.speaker.cols() != kSpeakerDim ||
      static_cast<Eigen::Index>(b.emotion.size()) != n)
    throw ShapeError("score net: inconsistent batch shapes");
}

Matrix ToyScoreNet::forward(const Batch& batch, Cache& cache) const {
  check_batch(batch);
  const Eigen::Index n = batch.rows();
  cache.input.resize(n, input_dim());
  for (Eigen::Index r = 0; r < n; ++r) {
    cache.input.row(r) << batch.x.row(r), batch.mu.row(r), time_embedding(batch.t(r)).transpose(),
        batch.speaker.row(r), emotion_embedding(batch.emotion[r]);
  }
  Matrix pre = cache.input * params_[kW1].value;
  pre.rowwise() += RowVector(params_[kB1].value);
  cache.h1 = pre.array().tanh();
  Matrix pre2 = cache.h1 * params_[kW2].value;
  pre2.rowwise() += RowVector(params_[kB2].value);
  cache.h2 = pre2.array().tanh();
  Matrix out = cache.h2 * params_[kW3].value;
  out.rowwise() += RowVector(params_[kB3].value);
  return out;
}

void ToyScoreNet::backward(const Batch& batch, const Cache& cache, const Matrix& grad_output) {
  check_batch(batch);
  if (grad_output.rows() != batch.rows() || grad_output.cols() != state_dim_)
    throw ShapeError("score net: gradient shape mismatch");

  params_[kW3].grad.noalias() += cache.h2.transpose() * grad_output;
  params_[kB3].grad += grad_output.colwise().sum();
  const Matrix d2 = ((grad_output * params_[kW3].value.transpose()).array() *
                     (1.0 - cache.h2.array().square()))
                        .matrix();
  params_[kW2].grad.noalias() += cache.h1.transpose() * d2;
  params_[kB2].grad += d2.colwise().sum();
  const Matrix d1 = ((d2 * params_[kW2].value.transpose()).array() *
                     (1.0 - cache.h1.array().square()))
                        .matrix();
  params_[kW1].grad.noalias() += cache.input.transpose() * d1;
  params_[kB1].grad += d1.colwise().sum();

  const Matrix d_emotion = d1 * params_[kW1].value.bottomRows(kEmotionDim).transpose();
  for (Eigen::Index r = 0; r < batch.rows(); ++r)
    params_[kEmotionTable].grad.row(table_row(batch.emotion[r])) += d_emotion.row(r);
}

}  // namespace emoflow
