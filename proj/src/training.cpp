#include "emoflow/training.hpp"

#include "emoflow/errors.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <string>

namespace emoflow {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw InputError("training: learning_rate must be positive");
  if (batch_size < 1) throw InputError("training: batch_size must be >= 1");
  if (iterations < 1) throw InputError("training: iterations must be >= 1");
  if (!(null_dropout >= 0.0 && null_dropout <= 1.0))
    throw InputError("training: null_dropout must be in [0, 1]");
  if (!(unlabeled_fraction >= 0.0 && unlabeled_fraction <= 1.0))
    throw InputError("training: unlabeled_fraction must be in [0, 1]");
  if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0))
    throw InputError("training: final_lr_fraction must be in (0, 1]");
  for (double w : {weights.diffusion, weights.prior, weights.duration, weights.speaker})
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("training: loss weights must be >= 0");
}

double TrainConfig::learning_rate_at(int iteration) const {
  if (lr_schedule == LrSchedule::Constant || iterations < 2) return learning_rate;
  const double progress = static_cast<double>(iteration) / (iterations - 1);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return learning_rate * (final_lr_fraction + (1.0 - final_lr_fraction) * cosine);
}

TrainConfig toy_task_train_config() {
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.lr_schedule = LrSchedule::Cosine;
  c.final_lr_fraction = 0.05;
  c.batch_size = 64;
  c.iterations = 2000;
  return c;
}

AdamState::AdamState(const ParameterStore& params) {
  for (const auto& g : params.groups()) {
    m_.push_back(Matrix::Zero(g.value.rows(), g.value.cols()));
    v_.push_back(Matrix::Zero(g.value.rows(), g.value.cols()));
  }
}

void AdamState::step(ParameterStore& params, double learning_rate) {
  if (params.group_count() != m_.size())
    throw ShapeError("adam: parameter store does not match optimizer state");
  for (const auto& g : params.groups()) {
    if (!g.grad.allFinite()) throw NumericalError("adam: non-finite gradient in group " + g.name);
  }
  ++steps_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    auto& p = params[i];
    if (p.grad.rows() != m_[i].rows() || p.grad.cols() != m_[i].cols())
      throw ShapeError("adam: shape of group " + p.name + " changed");
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * p.grad;
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * p.grad.cwiseAbs2();
    p.value.array() -=
        learning_rate * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + kEpsilon);
  }
}

ConditioningContext apply_null_dropout(ConditioningContext ctx, double prob, RandomStream& rng) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("null dropout: probability outside [0, 1]");
  if (rng.bernoulli(prob)) ctx.emotion = std::nullopt;
  return ctx;
}

NoisedBatch make_noised_batch(const NoiseSchedule& schedule, const Vector& sigma,
                              const Matrix& x0, const Matrix& mu, const Matrix& speakers,
                              std::vector<EmotionLabel> emotions, RandomStream& rng) {
  require_same_shape(x0, mu, "dsm batch: x0 vs mu");
  if (x0.cols() != sigma.size()) throw ShapeError("dsm batch: sigma length mismatch");
  const Eigen::Index n = x0.rows();
  const Eigen::Index d = x0.cols();
  NoisedBatch b;
  b.x0 = x0;
  b.input.mu = mu;
  b.input.speaker = speakers;
  b.input.emotion = std::move(emotions);
  b.input.t.resize(n);
  b.input.x.resize(n, d);
  b.target.resize(n, d);
  b.var.resize(n, d);
  b.decay.resize(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double t = rng.uniform(kMinTrainTime, schedule.horizon());
    b.input.t(r) = t;
    const double big_b = schedule.cum_beta(t);
    for (Eigen::Index c = 0; c < d; ++c) {
      const double a = std::exp(-big_b / (2.0 * sigma(c)));
      const double var = -sigma(c) * std::expm1(-big_b / sigma(c));
      const double mean = mu(r, c) + (x0(r, c) - mu(r, c)) * a;
      const double xt = mean + std::sqrt(var) * rng.normal();
      b.decay(r, c) = a;
      b.var(r, c) = var;
      b.input.x(r, c) = xt;
      b.target(r, c) = -(xt - mean) / var;
    }
  }
  return b;
}

double dsm_objective(const Matrix& score, const NoisedBatch& batch) {
  require_same_shape(score, batch.target, "dsm objective");
  return (batch.var.array() * (score - batch.target).array().square()).mean();
}

Matrix dsm_objective_grad(const Matrix& score, const NoisedBatch& batch) {
  require_same_shape(score, batch.target, "dsm objective");
  return (2.0 / static_cast<double>(score.size())) *
         (batch.var.array() * (score - batch.target).array()).matrix();
}

double dsm_loss(ToyScoreNet& net, const NoiseSchedule& schedule, const PriorField& prior,
                const StateTensor& x0, const ConditioningContext& ctx, RandomStream& rng) {
  prior.require_matches(x0);
  if (ctx.speaker.size() != kSpeakerDim) throw ShapeError("dsm loss: speaker must have 512 entries");
  const Matrix speakers = ctx.speaker.transpose().replicate(x0.rows(), 1);
  NoisedBatch b = make_noised_batch(schedule, prior.sigma(), x0, prior.mean(), speakers,
                                    std::vector<EmotionLabel>(x0.rows(), ctx.emotion), rng);
  ToyScoreNet::Cache cache;
  const Matrix s = net.forward(b.input, cache);
  const double loss = dsm_objective(s, b);
  net.backward(b.input, cache, dsm_objective_grad(s, b));
  return loss;
}

// The speaker loss is computed on this single-step estimate rather than
// on a full reverse pass: x0_hat = mu + (x_t - mu + var * s) / a.
Matrix denoised_estimate(const NoisedBatch& batch, const Matrix& score) {
  require_same_shape(score, batch.x0, "denoised estimate");
  return (batch.input.mu.array() +
          (batch.input.x - batch.input.mu + (batch.var.array() * score.array()).matrix()).array() /
              batch.decay.array())
      .matrix();
}

SpeakerFeatureNet::SpeakerFeatureNet(int channels, std::uint64_t seed, int hidden, int features) {
  RandomStream rng(derive_seed(seed, 0xfea7));
  w1_ = rng.normal_matrix(channels, hidden) / std::sqrt(static_cast<double>(channels));
  w2_ = rng.normal_matrix(hidden, features) / std::sqrt(static_cast<double>(hidden));
}

Matrix SpeakerFeatureNet::features(const Matrix& mel) const {
  if (mel.cols() != w1_.rows()) throw ShapeError("speaker features: channel count mismatch");
  return Matrix((mel * w1_).array().tanh()) * w2_;
}

Matrix SpeakerFeatureNet::backward(const Matrix& mel, const Matrix& grad_features) const {
  const Matrix h = (mel * w1_).array().tanh();
  const Matrix dh = ((grad_features * w2_.transpose()).array() * (1.0 - h.array().square())).matrix();
  return dh * w1_.transpose();
}

double speaker_feature_loss(const Matrix& generated, const Matrix& reference,
                            const SpeakerFeatureNet& net) {
  require_same_shape(generated, reference, "speaker loss");
  return (net.features(generated) - net.features(reference)).cwiseAbs().mean();
}

Matrix speaker_feature_loss_grad(const Matrix& generated, const Matrix& reference,
                                 const SpeakerFeatureNet& net) {
  require_same_shape(generated, reference, "speaker loss");
  const Matrix diff = net.features(generated) - net.features(reference);
  const Matrix g = diff.array().sign() / static_cast<double>(diff.size());
  return net.backward(generated, g);
}

Models make_models(const TrainingData& data, std::uint64_t seed) {
  RandomStream rng(derive_seed(seed, 0x1417));
  Models m{ToyScoreNet(data.channels, rng), std::nullopt};
  if (data.vocabulary > 0) m.text_prior.emplace(data.vocabulary, data.channels, rng);
  return m;
}

namespace {

struct Draw {
  const Utterance* utterance;
  EmotionLabel emotion;
};

}  // namespace

TrainResult train_loop(Models& models, const TrainingData& data, const NoiseSchedule& schedule,
                       const TrainConfig& config) {
  config.validate();
  if (data.labeled.empty() && data.unlabeled.empty()) throw InputError("training: empty corpus");
  if (data.channels != models.score_net.state_dim())
    throw ShapeError("training: corpus channels do not match the score net");
  const bool text = data.vocabulary > 0;
  if (text && !models.text_prior) throw InputError("training: text corpus needs a text prior");

  RandomStream rng(derive_seed(config.seed, 3));
  AdamState score_opt(models.score_net.parameters());
  std::optional<AdamState> text_opt;
  if (text) text_opt.emplace(models.text_prior->parameters());
  const SpeakerFeatureNet feature_net(data.channels, config.seed);
  const Vector sigma = Vector::Ones(data.channels);
  const LossWeights& w = config.weights;

  int unlabeled_per_batch = 0;
  if (!data.unlabeled.empty())
    unlabeled_per_batch = static_cast<int>(std::lround(config.batch_size * config.unlabeled_fraction));
  if (data.labeled.empty()) unlabeled_per_batch = config.batch_size;

  TrainResult result;
  for (int it = 0; it < config.iterations; ++it) {
    models.score_net.parameters().zero_grad();
    if (text) models.text_prior->parameters().zero_grad();

    std::vector<Draw> draws;
    int nulls = 0;
    int labeled = 0;
    for (int i = 0; i < config.batch_size; ++i) {
      if (i < config.batch_size - unlabeled_per_batch) {
        const Utterance& u = data.labeled[static_cast<std::size_t>(
            rng.index(static_cast<int>(data.labeled.size())))];
        ConditioningContext ctx{Vector(), u.emotion};
        ctx = apply_null_dropout(ctx, config.null_dropout, rng);
        ++labeled;
        if (!ctx.emotion) ++nulls;
        draws.push_back({&u, ctx.emotion});
      } else {
        const Utterance& u = data.unlabeled[static_cast<std::size_t>(
            rng.index(static_cast<int>(data.unlabeled.size())))];
        draws.push_back({&u, std::nullopt});
      }
    }

    Eigen::Index rows = 0;
    for (const auto& d : draws) rows += d.utterance->mel.rows();
    Matrix x0(rows, data.channels);
    Matrix mu = Matrix::Zero(rows, data.channels);
    Matrix speakers(rows, kSpeakerDim);
    std::vector<EmotionLabel> emotions;
    emotions.reserve(static_cast<std::size_t>(rows));

    LossRecord rec;
    rec.iteration = it;
    Eigen::Index r = 0;
    for (const auto& d : draws) {
      const Utterance& u = *d.utterance;
      const Eigen::Index f = u.mel.rows();
      x0.middleRows(r, f) = u.mel;
      if (text) {
        const TokenSequence seq{u.tokens};
        const EncodedText enc = models.text_prior->encode(seq);
        const Matrix frame_mu = expand(enc.token_mu, u.durations);
        rec.prior += prior_loss(frame_mu, u.mel) / draws.size();
        rec.duration += duration_loss(enc.log_duration, u.durations) / draws.size();
        const double scale = 1.0 / static_cast<double>(draws.size());
        models.text_prior->backward(
            seq, collapse(prior_loss_grad(frame_mu, u.mel), u.durations) * (w.prior * scale),
            duration_loss_grad(enc.log_duration, u.durations) * (w.duration * scale));
        // The diffusion branch treats mu as an input (no gradient into the encoder).
        mu.middleRows(r, f) = frame_mu;
      }
      speakers.middleRows(r, f) = data.speakers.row(u.speaker).replicate(f, 1);
      emotions.insert(emotions.end(), static_cast<std::size_t>(f), d.emotion);
      r += f;
    }

    NoisedBatch nb = make_noised_batch(schedule, sigma, x0, mu, speakers, std::move(emotions), rng);
    ToyScoreNet::Cache cache;
    const Matrix s = models.score_net.forward(nb.input, cache);
    rec.diffusion = dsm_objective(s, nb);
    Matrix grad_s = dsm_objective_grad(s, nb) * w.diffusion;
    if (w.speaker > 0.0) {
      const Matrix x0_hat = denoised_estimate(nb, s);
      rec.speaker = speaker_feature_loss(x0_hat, x0, feature_net);
      const Matrix g = speaker_feature_loss_grad(x0_hat, x0, feature_net);
      grad_s += w.speaker * (g.array() * nb.var.array() / nb.decay.array()).matrix();
    }
    rec.total = w.diffusion * rec.diffusion + w.prior * rec.prior + w.duration * rec.duration +
                w.speaker * rec.speaker;
    rec.null_fraction = labeled ? static_cast<double>(nulls) / labeled : 0.0;
    if (!std::isfinite(rec.total))
      throw DivergenceError("training diverged at iteration " + std::to_string(it));

    models.score_net.backward(nb.input, cache, grad_s);
    const double lr = config.learning_rate_at(it);
    score_opt.step(models.score_net.parameters(), lr);
    if (text) text_opt->step(models.text_prior->parameters(), lr);

    result.labeled_draws += labeled;
    result.null_draws += nulls;
    result.history.push_back(rec);
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<LossRecord>& history) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "iteration,total,diffusion,prior,duration,speaker,null_fraction\n";
  out << std::setprecision(10);
  for (const auto& r : history)
    out << r.iteration << ',' << r.total << ',' << r.diffusion << ',' << r.prior << ','
        << r.duration << ',' << r.speaker << ',' << r.null_fraction << '\n';
}

}  // namespace emoflow
