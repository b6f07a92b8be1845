#include "emoflow/corpus.hpp"

#include "emoflow/errors.hpp"
#include "emoflow/text_prior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace emoflow {

SyntheticEmotionCorpus::SyntheticEmotionCorpus(std::vector<LabelLaw> laws,
                                               std::optional<Baseline> baseline)
    : laws_(std::move(laws)), baseline_(baseline) {
  if (laws_.empty()) throw InputError("corpus: needs at least one labeled law");
  const auto d = laws_.front().mean.size();
  for (std::size_t i = 0; i < laws_.size(); ++i) {
    const auto& law = laws_[i];
    if (law.mean.size() != d || law.var.size() != d)
      throw ShapeError("corpus: inconsistent law dimensions");
    if ((law.var.array() <= 0.0).any()) throw DomainError("corpus: variances must be positive");
    if (law.count < 1) throw InputError("corpus: label counts must be >= 1");
    if (baseline_ && baseline_->label == law.label)
      throw InputError("corpus: baseline label cannot also carry its own law");
    for (std::size_t j = 0; j < i; ++j)
      if (laws_[j].label == law.label)
        throw InputError("corpus: duplicate label " + std::string(to_string(law.label)));
  }
  if (baseline_ && baseline_->count < 1) throw InputError("corpus: baseline count must be >= 1");
}

SyntheticEmotionCorpus SyntheticEmotionCorpus::ring(const std::vector<Emotion>& labels, int dim,
                                                    double radius, double var,
                                                    int count_per_label,
                                                    std::optional<Baseline> baseline) {
  if (dim < 1) throw ShapeError("corpus: dimension must be >= 1");
  std::vector<LabelLaw> laws;
  const auto n = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / n;
    Vector mean = Vector::Zero(dim);
    mean(0) = radius * std::cos(angle);
    if (dim > 1) mean(1) = radius * std::sin(angle);
    laws.push_back({labels[i], mean, Vector::Constant(dim, var), count_per_label});
  }
  return SyntheticEmotionCorpus(std::move(laws), baseline);
}

std::vector<Emotion> SyntheticEmotionCorpus::labels() const {
  std::vector<Emotion> out;
  for (const auto& law : laws_) out.push_back(law.label);
  if (baseline_) out.push_back(baseline_->label);
  return out;
}

bool SyntheticEmotionCorpus::contains(Emotion label) const {
  const auto all = labels();
  return std::find(all.begin(), all.end(), label) != all.end();
}

const LabelLaw& SyntheticEmotionCorpus::law(Emotion label) const {
  for (const auto& l : laws_)
    if (l.label == label) return l;
  throw InputError("corpus: no law for label " + std::string(to_string(label)));
}

namespace {

double total_count(const std::vector<LabelLaw>& laws) {
  double n = 0;
  for (const auto& l : laws) n += l.count;
  return n;
}

}  // namespace

double SyntheticEmotionCorpus::label_prior(Emotion label) const {
  const double labeled = total_count(laws_);
  const double total = labeled + (baseline_ ? baseline_->count : 0);
  if (baseline_ && baseline_->label == label) return baseline_->count / total;
  return law(label).count / total;
}

std::vector<double> SyntheticEmotionCorpus::component_weights() const {
  const double labeled = total_count(laws_);
  std::vector<double> w;
  for (const auto& l : laws_) w.push_back(l.count / labeled);
  return w;
}

AnalyticScoreField SyntheticEmotionCorpus::analytic_field(const NoiseSchedule& schedule,
                                                          const Vector& sigma) const {
  std::vector<GaussianComponent> comps;
  const auto w = component_weights();
  for (std::size_t i = 0; i < laws_.size(); ++i)
    comps.push_back({w[i], laws_[i].mean, laws_[i].var, laws_[i].label});
  // Guard against rounding in the weight sum.
  double s = 0;
  for (const auto& c : comps) s += c.weight;
  for (auto& c : comps) c.weight /= s;
  EmotionLabel base;
  if (baseline_) base = baseline_->label;
  return AnalyticScoreField(std::move(comps), schedule, sigma, base);
}

Matrix SyntheticEmotionCorpus::draw(Emotion label, Eigen::Index n, RandomStream& rng) const {
  Matrix out(n, dim());
  const bool from_mixture = baseline_ && baseline_->label == label;
  const auto weights = component_weights();
  for (Eigen::Index r = 0; r < n; ++r) {
    const LabelLaw* l = nullptr;
    if (from_mixture) {
      double u = rng.uniform();
      std::size_t k = 0;
      while (k + 1 < laws_.size() && u >= weights[k]) u -= weights[k++];
      l = &laws_[k];
    } else {
      l = &law(label);
    }
    for (int c = 0; c < dim(); ++c) out(r, c) = l->mean(c) + std::sqrt(l->var(c)) * rng.normal();
  }
  return out;
}

namespace {

double log_density(const RowVector& x, const LabelLaw& l) {
  const double quad = ((x - l.mean.transpose()).array().square() / l.var.transpose().array()).sum();
  return -0.5 * (quad + l.var.array().log().sum() + x.size() * std::log(2.0 * std::numbers::pi));
}

}  // namespace

std::vector<double> SyntheticEmotionCorpus::bayes_posterior(const RowVector& x) const {
  if (x.size() != dim()) throw ShapeError("bayes posterior: dimension mismatch");
  const double labeled = total_count(laws_);
  const double total = labeled + (baseline_ ? baseline_->count : 0);
  std::vector<double> logp(laws_.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < laws_.size(); ++k) {
    logp[k] = std::log(static_cast<double>(laws_[k].count)) + log_density(x, laws_[k]);
    best = std::max(best, logp[k]);
  }
  double norm = 0;
  for (double& v : logp) {
    v = std::exp(v - best);
    norm += v;
  }
  // The baseline's conditional is the labeled mixture itself, so its
  // posterior is its prior and the labeled posteriors share the rest.
  const double labeled_share = labeled / total;
  std::vector<double> out;
  for (double v : logp) out.push_back(labeled_share * v / norm);
  if (baseline_) out.push_back(baseline_->count / total);
  return out;
}

double SyntheticEmotionCorpus::bayes_probability(const RowVector& x, Emotion label) const {
  const auto all = labels();
  const auto it = std::find(all.begin(), all.end(), label);
  if (it == all.end()) throw InputError("bayes probability: label not in corpus");
  return bayes_posterior(x)[static_cast<std::size_t>(it - all.begin())];
}

SyntheticEmotionCorpus::Dataset SyntheticEmotionCorpus::draw_dataset(RandomStream& rng) const {
  Dataset ds;
  std::vector<Matrix> blocks;
  Eigen::Index rows = 0;
  for (Emotion label : labels()) {
    const int count = (baseline_ && baseline_->label == label) ? baseline_->count : law(label).count;
    blocks.push_back(draw(label, count, rng));
    rows += count;
    ds.labels.insert(ds.labels.end(), static_cast<std::size_t>(count), label);
  }
  ds.x.resize(rows, dim());
  Eigen::Index r = 0;
  for (const auto& b : blocks) {
    ds.x.middleRows(r, b.rows()) = b;
    r += b.rows();
  }
  for (Eigen::Index i = rows - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.index(static_cast<int>(i + 1)));
    ds.x.row(i).swap(ds.x.row(j));
    std::swap(ds.labels[static_cast<std::size_t>(i)], ds.labels[static_cast<std::size_t>(j)]);
  }
  return ds;
}

Matrix make_speaker_table(int speakers, std::uint64_t seed) {
  if (speakers < 1) throw InputError("speaker table: need at least one speaker");
  RandomStream rng(derive_seed(seed, 0x5eed));
  Matrix table = rng.normal_matrix(speakers, kSpeakerDim);
  table.rowwise().normalize();
  return table;
}

TrainingData make_mixture_data(const SyntheticEmotionCorpus& corpus, int speakers,
                               std::uint64_t seed) {
  RandomStream rng(derive_seed(seed, 1));
  const auto ds = corpus.draw_dataset(rng);
  TrainingData data;
  data.channels = corpus.dim();
  data.speakers = make_speaker_table(speakers, seed);
  for (Eigen::Index r = 0; r < ds.x.rows(); ++r) {
    Utterance u;
    u.mel = ds.x.row(r);
    u.speaker = rng.index(speakers);
    u.emotion = ds.labels[static_cast<std::size_t>(r)];
    data.labeled.push_back(std::move(u));
  }
  return data;
}

TrainingData make_text_data(const TextCorpusSpec& spec) {
  if (spec.vocabulary < 1 || spec.vocabulary > kMaxVocabulary)
    throw InputError("text corpus: vocabulary must be in [1, 64]");
  if (spec.min_tokens < 1 || spec.max_tokens < spec.min_tokens || spec.max_duration < 1)
    throw InputError("text corpus: invalid token or duration ranges");
  if (spec.emotions.empty()) throw InputError("text corpus: no emotions");
  RandomStream rng(derive_seed(spec.seed, 2));
  const Matrix token_means = rng.normal_matrix(spec.vocabulary, spec.channels);
  Matrix emotion_offsets(kEmotionCount, spec.channels);
  for (Emotion e : kAllEmotions) {
    emotion_offsets.row(static_cast<int>(e)) =
        e == Emotion::Neutral ? RowVector::Zero(spec.channels)
                              : RowVector(rng.normal_matrix(1, spec.channels) * spec.emotion_shift);
  }
  const Matrix speaker_offsets = rng.normal_matrix(spec.speakers, spec.channels) * spec.speaker_shift;

  TrainingData data;
  data.channels = spec.channels;
  data.vocabulary = spec.vocabulary;
  data.speakers = make_speaker_table(spec.speakers, spec.seed);

  auto make = [&](Emotion e) {
    Utterance u;
    const int n = spec.min_tokens + rng.index(spec.max_tokens - spec.min_tokens + 1);
    Matrix mu(n, spec.channels);
    for (int i = 0; i < n; ++i) {
      u.tokens.push_back(rng.index(spec.vocabulary));
      u.durations.push_back(1 + rng.index(spec.max_duration));
      mu.row(i) = token_means.row(u.tokens.back());
    }
    u.speaker = rng.index(spec.speakers);
    u.mel = expand(mu, u.durations);
    u.mel.rowwise() += RowVector(emotion_offsets.row(static_cast<int>(e)) +
                                 speaker_offsets.row(u.speaker));
    u.mel += rng.normal_matrix(u.mel.rows(), u.mel.cols()) * spec.noise;
    u.emotion = e;
    return u;
  };
  for (int i = 0; i < spec.utterances; ++i)
    data.labeled.push_back(make(spec.emotions[static_cast<std::size_t>(i) % spec.emotions.size()]));
  for (int i = 0; i < spec.unlabeled_utterances; ++i) {
    Utterance u = make(spec.emotions[static_cast<std::size_t>(rng.index(
        static_cast<int>(spec.emotions.size())))]);
    u.emotion = std::nullopt;
    data.unlabeled.push_back(std::move(u));
  }
  return data;
}

}  // namespace emoflow
