#include "emoflow/eval.hpp"

#include "emoflow/errors.hpp"
#include "emoflow/parallel.hpp"
#include "emoflow/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace emoflow {

SoftmaxClassifier::SoftmaxClassifier(std::vector<Emotion> labels, int dim)
    : labels_(std::move(labels)),
      weights_(Matrix::Zero(dim, static_cast<Eigen::Index>(labels_.size()))),
      bias_(RowVector::Zero(static_cast<Eigen::Index>(labels_.size()))) {}

Vector SoftmaxClassifier::posterior(const RowVector& x) const {
  if (x.size() != weights_.rows()) throw ShapeError("classifier: input dimension mismatch");
  RowVector logits = x * weights_ + bias_;
  logits.array() -= logits.maxCoeff();
  logits = logits.array().exp();
  return (logits / logits.sum()).transpose();
}

bool SoftmaxClassifier::knows(Emotion label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

double SoftmaxClassifier::probability(const RowVector& x, Emotion label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw InputError("classifier: unknown label " + std::string(to_string(label)));
  return posterior(x)(it - labels_.begin());
}

Emotion SoftmaxClassifier::predict(const RowVector& x) const {
  Eigen::Index best;
  posterior(x).maxCoeff(&best);
  return labels_[static_cast<std::size_t>(best)];
}

TrainedClassifier train_toy_classifier(const SyntheticEmotionCorpus& corpus,
                                       const ClassifierConfig& config) {
  const auto labels = corpus.labels();
  if (labels.size() < 2) throw InputError("classifier: corpus needs at least two labels");
  if (!(config.holdout_fraction > 0.0 && config.holdout_fraction < 1.0))
    throw InputError("classifier: holdout_fraction must be in (0, 1)");
  RandomStream rng(derive_seed(config.seed, 0xc1a5));
  const auto ds = corpus.draw_dataset(rng);
  const auto n = ds.x.rows();
  const auto n_test = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(n * config.holdout_fraction));
  const auto n_train = n - n_test;
  if (n_train < 1) throw InputError("classifier: corpus too small for a holdout split");
  const auto n_labels = static_cast<Eigen::Index>(labels.size());

  auto label_index = [&](Emotion e) {
    return static_cast<Eigen::Index>(std::find(labels.begin(), labels.end(), e) - labels.begin());
  };
  Matrix onehot = Matrix::Zero(n_train, n_labels);
  for (Eigen::Index i = 0; i < n_train; ++i) onehot(i, label_index(ds.labels[static_cast<std::size_t>(i)])) = 1.0;
  const Matrix x_train = ds.x.topRows(n_train);

  ParameterStore params;
  params.add("classifier.weights", Matrix::Zero(corpus.dim(), n_labels));
  params.add("classifier.bias", Matrix::Zero(1, n_labels));
  AdamState adam(params);
  for (int it = 0; it < config.iterations; ++it) {
    Matrix logits = x_train * params[0].value;
    logits.rowwise() += RowVector(params[1].value);
    const Vector row_max = logits.rowwise().maxCoeff();
    logits.colwise() -= row_max;
    Matrix prob = logits.array().exp();
    prob.array().colwise() /= prob.rowwise().sum().array();
    const Matrix d_logits = (prob - onehot) / static_cast<double>(n_train);
    params[0].grad = x_train.transpose() * d_logits;
    params[1].grad = d_logits.colwise().sum();
    adam.step(params, config.learning_rate);
  }

  SoftmaxClassifier model(labels, corpus.dim());
  model.weights() = params[0].value;
  model.bias() = params[1].value;
  int correct = 0;
  for (Eigen::Index i = n_train; i < n; ++i)
    if (model.predict(ds.x.row(i)) == ds.labels[static_cast<std::size_t>(i)]) ++correct;
  return {std::move(model), static_cast<double>(correct) / static_cast<double>(n_test)};
}

std::string_view to_string(Scorer s) { return s == Scorer::Bayes ? "bayes" : "classifier"; }

std::vector<SweepRow> SweepReport::curve(Emotion label, Scorer scorer) const {
  std::vector<SweepRow> out;
  for (const auto& r : rows)
    if (r.label == label && r.scorer == scorer) out.push_back(r);
  std::sort(out.begin(), out.end(),
            [](const SweepRow& a, const SweepRow& b) { return a.intensity < b.intensity; });
  return out;
}

std::string SweepReport::to_csv() const {
  std::ostringstream os;
  os << "label,w,meanProb,stderr,n,scorer\n" << std::setprecision(10);
  for (const auto& r : rows)
    os << to_string(r.label) << ',' << r.intensity << ',' << r.mean_probability << ','
       << r.std_error << ',' << r.samples << ',' << to_string(r.scorer) << '\n';
  return os.str();
}

void SweepReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << to_csv();
}

namespace {

SweepRow summarize(Emotion label, double w, const std::vector<double>& p, Scorer scorer) {
  const double n = static_cast<double>(p.size());
  double mean = 0;
  for (double v : p) mean += v;
  mean /= n;
  double ss = 0;
  for (double v : p) ss += (v - mean) * (v - mean);
  const double sd = p.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
  return {label, w, mean, sd / std::sqrt(n), static_cast<int>(p.size()), scorer};
}

}  // namespace

SweepReport intensity_sweep(const ScoreField& field, const NoiseSchedule& schedule,
                            const SyntheticEmotionCorpus& corpus,
                            std::span<const Emotion> labels, const SweepOptions& options) {
  if (options.intensities.empty()) throw InputError("sweep: empty intensity list");
  if (options.samples < 1) throw InputError("sweep: samples must be >= 1");
  for (Emotion e : labels)
    if (!corpus.contains(e)) throw InputError("sweep: label " + std::string(to_string(e)) + " not in corpus");
  const Vector speaker = options.speaker.size() ? options.speaker : Vector(Vector::Zero(kSpeakerDim));
  const std::size_t n_w = options.intensities.size();
  const std::size_t cells = labels.size() * n_w;
  std::vector<std::vector<SweepRow>> results(cells);

  parallel_for(cells, [&](std::size_t cell) {
    const std::size_t li = cell / n_w;
    const std::size_t wi = cell % n_w;
    const Emotion label = labels[li];
    const double w = options.intensities[wi];
    SamplerConfig cfg = options.sampler;
    cfg.intensity = GuidanceWeight(w);
    cfg.seed = derive_seed(options.sampler.seed, static_cast<std::uint64_t>(label) + 1, wi);
    const Matrix xs = sample_many(field, schedule, RowVector::Zero(corpus.dim()),
                                  Vector::Ones(corpus.dim()), speaker, label, cfg, options.samples);
    std::vector<double> bayes(static_cast<std::size_t>(xs.rows()));
    for (Eigen::Index r = 0; r < xs.rows(); ++r)
      bayes[static_cast<std::size_t>(r)] = corpus.bayes_probability(xs.row(r), label);
    results[cell].push_back(summarize(label, w, bayes, Scorer::Bayes));
    if (options.classifier) {
      std::vector<double> cls(bayes.size());
      for (Eigen::Index r = 0; r < xs.rows(); ++r)
        cls[static_cast<std::size_t>(r)] = options.classifier->probability(xs.row(r), label);
      results[cell].push_back(summarize(label, w, cls, Scorer::Classifier));
    }
  });

  SweepReport report;
  for (auto& cell : results) report.rows.insert(report.rows.end(), cell.begin(), cell.end());
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.label != b.label) return a.label < b.label;
    if (a.intensity != b.intensity) return a.intensity < b.intensity;
    return a.scorer < b.scorer;
  });
  return report;
}

std::string AccuracyReport::to_csv() const {
  std::ostringstream os;
  os << "intended";
  for (Emotion e : labels) os << ',' << to_string(e);
  os << '\n';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    os << to_string(labels[i]);
    for (std::size_t j = 0; j < labels.size(); ++j)
      os << ',' << confusion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    os << '\n';
  }
  os << "accuracy," << std::setprecision(10) << accuracy << '\n';
  return os.str();
}

AccuracyReport accuracy_report(const SoftmaxClassifier& classifier, const Matrix& samples,
                               std::span<const Emotion> intended) {
  if (static_cast<Eigen::Index>(intended.size()) != samples.rows())
    throw ShapeError("accuracy report: one intended label per sample required");
  if (intended.empty()) throw InputError("accuracy report: no samples");
  for (Emotion e : intended)
    if (!classifier.knows(e))
      throw InputError("accuracy report: intended label " + std::string(to_string(e)) +
                       " is not among the classifier labels");
  AccuracyReport report;
  report.labels = classifier.labels();
  const auto n = static_cast<Eigen::Index>(report.labels.size());
  report.confusion = Eigen::MatrixXi::Zero(n, n);
  auto index = [&](Emotion e) {
    return static_cast<Eigen::Index>(std::find(report.labels.begin(), report.labels.end(), e) -
                                     report.labels.begin());
  };
  int correct = 0;
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    const Emotion want = intended[static_cast<std::size_t>(r)];
    const Emotion got = classifier.predict(samples.row(r));
    ++report.confusion(index(want), index(got));
    if (want == got) ++correct;
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(samples.rows());
  return report;
}

}  // namespace emoflow
