#include "emoflow/run_config.hpp"

#include "emoflow/errors.hpp"

#include <fstream>
#include <set>

namespace emoflow {
namespace {

using nlohmann::json;

// Reads optional keys from one JSON object and rejects any it was not
// asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError("config: " + where() + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ParseError("config: bad value for " + where(key));
    }
  }

  void read_label_list(const char* key, std::vector<Emotion>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_array()) throw ParseError("config: " + where(key) + " must be an array");
    out.clear();
    for (const auto& v : j_.at(key)) {
      if (!v.is_string()) throw ParseError("config: " + where(key) + " must hold label names");
      out.push_back(parse_emotion(v.get<std::string>()));
    }
  }

  Section child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, where(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ParseError("config: unknown key " + where(key));
  }

 private:
  std::string where(const std::string& key = "") const {
    std::string p = path_;
    if (!key.empty()) p += (p.empty() ? "" : ".") + key;
    return p.empty() ? "<root>" : p;
  }

  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

json label_list(const std::vector<Emotion>& labels) {
  json out = json::array();
  for (Emotion e : labels) out.push_back(std::string(to_string(e)));
  return out;
}

std::string_view schedule_name(LrSchedule s) {
  return s == LrSchedule::Cosine ? "cosine" : "constant";
}

LrSchedule parse_lr_schedule(const std::string& s) {
  if (s == "constant") return LrSchedule::Constant;
  if (s == "cosine") return LrSchedule::Cosine;
  throw ParseError("config: training.lr_schedule must be constant or cosine, got '" + s + "'");
}

CorpusKind parse_corpus_kind(const std::string& s) {
  if (s == "mixture") return CorpusKind::Mixture;
  if (s == "text") return CorpusKind::Text;
  throw ParseError("config: corpus.kind must be mixture or text, got '" + s + "'");
}

}  // namespace

SyntheticEmotionCorpus MixtureCorpusConfig::build() const {
  std::optional<SyntheticEmotionCorpus::Baseline> baseline;
  if (neutral_baseline) baseline = SyntheticEmotionCorpus::Baseline{Emotion::Neutral, baseline_count};
  return SyntheticEmotionCorpus::ring(labels, dim, radius, var, count, baseline);
}

void RunConfig::validate() const {
  NoiseSchedule(beta0, beta1);
  sampler.validate();
  training.validate();
  if (corpus.speakers < 1) throw InputError("config: corpus.speakers must be >= 1");
  const auto& m = corpus.mixture;
  if (m.labels.empty()) throw InputError("config: corpus.mixture.labels is empty");
  if (m.dim < 2) throw InputError("config: corpus.mixture.dim must be >= 2");
  if (!(m.var > 0.0) || !(m.radius >= 0.0)) throw InputError("config: corpus.mixture radius/var invalid");
  if (m.count < 1 || m.baseline_count < 1) throw InputError("config: corpus.mixture counts must be >= 1");
  if (m.neutral_baseline)
    for (Emotion e : m.labels)
      if (e == Emotion::Neutral)
        throw InputError("config: Neutral cannot be both a mixture label and the baseline");
  if (dsp.griffin_lim_iterations < 1) throw InputError("config: dsp.griffin_lim_iterations must be >= 1");
  if (sweep.intensities.empty()) throw InputError("config: sweep.intensities is empty");
  for (double w : sweep.intensities) GuidanceWeight{w};
  if (sweep.samples < 1) throw InputError("config: sweep.samples must be >= 1");
  if (output_dir.empty()) throw InputError("config: output_dir is empty");
}

json to_json(const RunConfig& c) {
  const auto& t = c.training;
  const auto& tx = c.corpus.text;
  return {
      {"seed", c.seed},
      {"schedule", {{"beta0", c.beta0}, {"beta1", c.beta1}}},
      {"sampler",
       {{"solver", std::string(to_string(c.sampler.solver))},
        {"steps", c.sampler.steps},
        {"intensity", c.sampler.intensity.value()},
        {"temperature", c.sampler.temperature}}},
      {"training",
       {{"learning_rate", t.learning_rate},
        {"lr_schedule", std::string(schedule_name(t.lr_schedule))},
        {"final_lr_fraction", t.final_lr_fraction},
        {"batch_size", t.batch_size},
        {"iterations", t.iterations},
        {"null_dropout", t.null_dropout},
        {"unlabeled_fraction", t.unlabeled_fraction},
        {"loss_weights",
         {{"diffusion", t.weights.diffusion},
          {"prior", t.weights.prior},
          {"duration", t.weights.duration},
          {"speaker", t.weights.speaker}}}}},
      {"corpus",
       {{"kind", c.corpus.kind == CorpusKind::Text ? "text" : "mixture"},
        {"speakers", c.corpus.speakers},
        {"mixture",
         {{"labels", label_list(c.corpus.mixture.labels)},
          {"dim", c.corpus.mixture.dim},
          {"radius", c.corpus.mixture.radius},
          {"var", c.corpus.mixture.var},
          {"count", c.corpus.mixture.count},
          {"neutral_baseline", c.corpus.mixture.neutral_baseline},
          {"baseline_count", c.corpus.mixture.baseline_count}}},
        {"text",
         {{"vocabulary", tx.vocabulary},
          {"channels", tx.channels},
          {"utterances", tx.utterances},
          {"unlabeled_utterances", tx.unlabeled_utterances},
          {"min_tokens", tx.min_tokens},
          {"max_tokens", tx.max_tokens},
          {"max_duration", tx.max_duration},
          {"noise", tx.noise},
          {"emotion_shift", tx.emotion_shift},
          {"speaker_shift", tx.speaker_shift},
          {"emotions", label_list(tx.emotions)}}}}},
      {"dsp", {{"griffin_lim_iterations", c.dsp.griffin_lim_iterations}}},
      {"sweep",
       {{"intensities", c.sweep.intensities},
        {"samples", c.sweep.samples},
        {"classifier", c.sweep.classifier}}},
      {"output_dir", c.output_dir},
  };
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "");
  root.read("seed", c.seed);
  root.read("output_dir", c.output_dir);
  {
    Section s = root.child("schedule");
    s.read("beta0", c.beta0);
    s.read("beta1", c.beta1);
    s.finish();
  }
  {
    Section s = root.child("sampler");
    std::string solver(to_string(c.sampler.solver));
    double intensity = c.sampler.intensity.value();
    s.read("solver", solver);
    s.read("steps", c.sampler.steps);
    s.read("intensity", intensity);
    s.read("temperature", c.sampler.temperature);
    s.finish();
    c.sampler.solver = parse_solver(solver);
    c.sampler.intensity = GuidanceWeight(intensity);
  }
  {
    Section s = root.child("training");
    auto& t = c.training;
    std::string schedule(schedule_name(t.lr_schedule));
    s.read("learning_rate", t.learning_rate);
    s.read("lr_schedule", schedule);
    s.read("final_lr_fraction", t.final_lr_fraction);
    s.read("batch_size", t.batch_size);
    s.read("iterations", t.iterations);
    s.read("null_dropout", t.null_dropout);
    s.read("unlabeled_fraction", t.unlabeled_fraction);
    Section w = s.child("loss_weights");
    w.read("diffusion", t.weights.diffusion);
    w.read("prior", t.weights.prior);
    w.read("duration", t.weights.duration);
    w.read("speaker", t.weights.speaker);
    w.finish();
    s.finish();
    t.lr_schedule = parse_lr_schedule(schedule);
  }
  {
    Section s = root.child("corpus");
    std::string kind = c.corpus.kind == CorpusKind::Text ? "text" : "mixture";
    s.read("kind", kind);
    s.read("speakers", c.corpus.speakers);
    c.corpus.kind = parse_corpus_kind(kind);
    Section m = s.child("mixture");
    auto& mx = c.corpus.mixture;
    m.read_label_list("labels", mx.labels);
    m.read("dim", mx.dim);
    m.read("radius", mx.radius);
    m.read("var", mx.var);
    m.read("count", mx.count);
    m.read("neutral_baseline", mx.neutral_baseline);
    m.read("baseline_count", mx.baseline_count);
    m.finish();
    Section x = s.child("text");
    auto& tx = c.corpus.text;
    x.read("vocabulary", tx.vocabulary);
    x.read("channels", tx.channels);
    x.read("utterances", tx.utterances);
    x.read("unlabeled_utterances", tx.unlabeled_utterances);
    x.read("min_tokens", tx.min_tokens);
    x.read("max_tokens", tx.max_tokens);
    x.read("max_duration", tx.max_duration);
    x.read("noise", tx.noise);
    x.read("emotion_shift", tx.emotion_shift);
    x.read("speaker_shift", tx.speaker_shift);
    x.read_label_list("emotions", tx.emotions);
    x.finish();
    s.finish();
  }
  {
    Section s = root.child("dsp");
    s.read("griffin_lim_iterations", c.dsp.griffin_lim_iterations);
    s.finish();
  }
  {
    Section s = root.child("sweep");
    s.read("intensities", c.sweep.intensities);
    s.read("samples", c.sweep.samples);
    s.read("classifier", c.sweep.classifier);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace emoflow
