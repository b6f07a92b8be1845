#pragma once

#include "emoflow/corpus.hpp"
#include "emoflow/noise_schedule.hpp"
#include "emoflow/sampler.hpp"
#include "emoflow/training.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace emoflow {

enum class CorpusKind { Mixture, Text };

/// Ring-shaped labeled mixture (see SyntheticEmotionCorpus::ring).
struct MixtureCorpusConfig {
  std::vector<Emotion> labels = {Emotion::Anger, Emotion::Happy};
  int dim = 2;
  double radius = 1.5;
  double var = 0.04;
  int count = 2000;
  bool neutral_baseline = false;
  int baseline_count = 1000;

  SyntheticEmotionCorpus build() const;
};

struct CorpusConfig {
  CorpusKind kind = CorpusKind::Mixture;
  int speakers = 4;
  MixtureCorpusConfig mixture;
  TextCorpusSpec text;
};

struct DspConfig {
  int griffin_lim_iterations = 32;
};

struct SweepConfig {
  std::vector<double> intensities = {0, 1, 2, 4, 8};
  int samples = 2000;
  bool classifier = false;
};

/// Everything a CLI run depends on. JSON form is nested by section; every
/// key is optional and unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  double beta0 = NoiseSchedule::kDefaultBeta0;
  double beta1 = NoiseSchedule::kDefaultBeta1;
  SamplerConfig sampler;
  TrainConfig training = toy_task_train_config();
  CorpusConfig corpus;
  DspConfig dsp;
  SweepConfig sweep;
  std::string output_dir = "out";

  void validate() const;
  NoiseSchedule schedule() const { return NoiseSchedule(beta0, beta1); }
};

nlohmann::json to_json(const RunConfig& config);
/// Starts from defaults and overrides the keys present.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace emoflow
