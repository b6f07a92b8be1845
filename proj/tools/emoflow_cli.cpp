#include "emoflow/analytic_score.hpp"
#include "emoflow/audio.hpp"
#include "emoflow/checkpoint.hpp"
#include "emoflow/checks.hpp"
#include "emoflow/container.hpp"
#include "emoflow/errors.hpp"
#include "emoflow/eval.hpp"
#include "emoflow/run_config.hpp"
#include "emoflow/sampler.hpp"
#include "emoflow/text_prior.hpp"
#include "emoflow/training.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using namespace emoflow;

namespace {

// Flags shared by every subcommand. Unset optionals leave the config alone.
struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> intensity;
  std::optional<std::string> solver;
  std::optional<int> steps;
  std::optional<double> temperature;
  std::optional<std::string> out;
  bool dump_config = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config_path, "Run configuration JSON")->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "Random seed (default 0)");
  app->add_option("--intensity", f.intensity, "Emotion intensity w >= 0 (default 1)");
  app->add_option("--solver", f.solver, "ode (probability flow) or sde (default ode)");
  app->add_option("--steps", f.steps, "Sampler steps (default 100)");
  app->add_option("--temperature", f.temperature, "Terminal draw temperature (default 1)");
  app->add_option("--out", f.out, "Output directory (default out)");
  app->add_flag("--dump-config", f.dump_config, "Print the effective configuration and exit");
}

RunConfig effective_config(const CommonFlags& f) {
  RunConfig c = f.config_path.empty() ? RunConfig{} : load_run_config(f.config_path);
  if (f.seed) c.seed = *f.seed;
  if (f.intensity) c.sampler.intensity = GuidanceWeight(*f.intensity);
  if (f.solver) c.sampler.solver = parse_solver(*f.solver);
  if (f.steps) c.sampler.steps = *f.steps;
  if (f.temperature) c.sampler.temperature = *f.temperature;
  if (f.out) c.output_dir = *f.out;
  c.validate();
  if (c.sampler.intensity.value() > 30.0)
    std::cerr << "warning: intensity " << c.sampler.intensity.value()
              << " is above 30, outside the usual range\n";
  c.sampler.seed = c.seed;
  c.training.seed = c.seed;
  return c;
}

fs::path output_dir(const RunConfig& c) {
  const fs::path dir(c.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

TrainingData build_data(const RunConfig& c) {
  if (c.corpus.kind == CorpusKind::Mixture)
    return make_mixture_data(c.corpus.mixture.build(), c.corpus.speakers, c.seed);
  TextCorpusSpec spec = c.corpus.text;
  spec.speakers = c.corpus.speakers;
  spec.seed = c.seed;
  return make_text_data(spec);
}

std::vector<int> parse_tokens(const std::string& text) {
  std::vector<int> tokens;
  std::string cleaned = text;
  for (char& ch : cleaned)
    if (ch == ',') ch = ' ';
  std::istringstream in(cleaned);
  std::string word;
  while (in >> word) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(word, &used);
      if (used != word.size()) throw std::invalid_argument(word);
      tokens.push_back(v);
    } catch (const std::exception&) {
      throw ParseError("--text: token ids must be integers, got '" + word + "'");
    }
  }
  if (tokens.empty()) throw InputError("--text: no tokens");
  return tokens;
}

int run_oracle_check(bool full) {
  int failed = 0;
  int ran = 0;
  for (const auto& check : acceptance_checks()) {
    if (check.needs_training && !full) {
      std::printf("SKIP [%s] %s (needs training; use --full)\n", check.id.c_str(), check.name.c_str());
      continue;
    }
    const CheckResult r = check.run();
    std::printf("%s\n", format_result(r).c_str());
    std::fflush(stdout);
    ++ran;
    if (!r.passed) ++failed;
  }
  std::printf("%d/%d checks passed\n", ran - failed, ran);
  if (failed) throw NumericalError(std::to_string(failed) + " oracle checks failed");
  return 0;
}

int run_train(const RunConfig& c) {
  const fs::path dir = output_dir(c);
  const TrainingData data = build_data(c);
  Models models = make_models(data, c.seed);
  const TrainResult result = train_loop(models, data, c.schedule(), c.training);
  Checkpoint ckpt{c.schedule(), models.score_net, models.text_prior, data.speakers,
                  {{"config", to_json(c)}}};
  save_checkpoint(dir / "model.ckpt", ckpt);
  write_loss_csv(dir / "loss.csv", result.history);
  const LossRecord& last = result.history.back();
  std::printf("trained %d iterations: dsm %.6f, total %.6f, null fraction %.4f\n",
              c.training.iterations, last.diffusion, last.total, result.null_fraction());
  std::printf("wrote %s and %s\n", (dir / "model.ckpt").c_str(), (dir / "loss.csv").c_str());
  return 0;
}

// One row per (time, frame): t, frame, then the channel values.
void write_trajectory(const fs::path& path, const Trajectory& traj) {
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) throw InputError("cannot write " + path.string());
  std::fputs("t,frame", out);
  for (Eigen::Index c = 0; c < traj.states.front().cols(); ++c) std::fprintf(out, ",c%ld", static_cast<long>(c));
  std::fputc('\n', out);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const Matrix& s = traj.states[i];
    for (Eigen::Index f = 0; f < s.rows(); ++f) {
      std::fprintf(out, "%.17g,%ld", traj.times[i], static_cast<long>(f));
      for (Eigen::Index c = 0; c < s.cols(); ++c) std::fprintf(out, ",%.17g", s(f, c));
      std::fputc('\n', out);
    }
  }
  std::fclose(out);
}

struct SampleFlags {
  std::string checkpoint;
  bool analytic = false;
  std::string text;
  std::string emotion = "null";
  int speaker = 0;
  int frames = 1;
  bool wav = false;
  bool dump_traj = false;
};

int run_sample(const RunConfig& c, const SampleFlags& f) {
  const fs::path dir = output_dir(c);
  const NoiseSchedule schedule = c.schedule();
  const EmotionLabel emotion = parse_label(f.emotion);
  std::unique_ptr<ScoreField> field;
  std::optional<Checkpoint> ckpt;
  Vector speaker = Vector::Zero(kSpeakerDim);
  Eigen::Index channels;

  if (f.analytic) {
    if (c.corpus.kind != CorpusKind::Mixture) throw InputError("--analytic needs a mixture corpus");
    const auto corpus = c.corpus.mixture.build();
    auto analytic = std::make_unique<AnalyticScoreField>(
        corpus.analytic_field(schedule, Vector::Ones(corpus.dim())));
    if (emotion && !analytic->has_label(*emotion))
      throw DomainError("emotion " + std::string(to_string(*emotion)) + " is not in the corpus");
    channels = corpus.dim();
    field = std::move(analytic);
  } else {
    const fs::path path = f.checkpoint.empty() ? dir / "model.ckpt" : fs::path(f.checkpoint);
    ckpt.emplace(load_checkpoint(path));
    if (f.speaker < 0 || f.speaker >= ckpt->speakers.rows())
      throw DomainError("--speaker must be in [0, " + std::to_string(ckpt->speakers.rows()) + ")");
    speaker = ckpt->speakers.row(f.speaker).transpose();
    channels = ckpt->score_net.state_dim();
    field = std::make_unique<ToyScoreNet>(ckpt->score_net);
  }

  Matrix mu;
  if (!f.text.empty()) {
    if (!ckpt || !ckpt->text_prior) throw InputError("--text needs a checkpoint with a text prior");
    const TokenSequence seq{parse_tokens(f.text)};
    const EncodedText enc = ckpt->text_prior->encode(seq);
    mu = expand(enc.token_mu, round_durations(enc.log_duration));
  } else {
    if (f.frames < 1) throw InputError("--frames must be >= 1");
    mu = Matrix::Zero(f.frames, channels);
  }
  const PriorField prior(mu, Vector::Ones(channels));
  const SampleResult result = sample(*field, schedule, prior, speaker, emotion, c.sampler, f.dump_traj);

  write_mel_file(dir / "sample.mel", result.final);
  std::printf("wrote %s (%ld frames x %ld channels)\n", (dir / "sample.mel").c_str(),
              static_cast<long>(result.final.rows()), static_cast<long>(result.final.cols()));
  if (f.dump_traj) {
    write_trajectory(dir / "trajectory.csv", *result.trajectory);
    std::printf("wrote %s\n", (dir / "trajectory.csv").c_str());
  }
  if (f.wav) {
    if (channels != kMelChannels) throw ShapeError("--wav needs a 128-channel mel model");
    GriffinLimOptions opts;
    opts.iterations = c.dsp.griffin_lim_iterations;
    opts.seed = static_cast<unsigned>(c.seed);
    write_wav(dir / "sample.wav", griffin_lim(MelSpectrogram{result.final, {}}, opts));
    std::printf("wrote %s\n", (dir / "sample.wav").c_str());
  }
  return 0;
}

struct SweepFlags {
  std::string checkpoint;
  std::vector<double> intensities;
  std::optional<int> samples;
  bool classifier = false;
};

int run_sweep(const RunConfig& c, const SweepFlags& f) {
  if (c.corpus.kind != CorpusKind::Mixture) throw InputError("sweep needs a mixture corpus");
  const fs::path dir = output_dir(c);
  const NoiseSchedule schedule = c.schedule();
  const auto corpus = c.corpus.mixture.build();
  SweepOptions opt;
  opt.intensities = f.intensities.empty() ? c.sweep.intensities : f.intensities;
  for (double w : opt.intensities) GuidanceWeight{w};
  opt.samples = f.samples.value_or(c.sweep.samples);
  if (opt.samples < 1) throw InputError("--samples must be >= 1");
  opt.sampler = c.sampler;
  opt.speaker = Vector::Zero(kSpeakerDim);

  std::unique_ptr<ScoreField> field;
  if (f.checkpoint.empty()) {
    field = std::make_unique<AnalyticScoreField>(corpus.analytic_field(schedule, Vector::Ones(corpus.dim())));
  } else {
    Checkpoint ckpt = load_checkpoint(f.checkpoint);
    if (ckpt.score_net.state_dim() != corpus.dim())
      throw ShapeError("checkpoint state dimension does not match the corpus");
    opt.speaker = ckpt.speakers.row(0).transpose();
    field = std::make_unique<ToyScoreNet>(std::move(ckpt.score_net));
  }

  std::optional<TrainedClassifier> clf;
  if (f.classifier || c.sweep.classifier) {
    ClassifierConfig cc;
    cc.seed = c.seed;
    clf.emplace(train_toy_classifier(corpus, cc));
    opt.classifier = &clf->model;
    std::printf("toy classifier held-out accuracy %.4f\n", clf->heldout_accuracy);
  }
  const std::vector<Emotion> labels = corpus.labels();
  const SweepReport report = intensity_sweep(*field, schedule, corpus, labels, opt);
  report.write_csv(dir / "sweep.csv");
  std::fputs(report.to_csv().c_str(), stdout);
  std::printf("wrote %s\n", (dir / "sweep.csv").c_str());
  return 0;
}

int run_mel(const std::string& in, const std::string& out) {
  const MelSpectrogram mel = mel_spectrogram(read_wav(in));
  write_mel_file(out, mel.values, mel.framing);
  std::printf("wrote %s (%ld frames)\n", out.c_str(), static_cast<long>(mel.frames()));
  return 0;
}

int run_mcd(const std::string& a, const std::string& b) {
  const MelSpectrogram ma = read_mel_file(a);
  const MelSpectrogram mb = read_mel_file(b);
  std::printf("%.4f\n", mcd_trimmed(mel_cepstra(ma), mel_cepstra(mb)));
  return 0;
}

int run_resynth(const RunConfig& c, const std::string& in, const std::string& out,
                std::optional<int> iterations) {
  GriffinLimOptions opts;
  opts.iterations = iterations.value_or(c.dsp.griffin_lim_iterations);
  if (opts.iterations < 1) throw InputError("--iterations must be >= 1");
  opts.seed = static_cast<unsigned>(c.seed);
  write_wav(out, griffin_lim(read_mel_file(in), opts));
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emoflow: emotion-conditioned score-based mel synthesis at toy scale"};
  app.require_subcommand(1);
  CommonFlags common;

  auto* oracle = app.add_subcommand("oracle-check", "Run the acceptance checks against analytic oracles");
  bool full = false;
  oracle->add_flag("--full", full, "Also run the checks that train a model");

  auto* train = app.add_subcommand("train", "Train the toy score net (and text prior) on the configured corpus");

  auto* samp = app.add_subcommand("sample", "Sample a mel tensor from a checkpoint or the analytic field");
  SampleFlags sf;
  samp->add_option("--checkpoint", sf.checkpoint, "Checkpoint (default <out>/model.ckpt)");
  samp->add_flag("--analytic", sf.analytic, "Use the exact score of the configured mixture corpus");
  samp->add_option("--text", sf.text, "Token ids, e.g. \"3 1 4\" (needs a text prior)");
  samp->add_option("--emotion", sf.emotion, "Emotion label or null")->capture_default_str();
  samp->add_option("--speaker", sf.speaker, "Speaker index in the checkpoint")->capture_default_str();
  samp->add_option("--frames", sf.frames, "Frames of the synthetic N(0, I) prior")->capture_default_str();
  samp->add_flag("--wav", sf.wav, "Also write <out>/sample.wav via Griffin-Lim");
  samp->add_flag("--dump-traj", sf.dump_traj, "Write every intermediate state to <out>/trajectory.csv");

  auto* sweep = app.add_subcommand("sweep", "Intensity sweep scored by the Bayes oracle");
  SweepFlags wf;
  sweep->add_option("--checkpoint", wf.checkpoint, "Trained model (default: analytic field)");
  sweep->add_option("--intensities", wf.intensities, "Intensity grid (default 0 1 2 4 8)");
  sweep->add_option("--samples", wf.samples, "Samples per (label, intensity) cell (default 2000)");
  sweep->add_flag("--classifier", wf.classifier, "Also score with a trained toy classifier");

  std::string mel_in, mel_out;
  auto* mel = app.add_subcommand("mel", "WAV to mel tensor file");
  mel->add_option("wav", mel_in, "Input 16 kHz mono WAV")->required();
  mel->add_option("mel", mel_out, "Output mel file")->required();

  std::string mcd_a, mcd_b;
  auto* mcd_cmd = app.add_subcommand("mcd", "Mel cepstral distortion between two mel files, in dB");
  mcd_cmd->add_option("a", mcd_a, "Mel file")->required();
  mcd_cmd->add_option("b", mcd_b, "Mel file")->required();

  std::string rs_in, rs_out;
  std::optional<int> rs_iter;
  auto* resynth = app.add_subcommand("resynth", "Mel tensor file to WAV via Griffin-Lim");
  resynth->add_option("mel", rs_in, "Input mel file")->required();
  resynth->add_option("wav", rs_out, "Output WAV")->required();
  resynth->add_option("--iterations", rs_iter, "Griffin-Lim iterations (default 32)");

  for (auto* sub : {oracle, train, samp, sweep, mel, mcd_cmd, resynth}) add_common(sub, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[input]: " << e.what() << '\n';
    return 1;
  }

  try {
    const RunConfig config = effective_config(common);
    if (common.dump_config) {
      std::cout << to_json(config).dump(2) << '\n';
      return 0;
    }
    if (oracle->parsed()) return run_oracle_check(full);
    if (train->parsed()) return run_train(config);
    if (samp->parsed()) return run_sample(config, sf);
    if (sweep->parsed()) return run_sweep(config, wf);
    if (mel->parsed()) return run_mel(mel_in, mel_out);
    if (mcd_cmd->parsed()) return run_mcd(mcd_a, mcd_b);
    if (resynth->parsed()) return run_resynth(config, rs_in, rs_out, rs_iter);
  } catch (const NumericalError& e) {
    std::cerr << "error[numerical]: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error[input]: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error[input]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
