#include "emoflow/checkpoint.hpp"
#include "emoflow/container.hpp"
#include "emoflow/errors.hpp"
#include "emoflow/random.hpp"
#include "emoflow/run_config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace emoflow;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("emoflow_io_" + name);
}

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void dump(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("little-endian scalar encoding") {
  std::vector<std::uint8_t> buf;
  append_f64(buf, 1.0);
  append_f32(buf, -2.5f);
  REQUIRE(buf.size() == 12);
  CHECK(buf[7] == 0x3f);
  CHECK(buf[6] == 0xf0);
  CHECK(read_f64(buf.data()) == 1.0);
  CHECK(read_f32(buf.data() + 8) == -2.5f);
}

TEST_CASE("container round trip and errors") {
  const auto path = temp_path("c.bin");
  Container c{{{"kind", "test"}, {"n", 3}}, {1, 2, 3, 10, 0}};
  write_container(path, c);
  const Container back = read_container(path);
  CHECK(back.header == c.header);
  CHECK(back.payload == c.payload);
  dump(path, {'{', '"', 'a'});
  CHECK_THROWS_AS(read_container(path), ParseError);
  dump(path, {'n', 'o', 't', '\n', 1});
  CHECK_THROWS_AS(read_container(path), ParseError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_container(path), InputError);
}

TEST_CASE("mel file round trip is exact at float32 and byte-stable") {
  const auto path = temp_path("m.mel");
  const auto path2 = temp_path("m2.mel");
  RandomStream rng(1);
  const Matrix values = rng.normal_matrix(9, kMelChannels);
  write_mel_file(path, values);
  const MelSpectrogram m = read_mel_file(path);
  REQUIRE(m.frames() == 9);
  REQUIRE(m.values.cols() == kMelChannels);
  CHECK((m.values - values.cast<float>().cast<double>()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(m.framing.hop == kHopSize);
  CHECK(m.framing.fmax == kMelFmax);
  write_mel_file(path2, m.values, m.framing);
  CHECK(slurp(path) == slurp(path2));

  // Truncated payload.
  std::vector<char> bytes = slurp(path);
  bytes.resize(bytes.size() - 4);
  dump(path, bytes);
  CHECK_THROWS_AS(read_mel_file(path), ParseError);
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
}

TEST_CASE("checkpoint round trip") {
  const auto path = temp_path("model.ckpt");
  RandomStream rng(4);
  Checkpoint ck{NoiseSchedule(0.1, 15.0), ToyScoreNet(3, rng, 16), TextPriorNet(10, 3, rng, 8),
                make_speaker_table(3, 2), {{"note", "unit"}}};
  save_checkpoint(path, ck);
  const Checkpoint back = load_checkpoint(path);
  CHECK(back.schedule.beta0() == 0.1);
  CHECK(back.schedule.beta1() == 15.0);
  CHECK(back.score_net.state_dim() == 3);
  CHECK(back.score_net.hidden() == 16);
  for (std::size_t i = 0; i < ck.score_net.parameters().group_count(); ++i)
    CHECK((back.score_net.parameters()[i].value.array() == ck.score_net.parameters()[i].value.array()).all());
  REQUIRE(back.text_prior);
  for (std::size_t i = 0; i < ck.text_prior->parameters().group_count(); ++i)
    CHECK((back.text_prior->parameters()[i].value.array() == ck.text_prior->parameters()[i].value.array()).all());
  CHECK((back.speakers.array() == ck.speakers.array()).all());
  CHECK(back.metadata.at("note") == "unit");

  const Matrix x = rng.normal_matrix(2, 3);
  const ConditioningContext ctx{back.speakers.row(1).transpose(), Emotion::Disgust};
  CHECK((back.score_net.score(x, x, 0.5, ctx).array() == ck.score_net.score(x, x, 0.5, ctx).array()).all());

  std::vector<char> bytes = slurp(path);
  bytes.resize(bytes.size() - 8);
  dump(path, bytes);
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);
  write_mel_file(path, Matrix::Zero(1, 4));
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("run config JSON round trip") {
  RunConfig c;
  c.seed = 12;
  c.sampler.steps = 40;
  c.sampler.solver = Solver::ReverseSde;
  c.sampler.intensity = GuidanceWeight(2.5);
  c.training.lr_schedule = LrSchedule::Constant;
  c.corpus.mixture.labels = {Emotion::Fear, Emotion::Sad, Emotion::Surprise};
  c.corpus.mixture.neutral_baseline = true;
  c.sweep.intensities = {1, 2, 30};
  const nlohmann::json j = to_json(c);
  const RunConfig back = run_config_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.sampler.solver == Solver::ReverseSde);
  CHECK(back.sampler.intensity.value() == 2.5);
  CHECK(back.corpus.mixture.labels.size() == 3);

  // Partial documents override only what they name.
  const RunConfig partial = run_config_from_json(nlohmann::json::parse(R"({"sampler": {"steps": 7}})"));
  CHECK(partial.sampler.steps == 7);
  CHECK(to_json(partial)["training"] == to_json(RunConfig{})["training"]);
}

TEST_CASE("run config rejects unknown keys and bad values") {
  auto parse = [](const char* text) { return run_config_from_json(nlohmann::json::parse(text)); };
  try {
    parse(R"({"sampler": {"stepz": 3}})");
    FAIL("expected an error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("sampler.stepz") != std::string::npos);
  }
  CHECK_THROWS_AS(parse(R"({"bogus": 1})"), ParseError);
  CHECK_THROWS_AS(parse(R"({"training": {"loss_weights": {"speeker": 1}}})"), ParseError);
  CHECK_THROWS_AS(parse(R"({"sampler": {"steps": "many"}})"), ParseError);
  CHECK_THROWS_AS(parse(R"({"sampler": {"intensity": -1}})"), DomainError);
  CHECK_THROWS_AS(parse(R"({"sampler": {"solver": "heun"}})"), InputError);
  CHECK_THROWS_AS(parse(R"({"corpus": {"mixture": {"labels": ["Joy"]}}})"), InputError);
  CHECK_THROWS_AS(parse(R"({"training": {"null_dropout": 2}})"), InputError);
  CHECK_THROWS_AS(parse(R"([1, 2])"), ParseError);
  CHECK_THROWS_AS(load_run_config(temp_path("missing.json")), InputError);
}
