#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "emoflow_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run cli(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt";
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + EMOFLOW_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(out), read_text(err)};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("cli: resynth rejects a mel file without 128 channels") {
  const fs::path dir = scratch() / "narrow";
  REQUIRE(cli("sample --analytic --emotion Anger --frames 4 --out " + q(dir)).code == 0);
  const Run r = cli("resynth " + q(dir / "sample.mel") + " " + q(dir / "out.wav"));
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error[input]:", 0) == 0);
}

TEST_CASE("cli: sample is deterministic given the seed") {
  const fs::path a = scratch() / "det_a";
  const fs::path b = scratch() / "det_b";
  const fs::path c = scratch() / "det_c";
  REQUIRE(cli("sample --analytic --emotion Happy --frames 8 --seed 7 --intensity 3 --out " + q(a)).code == 0);
  REQUIRE(cli("sample --analytic --emotion Happy --frames 8 --seed 7 --intensity 3 --out " + q(b)).code == 0);
  REQUIRE(cli("sample --analytic --emotion Happy --frames 8 --seed 8 --intensity 3 --out " + q(c)).code == 0);
  CHECK(read_text(a / "sample.mel") == read_text(b / "sample.mel"));
  CHECK(read_text(a / "sample.mel") != read_text(c / "sample.mel"));
}

TEST_CASE("cli: trajectory dump has one row per frame and time") {
  const fs::path dir = scratch() / "traj";
  REQUIRE(cli("sample --analytic --frames 3 --steps 10 --dump-traj --out " + q(dir)).code == 0);
  std::istringstream csv(read_text(dir / "trajectory.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "t,frame,c0,c1");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 11 * 3);
}

TEST_CASE("cli: exit codes and error prefixes") {
  const fs::path dir = scratch() / "errors";
  Run r = cli("sample --analytic --emotion Fear --out " + q(dir));
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error[input]:", 0) == 0);
  r = cli("sample --analytic --emotion Joy --out " + q(dir));
  CHECK(r.code == 1);
  r = cli("sample --analytic --intensity -1 --out " + q(dir));
  CHECK(r.code == 1);
  r = cli("sample --analytic --intensity 40 --out " + q(dir));
  CHECK(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  r = cli("mcd " + q(scratch() / "nope_a.mel") + " " + q(scratch() / "nope_b.mel"));
  CHECK(r.code == 1);
  r = cli("frobnicate");
  CHECK(r.code == 1);
  r = cli("sample --checkpoint " + q(scratch() / "missing.ckpt") + " --out " + q(dir));
  CHECK(r.code == 1);

  const fs::path cfg = scratch() / "bad.json";
  std::ofstream(cfg) << R"({"sampler": {"steps": 10, "colour": "blue"}})";
  r = cli("sample --analytic --config " + q(cfg) + " --out " + q(dir));
  CHECK(r.code == 1);
  CHECK(r.err.find("sampler.colour") != std::string::npos);
}

TEST_CASE("cli: --dump-config re-ingests to the same configuration") {
  const Run first = cli("sample --seed 99 --steps 33 --solver sde --intensity 2.5 --dump-config");
  REQUIRE(first.code == 0);
  const fs::path cfg = scratch() / "dumped.json";
  std::ofstream(cfg) << first.out;
  const Run second = cli("sample --config " + q(cfg) + " --dump-config");
  REQUIRE(second.code == 0);
  CHECK(nlohmann::json::parse(first.out) == nlohmann::json::parse(second.out));
  const auto j = nlohmann::json::parse(first.out);
  CHECK(j["seed"] == 99);
  CHECK(j["sampler"]["steps"] == 33);
  CHECK(j["sampler"]["solver"] == "sde");
}

TEST_CASE("cli: train, sample with text, resynthesize, extract and score") {
  const fs::path dir = scratch() / "text";
  const fs::path cfg = scratch() / "text.json";
  std::ofstream(cfg) << R"({"corpus": {"kind": "text", "text": {"utterances": 16}},
                            "training": {"iterations": 6, "batch_size": 2}})";
  Run r = cli("train --config " + q(cfg) + " --seed 3 --out " + q(dir));
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "model.ckpt"));
  const std::string loss = read_text(dir / "loss.csv");
  CHECK(std::count(loss.begin(), loss.end(), '\n') == 7);

  r = cli("sample --config " + q(cfg) + " --text \"1 2 3\" --emotion Sad --steps 10 --wav --out " + q(dir));
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "sample.wav"));
  r = cli("sample --config " + q(cfg) + " --text \"1 99\" --out " + q(dir));
  CHECK(r.code == 1);

  const fs::path mel = dir / "from_wav.mel";
  REQUIRE(cli("mel " + q(dir / "sample.wav") + " " + q(mel)).code == 0);
  r = cli("mcd " + q(mel) + " " + q(mel));
  REQUIRE(r.code == 0);
  CHECK(r.out == "0.0000\n");
  r = cli("mcd " + q(mel) + " " + q(dir / "sample.mel"));
  CHECK(r.code == 0);
  CHECK(std::stod(r.out) > 0.0);

  REQUIRE(cli("resynth " + q(mel) + " " + q(dir / "again.wav") + " --iterations 4").code == 0);
  CHECK(fs::file_size(dir / "again.wav") > 44);
}

TEST_CASE("cli: sweep writes one row per label and intensity") {
  const fs::path dir = scratch() / "sweep";
  const Run r = cli("sweep --intensities 0 2 --samples 50 --steps 20 --out " + q(dir));
  REQUIRE(r.code == 0);
  const std::string csv = read_text(dir / "sweep.csv");
  CHECK(csv.rfind("label,w,meanProb,stderr,n,scorer", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 2);
}

TEST_CASE("cli: oracle-check passes on this build") {
  const Run r = cli("oracle-check");
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("PASS") != std::string::npos);
}
