#include "emoflow/container.hpp"

#include "emoflow/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace emoflow {

static_assert(std::endian::native == std::endian::little,
              "tensor files are little-endian; big-endian hosts need byte swapping");

void write_container(const std::filesystem::path& path, const Container& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  const std::string header = c.header.dump();
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.put('\n');
  out.write(reinterpret_cast<const char*>(c.payload.data()),
            static_cast<std::streamsize>(c.payload.size()));
  if (!out) throw InputError("failed writing " + path.string());
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  const auto newline = std::find(bytes.begin(), bytes.end(), '\n');
  if (newline == bytes.end()) throw ParseError(path.string() + ": missing header line");
  Container c;
  try {
    c.header = nlohmann::json::parse(bytes.begin(), newline);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": malformed header: " + e.what());
  }
  c.payload.assign(newline + 1, bytes.end());
  return c;
}

void append_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint8_t b[8];
  std::memcpy(b, &v, 8);
  out.insert(out.end(), b, b + 8);
}

void append_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint8_t b[4];
  std::memcpy(b, &v, 4);
  out.insert(out.end(), b, b + 4);
}

double read_f64(const std::uint8_t* p) {
  double v;
  std::memcpy(&v, p, 8);
  return v;
}

float read_f32(const std::uint8_t* p) {
  float v;
  std::memcpy(&v, p, 4);
  return v;
}

void write_mel_file(const std::filesystem::path& path, const Matrix& values,
                    const FramingInfo& framing) {
  Container c;
  c.header = {{"format", "emoflow-mel"},
              {"version", 1},
              {"frames", values.rows()},
              {"channels", values.cols()},
              {"dtype", "float32le"},
              {"layout", "row-major-by-frame"},
              {"sample_rate", framing.sample_rate},
              {"window", framing.window},
              {"hop", framing.hop},
              {"window_type", "hann"},
              {"fmin", framing.fmin},
              {"fmax", framing.fmax},
              {"log_floor", kLogFloor}};
  c.payload.reserve(static_cast<std::size_t>(values.size()) * 4);
  for (Eigen::Index r = 0; r < values.rows(); ++r)
    for (Eigen::Index k = 0; k < values.cols(); ++k)
      append_f32(c.payload, static_cast<float>(values(r, k)));
  write_container(path, c);
}

MelSpectrogram read_mel_file(const std::filesystem::path& path) {
  const Container c = read_container(path);
  const auto& h = c.header;
  try {
    if (h.at("format") != "emoflow-mel") throw ParseError(path.string() + ": not a mel file");
    if (h.at("dtype") != "float32le") throw ParseError(path.string() + ": unsupported dtype");
    const auto frames = h.at("frames").get<Eigen::Index>();
    const auto channels = h.at("channels").get<Eigen::Index>();
    if (frames < 0 || channels < 1) throw ParseError(path.string() + ": invalid dimensions");
    if (c.payload.size() != static_cast<std::size_t>(frames * channels) * 4)
      throw ParseError(path.string() + ": payload holds " + std::to_string(c.payload.size()) +
                       " bytes, expected " + std::to_string(frames * channels * 4));
    MelSpectrogram mel;
    mel.framing.sample_rate = h.at("sample_rate").get<int>();
    mel.framing.window = h.at("window").get<int>();
    mel.framing.hop = h.at("hop").get<int>();
    mel.framing.fmin = h.at("fmin").get<double>();
    mel.framing.fmax = h.at("fmax").get<double>();
    mel.values.resize(frames, channels);
    const std::uint8_t* p = c.payload.data();
    for (Eigen::Index r = 0; r < frames; ++r)
      for (Eigen::Index k = 0; k < channels; ++k, p += 4) mel.values(r, k) = read_f32(p);
    return mel;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad mel header: " + e.what());
  }
}

}  // namespace emoflow
