#include "emoflow/checkpoint.hpp"

#include "emoflow/container.hpp"
#include "emoflow/errors.hpp"

#include <string>

namespace emoflow {
namespace {

using nlohmann::json;

void put_tensor(json& list, std::vector<std::uint8_t>& payload, const std::string& name,
                const Matrix& m) {
  list.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) append_f64(payload, m(r, c));
}

class TensorReader {
 public:
  TensorReader(const json& list, const std::vector<std::uint8_t>& payload, std::string file)
      : list_(list), payload_(payload), file_(std::move(file)) {}

  void read_into(const std::string& name, Matrix& target) {
    if (index_ >= list_.size()) throw ParseError(file_ + ": missing tensor " + name);
    const json& entry = list_[index_++];
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    if (entry.at("name") != name || rows != target.rows() || cols != target.cols())
      throw ParseError(file_ + ": tensor " + entry.at("name").get<std::string>() +
                       " does not match expected " + name);
    const std::size_t bytes = static_cast<std::size_t>(rows * cols) * 8;
    if (offset_ + bytes > payload_.size()) throw ParseError(file_ + ": truncated payload");
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c, offset_ += 8)
        target(r, c) = read_f64(payload_.data() + offset_);
  }

  void finish() const {
    if (index_ != list_.size() || offset_ != payload_.size())
      throw ParseError(file_ + ": trailing data in checkpoint");
  }

 private:
  const json& list_;
  const std::vector<std::uint8_t>& payload_;
  std::string file_;
  std::size_t index_ = 0;
  std::size_t offset_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  Container c;
  json emotions = json::array();
  for (Emotion e : kAllEmotions) emotions.push_back(std::string(to_string(e)));
  emotions.push_back("null");
  c.header = {{"format", "emoflow-checkpoint"},
              {"version", 1},
              {"dtype", "float64le"},
              {"schedule", {{"beta0", ck.schedule.beta0()}, {"beta1", ck.schedule.beta1()}}},
              {"score_net",
               {{"state_dim", ck.score_net.state_dim()},
                {"hidden", ck.score_net.hidden()},
                {"time_dim", kTimeEmbeddingDim},
                {"speaker_dim", kSpeakerDim},
                {"emotion_dim", kEmotionDim},
                {"activation", "tanh"}}},
              {"emotion_inventory", emotions},
              {"null_embedding", "learned"},
              {"speakers", ck.speakers.rows()},
              {"metadata", ck.metadata}};
  if (ck.text_prior) {
    c.header["text_prior"] = {{"vocabulary", ck.text_prior->vocabulary()},
                              {"channels", ck.text_prior->channels()},
                              {"embedding_dim", ck.text_prior->embedding_dim()}};
  }
  json tensors = json::array();
  for (const auto& g : ck.score_net.parameters().groups()) put_tensor(tensors, c.payload, g.name, g.value);
  if (ck.text_prior)
    for (const auto& g : ck.text_prior->parameters().groups())
      put_tensor(tensors, c.payload, g.name, g.value);
  put_tensor(tensors, c.payload, "speakers", ck.speakers);
  c.header["tensors"] = tensors;
  write_container(path, c);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const Container c = read_container(path);
  const json& h = c.header;
  const std::string file = path.string();
  try {
    if (h.at("format") != "emoflow-checkpoint") throw ParseError(file + ": not a checkpoint");
    if (h.at("dtype") != "float64le") throw ParseError(file + ": unsupported dtype");
    const json& net = h.at("score_net");
    if (net.at("speaker_dim") != kSpeakerDim || net.at("emotion_dim") != kEmotionDim ||
        net.at("time_dim") != kTimeEmbeddingDim)
      throw ParseError(file + ": incompatible conditioning dimensions");
    Checkpoint ck{NoiseSchedule(h.at("schedule").at("beta0"), h.at("schedule").at("beta1")),
                  ToyScoreNet(net.at("state_dim").get<int>(), net.at("hidden").get<int>()),
                  std::nullopt,
                  Matrix(h.at("speakers").get<Eigen::Index>(), kSpeakerDim),
                  h.value("metadata", json::object())};
    if (h.contains("text_prior")) {
      const json& tp = h.at("text_prior");
      ck.text_prior.emplace(tp.at("vocabulary").get<int>(), tp.at("channels").get<int>(),
                            tp.at("embedding_dim").get<int>());
    }
    TensorReader reader(h.at("tensors"), c.payload, file);
    for (auto& g : ck.score_net.parameters().groups()) reader.read_into(g.name, g.value);
    if (ck.text_prior)
      for (auto& g : ck.text_prior->parameters().groups()) reader.read_into(g.name, g.value);
    reader.read_into("speakers", ck.speakers);
    reader.finish();
    return ck;
  } catch (const json::exception& e) {
    throw ParseError(file + ": bad checkpoint header: " + e.what());
  }
}

}  // namespace emoflow
