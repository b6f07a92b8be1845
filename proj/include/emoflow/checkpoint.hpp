#pragma once

#include "emoflow/noise_schedule.hpp"
#include "emoflow/text_prior.hpp"
#include "emoflow/toy_score_net.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>

namespace emoflow {

/// Header: topology, dims, emotion inventory, null-embedding mode, the
/// list of tensors. Payload: every tensor as little-endian float64,
/// row-major, in header order (score net groups, text prior groups,
/// speaker table).
struct Checkpoint {
  NoiseSchedule schedule;
  ToyScoreNet score_net;
  std::optional<TextPriorNet> text_prior;
  Matrix speakers;
  nlohmann::json metadata = nlohmann::json::object();
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace emoflow
