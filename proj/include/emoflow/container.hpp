#pragma once

#include "emoflow/audio.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace emoflow {

/// File layout shared by checkpoints and mel files: one line of compact
/// JSON terminated by '\n', followed by a raw little-endian payload.
struct Container {
  nlohmann::json header;
  std::vector<std::uint8_t> payload;
};

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);

void append_f64(std::vector<std::uint8_t>& out, double v);
void append_f32(std::vector<std::uint8_t>& out, float v);
double read_f64(const std::uint8_t* p);
float read_f32(const std::uint8_t* p);

/// Mel tensor file: header {format, frames, channels, framing...} and
/// float32 values, row-major by frame. Any channel count is accepted here;
/// MelSpectrogram consumers check for kMelChannels themselves.
void write_mel_file(const std::filesystem::path& path, const Matrix& values,
                    const FramingInfo& framing = {});
MelSpectrogram read_mel_file(const std::filesystem::path& path);

}  // namespace emoflow
