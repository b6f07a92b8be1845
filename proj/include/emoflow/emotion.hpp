#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace emoflow {

enum class Emotion { Anger = 0, Disgust, Fear, Happy, Neutral, Sad, Surprise };

inline constexpr int kEmotionCount = 7;
/// Row of the emotion table reserved for the null token.
inline constexpr int kNullEmotionRow = 7;

inline constexpr std::array<Emotion, kEmotionCount> kAllEmotions = {
    Emotion::Anger, Emotion::Disgust, Emotion::Fear,    Emotion::Happy,
    Emotion::Neutral, Emotion::Sad,   Emotion::Surprise};

/// std::nullopt is the null token.
using EmotionLabel = std::optional<Emotion>;

std::string_view to_string(Emotion e);
std::string label_to_string(EmotionLabel label);

/// Accepts the emotion names case-insensitively plus "null". Throws
/// InputError listing the valid labels otherwise.
EmotionLabel parse_label(std::string_view text);
Emotion parse_emotion(std::string_view text);

/// Row index in the emotion embedding table.
inline int table_row(EmotionLabel label) {
  return label ? static_cast<int>(*label) : kNullEmotionRow;
}

}  // namespace emoflow
