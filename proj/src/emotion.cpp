#include "emoflow/emotion.hpp"

#include "emoflow/errors.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace emoflow {

std::string_view to_string(Emotion e) {
  switch (e) {
    case Emotion::Anger: return "Anger";
    case Emotion::Disgust: return "Disgust";
    case Emotion::Fear: return "Fear";
    case Emotion::Happy: return "Happy";
    case Emotion::Neutral: return "Neutral";
    case Emotion::Sad: return "Sad";
    case Emotion::Surprise: return "Surprise";
  }
  return "?";
}

std::string label_to_string(EmotionLabel label) {
  return label ? std::string(to_string(*label)) : std::string("null");
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

EmotionLabel parse_label(std::string_view text) {
  const std::string key = lower(text);
  if (key == "null") return std::nullopt;
  for (Emotion e : kAllEmotions)
    if (lower(to_string(e)) == key) return e;
  throw InputError("unknown emotion label '" + std::string(text) +
                   "'; valid labels: Anger, Disgust, Fear, Happy, Neutral, Sad, Surprise, null");
}

Emotion parse_emotion(std::string_view text) {
  EmotionLabel label = parse_label(text);
  if (!label) throw InputError("expected an emotion, got the null token");
  return *label;
}

}  // namespace emoflow
