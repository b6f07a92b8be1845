#pragma once

#include "emoflow/tensor.hpp"

#include <filesystem>
#include <vector>

namespace emoflow {

inline constexpr int kSampleRate = 16000;
inline constexpr int kWindowSize = 1024;
inline constexpr int kHopSize = 256;
inline constexpr int kFftBins = kWindowSize / 2 + 1;
inline constexpr int kMelChannels = 128;
inline constexpr double kMelFmin = 0.0;
inline constexpr double kMelFmax = 8000.0;
inline constexpr double kLogFloor = 1e-5;
inline constexpr int kCepstralOrder = 13;

struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kSampleRate;
};

struct FramingInfo {
  int sample_rate = kSampleRate;
  int window = kWindowSize;
  int hop = kHopSize;
  double fmin = kMelFmin;
  double fmax = kMelFmax;
};

/// frames x kMelChannels natural-log mel magnitudes, floored at log(1e-5).
struct MelSpectrogram {
  Matrix values;
  FramingInfo framing;

  Eigen::Index frames() const { return values.rows(); }
};

/// frames x 13: c1..c13 of the orthonormal DCT-II of each log-mel frame.
using CepstraMatrix = Matrix;

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Centre frequency (Hz) of each of the kMelChannels filters.
std::vector<double> mel_center_frequencies();

/// kMelChannels x kFftBins triangular filters with unit peak.
Matrix mel_filterbank();

/// Periodic Hann window of length kWindowSize.
std::vector<double> hann_window();

/// Centered STFT magnitude (reflect padding), frames x kFftBins.
Matrix stft_magnitude(const std::vector<double>& samples);

MelSpectrogram mel_spectrogram(const AudioBuffer& audio);

/// Orthonormal DCT-II / DCT-III of one vector.
Vector dct_ortho(const Vector& x);
Vector idct_ortho(const Vector& c);

CepstraMatrix mel_cepstra(const MelSpectrogram& mel);

/// Mean over frames of (10 / ln 10) sqrt(2 sum_k (a_k - b_k)^2), in dB.
double mcd(const CepstraMatrix& a, const CepstraMatrix& b);

/// Trims both to the shorter frame count, logging to stderr when it trims.
double mcd_trimmed(const CepstraMatrix& a, const CepstraMatrix& b);

/// Mel -> linear magnitude estimate (transpose-normalised filterbank
/// followed by projected-gradient non-negative least squares).
Matrix mel_to_linear(const MelSpectrogram& mel);

struct GriffinLimOptions {
  int iterations = 32;
  unsigned seed = 0;  // initial phase
};

/// Phase reconstruction from the mel magnitude. When `convergence` is
/// non-null, receives the spectral convergence after each iteration.
AudioBuffer griffin_lim(const MelSpectrogram& mel, const GriffinLimOptions& options = {},
                        std::vector<double>* convergence = nullptr);

/// 16-bit PCM mono RIFF/WAVE.
AudioBuffer read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

/// Requires 16 kHz (the pipeline does no resampling).
void require_pipeline_rate(const AudioBuffer& audio);

}  // namespace emoflow
