#include "emoflow/audio.hpp"

#include "emoflow/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <iterator>
#include <mutex>
#include <numbers>
#include <random>
#include <string>

namespace emoflow {
namespace {

// FFTW planning is not thread-safe; execution with the new-array API is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    in_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(n, in_, out_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, out_, in_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* time() { return in_; }
  std::complex<double>* spectrum() { return reinterpret_cast<std::complex<double>*>(out_); }
  void forward() { fftw_execute(forward_); }
  /// Unnormalised: result is n times the true inverse.
  void inverse() { fftw_execute(inverse_); }

 private:
  int n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

class Dct {
 public:
  Dct(int n, fftw_r2r_kind kind) : n_(n) {
    buf_ = fftw_alloc_real(static_cast<std::size_t>(n));
    out_ = fftw_alloc_real(static_cast<std::size_t>(n));
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_r2r_1d(n, buf_, out_, kind, FFTW_ESTIMATE);
  }
  ~Dct() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(buf_);
    fftw_free(out_);
  }
  Dct(const Dct&) = delete;
  Dct& operator=(const Dct&) = delete;

  double* in() { return buf_; }
  const double* out() const { return out_; }
  void run() { fftw_execute(plan_); }

 private:
  int n_;
  double* buf_;
  double* out_;
  fftw_plan plan_;
};

// Index into x for position i of the padded signal; mirrors without
// repeating the edge sample, folding again if the pad exceeds the length.
int mirror_index(int i, int pad, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  int j = ((i - pad) % period + period) % period;
  if (j >= n) j = period - j;
  return j;
}

std::vector<double> reflect_pad(const std::vector<double>& x, int pad) {
  const int n = static_cast<int>(x.size());
  std::vector<double> out(static_cast<std::size_t>(n + 2 * pad));
  for (int i = 0; i < n + 2 * pad; ++i)
    out[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(mirror_index(i, pad, n))];
  return out;
}

// Complex STFT of an already padded signal, frames at multiples of the hop.
Eigen::MatrixXcd stft_frames(const std::vector<double>& padded, RealFft& fft,
                             const std::vector<double>& window) {
  const int frames = 1 + (static_cast<int>(padded.size()) - kWindowSize) / kHopSize;
  Eigen::MatrixXcd out(frames, kFftBins);
  for (int f = 0; f < frames; ++f) {
    const double* src = padded.data() + static_cast<std::ptrdiff_t>(f) * kHopSize;
    for (int n = 0; n < kWindowSize; ++n) fft.time()[n] = src[n] * window[static_cast<std::size_t>(n)];
    fft.forward();
    for (int k = 0; k < kFftBins; ++k) out(f, k) = fft.spectrum()[k];
  }
  return out;
}

// Least-squares inverse of x -> STFT(reflect_pad(x)) for a signal of the
// given length. Reflect padding only copies samples, so the normal
// equations stay diagonal: fold the overlap-add sums back onto x.
std::vector<double> istft_reflect(const Eigen::MatrixXcd& spec, RealFft& fft,
                                  const std::vector<double>& window, int length) {
  const int frames = static_cast<int>(spec.rows());
  const int pad = kWindowSize / 2;
  const int padded = (frames - 1) * kHopSize + kWindowSize;
  std::vector<double> sum(static_cast<std::size_t>(length), 0.0);
  std::vector<double> norm(static_cast<std::size_t>(length), 0.0);
  for (int f = 0; f < frames; ++f) {
    for (int k = 0; k < kFftBins; ++k) fft.spectrum()[k] = spec(f, k);
    fft.inverse();
    for (int n = 0; n < kWindowSize; ++n) {
      const int i = f * kHopSize + n;
      if (i >= padded) break;
      const auto j = static_cast<std::size_t>(mirror_index(i, pad, length));
      const double w = window[static_cast<std::size_t>(n)];
      sum[j] += w * fft.time()[n] / kWindowSize;
      norm[j] += w * w;
    }
  }
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = norm[i] > 1e-12 ? sum[i] / norm[i] : 0.0;
  return sum;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

std::vector<double> mel_edges_hz() {
  const double lo = hz_to_mel(kMelFmin);
  const double hi = hz_to_mel(kMelFmax);
  std::vector<double> hz(kMelChannels + 2);
  for (int i = 0; i < kMelChannels + 2; ++i)
    hz[static_cast<std::size_t>(i)] = mel_to_hz(lo + (hi - lo) * i / (kMelChannels + 1));
  return hz;
}

}  // namespace

std::vector<double> mel_center_frequencies() {
  const auto edges = mel_edges_hz();
  return {edges.begin() + 1, edges.end() - 1};
}

Matrix mel_filterbank() {
  const auto edges = mel_edges_hz();
  Matrix fb = Matrix::Zero(kMelChannels, kFftBins);
  for (int m = 0; m < kMelChannels; ++m) {
    const double left = edges[static_cast<std::size_t>(m)];
    const double centre = edges[static_cast<std::size_t>(m) + 1];
    const double right = edges[static_cast<std::size_t>(m) + 2];
    for (int k = 0; k < kFftBins; ++k) {
      const double f = static_cast<double>(k) * kSampleRate / kWindowSize;
      const double up = (f - left) / (centre - left);
      const double down = (right - f) / (right - centre);
      fb(m, k) = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

std::vector<double> hann_window() {
  std::vector<double> w(kWindowSize);
  for (int n = 0; n < kWindowSize; ++n)
    w[static_cast<std::size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / kWindowSize);
  return w;
}

Matrix stft_magnitude(const std::vector<double>& samples) {
  if (static_cast<int>(samples.size()) < kWindowSize)
    throw InputError("stft: need at least " + std::to_string(kWindowSize) + " samples, got " +
                     std::to_string(samples.size()));
  RealFft fft(kWindowSize);
  return stft_frames(reflect_pad(samples, kWindowSize / 2), fft, hann_window()).cwiseAbs();
}

void require_pipeline_rate(const AudioBuffer& audio) {
  if (audio.sample_rate != kSampleRate)
    throw InputError("audio: sample rate " + std::to_string(audio.sample_rate) +
                     " Hz is not supported; resample to 16000 Hz first");
}

MelSpectrogram mel_spectrogram(const AudioBuffer& audio) {
  require_pipeline_rate(audio);
  const Matrix mag = stft_magnitude(audio.samples);
  static const Matrix fb = mel_filterbank();
  MelSpectrogram mel;
  mel.values = (mag * fb.transpose()).array().max(kLogFloor).log().matrix();
  return mel;
}

Vector dct_ortho(const Vector& x) {
  const int n = static_cast<int>(x.size());
  Dct dct(n, FFTW_REDFT10);
  std::copy(x.data(), x.data() + n, dct.in());
  dct.run();
  Vector c(n);
  c(0) = dct.out()[0] * std::sqrt(1.0 / (4.0 * n));
  for (int k = 1; k < n; ++k) c(k) = dct.out()[k] * std::sqrt(1.0 / (2.0 * n));
  return c;
}

Vector idct_ortho(const Vector& c) {
  const int n = static_cast<int>(c.size());
  Dct dct(n, FFTW_REDFT01);
  dct.in()[0] = c(0) * std::sqrt(1.0 / n);
  for (int k = 1; k < n; ++k) dct.in()[k] = c(k) / std::sqrt(2.0 * n);
  dct.run();
  return Eigen::Map<const Vector>(dct.out(), n);
}

CepstraMatrix mel_cepstra(const MelSpectrogram& mel) {
  if (mel.values.cols() != kMelChannels)
    throw ShapeError("mel cepstra: expected 128 channels, got " + std::to_string(mel.values.cols()));
  CepstraMatrix out(mel.frames(), kCepstralOrder);
  for (Eigen::Index f = 0; f < mel.frames(); ++f) {
    const Vector c = dct_ortho(mel.values.row(f).transpose());
    out.row(f) = c.segment(1, kCepstralOrder).transpose();
  }
  return out;
}

double mcd(const CepstraMatrix& a, const CepstraMatrix& b) {
  require_same_shape(a, b, "mcd");
  if (a.rows() == 0) throw InputError("mcd: no frames");
  const double k = 10.0 / std::log(10.0);
  double sum = 0.0;
  for (Eigen::Index f = 0; f < a.rows(); ++f)
    sum += k * std::sqrt(2.0 * (a.row(f) - b.row(f)).squaredNorm());
  return sum / static_cast<double>(a.rows());
}

double mcd_trimmed(const CepstraMatrix& a, const CepstraMatrix& b) {
  const Eigen::Index n = std::min(a.rows(), b.rows());
  if (a.rows() != b.rows())
    std::cerr << "mcd: trimming " << a.rows() << " and " << b.rows() << " frames to " << n << '\n';
  return mcd(a.topRows(n), b.topRows(n));
}

Matrix mel_to_linear(const MelSpectrogram& mel) {
  if (mel.values.cols() != kMelChannels) throw ShapeError("mel to linear: expected 128 channels");
  static const Matrix fb = mel_filterbank();
  const Matrix target = mel.values.array().exp().matrix();  // frames x mels
  const RowVector colsum = fb.colwise().sum();
  Matrix lin = target * fb;  // frames x bins
  for (Eigen::Index k = 0; k < lin.cols(); ++k)
    lin.col(k) = colsum(k) > 0 ? Vector(lin.col(k) / colsum(k)) : Vector::Zero(lin.rows());

  // Projected gradient on ||lin F^T - target||^2 subject to lin >= 0.
  // Step 1/L with L the squared spectral norm of F (power iteration).
  const Matrix gram = fb * fb.transpose();
  Vector v = Vector::Ones(gram.rows());
  double lipschitz = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Vector g = gram * v;
    lipschitz = g.norm() / v.norm();
    v = g.normalized();
  }
  const double step = 1.0 / (lipschitz * 1.01);
  for (int i = 0; i < 30; ++i) {
    const Matrix resid = lin * fb.transpose() - target;
    lin = (lin - step * resid * fb).cwiseMax(0.0);
  }
  return lin;
}

AudioBuffer griffin_lim(const MelSpectrogram& mel, const GriffinLimOptions& options,
                        std::vector<double>* convergence) {
  if (options.iterations < 1) throw InputError("griffin-lim: iterations must be >= 1");
  if (mel.frames() < 1) throw InputError("griffin-lim: empty mel");
  const Matrix target = mel_to_linear(mel);
  const double target_norm = std::max(target.norm(), 1e-300);
  const auto window = hann_window();
  RealFft fft(kWindowSize);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
  Eigen::MatrixXcd spec(target.rows(), target.cols());
  for (Eigen::Index f = 0; f < spec.rows(); ++f)
    for (Eigen::Index k = 0; k < spec.cols(); ++k)
      spec(f, k) = std::polar(target(f, k), phase(rng));

  // Output length (frames - 1) * hop re-analyses to the same frame count.
  const int length = std::max(static_cast<int>(spec.rows() - 1) * kHopSize, 2);
  const int pad = kWindowSize / 2;
  if (convergence) convergence->clear();
  AudioBuffer out;
  for (int it = 0; it < options.iterations; ++it) {
    out.samples = istft_reflect(spec, fft, window, length);
    const Eigen::MatrixXcd rebuilt = stft_frames(reflect_pad(out.samples, pad), fft, window);
    const Matrix mag = rebuilt.cwiseAbs();
    if (convergence) convergence->push_back((mag - target).norm() / target_norm);
    for (Eigen::Index f = 0; f < spec.rows(); ++f)
      for (Eigen::Index k = 0; k < spec.cols(); ++k)
        spec(f, k) = mag(f, k) > 0 ? rebuilt(f, k) * (target(f, k) / mag(f, k))
                                   : std::complex<double>(target(f, k), 0.0);
  }
  out.samples = istft_reflect(spec, fft, window, length);

  double peak = 0.0;
  for (double s : out.samples) peak = std::max(peak, std::abs(s));
  if (peak > 0.0)
    for (double& s : out.samples) s *= 0.95 / peak;
  return out;
}

namespace {

std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}
std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}
void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("wav: cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  const std::string where = "wav " + path.string() + ": ";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw ParseError(where + "not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size())
      throw ParseError(where + "truncated chunk '" + std::string(chunk, chunk + 4) + "'");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw ParseError(where + "fmt chunk too short");
      const std::uint16_t format = le16(bytes.data() + body);
      channels = le16(bytes.data() + body + 2);
      rate = le32(bytes.data() + body + 4);
      bits = le16(bytes.data() + body + 14);
      if (format != 1)
        throw ParseError(where + "unsupported encoding (format tag " + std::to_string(format) +
                         "); only 16-bit PCM mono is supported");
      if (channels != 1)
        throw ParseError(where + "unsupported channel count " + std::to_string(channels) +
                         "; only mono is supported");
      if (bits != 16)
        throw ParseError(where + "unsupported bit depth " + std::to_string(bits) +
                         "; only 16-bit PCM is supported");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw ParseError(where + "data chunk before fmt chunk");
      if (size % 2 != 0) throw ParseError(where + "odd data chunk size");
      AudioBuffer audio;
      audio.sample_rate = static_cast<int>(rate);
      audio.samples.resize(size / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(le16(bytes.data() + body + 2 * i));
        audio.samples[i] = v / 32768.0;
      }
      return audio;
    }
    pos = body + size + (size & 1u);
  }
  throw ParseError(where + (have_fmt ? "missing data chunk" : "missing fmt chunk"));
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  if (audio.sample_rate <= 0) throw InputError("wav: invalid sample rate");
  const auto n = static_cast<std::uint32_t>(audio.samples.size());
  std::vector<std::uint8_t> out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + 2 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(audio.sample_rate));
  put32(out, static_cast<std::uint32_t>(audio.sample_rate) * 2);
  put16(out, 2);
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, 2 * n);
  for (double s : audio.samples) {
    const double q = std::clamp(std::nearbyint(s * 32768.0), -32768.0, 32767.0);
    put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InputError("wav: cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

}  // namespace emoflow
