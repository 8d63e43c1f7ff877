// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "convbf/stft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace convbf {
namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// FFTW plan creation/destruction is not thread-safe; executions are.
std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

struct RealFft {
  int n;
  double* in;
  fftw_complex* out;
  fftw_plan fwd;
  fftw_plan inv;

  explicit RealFft(int fft_len) : n(fft_len) {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    in = fftw_alloc_real(static_cast<size_t>(n));
    out = fftw_alloc_complex(static_cast<size_t>(n / 2 + 1));
    fwd = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    inv = fftw_plan_dft_c2r_1d(n, out, in, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
    fftw_free(in);
    fftw_free(out);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
};

// Mirror index p into [0, len) without duplicating the edge sample.
std::int64_t mirror_index(std::int64_t p, std::int64_t len) {
  if (len == 1) return 0;
  const std::int64_t period = 2 * (len - 1);
  p = p % period;
  if (p < 0) p += period;
  return p < len ? p : period - p;
}

}  // namespace

void StftConfig::validate() const {
  if (sample_rate_hz <= 0) throw InvalidInput("stft: sample_rate_hz must be positive");
  if (frame_len_samples <= 0) throw InvalidInput("stft: frame_len_samples must be positive");
  if (shift_samples <= 0) throw InvalidInput("stft: shift_samples must be positive");
  if (shift_samples > frame_len_samples)
    throw InvalidInput("stft: shift_samples must not exceed frame_len_samples");
  if (fft_len_samples < frame_len_samples)
    throw InvalidInput("stft: fft_len_samples must be >= frame_len_samples");
  if (!is_power_of_two(fft_len_samples))
    throw InvalidInput("stft: fft_len_samples must be a power of two");

  // Overlap-add reconstruction needs the window-square tiling to stay
  // bounded away from zero at every phase of the shift.
  const Eigen::VectorXd w = hann_window(frame_len_samples);
  double min_cover = 1e300;
  for (int phase = 0; phase < shift_samples; ++phase) {
    double s = 0.0;
    for (int k = phase; k < frame_len_samples; k += shift_samples) s += w[k] * w[k];
    min_cover = std::min(min_cover, s);
  }
  if (min_cover <= 1e-6)
    throw InvalidInput("stft: window/shift combination does not overlap-add");
}

void MultichannelSpectrogram::validate() const {
  if (bins.empty()) throw InvalidInput("spectrogram: no bins");
  if (num_bins() != config.num_bins())
    throw InvalidInput("spectrogram: bin count does not match config");
  const int m = num_channels();
  const int t = num_frames();
  for (const auto& b : bins) {
    if (b.rows() != m || b.cols() != t)
      throw InvalidInput("spectrogram: ragged bin shapes");
    if (!b.allFinite()) throw InvalidInput("spectrogram: non-finite values");
  }
}

MultichannelSpectrogram MultichannelSpectrogram::channel(int m) const {
  if (m < 0 || m >= num_channels())
    throw InvalidInput("spectrogram: channel index out of range");
  MultichannelSpectrogram out;
  out.config = config;
  out.source_samples = source_samples;
  out.bins.reserve(bins.size());
  for (const auto& b : bins) out.bins.emplace_back(b.row(m));
  return out;
}

Eigen::VectorXd hann_window(int n) {
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / n);
  return w;
}

Eigen::VectorXcd rfft(const Eigen::VectorXd& frame, int fft_len) {
  if (!is_power_of_two(fft_len)) throw InvalidInput("rfft: length must be a power of two");
  if (frame.size() > fft_len) throw InvalidInput("rfft: frame longer than fft length");
  RealFft fft(fft_len);
  for (int i = 0; i < fft_len; ++i)
    fft.in[i] = i < frame.size() ? frame[i] : 0.0;
  fftw_execute(fft.fwd);
  Eigen::VectorXcd spec(fft_len / 2 + 1);
  for (int k = 0; k <= fft_len / 2; ++k)
    spec[k] = std::complex<double>(fft.out[k][0], fft.out[k][1]);
  return spec;
}

Eigen::VectorXd irfft(const Eigen::VectorXcd& spectrum, int fft_len) {
  if (!is_power_of_two(fft_len)) throw InvalidInput("irfft: length must be a power of two");
  if (spectrum.size() != fft_len / 2 + 1)
    throw InvalidInput("irfft: spectrum size does not match fft length");
  RealFft fft(fft_len);
  for (int k = 0; k <= fft_len / 2; ++k) {
    fft.out[k][0] = spectrum[k].real();
    fft.out[k][1] = spectrum[k].imag();
  }
  fftw_execute(fft.inv);
  Eigen::VectorXd frame(fft_len);
  for (int i = 0; i < fft_len; ++i) frame[i] = fft.in[i] / fft_len;  // FFTW c2r is unnormalized
  return frame;
}

Eigen::VectorXd reflect_pad(const Eigen::VectorXd& audio, const StftConfig& config) {
  const std::int64_t len = audio.size();
  if (len == 0) throw InvalidInput("stft: empty audio");
  const std::int64_t pad = config.left_pad();
  const int n = config.frame_len_samples;
  const int s = config.shift_samples;

  std::int64_t padded = len + 2 * pad;
  if (padded < n) throw InvalidInput("stft: audio too short for one frame");
  const std::int64_t rem = (padded - n) % s;
  if (rem != 0) padded += s - rem;  // align so the last frame is full

  Eigen::VectorXd out(padded);
  for (std::int64_t i = 0; i < padded; ++i)
    out[i] = audio[mirror_index(i - pad, len)];
  return out;
}

int num_analysis_frames(std::int64_t samples, const StftConfig& config) {
  const std::int64_t pad = config.left_pad();
  std::int64_t padded = samples + 2 * pad;
  if (padded < config.frame_len_samples) return 0;
  const std::int64_t rem = (padded - config.frame_len_samples) % config.shift_samples;
  if (rem != 0) padded += config.shift_samples - rem;
  return static_cast<int>((padded - config.frame_len_samples) / config.shift_samples) + 1;
}

MultichannelSpectrogram analyze(const Eigen::MatrixXd& audio, const StftConfig& config) {
  config.validate();
  if (audio.size() == 0) throw InvalidInput("analyze: empty audio");
  if (audio.cols() < 1) throw InvalidInput("analyze: need at least one channel");
  if (!audio.allFinite()) throw InvalidInput("analyze: non-finite samples");

  const int num_channels = static_cast<int>(audio.cols());
  const int n = config.frame_len_samples;
  const int s = config.shift_samples;
  const int fft_len = config.fft_len_samples;
  const int num_bins = config.num_bins();
  const int num_frames = num_analysis_frames(audio.rows(), config);
  const Eigen::VectorXd window = hann_window(n);

  MultichannelSpectrogram spec;
  spec.config = config;
  spec.source_samples = audio.rows();
  spec.bins.assign(static_cast<size_t>(num_bins),
                   Eigen::MatrixXcd(num_channels, num_frames));

  RealFft fft(fft_len);
  for (int m = 0; m < num_channels; ++m) {
    const Eigen::VectorXd padded = reflect_pad(audio.col(m), config);
    for (int t = 0; t < num_frames; ++t) {
      const std::int64_t start = static_cast<std::int64_t>(t) * s;
      for (int i = 0; i < n; ++i) fft.in[i] = padded[start + i] * window[i];
      for (int i = n; i < fft_len; ++i) fft.in[i] = 0.0;
      fftw_execute(fft.fwd);
      for (int f = 0; f < num_bins; ++f)
        spec.bins[static_cast<size_t>(f)](m, t) =
            std::complex<double>(fft.out[f][0], fft.out[f][1]);
    }
  }
  return spec;
}

Eigen::VectorXd synthesize(const MultichannelSpectrogram& spec, const StftConfig& config) {
  config.validate();
  if (spec.config != config)
    throw InvalidInput("synthesize: spectrogram was produced with a different config");
  spec.validate();
  if (spec.num_channels() != 1)
    throw InvalidInput("synthesize: expected a single-channel spectrogram");

  const int n = config.frame_len_samples;
  const int s = config.shift_samples;
  const int fft_len = config.fft_len_samples;
  const int num_bins = config.num_bins();
  const int num_frames = spec.num_frames();
  const std::int64_t pad = config.left_pad();
  const Eigen::VectorXd window = hann_window(n);

  const std::int64_t padded_len = static_cast<std::int64_t>(num_frames - 1) * s + n;
  std::int64_t out_len = spec.source_samples;
  if (out_len < 0) out_len = std::max<std::int64_t>(padded_len - 2 * pad, 0);
  if (out_len + pad > padded_len)
    throw InvalidInput("synthesize: spectrogram too short for recorded length");

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(padded_len);
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(padded_len);

  RealFft fft(fft_len);
  for (int t = 0; t < num_frames; ++t) {
    for (int f = 0; f < num_bins; ++f) {
      const std::complex<double> z = spec.bins[static_cast<size_t>(f)](0, t);
      fft.out[f][0] = z.real();
      fft.out[f][1] = z.imag();
    }
    fftw_execute(fft.inv);
    const std::int64_t start = static_cast<std::int64_t>(t) * s;
    for (int i = 0; i < n; ++i) {
      const double sample = fft.in[i] / fft_len;
      acc[start + i] += sample * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }

  const double norm_floor = 1e-8 * norm.maxCoeff();
  Eigen::VectorXd out(out_len);
  for (std::int64_t i = 0; i < out_len; ++i) {
    const double d = norm[pad + i];
    out[i] = d > norm_floor ? acc[pad + i] / d : 0.0;
  }
  return out;
}

}  // namespace convbf
