// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONVBF_STFT_HPP
#define CONVBF_STFT_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "convbf/error.hpp"

namespace convbf {

enum class Window { Hann };

// Analysis/synthesis parameters. The pair must satisfy the overlap-add
// reconstruction property for the chosen window and shift, which validate()
// checks on the infinite window-square tiling.
struct StftConfig {
  int sample_rate_hz = 16000;
  int frame_len_samples = 512;
  int shift_samples = 128;
  Window window = Window::Hann;
  int fft_len_samples = 512;

  void validate() const;  // throws InvalidInput
  int num_bins() const { return fft_len_samples / 2 + 1; }
  double bin_hz(int f) const {
    return static_cast<double>(f) * sample_rate_hz / fft_len_samples;
  }
  // Frames are taken from a signal that is mirror-padded by this amount on
  // the left, so every original sample is covered by full analysis windows.
  int left_pad() const { return frame_len_samples - shift_samples; }

  bool operator==(const StftConfig&) const = default;
};

// Complex STFT tensor indexed (frame t, bin f, channel m), stored per bin as
// an M x T matrix so per-bin solvers work on contiguous blocks.
class MultichannelSpectrogram {
 public:
  StftConfig config;
  std::vector<Eigen::MatrixXcd> bins;  // F entries, each M x T
  std::int64_t source_samples = -1;    // original waveform length, if known

  int num_bins() const { return static_cast<int>(bins.size()); }
  int num_frames() const {
    return bins.empty() ? 0 : static_cast<int>(bins.front().cols());
  }
  int num_channels() const {
    return bins.empty() ? 0 : static_cast<int>(bins.front().rows());
  }
  std::complex<double> at(int t, int f, int m) const {
    return bins[static_cast<size_t>(f)](m, t);
  }

  void validate() const;  // shape + finiteness, throws InvalidInput
  MultichannelSpectrogram channel(int m) const;
};

// Periodic Hann window of length n.
Eigen::VectorXd hann_window(int n);

// Real-input FFT (bins 0..n/2) and its inverse. n must be a power of two.
Eigen::VectorXcd rfft(const Eigen::VectorXd& frame, int fft_len);
Eigen::VectorXd irfft(const Eigen::VectorXcd& spectrum, int fft_len);

// The padding policy applied before framing: mirror-pad left_pad() samples
// on both sides, then extend the tail so the last frame ends exactly at the
// padded end.
Eigen::VectorXd reflect_pad(const Eigen::VectorXd& audio,
                            const StftConfig& config);

// Number of frames analyze() produces for an input of the given length.
int num_analysis_frames(std::int64_t samples, const StftConfig& config);

// audio is (samples x channels).
MultichannelSpectrogram analyze(const Eigen::MatrixXd& audio,
                                const StftConfig& config);

// Weighted overlap-add resynthesis of a single-channel spectrogram produced
// with the same config.
Eigen::VectorXd synthesize(const MultichannelSpectrogram& spec,
                           const StftConfig& config);

}  // namespace convbf

#endif  // CONVBF_STFT_HPP
