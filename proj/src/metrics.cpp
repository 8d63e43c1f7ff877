// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "convbf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "convbf/stft.hpp"

namespace convbf {
namespace {

constexpr int kLpcOrder = 10;
constexpr int kNumBands = 23;
constexpr double kBandWeightExp = 0.2;
constexpr double kCdClampDb = 10.0;
constexpr double kSnrLoDb = -10.0;
constexpr double kSnrHiDb = 35.0;
constexpr double kActivityFloorRel = 1e-4;  // frames within 40 dB of the peak

struct Framing {
  int frame_len;
  int shift;
  int num_frames;
  std::int64_t length;
};

Framing make_framing(std::int64_t ref_len, std::int64_t proc_len, int fs) {
  if (fs <= 0) throw InvalidInput("metrics: sample rate must be positive");
  Framing fr;
  fr.frame_len = fs * 32 / 1000;
  fr.shift = fs * 8 / 1000;
  fr.length = std::min(ref_len, proc_len);
  if (fr.length < fr.frame_len)
    throw InvalidInput("metrics: signals shorter than one frame");
  fr.num_frames =
      static_cast<int>((fr.length - fr.frame_len) / fr.shift) + 1;
  return fr;
}

// Speech-activity decision on the windowed reference frames.
std::vector<char> active_frames(const Eigen::VectorXd& ref, const Framing& fr,
                                const Eigen::VectorXd& window) {
  std::vector<double> energy(static_cast<size_t>(fr.num_frames));
  double peak = 0.0;
  for (int t = 0; t < fr.num_frames; ++t) {
    const double e =
        ref.segment(static_cast<std::int64_t>(t) * fr.shift, fr.frame_len)
            .cwiseProduct(window)
            .squaredNorm();
    energy[static_cast<size_t>(t)] = e;
    peak = std::max(peak, e);
  }
  if (peak <= 0.0) throw InvalidInput("metrics: reference is silent");
  std::vector<char> active(static_cast<size_t>(fr.num_frames));
  for (int t = 0; t < fr.num_frames; ++t)
    active[static_cast<size_t>(t)] =
        energy[static_cast<size_t>(t)] > kActivityFloorRel * peak ? 1 : 0;
  return active;
}

// Autocorrelation-method LPC followed by the minimum-phase cepstrum
// recursion; returns c_1..c_p (c0 carries the gain and is excluded).
Eigen::VectorXd lpc_cepstrum(const Eigen::VectorXd& frame) {
  const int p = kLpcOrder;
  Eigen::VectorXd r(p + 1);
  for (int k = 0; k <= p; ++k) {
    double acc = 0.0;
    for (int n = k; n < frame.size(); ++n) acc += frame[n] * frame[n - k];
    r[k] = acc;
  }

  Eigen::VectorXd a = Eigen::VectorXd::Zero(p + 1);  // A(z) = 1 + sum a_i z^-i
  if (r[0] > 0.0) {
    double err = r[0];
    for (int i = 1; i <= p; ++i) {
      double acc = r[i];
      for (int j = 1; j < i; ++j) acc += a[j] * r[i - j];
      const double k = -acc / err;
      Eigen::VectorXd prev = a;
      for (int j = 1; j < i; ++j) a[j] = prev[j] + k * prev[i - j];
      a[i] = k;
      err *= 1.0 - k * k;
      if (err <= 0.0) break;
    }
  }

  Eigen::VectorXd c = Eigen::VectorXd::Zero(p + 1);
  for (int n = 1; n <= p; ++n) {
    double acc = -a[n];
    for (int k = 1; k < n; ++k) acc -= (static_cast<double>(k) / n) * c[k] * a[n - k];
    c[n] = acc;
  }
  return c.tail(p);
}

Eigen::MatrixXd mel_filterbank(int num_bins, int fft_len, int fs) {
  const auto hz_to_mel = [](double hz) {
    return 2595.0 * std::log10(1.0 + hz / 700.0);
  };
  const auto mel_to_hz = [](double mel) {
    return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
  };
  const double nyquist = 0.5 * fs;
  Eigen::VectorXd edges(kNumBands + 2);
  for (int i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(hz_to_mel(nyquist) * i / (kNumBands + 1));

  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(kNumBands, num_bins);
  for (int j = 0; j < kNumBands; ++j) {
    const double lo = edges[j], mid = edges[j + 1], hi = edges[j + 2];
    for (int k = 0; k < num_bins; ++k) {
      const double f = static_cast<double>(k) * fs / fft_len;
      if (f > lo && f < mid)
        fb(j, k) = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        fb(j, k) = (hi - f) / (hi - mid);
    }
  }
  return fb;
}

int fft_length_for(int frame_len) {
  int n = 1;
  while (n < frame_len) n <<= 1;
  return n;
}

}  // namespace

double cepstrum_distance(const Eigen::VectorXd& ref,
                         const Eigen::VectorXd& proc, int sample_rate_hz) {
  const Framing fr = make_framing(ref.size(), proc.size(), sample_rate_hz);
  const Eigen::VectorXd window = hann_window(fr.frame_len);
  const std::vector<char> active = active_frames(ref, fr, window);

  double total = 0.0;
  int used = 0;
  for (int t = 0; t < fr.num_frames; ++t) {
    if (!active[static_cast<size_t>(t)]) continue;
    const std::int64_t start = static_cast<std::int64_t>(t) * fr.shift;
    const Eigen::VectorXd ref_frame =
        ref.segment(start, fr.frame_len).cwiseProduct(window);
    const Eigen::VectorXd proc_frame =
        proc.segment(start, fr.frame_len).cwiseProduct(window);
    const Eigen::VectorXd diff =
        lpc_cepstrum(ref_frame) - lpc_cepstrum(proc_frame);
    double dist = 10.0 / std::log(10.0) * std::sqrt(2.0 * diff.squaredNorm());
    dist = std::clamp(dist, 0.0, kCdClampDb);
    total += dist;
    ++used;
  }
  if (used == 0) throw InvalidInput("metrics: no speech-active frames");
  return total / used;
}

double fwssnr(const Eigen::VectorXd& ref, const Eigen::VectorXd& proc,
              int sample_rate_hz) {
  const Framing fr = make_framing(ref.size(), proc.size(), sample_rate_hz);
  const Eigen::VectorXd window = hann_window(fr.frame_len);
  const std::vector<char> active = active_frames(ref, fr, window);
  const int fft_len = fft_length_for(fr.frame_len);
  const int num_bins = fft_len / 2 + 1;
  const Eigen::MatrixXd fb = mel_filterbank(num_bins, fft_len, sample_rate_hz);

  double total = 0.0;
  int used = 0;
  for (int t = 0; t < fr.num_frames; ++t) {
    if (!active[static_cast<size_t>(t)]) continue;
    const std::int64_t start = static_cast<std::int64_t>(t) * fr.shift;
    const Eigen::VectorXd ref_frame =
        ref.segment(start, fr.frame_len).cwiseProduct(window);
    const Eigen::VectorXd err_frame =
        (proc.segment(start, fr.frame_len) - ref.segment(start, fr.frame_len))
            .cwiseProduct(window);
    const Eigen::VectorXd ref_power = rfft(ref_frame, fft_len).cwiseAbs2();
    const Eigen::VectorXd err_power = rfft(err_frame, fft_len).cwiseAbs2();
    const Eigen::VectorXd ref_bands = fb * ref_power;
    const Eigen::VectorXd err_bands = fb * err_power;

    double weighted = 0.0;
    double weight_sum = 0.0;
    for (int j = 0; j < kNumBands; ++j) {
      if (!(ref_bands[j] > 0.0)) continue;
      double snr;
      if (err_bands[j] > 0.0)
        snr = 10.0 * std::log10(ref_bands[j] / err_bands[j]);
      else
        snr = kSnrHiDb;
      snr = std::clamp(snr, kSnrLoDb, kSnrHiDb);
      const double w = std::pow(ref_bands[j], kBandWeightExp);
      weighted += w * snr;
      weight_sum += w;
    }
    if (weight_sum <= 0.0) continue;
    total += weighted / weight_sum;
    ++used;
  }
  if (used == 0) throw InvalidInput("metrics: no speech-active frames");
  return total / used;
}

MetricReport evaluate_metrics(const Eigen::VectorXd& ref,
                              const Eigen::VectorXd& proc,
                              int sample_rate_hz) {
  const Framing fr = make_framing(ref.size(), proc.size(), sample_rate_hz);
  const Eigen::VectorXd window = hann_window(fr.frame_len);
  const std::vector<char> active = active_frames(ref, fr, window);
  int used = 0;
  for (char c : active) used += (c != 0);

  MetricReport report;
  report.cd_db = cepstrum_distance(ref, proc, sample_rate_hz);
  report.fwssnr_db = fwssnr(ref, proc, sample_rate_hz);
  report.frames_used = used;
  return report;
}

}  // namespace convbf
