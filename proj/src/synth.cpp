// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "convbf/synth.hpp"

#include <algorithm>
#include <cmath>

#include "convbf/rng.hpp"
#include "convbf/stft.hpp"

namespace convbf {
namespace {

constexpr int kDirectBaseDelay = 8;    // samples
constexpr int kDirectJitterMax = 16;   // per-channel extra delay, samples
constexpr double kTailDensity = 0.08;  // fraction of tail samples carrying a tap
constexpr double kTailScale = 0.45;    // tap amplitude relative to the direct path
constexpr double kBurstsPerSecond = 3.0;
constexpr double kGuardSeconds = 0.02;
// Per-burst resonator range: gives the source the moving spectral envelope
// that reverberation smears and a cepstral measure can see.
constexpr double kFormantLowHz = 300.0;
constexpr double kFormantHighHz = 2600.0;
constexpr double kFormantBandwidthHz = 180.0;

// Amplitude decay rate for a 60 dB energy decay over rt60.
double amplitude_decay_per_sample(double rt60_s, int fs) {
  return std::log(1000.0) / (rt60_s * fs);
}

// Two-pole resonator, run over [lo, hi) of the excitation.
Eigen::VectorXd resonate(const Eigen::VectorXd& x, std::int64_t lo,
                         std::int64_t hi, double center_hz, double bw_hz,
                         int fs) {
  const double r = std::exp(-M_PI * bw_hz / fs);
  const double theta = 2.0 * M_PI * center_hz / fs;
  const double a1 = 2.0 * r * std::cos(theta);
  const double a2 = -r * r;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(hi - lo);
  double y1 = 0.0, y2 = 0.0;
  for (std::int64_t i = lo; i < hi; ++i) {
    const double v = x[i] + a1 * y1 + a2 * y2;
    y[i - lo] = v;
    y2 = y1;
    y1 = v;
  }
  return y;
}

}  // namespace

Eigen::VectorXd convolve(const Eigen::VectorXd& signal,
                         const Eigen::VectorXd& response) {
  if (signal.size() == 0 || response.size() == 0)
    throw InvalidInput("convolve: empty input");
  const std::int64_t out_len = signal.size() + response.size() - 1;
  int fft_len = 1;
  while (fft_len < out_len) fft_len <<= 1;
  const Eigen::VectorXcd spec =
      rfft(signal, fft_len).cwiseProduct(rfft(response, fft_len));
  return irfft(spec, fft_len).head(out_len);
}

Scenario make_scenario(const ScenarioParams& params) {
  const int fs = params.sample_rate_hz;
  const int m = params.num_channels;
  if (fs <= 0) throw InvalidInput("scenario: sample rate must be positive");
  if (m < 1) throw InvalidInput("scenario: need at least one channel");
  if (params.rt60_s < 0.0) throw InvalidInput("scenario: rt60 must be >= 0");
  if (params.duration_s <= 0.0) throw InvalidInput("scenario: duration must be positive");

  const auto length = static_cast<std::int64_t>(std::llround(params.duration_s * fs));
  const auto lead = static_cast<std::int64_t>(std::llround(params.lead_noise_s * fs));
  const auto trail = static_cast<std::int64_t>(std::llround(params.trail_noise_s * fs));
  const auto guard = static_cast<std::int64_t>(std::llround(kGuardSeconds * fs));

  const int tail_len =
      params.rt60_s > 0.0 ? static_cast<int>(std::ceil(params.rt60_s * fs)) : 0;
  const int num_taps = kDirectBaseDelay + kDirectJitterMax + tail_len + 1;

  // The source must stop early enough that the reverberant tail has fully
  // decayed before the trailing noise-only margin starts.
  const std::int64_t support_start = lead + guard;
  const std::int64_t support_end = length - trail - num_taps - guard;
  if (support_end - support_start < fs / 2)
    throw InvalidInput("scenario: duration too short for the requested margins");

  Rng rng(params.seed);

  // Clean source: noise bursts, each shaped by its own resonator so the
  // short-time spectral envelope keeps moving the way speech does; zero
  // outside the support region.
  Eigen::VectorXd white(length);
  for (std::int64_t i = 0; i < length; ++i) white[i] = rng.normal();

  Eigen::VectorXd source = Eigen::VectorXd::Zero(length);
  const double support_s = static_cast<double>(support_end - support_start) / fs;
  const int num_bursts = std::max(1, static_cast<int>(std::llround(support_s * kBurstsPerSecond)));
  for (int b = 0; b < num_bursts; ++b) {
    const double center = rng.uniform(static_cast<double>(support_start),
                                      static_cast<double>(support_end));
    const double half_width = rng.uniform(0.06, 0.16) * fs;
    const double formant_hz = rng.uniform(kFormantLowHz, kFormantHighHz);
    const auto lo = std::max<std::int64_t>(support_start,
                                           static_cast<std::int64_t>(center - half_width));
    const auto hi = std::min<std::int64_t>(support_end,
                                           static_cast<std::int64_t>(center + half_width));
    if (hi <= lo) continue;
    const Eigen::VectorXd shaped =
        resonate(white, lo, hi, formant_hz, kFormantBandwidthHz, fs);
    const double rms = shaped.norm() / std::sqrt(static_cast<double>(hi - lo));
    if (!(rms > 0.0)) continue;
    for (std::int64_t i = lo; i < hi; ++i) {
      const double phase = (i - (center - half_width)) / (2.0 * half_width);
      const double bump =
          0.5 - 0.5 * std::cos(2.0 * M_PI * std::clamp(phase, 0.0, 1.0));
      source[i] += bump * shaped[i - lo] / rms;
    }
  }

  Scenario scn;
  scn.sample_rate_hz = fs;
  scn.seed = params.seed;
  scn.rt60_s = params.rt60_s;
  scn.snr_db = params.snr_db;
  scn.lead_noise_s = params.lead_noise_s;
  scn.trail_noise_s = params.trail_noise_s;
  scn.split_index = params.early_boundary_samples;

  scn.clean = source;
  const double peak = scn.clean.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) throw InvalidInput("scenario: generated source is silent");
  scn.clean *= 0.5 / peak;

  // Room responses: one distinct direct path per channel plus a sparse
  // exponentially decaying tail.
  scn.rir = Eigen::MatrixXd::Zero(num_taps, m);
  for (int ch = 0; ch < m; ++ch) {
    const int delay =
        kDirectBaseDelay + static_cast<int>(rng.uniform_index(kDirectJitterMax + 1));
    const double gain = rng.uniform(0.7, 1.0);
    scn.rir(delay, ch) = gain;
    if (tail_len > 0) {
      const double decay = amplitude_decay_per_sample(params.rt60_s, fs);
      for (int i = delay + 1; i < num_taps; ++i) {
        const double u = rng.uniform();
        const double g = rng.normal();  // consumed regardless, keeps streams aligned
        if (u < kTailDensity)
          scn.rir(i, ch) += kTailScale * g * std::exp(-decay * (i - delay));
      }
    }
  }

  // Desired (early) and late reverberant parts; the mix is their exact sum
  // plus noise. The FFT convolution leaves roundoff dust outside the
  // mathematical support of the result, so clear it: the margins must stay
  // exactly noise-only.
  const std::int64_t support_max = std::min<std::int64_t>(
      length, support_end + num_taps);
  const auto mask_support = [&](Eigen::VectorXd& x) {
    x.head(support_start).setZero();
    x.tail(length - support_max).setZero();
  };

  const std::int64_t split = std::min<std::int64_t>(scn.split_index, num_taps);
  scn.desired.resize(length, m);
  scn.late = Eigen::MatrixXd::Zero(length, m);
  for (int ch = 0; ch < m; ++ch) {
    Eigen::VectorXd early =
        convolve(scn.clean, scn.rir.col(ch).head(split)).head(length);
    mask_support(early);
    scn.desired.col(ch) = early;
    if (num_taps > split) {
      Eigen::VectorXd late_rir = Eigen::VectorXd::Zero(num_taps);
      late_rir.tail(num_taps - split) = scn.rir.col(ch).tail(num_taps - split);
      Eigen::VectorXd late_part = convolve(scn.clean, late_rir).head(length);
      mask_support(late_part);
      scn.late.col(ch) = late_part;
    }
  }

  scn.noise.resize(length, m);
  for (int ch = 0; ch < m; ++ch)
    for (std::int64_t i = 0; i < length; ++i) scn.noise(i, ch) = rng.normal();

  if (std::isinf(params.snr_db)) {
    scn.noise.setZero();
  } else {
    const std::int64_t speech_lo = lead;
    const std::int64_t speech_len = length - trail - lead;
    const double p_sig =
        (scn.desired + scn.late).middleRows(speech_lo, speech_len).squaredNorm();
    const double p_noise = scn.noise.middleRows(speech_lo, speech_len).squaredNorm();
    if (!(p_sig > 0.0)) throw InvalidInput("scenario: no signal energy in the speech region");
    const double gain =
        std::sqrt(p_sig / p_noise) * std::pow(10.0, -params.snr_db / 20.0);
    scn.noise *= gain;
  }

  scn.mix = scn.desired + scn.late + scn.noise;
  return scn;
}

MetricReport oracle_metrics(const Scenario& scenario,
                            const Eigen::VectorXd& processed) {
  return evaluate_metrics(scenario.desired.col(0), processed,
                          scenario.sample_rate_hz);
}

}  // namespace convbf
