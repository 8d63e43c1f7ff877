// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONVBF_SYNTH_HPP
#define CONVBF_SYNTH_HPP

#include <Eigen/Dense>
#include <cstdint>

#include "convbf/error.hpp"
#include "convbf/metrics.hpp"

namespace convbf {

// A synthetic reverberant noisy capture with full ground truth: the clean
// source, the room responses, the additive noise, and the desired
// (direct + early) component everything else is measured against.
struct Scenario {
  int sample_rate_hz = 16000;
  Eigen::VectorXd clean;    // mono source
  Eigen::MatrixXd rir;      // taps x channels
  Eigen::MatrixXd noise;    // samples x channels
  Eigen::MatrixXd desired;  // samples x channels, conv(clean, rir[0..split))
  Eigen::MatrixXd late;     // samples x channels, conv(clean, rir[split..))
  Eigen::MatrixXd mix;      // samples x channels, desired + late + noise
  std::int64_t split_index = 0;  // early/late boundary of the rir, samples
  double snr_db = 0.0;
  double rt60_s = 0.0;
  double lead_noise_s = 0.0;
  double trail_noise_s = 0.0;
  std::uint64_t seed = 0;
};

struct ScenarioParams {
  std::uint64_t seed = 0;
  int num_channels = 8;
  double rt60_s = 0.5;
  double snr_db = 20.0;
  double duration_s = 6.0;
  double lead_noise_s = 0.225;
  double trail_noise_s = 0.075;
  int sample_rate_hz = 16000;
  // Early/late boundary of the room response in samples; defaults to the
  // solver's prediction delay (4 frames) at the default 8 ms shift.
  int early_boundary_samples = 512;
};

// Deterministic generator: a speech-like bandlimited burst source, sparse
// exponentially decaying room responses with distinct direct paths per
// channel, and white noise scaled to the requested SNR over the speech
// region. The source is kept clear of the leading/trailing margins so they
// stay noise-only even after the reverberant tail.
Scenario make_scenario(const ScenarioParams& params);

// Metrics of a processed waveform against the scenario's desired signal at
// the reference channel.
MetricReport oracle_metrics(const Scenario& scenario,
                            const Eigen::VectorXd& processed);

// Full convolution of a signal with one response column (helper shared with
// tests).
Eigen::VectorXd convolve(const Eigen::VectorXd& signal,
                         const Eigen::VectorXd& response);

}  // namespace convbf

#endif  // CONVBF_SYNTH_HPP
