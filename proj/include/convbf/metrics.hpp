// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONVBF_METRICS_HPP
#define CONVBF_METRICS_HPP

#include <Eigen/Dense>

#include "convbf/error.hpp"

namespace convbf {

// Frame-averaged objective speech measures between a reference and a
// processed waveform. Conventions follow the usual evaluation-toolkit
// settings: per-frame cepstrum distance clamped to [0, 10] dB, per-band
// frequency-weighted SNR clamped to [-10, 35] dB.
struct MetricReport {
  double cd_db = 0.0;
  double fwssnr_db = 0.0;
  int frames_used = 0;
};

// LPC-cepstrum distance in dB (order 10, c0 excluded so it is insensitive
// to broadband gain), averaged over speech-active frames of the reference.
double cepstrum_distance(const Eigen::VectorXd& ref,
                         const Eigen::VectorXd& proc, int sample_rate_hz);

// Mel-band (23 bands) segmental SNR, each band weighted by the reference
// band energy to the 0.2 power; the error spectrum is the complex
// difference of the two frames' spectra.
double fwssnr(const Eigen::VectorXd& ref, const Eigen::VectorXd& proc,
              int sample_rate_hz);

// Both measures over the same framing and activity rule.
MetricReport evaluate_metrics(const Eigen::VectorXd& ref,
                              const Eigen::VectorXd& proc,
                              int sample_rate_hz);

}  // namespace convbf

#endif  // CONVBF_METRICS_HPP
