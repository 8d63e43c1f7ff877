// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONVBF_WAV_HPP
#define CONVBF_WAV_HPP

#include <Eigen/Dense>
#include <string>

#include "convbf/error.hpp"

namespace convbf {

struct WavData {
  int sample_rate_hz = 0;
  Eigen::MatrixXd samples;  // frames x channels, in [-1, 1] for PCM input
};

// Reads a RIFF/WAVE file with PCM16 or IEEE float32 samples.
WavData read_wav(const std::string& path);

// Writes IEEE float32 samples (no clipping decisions are made here).
void write_wav_float32(const std::string& path, const Eigen::MatrixXd& samples,
                       int sample_rate_hz);

}  // namespace convbf

#endif  // CONVBF_WAV_HPP
