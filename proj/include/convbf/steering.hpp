// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONVBF_STEERING_HPP
#define CONVBF_STEERING_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "convbf/model.hpp"
#include "convbf/stft.hpp"

namespace convbf {

// Marks which frames are noise-only, derived from leading/trailing
// noise-only durations of the utterance.
struct NoiseMask {
  std::vector<char> noise_frames;  // length T, nonzero = noise-only

  int num_frames() const { return static_cast<int>(noise_frames.size()); }
  int noise_count() const;
  int speech_count() const { return num_frames() - noise_count(); }
  bool is_noise(int t) const { return noise_frames[static_cast<size_t>(t)] != 0; }
};

// A frame is leading-noise when its analysis window ends inside the leading
// margin, and trailing-noise when it starts inside the trailing margin, both
// measured in original-signal coordinates (the mirror padding in front of
// the signal repeats noise, so windows reaching into it still see noise).
// source_samples < 0 means "reconstruct the length from num_frames", which
// is exact whenever the frame grid needed no tail alignment.
NoiseMask noise_mask_from_margins(int num_frames, const StftConfig& config,
                                  double lead_s, double trail_s,
                                  std::int64_t source_samples = -1);

// GEVD steering estimation with noise covariance whitening, from per-bin
// speech and noise covariances. phi_x and phi_n are M x M Hermitian.
SteeringVector estimate_steering_from_cov(const Eigen::MatrixXcd& phi_x,
                                          const Eigen::MatrixXcd& phi_n);

// Covariances averaged over the mask's speech and noise frames of one bin
// (M x T data matrix).
SteeringVector estimate_steering(const Eigen::MatrixXcd& bin_data,
                                 const NoiseMask& mask);

// Spec-level entry point: covariances are averaged over the mask's speech
// and noise frames of the (dereverberated) spectrogram bin.
SteeringVector estimate_steering(const MultichannelSpectrogram& derev,
                                 const NoiseMask& mask, int bin);

}  // namespace convbf

#endif  // CONVBF_STEERING_HPP
