// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONVBF_MODEL_HPP
#define CONVBF_MODEL_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "convbf/error.hpp"
#include "convbf/stft.hpp"

namespace convbf {

// Per-bin complex gain vector mapping the source to the microphones for the
// desired (direct + early) component. Channel 0 is the reference.
struct SteeringVector {
  Eigen::VectorXcd v;
  static constexpr int kReferenceChannel = 0;

  int size() const { return static_cast<int>(v.size()); }
  std::complex<double> reference() const { return v[kReferenceChannel]; }
  void validate() const;
};

// Geometry of the delayed stacking: the current frame followed by frames
// t-b, t-b-1, ..., t-Lw. filter_len == delay-1 encodes an empty tap range
// (purely spatial processing, stacked_dim == num_channels).
struct StackingLayout {
  int num_channels = 0;  // M
  int delay = 1;         // b, frames
  int filter_len = 0;    // Lw, frames

  int num_taps() const { return filter_len - delay + 1; }  // |{b..Lw}|
  int stacked_dim() const { return num_channels * (num_taps() + 1); }
  int delayed_dim() const { return stacked_dim() - num_channels; }
  void validate() const;

  bool operator==(const StackingLayout&) const = default;
};

// The delayed stacked observation for one (frame, bin).
struct StackedObservation {
  Eigen::VectorXcd xbar;  // length stacked_dim, [x_t; x_{t-b}; ...; x_{t-Lw}]
  StackingLayout layout;
};

// A single-output convolutional beamformer in stacked form; the first M
// entries act on the current frame.
struct ConvolutionalWeights {
  Eigen::VectorXcd wbar;
  StackingLayout layout;

  Eigen::VectorXcd current_frame_block() const {
    return wbar.head(layout.num_channels);
  }
  void validate() const;
};

// Time-varying power of the desired signal for one bin, floored away from
// zero so 1/sigma2 weights stay bounded.
struct PowerEstimate {
  Eigen::VectorXd sigma2;
  double floor = 0.0;

  static PowerEstimate floored(const Eigen::VectorXd& raw_power, double floor);
  void validate() const;
};

// Source frame index for each stacked block (block 0 is the current frame);
// negative indices mean the zero-prefix before t = 0.
std::vector<int> stack_source_frames(const StackingLayout& layout, int t);

StackedObservation stack(const MultichannelSpectrogram& spec, int bin, int t,
                         const StackingLayout& layout);

// All frames of one bin stacked at once: column t is stack(spec, bin, t).
Eigen::MatrixXcd stacked_matrix(const Eigen::MatrixXcd& bin_data,
                                const StackingLayout& layout);

std::complex<double> apply_beamformer(const ConvolutionalWeights& weights,
                                      const StackedObservation& obs);

// The per-bin Gaussian log-likelihood of the beamformer output:
//   -sum_t |wbar^H xbar_t|^2 / sigma2_t  -  sum_t log sigma2_t.
// The steering vector participates only through the distortionless
// constraint, which is the caller's responsibility; it is validated for
// shape but not enforced here.
double log_likelihood(const ConvolutionalWeights& weights,
                      const MultichannelSpectrogram& spec,
                      const PowerEstimate& sigma2, const SteeringVector& v,
                      const StackingLayout& layout, int bin);

}  // namespace convbf

#endif  // CONVBF_MODEL_HPP
