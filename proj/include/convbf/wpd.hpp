// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONVBF_WPD_HPP
#define CONVBF_WPD_HPP

#include <Eigen/Dense>
#include <vector>

#include "convbf/covariance.hpp"
#include "convbf/model.hpp"
#include "convbf/steering.hpp"
#include "convbf/stft.hpp"

namespace convbf {

enum class SteeringMode {
  FromInput,            // estimate v once from the captured signal
  FromWpePerIteration,  // refresh v every iteration from the WPE output
};

// One frequency band with its own prediction-filter length.
struct Band {
  double low_hz = 0.0;
  double high_hz = 0.0;
  int filter_len = 0;  // Lw, frames
};

// Default banding: longer prediction filters at low frequencies.
std::vector<Band> default_bands();

struct WpdConfig {
  std::vector<Band> bands = default_bands();
  int delay = 4;  // b, frames
  int iterations = 3;
  double loading_rel = 1e-6;
  // Relative floor on the desired-signal power. Keeps the 1/sigma^2 weights
  // within ~30 dB of dynamic range; a much smaller floor lets a handful of
  // near-silent frames dominate the covariance and the iterations regress.
  double sigma_floor_rel = 1e-3;
  SteeringMode steering_mode = SteeringMode::FromWpePerIteration;
  bool mpdr_mode = false;  // no delayed taps, sigma2 frozen at 1

  void validate(const StftConfig& stft) const;
  int band_index(double hz) const;  // boundary frequencies go to the lower band
  StackingLayout layout_for_bin(int bin, const StftConfig& stft,
                                int num_channels) const;
};

// Per-run record of the solver trajectory.
struct IterationDiagnostics {
  Eigen::MatrixXd objective;            // iterations x bins, per-bin log-likelihood
  Eigen::MatrixXd constraint_residual;  // iterations x bins, relative
  std::vector<Eigen::MatrixXd> sigma2;  // per iteration, bins x frames
  std::vector<char> underdetermined;    // per bin: fewer frames than stacked dim

  int num_iterations() const { return static_cast<int>(objective.rows()); }
  double mean_objective(int iteration) const {
    return objective.row(iteration).mean();
  }
  double max_constraint_residual(int iteration) const {
    return constraint_residual.row(iteration).maxCoeff();
  }
  // True when every bin's objective is non-decreasing over iterations.
  // Guaranteed when the steering vector is held fixed; a per-iteration
  // steering refresh may trade likelihood for a better v.
  bool objective_monotone(double slack) const;
};

struct EnhancementResult {
  MultichannelSpectrogram enhanced;  // single channel (reference estimate)
  Eigen::VectorXd waveform;
  IterationDiagnostics diagnostics;
};

// Closed-form constrained weight estimate: wbar = R^{-1} vbar / (vbar^H
// R^{-1} vbar) with vbar = [v / v_ref; 0...]. The returned weights satisfy
// the distortionless constraint w0^H v = v_ref to high accuracy.
ConvolutionalWeights solve_weights(const CovarianceSet& cov,
                                   const SteeringVector& v,
                                   const StackingLayout& layout);

// sigma2_t = max(|dhat_t|^2, floor).
PowerEstimate update_sigma(const Eigen::VectorXcd& dhat, double floor);

// Full iterative solver. Steering comes from the mask per config; per-bin
// work runs in parallel on num_threads workers (0 = hardware concurrency).
EnhancementResult run_wpd(const MultichannelSpectrogram& spec,
                          const WpdConfig& config, const NoiseMask& mask,
                          int num_threads = 0);

// Same solver with caller-supplied steering vectors (one per bin), held
// fixed over the iterations.
EnhancementResult run_wpd(const MultichannelSpectrogram& spec,
                          const WpdConfig& config,
                          const std::vector<SteeringVector>& steering,
                          int num_threads = 0);

// Purely spatial special case: no delayed taps, sigma2 time-invariant.
EnhancementResult run_mpdr(const MultichannelSpectrogram& spec,
                           const WpdConfig& config, const NoiseMask& mask,
                           int num_threads = 0);

// Cascade baseline: iterative WPE first, then MPDR on the dereverberated
// signal with steering estimated from it.
EnhancementResult run_cascade_wpe_mpdr(const MultichannelSpectrogram& spec,
                                       const WpdConfig& config,
                                       const NoiseMask& mask,
                                       int num_threads = 0);

}  // namespace convbf

#endif  // CONVBF_WPD_HPP
