// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONVBF_WPE_HPP
#define CONVBF_WPE_HPP

#include <Eigen/Dense>
#include <vector>

#include "convbf/covariance.hpp"
#include "convbf/model.hpp"
#include "convbf/stft.hpp"

namespace convbf {

// Per-bin multichannel linear-prediction filter: maps the delayed stack to
// the predicted late reverberation of each channel.
struct PredictionFilter {
  Eigen::MatrixXcd G;  // (D - M) x M
  StackingLayout layout;
};

// Weighted prediction-error filter, reusing the delayed-only blocks of an
// already accumulated covariance: G = R_tilde^{-1} P with P the
// cross-correlation block of cov. No second accumulation pass happens here.
PredictionFilter wpe_filter(const CovarianceSet& cov);

// dhat_t = x_t - G^H xdel_t for one bin.
Eigen::MatrixXcd dereverberate_bin(const Eigen::MatrixXcd& bin_data,
                                   const PredictionFilter& filter);

// Applies per-bin filters to the whole spectrogram. Filters with G = 0 pass
// the input through unchanged.
MultichannelSpectrogram dereverberate(const MultichannelSpectrogram& spec,
                                      const std::vector<PredictionFilter>& filters);

struct WpeRunResult {
  MultichannelSpectrogram derev;            // all M channels
  std::vector<PredictionFilter> filters;    // per bin, last iteration
  Eigen::MatrixXd objective;                // iterations x bins, WPE log-likelihood
};

// Standalone iterative WPE: starts sigma2 from the input power, alternates
// filter and sigma2 updates. layout_for_bin supplies the per-band stacking.
WpeRunResult run_wpe(const MultichannelSpectrogram& spec,
                     const std::vector<StackingLayout>& layout_per_bin,
                     int iterations, double loading_rel, double sigma_floor_rel,
                     int num_threads = 0);

}  // namespace convbf

#endif  // CONVBF_WPE_HPP
