// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "convbf/wpe.hpp"

#include <cmath>

#include "convbf/parallel.hpp"

namespace convbf {

PredictionFilter wpe_filter(const CovarianceSet& cov) {
  if (!cov.factorized)
    throw InvalidInput("wpe: covariance must be factorized first");
  PredictionFilter filter;
  filter.layout = cov.layout;
  filter.G = cov.R_tilde_inv * cov.cross_block();
  if (!filter.G.allFinite()) throw NumericalFailure("wpe: non-finite filter");
  return filter;
}

Eigen::MatrixXcd dereverberate_bin(const Eigen::MatrixXcd& bin_data,
                                   const PredictionFilter& filter) {
  const int m = filter.layout.num_channels;
  if (bin_data.rows() != m)
    throw InvalidInput("wpe: channel count does not match filter layout");
  if (filter.layout.delayed_dim() == 0) return bin_data;

  const Eigen::MatrixXcd xbar = stacked_matrix(bin_data, filter.layout);
  return bin_data - filter.G.adjoint() * xbar.bottomRows(filter.layout.delayed_dim());
}

MultichannelSpectrogram dereverberate(const MultichannelSpectrogram& spec,
                                      const std::vector<PredictionFilter>& filters) {
  if (static_cast<int>(filters.size()) != spec.num_bins())
    throw InvalidInput("wpe: one filter per bin required");
  MultichannelSpectrogram out;
  out.config = spec.config;
  out.source_samples = spec.source_samples;
  out.bins.resize(spec.bins.size());
  for (int f = 0; f < spec.num_bins(); ++f)
    out.bins[static_cast<size_t>(f)] = dereverberate_bin(
        spec.bins[static_cast<size_t>(f)], filters[static_cast<size_t>(f)]);
  return out;
}

WpeRunResult run_wpe(const MultichannelSpectrogram& spec,
                     const std::vector<StackingLayout>& layout_per_bin,
                     int iterations, double loading_rel, double sigma_floor_rel,
                     int num_threads) {
  spec.validate();
  if (static_cast<int>(layout_per_bin.size()) != spec.num_bins())
    throw InvalidInput("wpe: one layout per bin required");
  if (iterations < 1) throw InvalidInput("wpe: iterations must be >= 1");

  const int num_bins = spec.num_bins();
  const int num_frames = spec.num_frames();
  const int m = spec.num_channels();

  WpeRunResult result;
  result.derev = spec;
  result.filters.resize(static_cast<size_t>(num_bins));
  result.objective.setZero(iterations, num_bins);

  parallel_for(num_bins, num_threads, [&](int f) {
    const Eigen::MatrixXcd& data = spec.bins[static_cast<size_t>(f)];
    const StackingLayout& layout = layout_per_bin[static_cast<size_t>(f)];

    // Initial sigma2: power of the captured signal, mean over channels.
    Eigen::VectorXd power = data.cwiseAbs2().colwise().sum().transpose() / m;
    const double mean_power = power.mean();
    if (mean_power == 0.0) {
      // Silent bin: prediction has nothing to do.
      result.filters[static_cast<size_t>(f)] =
          PredictionFilter{Eigen::MatrixXcd::Zero(layout.delayed_dim(), m), layout};
      result.derev.bins[static_cast<size_t>(f)] = data;
      return;
    }
    const double floor = sigma_floor_rel * mean_power;
    PowerEstimate sigma2 = PowerEstimate::floored(power, floor);

    Eigen::MatrixXcd derev = data;
    PredictionFilter filter{Eigen::MatrixXcd::Zero(layout.delayed_dim(), m), layout};
    for (int it = 0; it < iterations; ++it) {
      CovarianceSet cov = accumulate_covariance(data, sigma2, layout);
      cov.factorize(loading_rel);
      filter = wpe_filter(cov);
      derev = dereverberate_bin(data, filter);

      power = derev.cwiseAbs2().colwise().sum().transpose() / m;
      sigma2 = PowerEstimate::floored(power, floor);

      double nll = 0.0;
      for (int t = 0; t < num_frames; ++t) {
        nll += derev.col(t).squaredNorm() / sigma2.sigma2[t];
        nll += m * std::log(sigma2.sigma2[t]);
      }
      result.objective(it, f) = -nll;
    }
    result.filters[static_cast<size_t>(f)] = filter;
    result.derev.bins[static_cast<size_t>(f)] = derev;
  });

  return result;
}

}  // namespace convbf
