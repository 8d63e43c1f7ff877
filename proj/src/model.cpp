// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "convbf/model.hpp"

#include <cmath>

namespace convbf {

void SteeringVector::validate() const {
  if (v.size() < 1) throw InvalidInput("steering vector: empty");
  if (!v.allFinite()) throw InvalidInput("steering vector: non-finite");
  if (v.norm() == 0.0) throw InvalidInput("steering vector: zero vector");
}

void StackingLayout::validate() const {
  if (num_channels < 1) throw InvalidInput("layout: num_channels must be >= 1");
  if (delay < 1) throw InvalidInput("layout: delay must be >= 1");
  if (filter_len < delay - 1)
    throw InvalidInput("layout: filter_len must be >= delay-1");
}

void ConvolutionalWeights::validate() const {
  layout.validate();
  if (wbar.size() != layout.stacked_dim())
    throw InvalidInput("weights: length does not match layout");
  if (!wbar.allFinite()) throw InvalidInput("weights: non-finite");
}

PowerEstimate PowerEstimate::floored(const Eigen::VectorXd& raw_power,
                                     double floor) {
  if (!(floor > 0.0)) throw InvalidInput("power estimate: floor must be positive");
  PowerEstimate out;
  out.floor = floor;
  out.sigma2 = raw_power.cwiseMax(floor);
  out.validate();
  return out;
}

void PowerEstimate::validate() const {
  if (!(floor > 0.0)) throw InvalidInput("power estimate: floor must be positive");
  if (!sigma2.allFinite()) throw InvalidInput("power estimate: non-finite");
  if ((sigma2.array() < floor).any())
    throw InvalidInput("power estimate: values below floor");
}

std::vector<int> stack_source_frames(const StackingLayout& layout, int t) {
  std::vector<int> frames;
  frames.reserve(static_cast<size_t>(layout.num_taps() + 1));
  frames.push_back(t);
  for (int tau = layout.delay; tau <= layout.filter_len; ++tau)
    frames.push_back(t - tau);
  return frames;
}

StackedObservation stack(const MultichannelSpectrogram& spec, int bin, int t,
                         const StackingLayout& layout) {
  layout.validate();
  if (bin < 0 || bin >= spec.num_bins())
    throw InvalidInput("stack: bin out of range");
  if (t < 0 || t >= spec.num_frames())
    throw InvalidInput("stack: frame out of range");
  if (spec.num_channels() != layout.num_channels)
    throw InvalidInput("stack: channel count does not match layout");

  const Eigen::MatrixXcd& data = spec.bins[static_cast<size_t>(bin)];
  const int m = layout.num_channels;
  StackedObservation obs;
  obs.layout = layout;
  obs.xbar = Eigen::VectorXcd::Zero(layout.stacked_dim());
  const std::vector<int> sources = stack_source_frames(layout, t);
  for (size_t j = 0; j < sources.size(); ++j) {
    if (sources[j] >= 0)
      obs.xbar.segment(static_cast<int>(j) * m, m) = data.col(sources[j]);
  }
  return obs;
}

Eigen::MatrixXcd stacked_matrix(const Eigen::MatrixXcd& bin_data,
                                const StackingLayout& layout) {
  layout.validate();
  if (bin_data.rows() != layout.num_channels)
    throw InvalidInput("stacked_matrix: channel count does not match layout");
  const int m = layout.num_channels;
  const int num_frames = static_cast<int>(bin_data.cols());
  const int blocks = layout.num_taps() + 1;

  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(layout.stacked_dim(), num_frames);
  out.topRows(m) = bin_data;
  for (int j = 1; j < blocks; ++j) {
    const int tau = layout.delay + j - 1;
    const int count = num_frames - tau;
    if (count > 0)
      out.block(j * m, tau, m, count) = bin_data.leftCols(count);
  }
  return out;
}

std::complex<double> apply_beamformer(const ConvolutionalWeights& weights,
                                      const StackedObservation& obs) {
  if (weights.wbar.size() != obs.xbar.size())
    throw InvalidInput("apply_beamformer: dimension mismatch");
  return weights.wbar.dot(obs.xbar);  // Eigen dot conjugates the left side
}

double log_likelihood(const ConvolutionalWeights& weights,
                      const MultichannelSpectrogram& spec,
                      const PowerEstimate& sigma2, const SteeringVector& v,
                      const StackingLayout& layout, int bin) {
  weights.validate();
  v.validate();
  if (weights.layout != layout)
    throw InvalidInput("log_likelihood: weights layout mismatch");
  if (v.size() != layout.num_channels)
    throw InvalidInput("log_likelihood: steering dimension mismatch");
  if (bin < 0 || bin >= spec.num_bins())
    throw InvalidInput("log_likelihood: bin out of range");
  if (sigma2.sigma2.size() != spec.num_frames())
    throw InvalidInput("log_likelihood: sigma2 length mismatch");
  sigma2.validate();

  const Eigen::MatrixXcd xbar =
      stacked_matrix(spec.bins[static_cast<size_t>(bin)], layout);
  const Eigen::RowVectorXcd y = weights.wbar.adjoint() * xbar;

  double value = 0.0;
  for (int t = 0; t < y.size(); ++t) {
    value -= std::norm(y[t]) / sigma2.sigma2[t];
    value -= std::log(sigma2.sigma2[t]);
  }
  return value;
}

}  // namespace convbf
