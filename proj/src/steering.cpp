// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "convbf/steering.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace convbf {

namespace {
constexpr double kNoiseLoadingRel = 1e-6;
constexpr double kDegenerateEigenvalue = 1e-8;
constexpr double kDegenerateReference = 1e-8;
}  // namespace

int NoiseMask::noise_count() const {
  int n = 0;
  for (char c : noise_frames) n += (c != 0);
  return n;
}

NoiseMask noise_mask_from_margins(int num_frames, const StftConfig& config,
                                  double lead_s, double trail_s,
                                  std::int64_t source_samples) {
  config.validate();
  if (num_frames <= 0) throw InvalidInput("noise mask: no frames");
  if (lead_s < 0.0 || trail_s < 0.0)
    throw InvalidInput("noise mask: margins must be non-negative");

  const int n = config.frame_len_samples;
  const int s = config.shift_samples;
  const std::int64_t pad = config.left_pad();
  std::int64_t len = source_samples;
  if (len < 0)
    len = static_cast<std::int64_t>(num_frames - 1) * s + n - 2 * pad;

  const auto lead = static_cast<std::int64_t>(std::llround(lead_s * config.sample_rate_hz));
  const auto trail = static_cast<std::int64_t>(std::llround(trail_s * config.sample_rate_hz));

  NoiseMask mask;
  mask.noise_frames.assign(static_cast<size_t>(num_frames), 0);
  for (int t = 0; t < num_frames; ++t) {
    const std::int64_t start = static_cast<std::int64_t>(t) * s - pad;
    const std::int64_t end = start + n;
    if (end <= lead || start >= len - trail)
      mask.noise_frames[static_cast<size_t>(t)] = 1;
  }

  if (mask.noise_count() == 0)
    throw InvalidInput("noise mask: no noise-only frames inside the margins");
  if (mask.speech_count() == 0)
    throw InvalidInput("noise mask: no speech frames outside the margins");
  return mask;
}

SteeringVector estimate_steering_from_cov(const Eigen::MatrixXcd& phi_x,
                                          const Eigen::MatrixXcd& phi_n) {
  const int m = static_cast<int>(phi_x.rows());
  if (m < 1 || phi_x.cols() != m || phi_n.rows() != m || phi_n.cols() != m)
    throw InvalidInput("steering: covariance shape mismatch");

  if (m == 1) {
    SteeringVector v;
    v.v = Eigen::VectorXcd::Ones(1);
    return v;
  }

  const double tr = phi_n.trace().real();
  if (!(tr > 0.0))
    throw NumericalFailure("steering: noise covariance has no energy");
  Eigen::MatrixXcd loaded_n = phi_n;
  loaded_n.diagonal().array() += kNoiseLoadingRel * tr / m;

  Eigen::LLT<Eigen::MatrixXcd> llt(loaded_n);
  if (llt.info() != Eigen::Success)
    throw NumericalFailure("steering: noise covariance not positive definite");

  // Whitened difference L^{-1} (phi_x - phi_n) L^{-H}; scale-invariant by
  // construction, so thresholds below are absolute.
  const Eigen::MatrixXcd diff = phi_x - loaded_n;
  const Eigen::MatrixXcd half = llt.matrixL().solve(diff);
  Eigen::MatrixXcd whitened =
      llt.matrixL().solve(half.adjoint()).adjoint();
  whitened = 0.5 * (whitened + whitened.adjoint()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(whitened);
  if (eig.info() != Eigen::Success)
    throw NumericalFailure("steering: eigendecomposition failed");
  const double lambda_max = eig.eigenvalues()[m - 1];
  if (lambda_max <= kDegenerateEigenvalue)
    throw DegenerateSteering("steering: no direction above the noise floor");

  Eigen::VectorXcd v =
      llt.matrixL() * eig.eigenvectors().col(m - 1);

  const double norm = v.norm();
  const double ref_mag = std::abs(v[0]);
  if (ref_mag <= kDegenerateReference * norm)
    throw DegenerateSteering("steering: vanishing reference-channel component");

  // Fix the free scale: reference entry real-positive, ||v|| = sqrt(M).
  const std::complex<double> phase = v[0] / ref_mag;
  v *= std::conj(phase) * (std::sqrt(static_cast<double>(m)) / norm);

  SteeringVector out;
  out.v = std::move(v);
  return out;
}

SteeringVector estimate_steering(const Eigen::MatrixXcd& data,
                                 const NoiseMask& mask) {
  const int m = static_cast<int>(data.rows());
  const int num_frames = static_cast<int>(data.cols());
  if (mask.num_frames() != num_frames)
    throw InvalidInput("steering: mask length mismatch");
  if (mask.noise_count() < m || mask.speech_count() < m)
    throw InvalidInput("steering: mask needs at least M noise and M speech frames");

  Eigen::MatrixXcd phi_x = Eigen::MatrixXcd::Zero(m, m);
  Eigen::MatrixXcd phi_n = Eigen::MatrixXcd::Zero(m, m);
  for (int t = 0; t < num_frames; ++t) {
    auto& target = mask.is_noise(t) ? phi_n : phi_x;
    target.selfadjointView<Eigen::Lower>().rankUpdate(data.col(t));
  }
  phi_x = Eigen::MatrixXcd(phi_x.selfadjointView<Eigen::Lower>()) /
          static_cast<double>(mask.speech_count());
  phi_n = Eigen::MatrixXcd(phi_n.selfadjointView<Eigen::Lower>()) /
          static_cast<double>(mask.noise_count());
  return estimate_steering_from_cov(phi_x, phi_n);
}

SteeringVector estimate_steering(const MultichannelSpectrogram& derev,
                                 const NoiseMask& mask, int bin) {
  if (bin < 0 || bin >= derev.num_bins())
    throw InvalidInput("steering: bin out of range");
  return estimate_steering(derev.bins[static_cast<size_t>(bin)], mask);
}

}  // namespace convbf
