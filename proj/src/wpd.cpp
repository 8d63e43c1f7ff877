// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "convbf/wpd.hpp"

#include <cmath>
#include <string>

#include "convbf/parallel.hpp"
#include "convbf/wpe.hpp"

namespace convbf {

namespace {

// Floor used for bins with exactly zero input energy, where a relative
// floor would vanish.
constexpr double kSilentBinFloor = 1e-30;

[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const DegenerateSteering& e) {
    throw DegenerateSteering(context + e.what());
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(context + e.what());
  } catch (const InvalidInput& e) {
    throw InvalidInput(context + e.what());
  }
}

}  // namespace

std::vector<Band> default_bands() {
  return {{0.0, 800.0, 12}, {800.0, 1500.0, 10}, {1500.0, 8000.0, 6}};
}

void WpdConfig::validate(const StftConfig& stft) const {
  stft.validate();
  if (iterations < 1) throw InvalidInput("wpd: iterations must be >= 1");
  if (delay < 1) throw InvalidInput("wpd: delay must be >= 1");
  if (loading_rel < 0.0) throw InvalidInput("wpd: negative loading");
  if (!(sigma_floor_rel > 0.0)) throw InvalidInput("wpd: sigma floor must be positive");
  if (bands.empty()) throw InvalidInput("wpd: no bands");
  if (bands.front().low_hz != 0.0)
    throw InvalidInput("wpd: bands must start at 0 Hz");
  const double nyquist = 0.5 * stft.sample_rate_hz;
  for (size_t i = 0; i < bands.size(); ++i) {
    if (!(bands[i].high_hz > bands[i].low_hz))
      throw InvalidInput("wpd: empty band");
    if (i + 1 < bands.size() && bands[i].high_hz != bands[i + 1].low_hz)
      throw InvalidInput("wpd: bands must be contiguous");
    if (!mpdr_mode && bands[i].filter_len < delay)
      throw InvalidInput("wpd: filter_len must be >= delay in every band");
  }
  if (bands.back().high_hz < nyquist)
    throw InvalidInput("wpd: bands must cover up to the Nyquist frequency");
}

int WpdConfig::band_index(double hz) const {
  for (size_t i = 0; i < bands.size(); ++i) {
    if (hz <= bands[i].high_hz) return static_cast<int>(i);
  }
  return static_cast<int>(bands.size()) - 1;
}

StackingLayout WpdConfig::layout_for_bin(int bin, const StftConfig& stft,
                                         int num_channels) const {
  StackingLayout layout;
  layout.num_channels = num_channels;
  layout.delay = delay;
  layout.filter_len = mpdr_mode
                          ? delay - 1
                          : bands[static_cast<size_t>(band_index(
                                stft.bin_hz(bin)))].filter_len;
  return layout;
}

bool IterationDiagnostics::objective_monotone(double slack) const {
  for (int f = 0; f < objective.cols(); ++f) {
    for (int it = 1; it < objective.rows(); ++it) {
      if (objective(it, f) < objective(it - 1, f) - slack) return false;
    }
  }
  return true;
}

ConvolutionalWeights solve_weights(const CovarianceSet& cov,
                                   const SteeringVector& v,
                                   const StackingLayout& layout) {
  if (!cov.factorized) throw InvalidInput("solve_weights: covariance not factorized");
  if (cov.layout != layout) throw InvalidInput("solve_weights: layout mismatch");
  v.validate();
  if (v.size() != layout.num_channels)
    throw InvalidInput("solve_weights: steering dimension mismatch");
  const std::complex<double> ref = v.reference();
  if (std::abs(ref) <= 1e-12 * v.v.norm())
    throw InvalidInput("solve_weights: degenerate reference-channel entry");

  const int d = layout.stacked_dim();
  Eigen::VectorXcd vbar = Eigen::VectorXcd::Zero(d);
  vbar.head(layout.num_channels) = v.v / ref;

  const Eigen::VectorXcd numer = cov.R_inv * vbar;
  const double denom = vbar.dot(numer).real();
  if (!std::isfinite(denom) || denom <= 0.0)
    throw NumericalFailure("solve_weights: non-positive normalization");

  ConvolutionalWeights weights;
  weights.layout = layout;
  weights.wbar = numer / denom;
  if (!weights.wbar.allFinite())
    throw NumericalFailure("solve_weights: non-finite weights");
  return weights;
}

PowerEstimate update_sigma(const Eigen::VectorXcd& dhat, double floor) {
  if (!dhat.allFinite()) throw InvalidInput("update_sigma: non-finite input");
  return PowerEstimate::floored(dhat.cwiseAbs2(), floor);
}

namespace {

struct BinOutcome {
  Eigen::RowVectorXcd enhanced;
};

// Full per-bin solve, all iterations. Bins are independent: steering (even
// per-iteration WPE-based steering) only needs this bin's data.
BinOutcome solve_bin(const Eigen::MatrixXcd& data, const WpdConfig& config,
                     const StackingLayout& layout, const NoiseMask* mask,
                     const SteeringVector* injected,
                     IterationDiagnostics& diag, int f) {
  const int m = static_cast<int>(data.rows());
  const int num_frames = static_cast<int>(data.cols());
  const int iters = config.iterations;

  diag.underdetermined[static_cast<size_t>(f)] =
      num_frames < layout.stacked_dim() ? 1 : 0;

  const double mean_power = data.cwiseAbs2().mean();
  if (mean_power == 0.0) {
    // Silent bin: nothing to estimate; the output is silent too.
    const double floor = config.mpdr_mode ? 1.0 : kSilentBinFloor;
    for (int it = 0; it < iters; ++it) {
      diag.objective(it, f) = -num_frames * std::log(floor);
      diag.constraint_residual(it, f) = 0.0;
      diag.sigma2[static_cast<size_t>(it)].row(f).setConstant(floor);
    }
    return {Eigen::RowVectorXcd::Zero(num_frames)};
  }

  const bool freeze_sigma = config.mpdr_mode;
  const double floor =
      freeze_sigma ? 1.0 : config.sigma_floor_rel * mean_power;

  PowerEstimate sigma2;
  if (freeze_sigma) {
    sigma2.floor = 1.0;
    sigma2.sigma2 = Eigen::VectorXd::Ones(num_frames);
  } else {
    // Initial value: power of the captured signal, mean over channels.
    sigma2 = PowerEstimate::floored(
        data.cwiseAbs2().colwise().sum().transpose() / m, floor);
  }

  SteeringVector v;
  const bool refresh_steering =
      injected == nullptr && config.steering_mode == SteeringMode::FromWpePerIteration;
  if (injected != nullptr) {
    v = *injected;
  } else if (!refresh_steering) {
    v = estimate_steering(data, *mask);
  }

  const Eigen::MatrixXcd xbar = stacked_matrix(data, layout);
  Eigen::RowVectorXcd dhat;
  for (int it = 0; it < iters; ++it) {
    try {
      CovarianceSet cov = accumulate_from_stacked(xbar, sigma2, layout);
      cov.factorize(config.loading_rel);

      if (refresh_steering) {
        const PredictionFilter filter = wpe_filter(cov);
        Eigen::MatrixXcd derev = data;
        if (layout.delayed_dim() > 0)
          derev -= filter.G.adjoint() * xbar.bottomRows(layout.delayed_dim());
        v = estimate_steering(derev, *mask);
      }

      const ConvolutionalWeights weights = solve_weights(cov, v, layout);
      dhat = weights.wbar.adjoint() * xbar;

      if (!freeze_sigma)
        sigma2 = update_sigma(dhat.transpose(), floor);

      double objective = 0.0;
      for (int t = 0; t < num_frames; ++t) {
        objective -= std::norm(dhat[t]) / sigma2.sigma2[t];
        objective -= std::log(sigma2.sigma2[t]);
      }
      diag.objective(it, f) = objective;
      diag.constraint_residual(it, f) =
          std::abs(weights.current_frame_block().dot(v.v) - v.reference()) /
          std::abs(v.reference());
      diag.sigma2[static_cast<size_t>(it)].row(f) = sigma2.sigma2.transpose();
    } catch (const Error&) {
      rethrow_with_context("iteration " + std::to_string(it + 1) + ": ");
    }
  }
  return {dhat};
}

EnhancementResult run_impl(const MultichannelSpectrogram& spec,
                           const WpdConfig& config, const NoiseMask* mask,
                           const std::vector<SteeringVector>* injected,
                           int num_threads) {
  spec.validate();
  config.validate(spec.config);
  const int num_bins = spec.num_bins();
  const int num_frames = spec.num_frames();
  const int m = spec.num_channels();

  if (m < 2) throw InvalidInput("beamforming requires >=2 channels");
  if (injected == nullptr) {
    if (mask == nullptr)
      throw InvalidInput("wpd: steering requires a noise mask");
    if (mask->num_frames() != num_frames)
      throw InvalidInput("wpd: mask length does not match spectrogram");
    if (mask->noise_count() < m || mask->speech_count() < m)
      throw InvalidInput("wpd: mask needs at least M noise and M speech frames");
  } else {
    if (static_cast<int>(injected->size()) != num_bins)
      throw InvalidInput("wpd: one steering vector per bin required");
    for (const auto& s : *injected) {
      if (s.size() != m)
        throw InvalidInput("wpd: steering dimension does not match channels");
    }
  }

  EnhancementResult result;
  auto& diag = result.diagnostics;
  diag.objective.setZero(config.iterations, num_bins);
  diag.constraint_residual.setZero(config.iterations, num_bins);
  diag.sigma2.assign(static_cast<size_t>(config.iterations),
                     Eigen::MatrixXd::Zero(num_bins, num_frames));
  diag.underdetermined.assign(static_cast<size_t>(num_bins), 0);

  result.enhanced.config = spec.config;
  result.enhanced.source_samples = spec.source_samples;
  result.enhanced.bins.assign(static_cast<size_t>(num_bins),
                              Eigen::MatrixXcd(1, num_frames));

  parallel_for(num_bins, num_threads, [&](int f) {
    try {
      const StackingLayout layout =
          config.layout_for_bin(f, spec.config, m);
      const SteeringVector* bin_steering =
          injected ? &(*injected)[static_cast<size_t>(f)] : nullptr;
      BinOutcome out = solve_bin(spec.bins[static_cast<size_t>(f)], config,
                                 layout, mask, bin_steering, diag, f);
      result.enhanced.bins[static_cast<size_t>(f)] = out.enhanced;
    } catch (const Error&) {
      rethrow_with_context("bin " + std::to_string(f) + ": ");
    }
  });

  result.waveform = synthesize(result.enhanced, spec.config);
  return result;
}

}  // namespace

EnhancementResult run_wpd(const MultichannelSpectrogram& spec,
                          const WpdConfig& config, const NoiseMask& mask,
                          int num_threads) {
  return run_impl(spec, config, &mask, nullptr, num_threads);
}

EnhancementResult run_wpd(const MultichannelSpectrogram& spec,
                          const WpdConfig& config,
                          const std::vector<SteeringVector>& steering,
                          int num_threads) {
  return run_impl(spec, config, nullptr, &steering, num_threads);
}

EnhancementResult run_mpdr(const MultichannelSpectrogram& spec,
                           const WpdConfig& config, const NoiseMask& mask,
                           int num_threads) {
  WpdConfig mpdr = config;
  mpdr.mpdr_mode = true;
  mpdr.steering_mode = SteeringMode::FromInput;
  return run_impl(spec, mpdr, &mask, nullptr, num_threads);
}

EnhancementResult run_cascade_wpe_mpdr(const MultichannelSpectrogram& spec,
                                       const WpdConfig& config,
                                       const NoiseMask& mask,
                                       int num_threads) {
  spec.validate();
  config.validate(spec.config);
  if (spec.num_channels() < 2)
    throw InvalidInput("wpe+mpdr requires >=2 channels");

  std::vector<StackingLayout> layouts;
  layouts.reserve(static_cast<size_t>(spec.num_bins()));
  for (int f = 0; f < spec.num_bins(); ++f)
    layouts.push_back(config.layout_for_bin(f, spec.config, spec.num_channels()));

  const WpeRunResult wpe = run_wpe(spec, layouts, config.iterations,
                                   config.loading_rel, config.sigma_floor_rel,
                                   num_threads);
  return run_mpdr(wpe.derev, config, mask, num_threads);
}

}  // namespace convbf
