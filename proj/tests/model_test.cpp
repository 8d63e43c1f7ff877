// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "convbf/model.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>

#include "test_support.hpp"

using namespace convbf;
using convbf::testing::make_spectrogram;
using convbf::testing::random_complex_matrix;
using convbf::testing::random_complex_vector;
using convbf::testing::tiny_config;

namespace {

// Naive reference indexer: walks the tap list one frame at a time.
Eigen::VectorXcd naive_stack(const Eigen::MatrixXcd& data,
                             const StackingLayout& layout, int t) {
  const int m = layout.num_channels;
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(layout.stacked_dim());
  int block = 0;
  auto put = [&](int frame) {
    if (frame >= 0 && frame < data.cols())
      out.segment(block * m, m) = data.col(frame);
    ++block;
  };
  put(t);
  for (int tau = layout.delay; tau <= layout.filter_len; ++tau) put(t - tau);
  return out;
}

MultichannelSpectrogram random_spec(Rng& rng, int channels, int frames,
                                    int fft_len = 8) {
  std::vector<Eigen::MatrixXcd> bins;
  for (int f = 0; f < fft_len / 2 + 1; ++f)
    bins.push_back(random_complex_matrix(rng, channels, frames));
  return make_spectrogram(bins, tiny_config(fft_len));
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("stack zero-prefix at the first frame") {
  Rng rng(1);
  const MultichannelSpectrogram spec = random_spec(rng, 2, 6);
  const StackingLayout layout{2, 1, 1};
  const StackedObservation obs = stack(spec, 0, 0, layout);
  REQUIRE(obs.xbar.size() == 4);
  CHECK(obs.xbar[0] == spec.at(0, 0, 0));
  CHECK(obs.xbar[1] == spec.at(0, 0, 1));
  CHECK(obs.xbar[2] == std::complex<double>(0.0, 0.0));
  CHECK(obs.xbar[3] == std::complex<double>(0.0, 0.0));
}

TEST_CASE("stacked dimension for the 8-mic banded configuration") {
  const StackingLayout layout{8, 4, 12};
  CHECK(layout.stacked_dim() == 80);
  CHECK(layout.delayed_dim() == 72);
}

TEST_CASE("stack matches the naive indexer") {
  Rng rng(2);
  const MultichannelSpectrogram spec = random_spec(rng, 1, 8);
  const StackingLayout layout{1, 2, 3};
  const StackedObservation obs = stack(spec, 1, 5, layout);
  REQUIRE(obs.xbar.size() == 3);
  CHECK(obs.xbar[0] == spec.at(5, 1, 0));
  CHECK(obs.xbar[1] == spec.at(3, 1, 0));
  CHECK(obs.xbar[2] == spec.at(2, 1, 0));

  const Eigen::VectorXcd oracle = naive_stack(spec.bins[1], layout, 5);
  CHECK((obs.xbar - oracle).norm() == 0.0);
}

TEST_CASE("stack property: index map recovers in-range frames") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + static_cast<int>(rng.uniform_index(4));
    const int frames = 4 + static_cast<int>(rng.uniform_index(12));
    const int delay = 1 + static_cast<int>(rng.uniform_index(3));
    const int filter_len = delay + static_cast<int>(rng.uniform_index(4));
    const StackingLayout layout{m, delay, filter_len};
    const Eigen::MatrixXcd data = random_complex_matrix(rng, m, frames);

    const int t = static_cast<int>(rng.uniform_index(frames));
    const Eigen::MatrixXcd stacked = stacked_matrix(data, layout);
    const std::vector<int> sources = stack_source_frames(layout, t);
    for (size_t j = 0; j < sources.size(); ++j) {
      const Eigen::VectorXcd block =
          stacked.col(t).segment(static_cast<int>(j) * m, m);
      if (sources[j] >= 0) {
        CHECK((block - data.col(sources[j])).norm() == 0.0);
      } else {
        CHECK(block.norm() == 0.0);
      }
    }
    // Column t of the batched stacking equals the single-frame stack.
    CHECK((stacked.col(t) - naive_stack(data, layout, t)).norm() == 0.0);
  }
}

TEST_CASE("apply_beamformer identity and zero") {
  Rng rng(4);
  const StackingLayout layout{3, 1, 2};
  StackedObservation obs;
  obs.layout = layout;
  obs.xbar = random_complex_vector(rng, layout.stacked_dim());

  ConvolutionalWeights identity;
  identity.layout = layout;
  identity.wbar = Eigen::VectorXcd::Zero(layout.stacked_dim());
  identity.wbar[0] = 1.0;
  CHECK(apply_beamformer(identity, obs) == obs.xbar[0]);

  ConvolutionalWeights zero;
  zero.layout = layout;
  zero.wbar = Eigen::VectorXcd::Zero(layout.stacked_dim());
  CHECK(apply_beamformer(zero, obs) == std::complex<double>(0.0, 0.0));
}

TEST_CASE("apply_beamformer matches the conjugate-dot loop") {
  Rng rng(5);
  const StackingLayout layout{2, 1, 2};
  REQUIRE(layout.stacked_dim() == 6);
  ConvolutionalWeights w;
  w.layout = layout;
  w.wbar = random_complex_vector(rng, 6);
  StackedObservation obs;
  obs.layout = layout;
  obs.xbar = random_complex_vector(rng, 6);

  std::complex<double> oracle = 0.0;
  for (int i = 0; i < 6; ++i) oracle += std::conj(w.wbar[i]) * obs.xbar[i];
  CHECK(std::abs(apply_beamformer(w, obs) - oracle) < 1e-12);

  StackedObservation smaller;
  smaller.layout = layout;
  smaller.xbar = random_complex_vector(rng, 4);
  CHECK_THROWS_AS(apply_beamformer(w, smaller), InvalidInput);
}

TEST_CASE("log_likelihood closed forms") {
  Rng rng(6);
  const int frames = 10;
  const MultichannelSpectrogram spec = random_spec(rng, 2, frames);
  const StackingLayout layout{2, 1, 1};
  SteeringVector v;
  v.v = Eigen::VectorXcd::Ones(2);

  ConvolutionalWeights zero;
  zero.layout = layout;
  zero.wbar = Eigen::VectorXcd::Zero(layout.stacked_dim());

  PowerEstimate ones = PowerEstimate::floored(Eigen::VectorXd::Ones(frames), 1.0);
  CHECK(log_likelihood(zero, spec, ones, v, layout, 0) == doctest::Approx(0.0));

  PowerEstimate e = PowerEstimate::floored(
      Eigen::VectorXd::Constant(frames, std::exp(1.0)), 1.0);
  CHECK(log_likelihood(zero, spec, e, v, layout, 0) ==
        doctest::Approx(-static_cast<double>(frames)));
}

TEST_CASE("log_likelihood matches the direct two-term summation") {
  Rng rng(7);
  const int frames = 16;
  const MultichannelSpectrogram spec = random_spec(rng, 2, frames);
  const StackingLayout layout{2, 1, 1};
  REQUIRE(layout.stacked_dim() == 4);

  ConvolutionalWeights w;
  w.layout = layout;
  w.wbar = random_complex_vector(rng, 4);
  SteeringVector v;
  v.v = random_complex_vector(rng, 2);
  Eigen::VectorXd raw(frames);
  for (int t = 0; t < frames; ++t) raw[t] = 0.5 + rng.uniform();
  const PowerEstimate sigma2 = PowerEstimate::floored(raw, 1e-12);

  double oracle = 0.0;
  for (int t = 0; t < frames; ++t) {
    std::complex<double> y = 0.0;
    const Eigen::VectorXcd xbar = naive_stack(spec.bins[2], layout, t);
    for (int i = 0; i < 4; ++i) y += std::conj(w.wbar[i]) * xbar[i];
    oracle -= std::norm(y) / sigma2.sigma2[t];
    oracle -= std::log(sigma2.sigma2[t]);
  }
  CHECK(log_likelihood(w, spec, sigma2, v, layout, 2) ==
        doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("log_likelihood is invariant under a global phase rotation") {
  Rng rng(8);
  const int frames = 12;
  MultichannelSpectrogram spec = random_spec(rng, 3, frames);
  const StackingLayout layout{3, 2, 3};

  ConvolutionalWeights w;
  w.layout = layout;
  w.wbar = random_complex_vector(rng, layout.stacked_dim());
  SteeringVector v;
  v.v = random_complex_vector(rng, 3);
  Eigen::VectorXd raw(frames);
  for (int t = 0; t < frames; ++t) raw[t] = 0.5 + rng.uniform();
  const PowerEstimate sigma2 = PowerEstimate::floored(raw, 1e-12);

  const double before = log_likelihood(w, spec, sigma2, v, layout, 1);

  const std::complex<double> rot = std::exp(std::complex<double>(0.0, 0.7));
  for (auto& bin : spec.bins) bin *= rot;
  ConvolutionalWeights w_rot = w;
  w_rot.wbar *= rot;
  const double after = log_likelihood(w_rot, spec, sigma2, v, layout, 1);
  CHECK(after == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("validation errors") {
  CHECK_THROWS_AS((StackingLayout{0, 1, 1}.validate()), InvalidInput);
  CHECK_THROWS_AS((StackingLayout{2, 0, 1}.validate()), InvalidInput);
  CHECK_THROWS_AS((StackingLayout{2, 3, 1}.validate()), InvalidInput);
  CHECK_NOTHROW((StackingLayout{2, 3, 2}.validate()));  // empty tap range

  Rng rng(9);
  const MultichannelSpectrogram spec = random_spec(rng, 2, 4);
  const StackingLayout layout{2, 1, 1};
  CHECK_THROWS_AS(stack(spec, 0, 4, layout), InvalidInput);
  CHECK_THROWS_AS(stack(spec, 99, 0, layout), InvalidInput);

  PowerEstimate bad;
  bad.floor = 1.0;
  bad.sigma2 = Eigen::VectorXd::Constant(3, 0.5);
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

}  // TEST_SUITE
