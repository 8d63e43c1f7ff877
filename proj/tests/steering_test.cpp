// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "convbf/steering.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "test_support.hpp"

using namespace convbf;
using convbf::testing::make_spectrogram;
using convbf::testing::random_complex_matrix;
using convbf::testing::random_complex_vector;
using convbf::testing::tiny_config;

namespace {

double cosine_similarity(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

NoiseMask simple_mask(int frames, int lead_frames, int trail_frames) {
  NoiseMask mask;
  mask.noise_frames.assign(static_cast<size_t>(frames), 0);
  for (int t = 0; t < lead_frames; ++t) mask.noise_frames[static_cast<size_t>(t)] = 1;
  for (int t = frames - trail_frames; t < frames; ++t)
    mask.noise_frames[static_cast<size_t>(t)] = 1;
  return mask;
}

}  // namespace

TEST_SUITE("steering") {

TEST_CASE("margin mask counts for a 6 s utterance") {
  const StftConfig config;  // 16 kHz, 512/128
  const std::int64_t samples = 96000;
  const int frames = num_analysis_frames(samples, config);
  REQUIRE(frames == 753);

  const NoiseMask mask =
      noise_mask_from_margins(frames, config, 0.225, 0.075, samples);

  int leading = 0;
  while (leading < frames && mask.is_noise(leading)) ++leading;
  int trailing = 0;
  while (trailing < frames && mask.is_noise(frames - 1 - trailing)) ++trailing;

  CHECK(leading == 28);
  CHECK(trailing == 9);
  CHECK(mask.noise_count() == 37);
}

TEST_CASE("empty margins and all-noise inputs are rejected") {
  const StftConfig config;
  CHECK_THROWS_AS(noise_mask_from_margins(753, config, 0.0, 0.0, 96000),
                  InvalidInput);
  // margins so wide that no speech frame remains (the trailing margin also
  // has to catch the frames overhanging the signal end)
  CHECK_THROWS_AS(noise_mask_from_margins(753, config, 6.0, 0.1, 96000),
                  InvalidInput);
}

TEST_CASE("rank-1 noise-free scenario recovers the direct-path vector") {
  Rng rng(1);
  const int m = 4;
  const Eigen::VectorXcd a = random_complex_vector(rng, m);

  Eigen::MatrixXcd phi_x = Eigen::MatrixXcd::Zero(m, m);
  const int frames = 400;
  for (int t = 0; t < frames; ++t) {
    const Eigen::VectorXcd d = a * rng.cnormal();
    phi_x += d * d.adjoint() / frames;
  }
  const SteeringVector v =
      estimate_steering_from_cov(phi_x, Eigen::MatrixXcd::Identity(m, m));
  CHECK(cosine_similarity(v.v, a) > 0.999);
}

TEST_CASE("no speech energy above the noise is degenerate") {
  Rng rng(2);
  const Eigen::MatrixXcd phi = convbf::testing::random_hpd(rng, 3);
  CHECK_THROWS_AS(estimate_steering_from_cov(phi, phi), DegenerateSteering);
}

TEST_CASE("single channel always yields the unit steering vector") {
  Eigen::MatrixXcd phi_x(1, 1), phi_n(1, 1);
  phi_x << 5.0;
  phi_n << 1.0;
  const SteeringVector v = estimate_steering_from_cov(phi_x, phi_n);
  REQUIRE(v.size() == 1);
  CHECK(v.v[0] == std::complex<double>(1.0, 0.0));
}

TEST_CASE("power-of-two input scaling leaves the estimate bit-identical") {
  Rng rng(3);
  const int m = 3;
  const int frames = 64;
  Eigen::MatrixXcd data = random_complex_matrix(rng, m, frames);
  const Eigen::VectorXcd a = random_complex_vector(rng, m);
  for (int t = 8; t < frames - 8; ++t) data.col(t) += a * (3.0 * rng.cnormal());
  const NoiseMask mask = simple_mask(frames, 8, 8);

  const SteeringVector v1 = estimate_steering(data, mask);
  const SteeringVector v4 = estimate_steering((4.0 * data).eval(), mask);
  REQUIRE(v1.size() == v4.size());
  for (int i = 0; i < m; ++i) CHECK(v1.v[i] == v4.v[i]);
}

TEST_CASE("whitening with an identity noise covariance matches a plain eigenvector") {
  Rng rng(4);
  const int m = 4;
  const Eigen::MatrixXcd phi_x = convbf::testing::random_hpd(rng, m, 0.5);
  const SteeringVector v =
      estimate_steering_from_cov(phi_x, Eigen::MatrixXcd::Identity(m, m));

  Eigen::MatrixXcd shifted = phi_x - Eigen::MatrixXcd::Identity(m, m);
  shifted = 0.5 * (shifted + shifted.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(shifted);
  const Eigen::VectorXcd principal = eig.eigenvectors().col(m - 1);
  CHECK(cosine_similarity(v.v, principal) > 1.0 - 1e-10);
}

TEST_CASE("normalization invariants hold for every return") {
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform_index(5));
    const int frames = 40 + static_cast<int>(rng.uniform_index(40));
    Eigen::MatrixXcd data = 0.1 * random_complex_matrix(rng, m, frames);
    const Eigen::VectorXcd a = random_complex_vector(rng, m);
    for (int t = 6; t < frames - 6; ++t) data.col(t) += a * (2.0 * rng.cnormal());
    const NoiseMask mask = simple_mask(frames, 6, 6);

    SteeringVector v;
    try {
      v = estimate_steering(data, mask);
    } catch (const DegenerateSteering&) {
      continue;  // legitimately rejected draw
    }
    CHECK(v.v.norm() == doctest::Approx(std::sqrt(double(m))).epsilon(1e-12));
    CHECK(v.v[0].imag() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(v.v[0].real() > 0.0);
  }
}

TEST_CASE("spectrogram entry point matches the per-bin estimate") {
  Rng rng(6);
  const StftConfig config = tiny_config(8);
  const int m = 2;
  const int frames = 50;
  std::vector<Eigen::MatrixXcd> bins;
  for (int f = 0; f < config.num_bins(); ++f) {
    Eigen::MatrixXcd data = 0.05 * random_complex_matrix(rng, m, frames);
    const Eigen::VectorXcd a = random_complex_vector(rng, m);
    for (int t = 5; t < frames - 5; ++t) data.col(t) += a * rng.cnormal();
    bins.push_back(data);
  }
  const MultichannelSpectrogram spec = make_spectrogram(bins, config);
  const NoiseMask mask = simple_mask(frames, 5, 5);

  const SteeringVector direct = estimate_steering(spec.bins[2], mask);
  const SteeringVector via_spec = estimate_steering(spec, mask, 2);
  CHECK((direct.v - via_spec.v).norm() == 0.0);

  NoiseMask tiny = simple_mask(frames, 1, 0);
  CHECK_THROWS_AS(estimate_steering(spec, tiny, 0), InvalidInput);
}

}  // TEST_SUITE
