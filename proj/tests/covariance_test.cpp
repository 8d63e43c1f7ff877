// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "convbf/covariance.hpp"

#include <doctest.h>

#include <cmath>

#include "test_support.hpp"

using namespace convbf;
using convbf::testing::random_complex_matrix;
using convbf::testing::random_hpd;

namespace {

// Gauss-Jordan inverse with partial pivoting; independent of the Cholesky
// path under test.
Eigen::MatrixXcd gauss_jordan_inverse(Eigen::MatrixXcd a) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXcd inv = Eigen::MatrixXcd::Identity(n, n);
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    a.row(col).swap(a.row(pivot));
    inv.row(col).swap(inv.row(pivot));
    const std::complex<double> p = a(col, col);
    a.row(col) /= p;
    inv.row(col) /= p;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const std::complex<double> factor = a(r, col);
      a.row(r) -= factor * a.row(col);
      inv.row(r) -= factor * inv.row(col);
    }
  }
  return inv;
}

PowerEstimate unit_sigma(int frames) {
  return PowerEstimate::floored(Eigen::VectorXd::Ones(frames), 1.0);
}

}  // namespace

TEST_SUITE("covariance") {

TEST_CASE("single frame with a basis observation gives a rank-1 covariance") {
  const StackingLayout layout{2, 1, 1};  // D = 4
  Eigen::MatrixXcd data = Eigen::MatrixXcd::Zero(2, 1);
  data(0, 0) = 1.0;
  const CovarianceSet cov = accumulate_covariance(data, unit_sigma(1), layout);
  Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(4, 4);
  expected(0, 0) = 1.0;
  CHECK((cov.R - expected).norm() == 0.0);
}

TEST_CASE("scaling sigma2 by a power of two scales R exactly") {
  Rng rng(1);
  const StackingLayout layout{2, 1, 2};
  const Eigen::MatrixXcd data = random_complex_matrix(rng, 2, 16);
  Eigen::VectorXd raw(16);
  for (int t = 0; t < 16; ++t) raw[t] = 0.25 + rng.uniform();
  const PowerEstimate sigma = PowerEstimate::floored(raw, 1e-12);
  const PowerEstimate scaled = PowerEstimate::floored(4.0 * raw, 1e-12);

  const CovarianceSet a = accumulate_covariance(data, sigma, layout);
  const CovarianceSet b = accumulate_covariance(data, scaled, layout);
  CHECK((b.R * 4.0 - a.R).norm() == 0.0);
}

TEST_CASE("accumulation matches the naive double loop") {
  Rng rng(2);
  const StackingLayout layout{2, 1, 2};  // D = 6
  REQUIRE(layout.stacked_dim() == 6);
  const int frames = 32;
  const Eigen::MatrixXcd data = random_complex_matrix(rng, 2, frames);
  Eigen::VectorXd raw(frames);
  for (int t = 0; t < frames; ++t) raw[t] = 0.5 + rng.uniform();
  const PowerEstimate sigma = PowerEstimate::floored(raw, 1e-12);

  const CovarianceSet cov = accumulate_covariance(data, sigma, layout);

  const Eigen::MatrixXcd stacked = stacked_matrix(data, layout);
  Eigen::MatrixXcd naive = Eigen::MatrixXcd::Zero(6, 6);
  for (int t = 0; t < frames; ++t)
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j)
        naive(i, j) += stacked(i, t) * std::conj(stacked(j, t)) / raw[t];

  CHECK((cov.R - naive).norm() <= 1e-10 * naive.norm());
}

TEST_CASE("factorize of the identity is the identity") {
  const StackingLayout layout{2, 1, 1};
  CovarianceSet cov;
  cov.layout = layout;
  cov.R = Eigen::MatrixXcd::Identity(4, 4);
  cov.factorize(0.0);
  CHECK((cov.R_inv - Eigen::MatrixXcd::Identity(4, 4)).norm() < 1e-14);
  CHECK((cov.R_tilde_inv - Eigen::MatrixXcd::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("factorize matches a direct inverse") {
  Rng rng(3);
  const StackingLayout layout{4, 1, 0};  // D = 4, no taps
  CovarianceSet cov;
  cov.layout = layout;
  cov.R = random_hpd(rng, 4);
  cov.factorize(0.0);
  const Eigen::MatrixXcd oracle = gauss_jordan_inverse(cov.R);
  CHECK((cov.R_inv - oracle).norm() <= 1e-8 * oracle.norm());
}

TEST_CASE("diagonal loading makes a singular covariance factorizable") {
  const StackingLayout layout{3, 1, 0};
  Rng rng(4);
  const Eigen::VectorXcd x = convbf::testing::random_complex_vector(rng, 3);
  CovarianceSet cov;
  cov.layout = layout;
  cov.R = x * x.adjoint();  // rank 1
  cov.factorize(1e-3);
  CHECK(cov.R_inv.allFinite());
}

TEST_CASE("block inverse of a block-diagonal matrix") {
  Rng rng(5);
  const StackingLayout layout{2, 1, 1};  // M = 2, D = 4
  const Eigen::MatrixXcd a = random_hpd(rng, 2);
  const Eigen::MatrixXcd b = random_hpd(rng, 2);
  CovarianceSet cov;
  cov.layout = layout;
  cov.R = Eigen::MatrixXcd::Zero(4, 4);
  cov.R.topLeftCorner(2, 2) = a;
  cov.R.bottomRightCorner(2, 2) = b;
  cov.factorize(0.0);

  const Eigen::MatrixXcd inv = cov.block_inverse_from_submatrix();
  CHECK((inv.topLeftCorner(2, 2) - gauss_jordan_inverse(a)).norm() < 1e-10);
  CHECK((inv.bottomRightCorner(2, 2) - gauss_jordan_inverse(b)).norm() < 1e-10);
  CHECK(inv.topRightCorner(2, 2).norm() < 1e-12);
}

TEST_CASE("block inverse matches the direct inverse") {
  Rng rng(6);
  const StackingLayout layout{2, 1, 3};  // D = 8, M = 2
  REQUIRE(layout.stacked_dim() == 8);
  CovarianceSet cov;
  cov.layout = layout;
  cov.R = random_hpd(rng, 8);
  cov.factorize(0.0);
  const Eigen::MatrixXcd oracle = gauss_jordan_inverse(cov.R);
  CHECK((cov.block_inverse_from_submatrix() - oracle).norm() <=
        1e-8 * oracle.norm());
}

TEST_CASE("degenerate partition: M == D reduces to a plain inverse") {
  Rng rng(7);
  const StackingLayout layout{3, 1, 0};  // no taps: D == M == 3
  CovarianceSet cov;
  cov.layout = layout;
  cov.R = random_hpd(rng, 3);
  cov.factorize(0.0);
  CHECK(cov.R_tilde_inv.size() == 0);
  const Eigen::MatrixXcd inv = cov.block_inverse_from_submatrix();
  CHECK((inv - cov.R_inv).norm() <= 1e-10 * cov.R_inv.norm());
}

TEST_CASE("property: inverses invert and both routes agree") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 1 + static_cast<int>(rng.uniform_index(4));
    const int taps = static_cast<int>(rng.uniform_index(4));
    const StackingLayout layout{m, 1, taps};
    const int d = layout.stacked_dim();
    if (d > 24) continue;

    CovarianceSet cov;
    cov.layout = layout;
    cov.R = random_hpd(rng, d);
    cov.factorize(1e-10);

    Eigen::MatrixXcd loaded = cov.R;
    loaded.diagonal().array() += cov.loading;
    const double residual =
        (loaded * cov.R_inv - Eigen::MatrixXcd::Identity(d, d)).norm() /
        Eigen::MatrixXcd::Identity(d, d).norm();
    CHECK(residual < 1e-6);

    const Eigen::MatrixXcd schur = cov.block_inverse_from_submatrix();
    const double max_ref = cov.R_inv.cwiseAbs().maxCoeff();
    CHECK((schur - cov.R_inv).cwiseAbs().maxCoeff() <= 1e-7 * max_ref);
  }
}

TEST_CASE("trailing submatrix equals an independent delayed-only accumulation") {
  Rng rng(9);
  const StackingLayout layout{2, 2, 4};
  const int frames = 24;
  const Eigen::MatrixXcd data = random_complex_matrix(rng, 2, frames);
  Eigen::VectorXd raw(frames);
  for (int t = 0; t < frames; ++t) raw[t] = 0.5 + rng.uniform();
  const PowerEstimate sigma = PowerEstimate::floored(raw, 1e-12);

  const CovarianceSet cov = accumulate_covariance(data, sigma, layout);

  const Eigen::MatrixXcd stacked = stacked_matrix(data, layout);
  const int sub = layout.delayed_dim();
  Eigen::MatrixXcd naive = Eigen::MatrixXcd::Zero(sub, sub);
  for (int t = 0; t < frames; ++t) {
    const Eigen::VectorXcd xdel = stacked.col(t).tail(sub);
    naive += xdel * xdel.adjoint() / raw[t];
  }
  CHECK((cov.R_tilde() - naive).norm() <= 1e-12 * naive.norm());
}

TEST_CASE("empty accumulation is rejected") {
  const StackingLayout layout{2, 1, 1};
  const Eigen::MatrixXcd data(2, 0);
  CHECK_THROWS_AS(accumulate_covariance(data, unit_sigma(1), layout),
                  InvalidInput);
}

}  // TEST_SUITE
