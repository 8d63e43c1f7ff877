// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "convbf/covariance.hpp"

#include <Eigen/Cholesky>

namespace convbf {

CovarianceSet accumulate_from_stacked(const Eigen::MatrixXcd& stacked,
                                      const PowerEstimate& sigma2,
                                      const StackingLayout& layout) {
  layout.validate();
  sigma2.validate();
  const int num_frames = static_cast<int>(stacked.cols());
  if (num_frames == 0) throw InvalidInput("covariance: no frames");
  if (stacked.rows() != layout.stacked_dim())
    throw InvalidInput("covariance: stacked dimension mismatch");
  if (sigma2.sigma2.size() != num_frames)
    throw InvalidInput("covariance: sigma2 length mismatch");

  Eigen::MatrixXcd weighted = stacked;
  for (int t = 0; t < num_frames; ++t)
    weighted.col(t) /= std::sqrt(sigma2.sigma2[t]);

  const int d = layout.stacked_dim();
  CovarianceSet cov;
  cov.layout = layout;
  cov.R = Eigen::MatrixXcd::Zero(d, d);
  cov.R.selfadjointView<Eigen::Lower>().rankUpdate(weighted);
  cov.R = cov.R.selfadjointView<Eigen::Lower>();
  cov.R = 0.5 * (cov.R + cov.R.adjoint()).eval();
  return cov;
}

CovarianceSet accumulate_covariance(const Eigen::MatrixXcd& bin_data,
                                    const PowerEstimate& sigma2,
                                    const StackingLayout& layout) {
  layout.validate();
  if (bin_data.rows() != layout.num_channels)
    throw InvalidInput("covariance: channel count does not match layout");
  return accumulate_from_stacked(stacked_matrix(bin_data, layout), sigma2,
                                 layout);
}

CovarianceSet accumulate_covariance(const MultichannelSpectrogram& spec,
                                    int bin, const PowerEstimate& sigma2,
                                    const StackingLayout& layout) {
  if (bin < 0 || bin >= spec.num_bins())
    throw InvalidInput("covariance: bin out of range");
  if (spec.num_channels() != layout.num_channels)
    throw InvalidInput("covariance: channel count does not match layout");
  return accumulate_covariance(spec.bins[static_cast<size_t>(bin)], sigma2,
                               layout);
}

namespace {

// Accepts a Cholesky factor only when its pivots keep the implied condition
// number workable; near-singular "successes" produce useless inverses.
bool usable_llt(const Eigen::LLT<Eigen::MatrixXcd>& llt, bool strict) {
  if (llt.info() != Eigen::Success) return false;
  if (!strict) return true;
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal().real();
  return diag.minCoeff() > 1e-7 * diag.maxCoeff();
}

}  // namespace

bool CovarianceSet::try_factorize(double shift, bool strict) {
  const int d = dim();
  const int sub = d - layout.num_channels;
  Eigen::MatrixXcd loaded = R;
  loaded.diagonal().array() += shift;

  Eigen::LLT<Eigen::MatrixXcd> llt(loaded);
  if (!usable_llt(llt, strict)) return false;

  Eigen::LLT<Eigen::MatrixXcd> llt_tilde;
  if (sub > 0) {
    llt_tilde.compute(loaded.bottomRightCorner(sub, sub));
    if (!usable_llt(llt_tilde, strict)) return false;
  }

  R_inv = llt.solve(Eigen::MatrixXcd::Identity(d, d));
  R_inv = 0.5 * (R_inv + R_inv.adjoint()).eval();
  if (sub > 0) {
    R_tilde_inv = llt_tilde.solve(Eigen::MatrixXcd::Identity(sub, sub));
    R_tilde_inv = 0.5 * (R_tilde_inv + R_tilde_inv.adjoint()).eval();
  } else {
    R_tilde_inv.resize(0, 0);
  }
  loading = shift;
  factorized = true;
  return true;
}

void CovarianceSet::factorize(double loading_rel) {
  const int d = dim();
  if (R.rows() != d || R.cols() != d)
    throw InvalidInput("covariance: R not accumulated");
  if (loading_rel < 0.0) throw InvalidInput("covariance: negative loading");

  // The unloaded factorization keeps the downstream weight updates exact
  // maximizers, so prefer it whenever R is comfortably positive definite;
  // load the diagonal only when it is not.
  if (try_factorize(0.0, /*strict=*/true)) return;
  const double shift = loading_rel * R.trace().real() / d;
  if (try_factorize(shift, /*strict=*/false)) return;
  throw NumericalFailure("covariance: factorization failed after loading");
}

Eigen::MatrixXcd CovarianceSet::block_inverse_from_submatrix() const {
  if (!factorized)
    throw InvalidInput("covariance: factorize before block inversion");
  const int d = dim();
  const int m = layout.num_channels;
  const int sub = d - m;

  Eigen::MatrixXcd loaded = R;
  loaded.diagonal().array() += loading;

  if (sub == 0) {
    // Degenerate partition: the "submatrix" is empty and the block formula
    // collapses to a plain inverse of the leading block.
    Eigen::LLT<Eigen::MatrixXcd> llt(loaded);
    if (llt.info() != Eigen::Success)
      throw NumericalFailure("covariance: leading block not invertible");
    return llt.solve(Eigen::MatrixXcd::Identity(m, m));
  }

  const Eigen::MatrixXcd A = loaded.topLeftCorner(m, m);
  const Eigen::MatrixXcd B = loaded.topRightCorner(m, sub);

  // Schur complement of the leading block: S = A - B E^{-1} B^H with
  // E^{-1} = R_tilde_inv already in hand.
  const Eigen::MatrixXcd Einv_Bh = R_tilde_inv * B.adjoint();
  Eigen::MatrixXcd S = A - B * Einv_Bh;
  S = 0.5 * (S + S.adjoint()).eval();

  Eigen::LLT<Eigen::MatrixXcd> llt_s(S);
  if (llt_s.info() != Eigen::Success)
    throw NumericalFailure("covariance: Schur complement not invertible");
  const Eigen::MatrixXcd S_inv =
      llt_s.solve(Eigen::MatrixXcd::Identity(m, m));

  Eigen::MatrixXcd inv(d, d);
  inv.topLeftCorner(m, m) = S_inv;
  inv.topRightCorner(m, sub) = -S_inv * Einv_Bh.adjoint();
  inv.bottomLeftCorner(sub, m) = inv.topRightCorner(m, sub).adjoint();
  inv.bottomRightCorner(sub, sub) =
      R_tilde_inv + Einv_Bh * S_inv * Einv_Bh.adjoint();
  return inv;
}

}  // namespace convbf
