// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONVBF_COVARIANCE_HPP
#define CONVBF_COVARIANCE_HPP

#include <Eigen/Dense>

#include "convbf/model.hpp"

namespace convbf {

// Power-normalized temporal-spatial covariance of the stacked observations
// for one bin: R = sum_t xbar_t xbar_t^H / sigma2_t, with its trailing
// (delayed-only) submatrix and the inverses of both after diagonal loading.
class CovarianceSet {
 public:
  StackingLayout layout;
  Eigen::MatrixXcd R;            // D x D, Hermitian
  Eigen::MatrixXcd R_inv;        // inverse of R + loading*I (after factorize)
  Eigen::MatrixXcd R_tilde_inv;  // inverse of trailing block + loading*I
  double loading = 0.0;
  bool factorized = false;

  int dim() const { return layout.stacked_dim(); }

  // Trailing submatrix of R (first M rows/columns removed).
  Eigen::MatrixXcd R_tilde() const {
    const int m = layout.num_channels;
    return R.bottomRightCorner(dim() - m, dim() - m);
  }
  // Cross-correlation of the delayed stack with the current frame,
  // sum_t xdel_t x_t^H / sigma2_t; the bottom-left block of R.
  Eigen::MatrixXcd cross_block() const {
    const int m = layout.num_channels;
    return R.bottomLeftCorner(dim() - m, m);
  }

  // Computes both inverses through a Hermitian positive-definite Cholesky
  // factorization. A well-conditioned R is inverted as-is (loading stays 0);
  // otherwise loading_rel * trace(R)/D is added to the diagonal first.
  // Throws NumericalFailure if even the loaded matrix cannot be factorized.
  void factorize(double loading_rel);

  // Reassembles R^{-1} from R_tilde_inv via the Schur complement of the
  // leading M x M block, so a solver that already paid for the delayed-only
  // inverse gets the full inverse almost for free. Must match factorize()'s
  // R_inv to high accuracy.
  Eigen::MatrixXcd block_inverse_from_submatrix() const;

 private:
  bool try_factorize(double shift, bool strict);
};

CovarianceSet accumulate_covariance(const MultichannelSpectrogram& spec,
                                    int bin, const PowerEstimate& sigma2,
                                    const StackingLayout& layout);

// Same accumulation, starting from a per-bin data matrix (M x T).
CovarianceSet accumulate_covariance(const Eigen::MatrixXcd& bin_data,
                                    const PowerEstimate& sigma2,
                                    const StackingLayout& layout);

// Accumulation from an already stacked data matrix (D x T); lets a solver
// that keeps the stacked matrix around avoid rebuilding it.
CovarianceSet accumulate_from_stacked(const Eigen::MatrixXcd& stacked,
                                      const PowerEstimate& sigma2,
                                      const StackingLayout& layout);

}  // namespace convbf

#endif  // CONVBF_COVARIANCE_HPP
