// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "convbf/blocking.hpp"

#include <Eigen/QR>
#include <cmath>

namespace convbf {

namespace {
constexpr double kConstraintTol = 1e-8;
}

void BlockingMatrix::validate(const SteeringVector& v) const {
  const int m = v.size();
  if (B0.rows() != m || B0.cols() != m - 1)
    throw InvalidInput("blocking: shape must be M x (M-1)");
  const double scale = v.v.norm() * B0.colwise().norm().maxCoeff();
  if ((B0.adjoint() * v.v).norm() > kConstraintTol * scale)
    throw InvalidInput("blocking: columns not orthogonal to v");
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXcd>(B0).rank() != m - 1)
    throw InvalidInput("blocking: columns not full rank");
}

BlockingMatrix make_blocking(const SteeringVector& v) {
  v.validate();
  const int m = v.size();
  if (m < 2) throw InvalidInput("blocking: need at least two channels");

  // Householder factorization of v gives a unitary whose first column is
  // parallel to v; the remaining columns span the complement.
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(v.v);
  const Eigen::MatrixXcd q = qr.householderQ();

  BlockingMatrix b;
  b.B0 = q.rightCols(m - 1);
  return b;
}

Eigen::VectorXcd distortionless_projection(const SteeringVector& v) {
  v.validate();
  return std::conj(v.reference()) / v.v.squaredNorm() * v.v;
}

DetIdentity verify_det_identity(const SteeringVector& v,
                                const BlockingMatrix& b0,
                                const Eigen::VectorXcd& w0) {
  v.validate();
  const int m = v.size();
  if (m < 2) throw InvalidInput("det identity: need at least two channels");
  if (b0.B0.rows() != m || b0.B0.cols() != m - 1)
    throw InvalidInput("det identity: blocking matrix shape mismatch");
  if (w0.size() != m) throw InvalidInput("det identity: w0 dimension mismatch");

  const double vnorm = v.v.norm();
  if (std::abs(w0.dot(v.v) - v.reference()) >
      kConstraintTol * std::max(1.0, w0.norm() * vnorm))
    throw InvalidInput("det identity: w0 violates the distortionless constraint");
  const double bscale = vnorm * b0.B0.colwise().norm().maxCoeff();
  if ((b0.B0.adjoint() * v.v).norm() > kConstraintTol * bscale)
    throw InvalidInput("det identity: B0 does not block v");

  Eigen::MatrixXcd w_full(m, m);
  w_full.col(0) = w0;
  w_full.rightCols(m - 1) = b0.B0;

  DetIdentity result;
  result.lhs = std::abs(w_full.determinant());
  const Eigen::MatrixXcd gram = b0.B0.adjoint() * b0.B0;
  result.rhs =
      std::abs(v.reference()) / vnorm * std::sqrt(gram.determinant().real());
  return result;
}

}  // namespace convbf
