// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONVBF_BLOCKING_HPP
#define CONVBF_BLOCKING_HPP

#include <Eigen/Dense>

#include "convbf/model.hpp"

namespace convbf {

// Matrix whose columns span the orthogonal complement of a steering vector;
// it blocks the signal subspace.
struct BlockingMatrix {
  Eigen::MatrixXcd B0;  // M x (M-1)

  void validate(const SteeringVector& v) const;  // B0^H v == 0, full rank
};

// Orthonormal basis of the orthogonal complement of v.
BlockingMatrix make_blocking(const SteeringVector& v);

// The projection of any constraint-satisfying w0 onto v:
// e = conj(v_ref) / ||v||^2 * v. Useful for constructing w0 = e + B0 z.
Eigen::VectorXcd distortionless_projection(const SteeringVector& v);

struct DetIdentity {
  double lhs;  // |det [w0, B0]|
  double rhs;  // (|v_ref| / ||v||) * det(B0^H B0)^{1/2}
};

// Numerically evaluates both sides of the determinant decomposition of the
// current-frame beamforming matrix [w0, B0]. Preconditions: w0^H v = v_ref
// and B0^H v = 0, both within 1e-8 (relative); violations raise
// InvalidInput.
DetIdentity verify_det_identity(const SteeringVector& v,
                                const BlockingMatrix& b0,
                                const Eigen::VectorXcd& w0);

}  // namespace convbf

#endif  // CONVBF_BLOCKING_HPP
