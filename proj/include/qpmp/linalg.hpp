#pragma once

#include <cmath>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "qpmp/core.hpp"

namespace qpmp::linalg {

/// Matrix exponential (Pade approximant with scaling and squaring).
inline RealMatrix expm(const RealMatrix& a) { return a.exp(); }

inline bool all_finite(const RealMatrix& a) { return a.allFinite(); }

/// Exponential of `step * generator` together with the integrals
///   F_k = \int_0^step exp((step - s) G) D_k exp(s G) ds
/// for each direction D_k, read off one block-triangular exponential.
/// F_k is the derivative of exp(step * (G + x D_k)) with respect to x at x = 0.
struct ExponentialWithDerivatives {
  RealMatrix propagator;
  std::vector<RealMatrix> derivatives;
};

inline ExponentialWithDerivatives expm_with_derivatives(const RealMatrix& generator,
                                                        const std::vector<const RealMatrix*>& directions,
                                                        double step) {
  const Eigen::Index n = generator.rows();
  const auto blocks = static_cast<Eigen::Index>(directions.size()) + 1;
  RealMatrix big = RealMatrix::Zero(blocks * n, blocks * n);
  for (Eigen::Index b = 0; b < blocks; ++b) big.block(b * n, b * n, n, n) = step * generator;
  for (Eigen::Index k = 1; k < blocks; ++k) big.block(0, k * n, n, n) = step * (*directions[k - 1]);
  const RealMatrix e = big.exp();
  ExponentialWithDerivatives out;
  out.propagator = e.block(0, 0, n, n);
  out.derivatives.reserve(directions.size());
  for (Eigen::Index k = 1; k < blocks; ++k) out.derivatives.push_back(e.block(0, k * n, n, n));
  return out;
}

inline RealMatrix commutator(const RealMatrix& a, const RealMatrix& b) { return a * b - b * a; }
inline ComplexMatrix commutator(const ComplexMatrix& a, const ComplexMatrix& b) { return a * b - b * a; }

/// Numerical rank via column-pivoted QR with a relative threshold.
inline Eigen::Index numerical_rank(const RealMatrix& a, double relative_tol) {
  if (a.size() == 0) return 0;
  Eigen::ColPivHouseholderQR<RealMatrix> qr(a);
  qr.setThreshold(relative_tol);
  return qr.rank();
}

}  // namespace qpmp::linalg
