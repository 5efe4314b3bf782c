// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef LGMSEP_HERMITIAN_HPP
#define LGMSEP_HERMITIAN_HPP

#include "lgmsep/common.hpp"

namespace lgmsep {

// Relative scales used whenever a covariance is inverted or floored.
inline constexpr double kDiagLoadRel = 1e-6;   // delta = rel * trace / n
inline constexpr double kEigFloorRel = 1e-7;   // tau = rel * trace / n

inline SmallMat hermitize(const SmallMat& a) {
  return 0.5 * (a + a.adjoint());
}

inline double real_trace(const SmallMat& a) { return a.trace().real(); }

// trace-relative diagonal loading; abs_floor guards the all-zero case.
inline double diag_load(const SmallMat& a, double abs_floor = 0.0) {
  const int n = static_cast<int>(a.rows());
  return std::max(kDiagLoadRel * real_trace(a) / n, abs_floor);
}

// Eigendecomposition of a Hermitian matrix (input is hermitized first).
void eig_hermitian(const SmallMat& a, SmallRealVec* eigenvalues,
                   SmallMat* eigenvectors);

// U max(lambda, tau) U^H; also hands back the decomposition when requested
// so callers can reuse it (inverse, log-det, backward pass).
SmallMat eig_floor(const SmallMat& a, double tau,
                   SmallRealVec* eigenvalues = nullptr,
                   SmallMat* eigenvectors = nullptr);

// (a + delta I)^{-1} for Hermitian a.
SmallMat inverse_loaded(const SmallMat& a, double delta);

// Inverse for mixture covariances. The plain inverse is kept whenever it
// reproduces the identity to kInvResidualTol; otherwise the matrix is
// diagonally loaded with max(kDiagLoadRel * trace / n, abs_delta_floor) and
// inverted again. `loaded`/`delta` report which branch was taken so the
// loss backward pass can differentiate through the loading exactly.
inline constexpr double kInvResidualTol = 1e-10;

struct WienerInverse {
  SmallMat inv;
  bool loaded = false;
  double delta = 0.0;
};

WienerInverse wiener_inverse(const SmallMat& a, double abs_delta_floor = 0.0);

// Smallest eigenvalue, for PSD checks.
double min_eigenvalue(const SmallMat& a);

inline bool is_finite(const SmallMat& a) { return a.allFinite(); }
inline bool is_finite(const SmallVec& v) { return v.allFinite(); }

}  // namespace lgmsep

#endif  // LGMSEP_HERMITIAN_HPP
