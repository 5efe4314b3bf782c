// Copyright 2026 The lgmsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "lgmsep/hermitian.hpp"

#include <Eigen/Eigenvalues>

namespace lgmsep {

void eig_hermitian(const SmallMat& a, SmallRealVec* eigenvalues,
                   SmallMat* eigenvectors) {
  const SmallMat h = hermitize(a);
  Eigen::SelfAdjointEigenSolver<SmallMat> es;
  if (h.rows() <= 3)
    es.computeDirect(h);
  else
    es.compute(h);
  if (eigenvalues) *eigenvalues = es.eigenvalues();
  if (eigenvectors) *eigenvectors = es.eigenvectors();
}

SmallMat eig_floor(const SmallMat& a, double tau, SmallRealVec* eigenvalues,
                   SmallMat* eigenvectors) {
  SmallRealVec lam;
  SmallMat u;
  eig_hermitian(a, &lam, &u);
  bool clamped = false;
  for (int i = 0; i < lam.size(); ++i)
    if (lam(i) < tau) {
      clamped = true;
      break;
    }
  if (eigenvalues) *eigenvalues = lam;
  if (eigenvectors) *eigenvectors = u;
  if (!clamped) return hermitize(a);
  SmallRealVec floored = lam.cwiseMax(tau);
  return u * floored.asDiagonal().toDenseMatrix().cast<cd>() * u.adjoint();
}

SmallMat inverse_loaded(const SmallMat& a, double delta) {
  SmallMat s = a;
  s.diagonal().array() += delta;
  const int n = static_cast<int>(s.rows());
  if (n == 1) return SmallMat::Constant(1, 1, cd(1.0, 0.0) / s(0, 0));
  if (n == 2) {
    const cd det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    SmallMat inv(2, 2);
    inv << s(1, 1), -s(0, 1), -s(1, 0), s(0, 0);
    return inv / det;
  }
  return s.partialPivLu().inverse();
}

WienerInverse wiener_inverse(const SmallMat& a, double abs_delta_floor) {
  const int n = static_cast<int>(a.rows());
  WienerInverse out;
  out.inv = inverse_loaded(a, 0.0);
  if (out.inv.allFinite()) {
    const double resid =
        (a * out.inv - SmallMat::Identity(n, n)).cwiseAbs().maxCoeff();
    if (resid <= kInvResidualTol) return out;
  }
  out.loaded = true;
  out.delta = diag_load(a, abs_delta_floor);
  if (out.delta <= 0.0)
    throw NumericError("wiener_inverse: zero covariance cannot be loaded");
  out.inv = inverse_loaded(a, out.delta);
  if (!out.inv.allFinite())
    throw NumericError("wiener_inverse: inverse is not finite");
  return out;
}

double min_eigenvalue(const SmallMat& a) {
  SmallRealVec lam;
  eig_hermitian(a, &lam, nullptr);
  return lam.minCoeff();
}

}  // namespace lgmsep
