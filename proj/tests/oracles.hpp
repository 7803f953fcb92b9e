// Test-only numerical oracles, kept independent of the library's solve paths.
#pragma once

#include <cmath>
#include <stdexcept>

#include "locsme/types.hpp"

namespace test_oracles {

/// Dense complex matrix inverse by Gauss-Jordan elimination with partial
/// pivoting. Deliberately hand-rolled so that oracle comparisons do not share
/// a code path with the library's factorization-based solves.
inline locsme::CMatrix gauss_jordan_inverse(locsme::CMatrix a) {
  using locsme::cx;
  const auto n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("inverse: square input only");
  locsme::CMatrix inv = locsme::CMatrix::Identity(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    double best = std::abs(a(col, col));
    for (Eigen::Index r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > best) {
        best = std::abs(a(r, col));
        pivot = r;
      }
    }
    if (best == 0.0) throw std::runtime_error("inverse: singular matrix");
    if (pivot != col) {
      a.row(pivot).swap(a.row(col));
      inv.row(pivot).swap(inv.row(col));
    }
    const cx d = a(col, col);
    a.row(col) /= d;
    inv.row(col) /= d;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == col) continue;
      const cx f = a(r, col);
      if (f == cx(0, 0)) continue;
      a.row(r) -= f * a.row(col);
      inv.row(r) -= f * inv.row(col);
    }
  }
  return inv;
}

/// MVDR weights through the explicit inverse formula.
inline locsme::CVector mvdr_by_inverse(const locsme::CMatrix& r,
                                       const locsme::CVector& a) {
  const locsme::CMatrix rinv = gauss_jordan_inverse(r);
  const locsme::CVector ra = rinv * a;
  return ra / a.dot(ra);
}

/// Closed-form optimum output SINR sigma1^2 a^H R_in^{-1} a, in dB.
inline double optimal_sinr_db(double sigma1_sq, const locsme::CVector& a,
                              const locsme::CMatrix& true_inc) {
  const locsme::CMatrix rinv = gauss_jordan_inverse(true_inc);
  const double q = a.dot(rinv * a).real();
  return 10.0 * std::log10(sigma1_sq * q);
}

}  // namespace test_oracles
