#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "locsme/types.hpp"

namespace locsme {

/// Counters for the numerical guard paths of the shrinkage recursions.
struct ShrinkageDiagnostics {
  long rho_clamps = 0;         // ratio fell outside [0,1] and was clamped
  long rho_holds = 0;          // denominator below guard, previous rho kept
  long imag_trace_warnings = 0;  // trace ratio had a non-negligible imaginary part
};

/// Running sample correlation vector (SCV) between the array data and the
/// beamformer output, plus the shrinkage coefficient driving its OAS update.
struct OasVectorState {
  CVector scv_sum;  // sum of x(k) * conj(y(k))
  long count = 0;
  double rho = 1.0;
  CVector d_hat;

  static OasVectorState init(Eigen::Index m, double rho_init = 1.0) {
    if (!(rho_init > 0.0 && rho_init <= 1.0))
      throw InvalidArgument("rho_init must lie in (0, 1]");
    OasVectorState s;
    s.scv_sum = CVector::Zero(m);
    s.d_hat = CVector::Zero(m);
    s.rho = rho_init;
    return s;
  }
};

/// Running sample covariance matrix (SCM) and its OAS shrinkage coefficient.
struct OasMatrixState {
  CMatrix scm_sum;  // sum of x(k) x(k)^H
  long count = 0;
  double rho0 = 1.0;
  CMatrix r_tilde;

  static OasMatrixState init(Eigen::Index m, double rho_init = 1.0) {
    if (!(rho_init > 0.0 && rho_init <= 1.0))
      throw InvalidArgument("rho_init must lie in (0, 1]");
    OasMatrixState s;
    s.scm_sum = CMatrix::Zero(m, m);
    s.r_tilde = CMatrix::Zero(m, m);
    s.rho0 = rho_init;
    return s;
  }
};

inline OasVectorState scv_update(OasVectorState s, const CVector& x, cx y) {
  if (x.size() != s.scv_sum.size())
    throw InvalidArgument("scv_update: snapshot length " +
                          std::to_string(x.size()) + " != state length " +
                          std::to_string(s.scv_sum.size()));
  s.scv_sum += x * std::conj(y);
  s.count += 1;
  return s;
}

inline OasMatrixState scm_update(OasMatrixState s, const CVector& x) {
  if (x.size() != s.scm_sum.rows())
    throw InvalidArgument("scm_update: snapshot length " +
                          std::to_string(x.size()) + " != state size " +
                          std::to_string(s.scm_sum.rows()));
  s.scm_sum.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0);
  s.scm_sum = hermitian_from_lower(s.scm_sum);
  s.count += 1;
  return s;
}

/// Mean SCV, the quantity the shrinkage acts on.
inline CVector scv_mean(const OasVectorState& s) {
  if (s.count < 1) throw StateError("SCV state has no samples");
  return s.scv_sum / static_cast<double>(s.count);
}

/// Mean SCM.
inline CMatrix scm_mean(const OasMatrixState& s) {
  if (s.count < 1) throw StateError("SCM state has no samples");
  return s.scm_sum / static_cast<double>(s.count);
}

namespace detail {

constexpr double kDenomGuard = 1e-30;
constexpr double kImagTol = 1e-8;

/// Shared tail of both OAS recursions: rho_next = Re(num)/Re(den) with a
/// division guard and a clamp to [0,1]. num/den carry numerical imaginary
/// dust only; a large imaginary part is flagged, not fatal.
inline double rho_ratio(cx num, cx den, double rho_prev,
                        ShrinkageDiagnostics* diag) {
  if (std::abs(den) < kDenomGuard) {
    if (diag) diag->rho_holds += 1;
    return rho_prev;
  }
  const double scale = std::abs(num) + std::abs(den);
  if (std::abs(num.imag()) > kImagTol * scale ||
      std::abs(den.imag()) > kImagTol * scale) {
    if (diag) diag->imag_trace_warnings += 1;
  }
  double rho = num.real() / den.real();
  if (!(rho >= 0.0 && rho <= 1.0)) {
    if (diag) diag->rho_clamps += 1;
    rho = std::isnan(rho) ? rho_prev : std::clamp(rho, 0.0, 1.0);
  }
  return rho;
}

inline void check_step_pre(long count, double rho, const char* what) {
  if (count < 1) throw StateError(std::string(what) + ": state has no samples");
  if (!(rho >= 0.0 && rho <= 1.0))
    throw StateError(std::string(what) + ": rho outside [0,1]");
}

}  // namespace detail

struct VectorShrinkage {
  CVector d_hat;
  double rho_next = 0.0;
};

/// One OAS step on the sample correlation vector. Shrinks the SCV towards
/// its mean-entry target: d = rho*nu*1 + (1-rho)*s with nu = mean(s), then
/// advances rho. The diagonal-matrix traces reduce to length-M sums, so the
/// step is O(M).
inline VectorShrinkage oas_vector_step(const OasVectorState& s,
                                       ShrinkageDiagnostics* diag = nullptr) {
  detail::check_step_pre(s.count, s.rho, "oas_vector_step");
  const auto m = static_cast<double>(s.scv_sum.size());
  const double i = static_cast<double>(s.count);

  const CVector scv = scv_mean(s);
  const cx nu = scv.sum() / m;

  VectorShrinkage out;
  out.d_hat = CVector::Constant(scv.size(), s.rho * nu) + (1.0 - s.rho) * scv;

  // tr(D S*) and tr(D) for diagonal D = diag(d_hat), S = diag(scv).
  const cx tr_ds = std::conj(out.d_hat.dot(scv));  // sum of d_m * conj(s_m)
  const cx tr_d = out.d_hat.sum();
  const double tr_dd = std::norm(tr_d);  // tr(D) tr(D*) = |tr(D)|^2

  const cx num = (1.0 - 2.0 / m) * tr_ds + tr_dd;
  const cx den = (i + 1.0 - 2.0 / m) * tr_ds + (1.0 - i / m) * tr_dd;
  out.rho_next = detail::rho_ratio(num, den, s.rho, diag);
  return out;
}

struct MatrixShrinkage {
  CMatrix r_tilde;
  double rho_next = 0.0;
};

/// One OAS step on the sample covariance matrix: R~ = rho0*nu0*I +
/// (1-rho0)*R with nu0 = tr(R)/M, then advances rho0. The shrinkage is
/// trace-preserving: tr(R~) = tr(R) for every rho0.
inline MatrixShrinkage oas_matrix_step(const OasMatrixState& s,
                                       ShrinkageDiagnostics* diag = nullptr) {
  detail::check_step_pre(s.count, s.rho0, "oas_matrix_step");
  const auto m = static_cast<double>(s.scm_sum.rows());
  const double i = static_cast<double>(s.count);

  const CMatrix scm = scm_mean(s);
  const double nu0 = scm.trace().real() / m;

  MatrixShrinkage out;
  out.r_tilde = (1.0 - s.rho0) * scm;
  out.r_tilde.diagonal().array() += s.rho0 * nu0;

  // tr(R~ R) via the Hermitian identity tr(AB) = sum_ij A_ij conj(B_ij).
  const cx tr_rr = out.r_tilde.cwiseProduct(scm.conjugate()).sum();
  const cx tr_r = out.r_tilde.trace();
  const cx tr_sq = tr_r * tr_r;

  const cx num = (1.0 - 2.0 / m) * tr_rr + tr_sq;
  const cx den = (i + 1.0 - 2.0 / m) * tr_rr + (1.0 - i / m) * tr_sq;
  out.rho_next = detail::rho_ratio(num, den, s.rho0, diag);
  return out;
}

}  // namespace locsme
