#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>
#include <vector>

#include "locsme/array.hpp"
#include "locsme/shrinkage.hpp"
#include "locsme/types.hpp"

namespace locsme {

/// Spectral norm of a Hermitian matrix (largest eigenvalue magnitude).
inline double spectral_norm(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw SolverError("eigenvalue computation failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Orthogonal projector onto the span of the p principal eigenvectors of a
/// Hermitian PSD matrix. Hermitian, idempotent, trace = p.
struct ProjectionOperator {
  CMatrix matrix;
  int rank = 0;
};

inline ProjectionOperator projection_operator(const CMatrix& c, int p) {
  const auto m = c.rows();
  if (c.cols() != m) throw InvalidArgument("sector matrix must be square");
  if (p < 1 || p > m)
    throw InvalidArgument("subspace rank must lie in [1, " +
                          std::to_string(m) + "], got " + std::to_string(p));
  Eigen::SelfAdjointEigenSolver<CMatrix> es(c);
  if (es.info() != Eigen::Success)
    throw SolverError("sector matrix eigendecomposition failed");

  // Principal = largest eigenvalues; ties resolved by ascending solver index.
  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return es.eigenvalues()(a) > es.eigenvalues()(b);
                   });

  CMatrix u(m, p);
  for (int k = 0; k < p; ++k) u.col(k) = es.eigenvectors().col(order[k]);

  ProjectionOperator proj;
  proj.rank = p;
  proj.matrix = CMatrix::Zero(m, m);
  proj.matrix.selfadjointView<Eigen::Lower>().rankUpdate(u, 1.0);
  proj.matrix = hermitian_from_lower(proj.matrix);
  return proj;
}

namespace detail {

constexpr double kDegenerateNorm = 1e-30;

/// Desired-power estimator before the non-negativity clamp.
inline double power_estimate_raw(const CVector& a_hat, const CVector& x,
                                 double noise_power) {
  const double aa = a_hat.squaredNorm();
  if (aa < kDegenerateNorm)
    throw InvalidArgument("estimate_power: steering estimate is zero");
  const double corr = std::norm(a_hat.dot(x));
  return (corr - aa * noise_power) / (aa * aa);
}

}  // namespace detail

/// Projects the shrunk correlation vector onto the sector subspace and
/// normalizes. Throws DegenerateError when the projection is numerically
/// zero; callers fall back to the presumed steering vector.
inline CVector estimate_steering(const ProjectionOperator& p,
                                 const CVector& d_hat) {
  if (d_hat.size() != p.matrix.rows())
    throw InvalidArgument("estimate_steering: dimension mismatch");
  CVector v = p.matrix * d_hat;
  const double n = v.norm();
  if (n < detail::kDegenerateNorm)
    throw DegenerateError("projected correlation vector is numerically zero");
  return v / n;
}

/// Single-snapshot desired-power estimate, clamped at zero so the INC
/// subtraction never adds energy.
inline double estimate_power(const CVector& a_hat, const CVector& x,
                             double noise_power, long* clamp_count = nullptr) {
  const double raw = detail::power_estimate_raw(a_hat, x, noise_power);
  if (raw < 0.0) {
    if (clamp_count) *clamp_count += 1;
    return 0.0;
  }
  return raw;
}

/// INC matrix construction. With spectral_loading (the default) the three
/// steps run in order: (a) R~ += ||R~||_2 * I, (b) subtract the desired
/// signal covariance sigma1^2 * a a^H, (c) rescale so the spectral norm is
/// exactly 2 * noise_power. Without it only step (b) runs.
inline CMatrix build_inc(const CMatrix& r_tilde, const CVector& a_hat,
                         double sigma1_sq_hat, double noise_power,
                         bool spectral_loading = true) {
  if (a_hat.size() != r_tilde.rows() || r_tilde.rows() != r_tilde.cols())
    throw InvalidArgument("build_inc: dimension mismatch");
  if (sigma1_sq_hat < 0.0)
    throw InvalidArgument("build_inc: negative power estimate");
  CMatrix r = r_tilde;
  if (spectral_loading) r.diagonal().array() += spectral_norm(r);
  r.selfadjointView<Eigen::Lower>().rankUpdate(a_hat, -sigma1_sq_hat);
  r = hermitian_from_lower(r);
  const double norm = spectral_norm(r);
  if (norm < detail::kDegenerateNorm)
    throw DegenerateError("INC estimate has numerically zero spectral norm");
  if (spectral_loading) r *= 2.0 * noise_power / norm;
  return r;
}

struct SolveInfo {
  bool eigensolve_fallback = false;
};

namespace detail {

inline bool solve_acceptable(const CMatrix& r, const CVector& x,
                             const CVector& b, double r_norm_f) {
  if (!x.allFinite()) return false;
  const double residual = (r * x - b).norm();
  return residual <= 1e-8 * (r_norm_f * x.norm() + b.norm());
}

}  // namespace detail

/// Distortionless MVDR weights w = R^{-1} a / (a^H R^{-1} a), computed by a
/// pivoted Hermitian LDLT solve (never an explicit inverse). The solve is
/// accepted on a backward-error test; if the factorization degrades (the
/// matrix can be transiently indefinite early in adaptation) an
/// eigendecomposition-based solve is used. Singular systems raise SolverError.
inline CVector mvdr_weights(const CMatrix& r, const CVector& a,
                            SolveInfo* info = nullptr) {
  const auto m = r.rows();
  if (r.cols() != m || a.size() != m)
    throw InvalidArgument("mvdr_weights: dimension mismatch");
  if (a.norm() < detail::kDegenerateNorm)
    throw InvalidArgument("mvdr_weights: steering vector is zero");

  const double r_norm_f = r.norm();
  CVector ra;
  bool ok = false;
  Eigen::LDLT<CMatrix> ldlt(r);
  if (ldlt.info() == Eigen::Success) {
    ra = ldlt.solve(a);
    ok = detail::solve_acceptable(r, ra, a, r_norm_f);
  }
  if (!ok) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(r);
    if (es.info() != Eigen::Success)
      throw SolverError("mvdr_weights: eigendecomposition failed");
    const auto& ev = es.eigenvalues();
    const double max_abs = ev.cwiseAbs().maxCoeff();
    if (max_abs < detail::kDegenerateNorm)
      throw SolverError("mvdr_weights: matrix is zero");
    if (ev.cwiseAbs().minCoeff() < 1e-13 * max_abs)
      throw SolverError("mvdr_weights: matrix is singular to working precision");
    ra = es.eigenvectors() *
         (es.eigenvectors().adjoint() * a).cwiseQuotient(ev.cast<cx>());
    if (!detail::solve_acceptable(r, ra, a, r_norm_f))
      throw SolverError("mvdr_weights: solve residual check failed");
    if (info) info->eigensolve_fallback = true;
  }
  const cx denom = a.dot(ra);
  if (std::abs(denom) < detail::kDegenerateNorm)
    throw SolverError("mvdr_weights: a^H R^{-1} a is numerically zero");
  return ra / denom;
}

/// Optimum MVDR weights from ground-truth INC and steering.
inline CVector optimal_weights(const CMatrix& true_inc,
                               const CVector& true_steering) {
  return mvdr_weights(true_inc, true_steering);
}

struct SmiDiagnostics {
  long load_fallbacks = 0;
};

/// Sample-matrix-inversion beamformer. The SCM is rank-deficient for fewer
/// snapshots than sensors; when the plain solve fails a small diagonal load
/// of 1e-8 * tr(scm)/M is added and the failure recorded.
inline CVector smi_weights(const CMatrix& scm, const CVector& a_presumed,
                           double diagonal_load = 0.0,
                           SmiDiagnostics* diag = nullptr) {
  CMatrix r = scm;
  if (diagonal_load != 0.0) r.diagonal().array() += diagonal_load;
  try {
    return mvdr_weights(r, a_presumed);
  } catch (const SolverError&) {
    const double fallback =
        1e-8 * scm.trace().real() / static_cast<double>(scm.rows());
    if (diag) diag->load_fallbacks += 1;
    r.diagonal().array() += fallback;
    return mvdr_weights(r, a_presumed);
  }
}

/// Knobs for the per-snapshot pipeline. rho_init must lie in (0, 1]; the
/// value 1 is an exact fixed point of both coefficient updates (the shrunk
/// estimates never leave their targets), so the default starts just inside
/// the interval. Setting 1.0 reproduces the frozen variant.
struct LocsmeConfig {
  double rho_init = 0.9;
  bool table1_loading = true;
  int power_window = 1;
};

struct LocsmeDiagnostics {
  ShrinkageDiagnostics shrinkage;
  long steering_fallbacks = 0;
  long solver_fallbacks = 0;
  long power_clamps = 0;
};

/// Full running state of the adaptive beamformer.
struct LocsmeState {
  ProjectionOperator projection;
  OasVectorState vec_state;
  OasMatrixState mat_state;
  CVector a_hat;
  double sigma1_sq_hat = 0.0;
  CMatrix inc_hat;
  CVector weights;
  double noise_power = 1.0;
  CVector presumed_steering;
  LocsmeConfig config;
  LocsmeDiagnostics diag;
  std::deque<double> power_history;
  long snapshot_index = 0;
};

/// Builds the initial state: sector projector, zeroed accumulators,
/// all-ones weights.
inline LocsmeState locsme_init(const UlaGeometry& geometry,
                               double presumed_doa_deg,
                               double sector_half_width_deg, int subspace_rank,
                               double noise_power,
                               const LocsmeConfig& config = {},
                               int sector_grid_points = 200) {
  if (!(noise_power > 0.0)) throw InvalidArgument("noise_power must be > 0");
  if (config.power_window < 1)
    throw InvalidArgument("power_window must be >= 1");
  LocsmeState st;
  st.config = config;
  st.noise_power = noise_power;
  const CMatrix c = sector_matrix(geometry, presumed_doa_deg,
                                  sector_half_width_deg, sector_grid_points);
  st.projection = projection_operator(c, subspace_rank);
  st.vec_state = OasVectorState::init(geometry.num_sensors, config.rho_init);
  st.mat_state = OasMatrixState::init(geometry.num_sensors, config.rho_init);
  st.presumed_steering = steering_vector(geometry, presumed_doa_deg);
  st.a_hat = st.presumed_steering / st.presumed_steering.norm();
  st.inc_hat = CMatrix::Zero(geometry.num_sensors, geometry.num_sensors);
  st.weights = CVector::Ones(geometry.num_sensors);
  return st;
}

inline LocsmeState locsme_init(const Scenario& s,
                               const LocsmeConfig& config = {},
                               int sector_grid_points = 200) {
  return locsme_init(s.geometry, s.desired_doa_deg, s.sector_half_width_deg,
                     s.subspace_rank, s.noise_power, config,
                     sector_grid_points);
}

namespace detail {

[[noreturn]] inline void rethrow_with_snapshot(long index) {
  const std::string prefix = "snapshot " + std::to_string(index) + ": ";
  try {
    throw;
  } catch (const SolverError& e) {
    throw SolverError(prefix + e.what());
  } catch (const DegenerateError& e) {
    throw DegenerateError(prefix + e.what());
  } catch (const StateError& e) {
    throw StateError(prefix + e.what());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

}  // namespace detail

/// One full adaptation pass: beamformer output with the previous weights,
/// accumulator updates, both OAS steps, steering and power estimates, INC
/// construction, MVDR weights. Exactly one pass of each recursion per
/// snapshot. Errors carry the snapshot index.
inline const CVector& locsme_snapshot(LocsmeState& st, const CVector& x) {
  const long index = st.snapshot_index + 1;
  try {
    const cx y = st.weights.dot(x);  // previous weights, w(0) = all-ones

    st.mat_state = scm_update(std::move(st.mat_state), x);
    st.vec_state = scv_update(std::move(st.vec_state), x, y);

    VectorShrinkage vs = oas_vector_step(st.vec_state, &st.diag.shrinkage);
    st.vec_state.d_hat = vs.d_hat;
    try {
      st.a_hat = estimate_steering(st.projection, vs.d_hat);
    } catch (const DegenerateError&) {
      st.diag.steering_fallbacks += 1;
      st.a_hat = st.presumed_steering / st.presumed_steering.norm();
    }

    MatrixShrinkage ms = oas_matrix_step(st.mat_state, &st.diag.shrinkage);
    st.mat_state.r_tilde = ms.r_tilde;

    const double raw = detail::power_estimate_raw(st.a_hat, x, st.noise_power);
    st.power_history.push_back(raw);
    while (st.power_history.size() >
           static_cast<std::size_t>(st.config.power_window))
      st.power_history.pop_front();
    double mean_raw =
        std::accumulate(st.power_history.begin(), st.power_history.end(), 0.0) /
        static_cast<double>(st.power_history.size());
    if (mean_raw < 0.0) {
      st.diag.power_clamps += 1;
      mean_raw = 0.0;
    }
    st.sigma1_sq_hat = mean_raw;

    st.inc_hat = build_inc(ms.r_tilde, st.a_hat, st.sigma1_sq_hat,
                           st.noise_power, st.config.table1_loading);

    SolveInfo info;
    st.weights = mvdr_weights(st.inc_hat, st.a_hat, &info);
    if (info.eigensolve_fallback) st.diag.solver_fallbacks += 1;

    st.vec_state.rho = vs.rho_next;
    st.mat_state.rho0 = ms.rho_next;
    st.snapshot_index = index;
    return st.weights;
  } catch (const Error&) {
    detail::rethrow_with_snapshot(index);
  }
}

}  // namespace locsme
