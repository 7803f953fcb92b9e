#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "locsme/array.hpp"
#include "locsme/beamformer.hpp"
#include "locsme/rng.hpp"
#include "oracles.hpp"

using namespace locsme;

namespace {

Scenario clean_scenario(double snr_db) {
  Scenario s;
  s.snr_db = snr_db;
  s.mismatch = NoMismatch{};
  return s;
}

double sinr_db(const CVector& w, const CMatrix& rs, const CMatrix& rin) {
  const double num = w.dot(rs * w).real();
  const double den = w.dot(rin * w).real();
  return 10.0 * std::log10(num / den);
}

}  // namespace

TEST_CASE("full-rank projector is the identity") {
  const UlaGeometry g{5, 0.5};
  const CMatrix c = sector_matrix(g, 10.0, 5.0, 100);
  const ProjectionOperator p = projection_operator(c, 5);
  REQUIRE((p.matrix - CMatrix::Identity(5, 5)).norm() < 1e-12);
}

TEST_CASE("rank-1 projector reproduces the normalized outer product") {
  const UlaGeometry g{6, 0.5};
  const CVector a = steering_vector(g, -20.0);
  const CMatrix c = hermitian_from_lower(CMatrix(a * a.adjoint()));
  const ProjectionOperator p = projection_operator(c, 1);
  const CMatrix expected = (a * a.adjoint()) / a.squaredNorm();
  REQUIRE((p.matrix - expected).norm() < 1e-12);
  Rng rng(8);
  const CVector v = rng.cgaussian_vector(6, 1.0);
  const CVector via = p.matrix * v;
  const CVector direct = a * (a.dot(v)) / a.squaredNorm();
  REQUIRE((via - direct).norm() < 1e-12 * direct.norm());
}

TEST_CASE("paper sector projector is idempotent with trace p") {
  const UlaGeometry g{12, 0.5};
  const CMatrix c = sector_matrix(g, 10.0, 5.0, 200);
  const ProjectionOperator p = projection_operator(c, 8);
  REQUIRE(p.matrix.trace().real() == Catch::Approx(8.0).margin(1e-8));
  REQUIRE(std::abs(p.matrix.trace().imag()) < 1e-12);
  REQUIRE((p.matrix * p.matrix - p.matrix).norm() < 1e-10 * p.matrix.norm());
  REQUIRE((p.matrix - p.matrix.adjoint()).norm() == 0.0);
}

TEST_CASE("projector rejects an out-of-range rank") {
  const UlaGeometry g{4, 0.5};
  const CMatrix c = sector_matrix(g, 0.0, 5.0, 50);
  REQUIRE_THROWS_AS(projection_operator(c, 0), InvalidArgument);
  REQUIRE_THROWS_AS(projection_operator(c, 5), InvalidArgument);
}

TEST_CASE("steering estimate fixes vectors inside the sector span") {
  const UlaGeometry g{8, 0.5};
  const CVector a = steering_vector(g, 10.0);
  const CMatrix c = sector_matrix(g, 10.0, 0.0);
  const ProjectionOperator p = projection_operator(c, 1);
  const CVector est = estimate_steering(p, a);
  const CVector expected = a / a.norm();
  REQUIRE((est - expected).norm() < 1e-12);
  REQUIRE(est.norm() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("steering estimate rejects a vector orthogonal to the sector") {
  ProjectionOperator p;
  p.rank = 1;
  p.matrix = CMatrix::Zero(3, 3);
  p.matrix(0, 0) = 1.0;
  CVector d = CVector::Zero(3);
  d(1) = cx(2.0, 1.0);
  REQUIRE_THROWS_AS(estimate_steering(p, d), DegenerateError);
}

TEST_CASE("power estimate is exact for a noiseless single source") {
  const UlaGeometry g{7, 0.5};
  CVector a_hat = steering_vector(g, 10.0);
  a_hat /= a_hat.norm();
  const cx s(1.3, -2.1);
  const CVector x = a_hat * s;
  REQUIRE(estimate_power(a_hat, x, 0.0) ==
          Catch::Approx(std::norm(s)).epsilon(1e-12));
}

TEST_CASE("power estimate clamps orthogonal data to zero") {
  CVector a_hat = CVector::Zero(4);
  a_hat(0) = 1.0;
  CVector x = CVector::Zero(4);
  x(1) = cx(0.0, 3.0);
  long clamps = 0;
  REQUIRE(estimate_power(a_hat, x, 0.5, &clamps) == 0.0);
  REQUIRE(clamps == 1);
}

TEST_CASE("raw power estimates of pure noise average to zero") {
  // E|a^H n|^2 = sigma_n^2 cancels the correction term exactly, so the
  // pre-clamp estimator is unbiased at zero; the clamped mean sits slightly
  // above.
  Rng rng(404);
  const UlaGeometry g{12, 0.5};
  CVector a_hat = steering_vector(g, 10.0);
  a_hat /= a_hat.norm();
  const double noise = 2.0;
  const int n = 100000;
  double raw_sum = 0.0;
  double clamped_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const CVector x = rng.cgaussian_vector(12, noise);
    const double corr = std::norm(a_hat.dot(x));
    raw_sum += corr - noise;  // unit-norm a_hat reduces the estimator to this
    clamped_sum += estimate_power(a_hat, x, noise);
  }
  const double raw_mean = raw_sum / n;
  const double clamped_mean = clamped_sum / n;
  REQUIRE(std::abs(raw_mean) < 4.0 * noise / std::sqrt(static_cast<double>(n)));
  REQUIRE(clamped_mean > 0.0);
}

TEST_CASE("INC construction keeps an identity input at the noise scale") {
  const CMatrix r = CMatrix::Identity(3, 3);
  CVector a = CVector::Zero(3);
  a(0) = 1.0;
  const CMatrix out = build_inc(r, a, 0.0, 1.0);
  REQUIRE((out - 2.0 * CMatrix::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("INC construction hand trace: load, subtract, rescale") {
  // R~ = diag(3,1), a = e1, sigma1^2 = 2, sigma_n^2 = 1:
  // (a) diag(6,4); (b) diag(4,4); (c) spectral norm 4 -> scale 1/2 -> diag(2,2).
  CMatrix r = CMatrix::Zero(2, 2);
  r(0, 0) = 3.0;
  r(1, 1) = 1.0;
  CVector a = CVector::Zero(2);
  a(0) = 1.0;
  const CMatrix out = build_inc(r, a, 2.0, 1.0);
  CMatrix expected = 2.0 * CMatrix::Identity(2, 2);
  REQUIRE((out - expected).norm() < 1e-12);
}

TEST_CASE("INC construction pins the spectral norm to twice the noise power") {
  Rng rng(21);
  for (int k = 0; k < 20; ++k) {
    const int m = 4 + static_cast<int>(rng.next_u64() % 9);
    CMatrix r = CMatrix::Zero(m, m);
    for (int j = 0; j < m; ++j) {
      const CVector v = rng.cgaussian_vector(m, 1.0);
      r += v * v.adjoint();
    }
    r = hermitian_from_lower(r);
    CVector a = rng.cgaussian_vector(m, 1.0);
    a /= a.norm();
    const double sigma1 = rng.uniform(0.0, 3.0);
    const double noise = rng.uniform(0.5, 2.0);
    const CMatrix out = build_inc(r, a, sigma1, noise);
    REQUIRE(spectral_norm(out) == Catch::Approx(2.0 * noise).epsilon(1e-8));
    REQUIRE((out - out.adjoint()).norm() == 0.0);
  }
}

TEST_CASE("INC construction without loading is the plain subtraction") {
  CMatrix r = CMatrix::Zero(2, 2);
  r(0, 0) = 3.0;
  r(1, 1) = 1.0;
  CVector a = CVector::Zero(2);
  a(0) = 1.0;
  const CMatrix out = build_inc(r, a, 2.0, 1.0, false);
  CMatrix expected = CMatrix::Zero(2, 2);
  expected(0, 0) = 1.0;
  expected(1, 1) = 1.0;
  REQUIRE((out - expected).norm() < 1e-14);
}

TEST_CASE("INC construction flags an all-zero matrix") {
  const CMatrix r = CMatrix::Zero(3, 3);
  CVector a = CVector::Zero(3);
  a(0) = 1.0;
  REQUIRE_THROWS_AS(build_inc(r, a, 0.0, 1.0), DegenerateError);
}

TEST_CASE("MVDR weights on the identity reduce to the matched filter") {
  const UlaGeometry g{5, 0.5};
  const CVector a = steering_vector(g, 30.0);
  const CVector w = mvdr_weights(CMatrix::Identity(5, 5), a);
  REQUIRE((w - a / a.squaredNorm()).norm() < 1e-12);
}

TEST_CASE("MVDR weights match the two-sensor hand computation") {
  CMatrix r = CMatrix::Zero(2, 2);
  r(0, 0) = 1.0;
  r(1, 1) = 2.0;
  CVector a = CVector::Ones(2);
  const CVector w = mvdr_weights(r, a);
  REQUIRE(std::abs(w(0) - cx(2.0 / 3.0, 0)) < 1e-12);
  REQUIRE(std::abs(w(1) - cx(1.0 / 3.0, 0)) < 1e-12);
}

TEST_CASE("MVDR weights satisfy the distortionless constraint") {
  Rng rng(61);
  for (int k = 0; k < 25; ++k) {
    const int m = 3 + static_cast<int>(rng.next_u64() % 10);
    CMatrix r = 0.1 * CMatrix::Identity(m, m);
    for (int j = 0; j < m + 2; ++j) {
      const CVector v = rng.cgaussian_vector(m, 1.0);
      r += v * v.adjoint();
    }
    r = hermitian_from_lower(r);
    const CVector a = rng.cgaussian_vector(m, 1.0);
    const CVector w = mvdr_weights(r, a);
    REQUIRE(std::abs(w.dot(a) - cx(1, 0)) < 1e-10);
  }
}

TEST_CASE("MVDR weights survive a transiently indefinite Hermitian system") {
  // Indefinite but well-conditioned: diag(2, -1, 1).
  CMatrix r = CMatrix::Zero(3, 3);
  r(0, 0) = 2.0;
  r(1, 1) = -1.0;
  r(2, 2) = 1.0;
  CVector a(3);
  a << cx(1, 0), cx(1, 0), cx(1, 0);
  const CVector w = mvdr_weights(r, a);
  REQUIRE(std::abs(w.dot(a) - cx(1, 0)) < 1e-10);
  const CVector expected = test_oracles::mvdr_by_inverse(r, a);
  REQUIRE((w - expected).norm() < 1e-8 * expected.norm());
}

TEST_CASE("MVDR weights reject a singular system") {
  CMatrix r = CMatrix::Zero(3, 3);
  r(0, 0) = 1.0;  // rank 1
  CVector a = CVector::Ones(3);
  REQUIRE_THROWS_AS(mvdr_weights(r, a), SolverError);
}

TEST_CASE("SMI weights on the identity reduce to the matched filter") {
  const UlaGeometry g{4, 0.5};
  const CVector a = steering_vector(g, 15.0);
  const CVector w = smi_weights(CMatrix::Identity(4, 4), a);
  REQUIRE((w - a / a.squaredNorm()).norm() < 1e-12);
}

TEST_CASE("SMI engages the fallback load on a rank-deficient SCM") {
  Rng rng(5);
  const UlaGeometry g{6, 0.5};
  const CVector a = steering_vector(g, 10.0);
  auto scm_state = OasMatrixState::init(6);
  scm_state = scm_update(std::move(scm_state), rng.cgaussian_vector(6, 1.0));
  scm_state = scm_update(std::move(scm_state), rng.cgaussian_vector(6, 1.0));
  SmiDiagnostics diag;
  const CVector w = smi_weights(scm_mean(scm_state), a, 0.0, &diag);
  REQUIRE(diag.load_fallbacks == 1);
  REQUIRE(w.allFinite());
  REQUIRE(std::abs(w.dot(a) - cx(1, 0)) < 1e-8);
}

TEST_CASE("SMI weights match the brute-force inverse formula") {
  Rng rng(1001);
  Scenario s = clean_scenario(10.0);
  const RealizedMismatch realized = realize_mismatch(rng, s);
  const SnapshotBatch batch = generate_snapshots(rng, s, realized, 100);
  auto scm_state = OasMatrixState::init(s.geometry.num_sensors);
  for (int i = 0; i < 100; ++i)
    scm_state = scm_update(std::move(scm_state), batch.snapshots.col(i));
  const CVector a = steering_vector(s.geometry, s.desired_doa_deg);
  const CVector w = smi_weights(scm_mean(scm_state), a);
  const CVector expected =
      test_oracles::mvdr_by_inverse(scm_mean(scm_state), a);
  REQUIRE((w - expected).norm() < 1e-8 * expected.norm());
}

TEST_CASE("optimal weights with white interference follow the steering") {
  const UlaGeometry g{6, 0.5};
  const CVector a = steering_vector(g, 10.0);
  const CVector w = optimal_weights(2.0 * CMatrix::Identity(6, 6), a);
  const CVector expected = a / a.squaredNorm();
  REQUIRE((w - expected).norm() < 1e-12);
}

TEST_CASE("optimal weights dominate random beamformers") {
  Rng rng(314);
  Scenario s = clean_scenario(10.0);
  const RealizedMismatch realized = realize_mismatch(rng, s);
  const SnapshotBatch batch = generate_snapshots(rng, s, realized, 2);
  const CVector w_opt = optimal_weights(batch.true_inc, realized.steering);
  const double best = sinr_db(w_opt, batch.true_desired_cov, batch.true_inc);
  const double closed = test_oracles::optimal_sinr_db(
      batch.sigma1_sq, realized.steering, batch.true_inc);
  REQUIRE(best == Catch::Approx(closed).margin(1e-9));
  for (int k = 0; k < 10000; ++k) {
    CVector w = rng.cgaussian_vector(s.geometry.num_sensors, 1.0);
    w /= w.norm();
    REQUIRE(sinr_db(w, batch.true_desired_cov, batch.true_inc) <= best + 1e-9);
  }
}

TEST_CASE("first snapshots at M=2 reproduce the hand-stepped pipeline") {
  // Golden trace for x(1) = e1, x(2) = e2 with a full-rank projector,
  // unit noise power and the all-ones initialization:
  //   snapshot 1: scv = [1,0], nu = 1/2, d = [1/2,1/2], rho stays 1,
  //     a = [1,1]/sqrt(2), R~ = I/2 -> load -> I -> scale -> 2I, sigma1 = 0,
  //     w = a.
  //   snapshot 2: scv = [1/2, sqrt(2)/4], d = nu * ones, same a, same INC.
  // rho_init is pinned at 1 so the trace exercises the boundary fixed point.
  const UlaGeometry g{2, 0.5};
  LocsmeConfig table1;
  table1.rho_init = 1.0;
  LocsmeState st = locsme_init(g, 0.0, 5.0, 2, 1.0, table1);
  REQUIRE((st.weights - CVector::Ones(2)).norm() == 0.0);

  CVector x1 = CVector::Zero(2);
  x1(0) = 1.0;
  locsme_snapshot(st, x1);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  REQUIRE(st.vec_state.rho == Catch::Approx(1.0).margin(1e-15));
  REQUIRE(st.mat_state.rho0 == Catch::Approx(1.0).margin(1e-15));
  REQUIRE(std::abs(st.vec_state.d_hat(0) - cx(0.5, 0)) < 1e-14);
  REQUIRE(std::abs(st.vec_state.d_hat(1) - cx(0.5, 0)) < 1e-14);
  REQUIRE(std::abs(st.a_hat(0) - cx(inv_sqrt2, 0)) < 1e-12);
  REQUIRE(std::abs(st.a_hat(1) - cx(inv_sqrt2, 0)) < 1e-12);
  REQUIRE(st.sigma1_sq_hat == 0.0);
  REQUIRE((st.inc_hat - 2.0 * CMatrix::Identity(2, 2)).norm() < 1e-12);
  REQUIRE((st.weights - st.a_hat).norm() < 1e-12);
  REQUIRE(st.diag.power_clamps == 1);

  CVector x2 = CVector::Zero(2);
  x2(1) = 1.0;
  locsme_snapshot(st, x2);
  const double nu2 = 0.25 + std::sqrt(2.0) / 8.0;
  REQUIRE(st.vec_state.rho == Catch::Approx(1.0).margin(1e-14));
  REQUIRE(std::abs(st.vec_state.d_hat(0) - cx(nu2, 0)) < 1e-12);
  REQUIRE(std::abs(st.vec_state.d_hat(1) - cx(nu2, 0)) < 1e-12);
  REQUIRE(std::abs(st.a_hat(0) - cx(inv_sqrt2, 0)) < 1e-12);
  REQUIRE(st.sigma1_sq_hat == 0.0);
  REQUIRE((st.inc_hat - 2.0 * CMatrix::Identity(2, 2)).norm() < 1e-12);
  REQUIRE(st.snapshot_index == 2);
}

TEST_CASE("all-zero snapshots surface a degenerate error with the index") {
  const UlaGeometry g{4, 0.5};
  LocsmeState st = locsme_init(g, 10.0, 5.0, 3, 1.0);
  const double rho_before = st.vec_state.rho;
  try {
    locsme_snapshot(st, CVector::Zero(4));
    FAIL("expected a degenerate-matrix error");
  } catch (const DegenerateError& e) {
    REQUIRE(std::string(e.what()).find("snapshot 1") != std::string::npos);
  }
  REQUIRE(st.vec_state.rho == rho_before);  // division guard held it
  REQUIRE(st.diag.steering_fallbacks == 1);
  REQUIRE(st.diag.shrinkage.rho_holds >= 1);
}

TEST_CASE("steering estimate converges to the true vector without mismatch") {
  const Scenario s = clean_scenario(20.0);
  const CVector truth = steering_vector(s.geometry, s.desired_doa_deg);
  double acc = 0.0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(777, 0, static_cast<std::uint64_t>(t)));
    const RealizedMismatch realized = realize_mismatch(rng, s);
    const SnapshotBatch batch = generate_snapshots(rng, s, realized, 50);
    LocsmeState st = locsme_init(s);
    for (int i = 0; i < 50; ++i) locsme_snapshot(st, batch.snapshots.col(i));
    acc += std::abs(st.a_hat.dot(truth)) / truth.norm();
  }
  REQUIRE(acc / trials > 0.99);
}

TEST_CASE("adapted SINR approaches the optimum without mismatch") {
  const Scenario s = clean_scenario(20.0);
  const int trials = 100;
  double locsme_sum = 0.0;
  double optimal_sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(4242, 0, static_cast<std::uint64_t>(t)));
    const RealizedMismatch realized = realize_mismatch(rng, s);
    const SnapshotBatch batch = generate_snapshots(rng, s, realized, 50);
    LocsmeState st = locsme_init(s);
    for (int i = 0; i < 50; ++i) locsme_snapshot(st, batch.snapshots.col(i));
    locsme_sum += sinr_db(st.weights, batch.true_desired_cov, batch.true_inc);
    const CVector w_opt = optimal_weights(batch.true_inc, realized.steering);
    optimal_sum += sinr_db(w_opt, batch.true_desired_cov, batch.true_inc);
  }
  const double gap = optimal_sum / trials - locsme_sum / trials;
  INFO("mean optimal-to-adapted gap " << gap << " dB");
  REQUIRE(gap < 3.0);
  REQUIRE(gap > -1e-9);
}

TEST_CASE("mean SINR improves from 10 to 50 snapshots without mismatch") {
  const Scenario s = clean_scenario(10.0);
  const int trials = 100;
  double at10 = 0.0;
  double at50 = 0.0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(999, 0, static_cast<std::uint64_t>(t)));
    const RealizedMismatch realized = realize_mismatch(rng, s);
    const SnapshotBatch batch = generate_snapshots(rng, s, realized, 50);
    LocsmeState st = locsme_init(s);
    for (int i = 0; i < 50; ++i) {
      locsme_snapshot(st, batch.snapshots.col(i));
      const double v =
          sinr_db(st.weights, batch.true_desired_cov, batch.true_inc);
      if (i == 9) at10 += v;
      if (i == 49) at50 += v;
    }
  }
  REQUIRE(at50 / trials >= at10 / trials);
}
