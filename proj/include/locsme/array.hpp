#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "locsme/rng.hpp"
#include "locsme/types.hpp"

namespace locsme {

/// Uniform linear array: equally spaced omnidirectional sensors on a line.
struct UlaGeometry {
  int num_sensors = 12;
  double spacing_wavelengths = 0.5;
  bool operator==(const UlaGeometry&) const = default;
};

enum class AngleDistribution { kUniform, kGaussian };

struct NoMismatch {
  bool operator==(const NoMismatch&) const = default;
};

/// Local scattering with per-trial path phases held constant over snapshots.
struct CoherentScattering {
  int num_paths = 4;
  double angle_mean_deg = 10.0;
  double angle_std_deg = 2.0;
  AngleDistribution angle_dist = AngleDistribution::kUniform;
  bool operator==(const CoherentScattering&) const = default;
};

/// Local scattering with i.i.d. complex Gaussian path gains redrawn every
/// snapshot (time-varying desired signature). Each of the num_paths + 1
/// gains (direct path included) has variance gain_variance_scale * sigma1^2.
/// The default 1 keeps the per-path variance at sigma1^2, mirroring the
/// unnormalized coherent sum; 1 / (num_paths + 1) normalizes the total
/// desired power to sigma1^2 instead.
struct IncoherentScattering {
  int num_paths = 4;
  double angle_mean_deg = 10.0;
  double angle_std_deg = 2.0;
  AngleDistribution angle_dist = AngleDistribution::kUniform;
  double gain_variance_scale = 1.0;
  bool operator==(const IncoherentScattering&) const = default;
};

using MismatchModel =
    std::variant<NoMismatch, CoherentScattering, IncoherentScattering>;

/// Ground-truth description of one simulated environment.
struct Scenario {
  UlaGeometry geometry;
  double desired_doa_deg = 10.0;
  std::vector<double> interferer_doas_deg = {50.0, 90.0};
  double snr_db = 10.0;
  double sir_db = 20.0;
  double noise_power = 1.0;
  MismatchModel mismatch = NoMismatch{};
  double sector_half_width_deg = 5.0;
  int subspace_rank = 8;
  bool operator==(const Scenario&) const = default;
};

/// Desired signal power implied by the scenario's SNR and noise floor.
inline double desired_power(const Scenario& s) {
  return s.noise_power * std::pow(10.0, s.snr_db / 10.0);
}

/// Per-interferer power implied by the fixed signal-to-interference ratio.
inline double interferer_power(const Scenario& s) {
  return desired_power(s) * std::pow(10.0, -s.sir_db / 10.0);
}

namespace detail {

constexpr double kDegToRad = M_PI / 180.0;

/// Steering vector without the DoA domain check; sector quadrature may
/// evaluate a few degrees past +-90.
inline CVector steering_unchecked(const UlaGeometry& g, double theta_deg) {
  CVector a(g.num_sensors);
  const double step =
      2.0 * M_PI * g.spacing_wavelengths * std::sin(theta_deg * kDegToRad);
  a(0) = cx(1.0, 0.0);
  for (int m = 1; m < g.num_sensors; ++m) {
    const double phase = step * m;
    a(m) = cx(std::cos(phase), std::sin(phase));
  }
  return a;
}

inline void check_geometry(const UlaGeometry& g) {
  if (g.num_sensors < 1)
    throw InvalidArgument("num_sensors must be >= 1, got " +
                          std::to_string(g.num_sensors));
  if (!(g.spacing_wavelengths > 0.0))
    throw InvalidArgument("spacing_wavelengths must be > 0");
}

}  // namespace detail

/// Plane-wave array response for a DoA measured from broadside.
/// Element m (1-based) is exp(j*2*pi*spacing*(m-1)*sin(theta)).
inline CVector steering_vector(const UlaGeometry& g, double theta_deg) {
  detail::check_geometry(g);
  if (!(theta_deg > -90.0 && theta_deg <= 90.0))
    throw InvalidArgument("DoA must lie in (-90, 90] degrees, got " +
                          std::to_string(theta_deg));
  return detail::steering_unchecked(g, theta_deg);
}

/// Integral of a(theta) a(theta)^H over [theta1 - theta_e, theta1 + theta_e],
/// midpoint rule. Only the principal eigenvectors are consumed downstream,
/// so the quadrature scale factor is immaterial. theta_e = 0 collapses to the
/// rank-1 matrix a(theta1) a(theta1)^H.
inline CMatrix sector_matrix(const UlaGeometry& g, double theta1_deg,
                             double theta_e_deg, int grid_points = 200) {
  detail::check_geometry(g);
  if (theta_e_deg < 0.0)
    throw InvalidArgument("sector half-width must be >= 0");
  const int m = g.num_sensors;
  CMatrix c = CMatrix::Zero(m, m);
  if (theta_e_deg == 0.0) {
    CVector a = detail::steering_unchecked(g, theta1_deg);
    c.selfadjointView<Eigen::Lower>().rankUpdate(a, 1.0);
    return hermitian_from_lower(c);
  }
  if (grid_points < 2)
    throw InvalidArgument("sector quadrature needs grid_points >= 2, got " +
                          std::to_string(grid_points));
  const double width = 2.0 * theta_e_deg;
  const double h = width / grid_points;
  for (int k = 0; k < grid_points; ++k) {
    const double theta = theta1_deg - theta_e_deg + (k + 0.5) * h;
    CVector a = detail::steering_unchecked(g, theta);
    c.selfadjointView<Eigen::Lower>().rankUpdate(a, h);
  }
  return hermitian_from_lower(c);
}

enum class MismatchKind { kNone, kCoherent, kIncoherent };

/// Per-trial realization of the desired-signal steering structure.
/// kNone/kCoherent: `steering` is the fixed signature used for every
/// snapshot. kIncoherent: `basis` holds the direct path (column 0) and the
/// scattered paths; a fresh gain vector is drawn per snapshot with per-path
/// variance gain_variance_scale * sigma1^2.
struct RealizedMismatch {
  MismatchKind kind = MismatchKind::kNone;
  CVector steering;
  CMatrix basis;
  double gain_variance_scale = 0.0;
};

/// Deterministic core of the coherent model: direct path plus fixed-phase
/// scattered plane waves, no normalization.
inline CVector coherent_steering(const UlaGeometry& g, double direct_doa_deg,
                                 const std::vector<double>& scatter_doas_deg,
                                 const std::vector<double>& phases_rad) {
  if (scatter_doas_deg.size() != phases_rad.size())
    throw InvalidArgument("scatter angle/phase count mismatch");
  CVector a = detail::steering_unchecked(g, direct_doa_deg);
  for (std::size_t k = 0; k < scatter_doas_deg.size(); ++k) {
    const cx gain = std::polar(1.0, phases_rad[k]);
    a += gain * detail::steering_unchecked(g, scatter_doas_deg[k]);
  }
  return a;
}

/// Scattered-path basis [p, b(theta_1), ..., b(theta_P)] for the
/// time-varying signature model.
inline CMatrix incoherent_basis(const UlaGeometry& g, double direct_doa_deg,
                                const std::vector<double>& scatter_doas_deg) {
  CMatrix b(g.num_sensors, 1 + static_cast<Eigen::Index>(scatter_doas_deg.size()));
  b.col(0) = detail::steering_unchecked(g, direct_doa_deg);
  for (std::size_t k = 0; k < scatter_doas_deg.size(); ++k)
    b.col(1 + k) = detail::steering_unchecked(g, scatter_doas_deg[k]);
  return b;
}

namespace detail {

inline std::vector<double> draw_scatter_angles(Rng& rng, int num_paths,
                                               double mean_deg, double std_deg,
                                               AngleDistribution dist) {
  std::vector<double> angles(num_paths);
  if (dist == AngleDistribution::kUniform) {
    // The unique uniform law with the requested mean and standard deviation.
    const double half = std::sqrt(3.0) * std_deg;
    for (auto& a : angles) a = rng.uniform(mean_deg - half, mean_deg + half);
  } else {
    for (auto& a : angles) a = mean_deg + std_deg * rng.gaussian();
  }
  return angles;
}

}  // namespace detail

/// Draws the per-trial scattering realization. Coherent: angles and phases
/// drawn once, signature fixed over snapshots. Incoherent: angles drawn once,
/// gains redrawn per snapshot by generate_snapshots.
inline RealizedMismatch realize_mismatch(Rng& rng, const Scenario& s) {
  RealizedMismatch r;
  if (std::holds_alternative<NoMismatch>(s.mismatch)) {
    r.kind = MismatchKind::kNone;
    r.steering = steering_vector(s.geometry, s.desired_doa_deg);
    return r;
  }
  if (const auto* coh = std::get_if<CoherentScattering>(&s.mismatch)) {
    if (coh->num_paths < 0) throw InvalidArgument("num_paths must be >= 0");
    if (coh->angle_std_deg < 0.0)
      throw InvalidArgument("angle_std_deg must be >= 0");
    auto angles = detail::draw_scatter_angles(
        rng, coh->num_paths, coh->angle_mean_deg, coh->angle_std_deg,
        coh->angle_dist);
    std::vector<double> phases(coh->num_paths);
    for (auto& p : phases) p = rng.uniform(0.0, 2.0 * M_PI);
    r.kind = MismatchKind::kCoherent;
    r.steering = coherent_steering(s.geometry, s.desired_doa_deg, angles, phases);
    return r;
  }
  const auto& inc = std::get<IncoherentScattering>(s.mismatch);
  if (inc.num_paths < 0) throw InvalidArgument("num_paths must be >= 0");
  if (inc.angle_std_deg < 0.0)
    throw InvalidArgument("angle_std_deg must be >= 0");
  auto angles = detail::draw_scatter_angles(rng, inc.num_paths,
                                            inc.angle_mean_deg,
                                            inc.angle_std_deg, inc.angle_dist);
  r.kind = MismatchKind::kIncoherent;
  r.basis = incoherent_basis(s.geometry, s.desired_doa_deg, angles);
  r.gain_variance_scale = inc.gain_variance_scale;
  return r;
}

/// One batch of array snapshots plus the exact second-order ground truth
/// needed to score beamformers against it.
struct SnapshotBatch {
  CMatrix snapshots;         // M x n, column i is x(i)
  CMatrix true_desired_cov;  // R_s
  CMatrix true_inc;          // R_{i+n}, always includes the noise floor
  RealizedMismatch realized;
  double sigma1_sq = 0.0;
  double interferer_power_each = 0.0;
};

inline void validate_scenario(const Scenario& s) {
  detail::check_geometry(s.geometry);
  auto check_doa = [](double deg, const char* what) {
    if (!(deg > -90.0 && deg <= 90.0))
      throw InvalidArgument(std::string(what) +
                            " must lie in (-90, 90] degrees, got " +
                            std::to_string(deg));
  };
  check_doa(s.desired_doa_deg, "desired_doa_deg");
  for (double d : s.interferer_doas_deg) {
    check_doa(d, "interferer_doas_deg");
    if (d == s.desired_doa_deg)
      throw InvalidArgument("interferer DoA coincides with the desired DoA");
  }
  if (!(s.noise_power > 0.0)) throw InvalidArgument("noise_power must be > 0");
  if (s.sector_half_width_deg < 0.0)
    throw InvalidArgument("sector_half_width_deg must be >= 0");
  if (s.subspace_rank < 1 || s.subspace_rank > s.geometry.num_sensors)
    throw InvalidArgument("subspace_rank must lie in [1, num_sensors]");
}

/// Generates n snapshots x(i) = desired(i) + sum_k a(theta_k) s_k(i) + n(i)
/// and fills in the exact R_s and R_{i+n}. Interferer steering vectors are
/// exact; the mismatch applies to the desired signal only.
inline SnapshotBatch generate_snapshots(Rng& rng, const Scenario& s,
                                        const RealizedMismatch& realized,
                                        Eigen::Index n) {
  if (n < 1) throw InvalidArgument("snapshot count must be >= 1");
  validate_scenario(s);
  const int m = s.geometry.num_sensors;
  const double sigma1_sq = desired_power(s);
  const double sigma_int = interferer_power(s);

  std::vector<CVector> interferers;
  interferers.reserve(s.interferer_doas_deg.size());
  for (double doa : s.interferer_doas_deg)
    interferers.push_back(steering_vector(s.geometry, doa));

  SnapshotBatch batch;
  batch.realized = realized;
  batch.sigma1_sq = sigma1_sq;
  batch.interferer_power_each = sigma_int;
  batch.snapshots.resize(m, n);

  const double gain_var = sigma1_sq * realized.gain_variance_scale;
  for (Eigen::Index i = 0; i < n; ++i) {
    CVector x;
    if (realized.kind == MismatchKind::kIncoherent) {
      CVector gains = rng.cgaussian_vector(realized.basis.cols(), gain_var);
      x = realized.basis * gains;
    } else {
      x = realized.steering * rng.cgaussian(sigma1_sq);
    }
    for (const auto& a_int : interferers) x += a_int * rng.cgaussian(sigma_int);
    x += rng.cgaussian_vector(m, s.noise_power);
    batch.snapshots.col(i) = x;
  }

  CMatrix rs = CMatrix::Zero(m, m);
  if (realized.kind == MismatchKind::kIncoherent) {
    for (Eigen::Index k = 0; k < realized.basis.cols(); ++k)
      rs.selfadjointView<Eigen::Lower>().rankUpdate(realized.basis.col(k),
                                                    gain_var);
  } else {
    rs.selfadjointView<Eigen::Lower>().rankUpdate(realized.steering, sigma1_sq);
  }
  batch.true_desired_cov = hermitian_from_lower(rs);

  CMatrix rin = CMatrix::Zero(m, m);
  for (const auto& a_int : interferers)
    rin.selfadjointView<Eigen::Lower>().rankUpdate(a_int, sigma_int);
  batch.true_inc = hermitian_from_lower(rin);
  batch.true_inc += s.noise_power * CMatrix::Identity(m, m);
  return batch;
}

}  // namespace locsme
