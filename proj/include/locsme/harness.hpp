#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "locsme/array.hpp"
#include "locsme/beamformer.hpp"
#include "locsme/rng.hpp"
#include "locsme/types.hpp"

namespace locsme {

enum class Algorithm { kOptimal, kLocsme, kSmi };

/// Canonical reporting order.
inline const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> v = {Algorithm::kOptimal,
                                           Algorithm::kLocsme, Algorithm::kSmi};
  return v;
}

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kOptimal: return "optimal";
    case Algorithm::kLocsme: return "locsme";
    case Algorithm::kSmi: return "smi";
  }
  return "?";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  if (s == "optimal") return Algorithm::kOptimal;
  if (s == "locsme") return Algorithm::kLocsme;
  if (s == "smi") return Algorithm::kSmi;
  throw ConfigError("unknown algorithm id '" + s +
                    "' (expected optimal, locsme or smi)");
}

/// Output SINR in dB: 10 log10((w^H R_s w) / (w^H R_in w)). For a rank-1
/// desired covariance this is exactly sigma1^2 |w^H a|^2 / (w^H R_in w);
/// for the time-varying signature case R_s is the expected desired-signal
/// covariance.
inline double output_sinr_db(const CVector& w, const CMatrix& desired_cov,
                             const CMatrix& true_inc) {
  if (w.size() != desired_cov.rows() || w.size() != true_inc.rows())
    throw InvalidArgument("output_sinr_db: dimension mismatch");
  if (w.norm() < detail::kDegenerateNorm)
    throw InvalidArgument("output_sinr_db: zero weight vector");
  const double num = w.dot(desired_cov * w).real();
  const double den = w.dot(true_inc * w).real();
  const double value = 10.0 * std::log10(num / den);
  if (!std::isfinite(value))
    throw EvalError("output SINR is not finite (numerator " +
                    std::to_string(num) + ", denominator " +
                    std::to_string(den) + ")");
  return value;
}

/// Stable digest of the ground-truth description, for bookkeeping.
inline std::string scenario_digest(const Scenario& s) {
  std::string text;
  char buf[64];
  auto add = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g;", v);
    text += buf;
  };
  add(s.geometry.num_sensors);
  add(s.geometry.spacing_wavelengths);
  add(s.desired_doa_deg);
  for (double d : s.interferer_doas_deg) add(d);
  add(s.snr_db);
  add(s.sir_db);
  add(s.noise_power);
  add(s.sector_half_width_deg);
  add(s.subspace_rank);
  if (const auto* c = std::get_if<CoherentScattering>(&s.mismatch)) {
    text += "coh;";
    add(c->num_paths);
    add(c->angle_mean_deg);
    add(c->angle_std_deg);
    add(c->angle_dist == AngleDistribution::kUniform ? 0 : 1);
  } else if (const auto* i = std::get_if<IncoherentScattering>(&s.mismatch)) {
    text += "inc;";
    add(i->num_paths);
    add(i->angle_mean_deg);
    add(i->angle_std_deg);
    add(i->angle_dist == AngleDistribution::kUniform ? 0 : 1);
    add(i->gain_variance_scale);
  } else {
    text += "none;";
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Per-snapshot output SINR of each algorithm over one trial.
struct TrialResult {
  std::map<Algorithm, std::vector<double>> sinr_db;
  std::uint64_t seed = 0;
  std::string digest;
  LocsmeDiagnostics locsme_diag;
  SmiDiagnostics smi_diag;
};

/// Ground-truth steering used by the optimum beamformer: the realized
/// signature when it is fixed, the direct path when it varies per snapshot.
inline CVector optimal_steering(const RealizedMismatch& realized) {
  if (realized.kind == MismatchKind::kIncoherent) return realized.basis.col(0);
  return realized.steering;
}

/// Runs one trial: realizes the mismatch once, generates the snapshot
/// stream, feeds the identical stream to every requested algorithm and
/// records the output SINR after every snapshot. Deterministic in
/// (scenario, seed).
inline TrialResult run_trial(const Scenario& scenario, std::uint64_t seed,
                             int n_snapshots,
                             const std::vector<Algorithm>& algorithms,
                             const LocsmeConfig& config = {}) {
  if (n_snapshots < 1) throw InvalidArgument("n_snapshots must be >= 1");
  if (algorithms.empty()) throw InvalidArgument("no algorithms requested");
  validate_scenario(scenario);

  Rng rng(seed);
  const RealizedMismatch realized = realize_mismatch(rng, scenario);
  const SnapshotBatch batch =
      generate_snapshots(rng, scenario, realized, n_snapshots);

  TrialResult result;
  result.seed = seed;
  result.digest = scenario_digest(scenario);
  for (Algorithm a : algorithms)
    result.sinr_db[a].reserve(static_cast<std::size_t>(n_snapshots));

  auto has = [&](Algorithm a) {
    return result.sinr_db.find(a) != result.sinr_db.end();
  };

  CVector w_opt;
  if (has(Algorithm::kOptimal))
    w_opt = optimal_weights(batch.true_inc, optimal_steering(realized));

  LocsmeState locsme;
  if (has(Algorithm::kLocsme)) locsme = locsme_init(scenario, config);

  OasMatrixState smi_scm;
  CVector smi_presumed;
  if (has(Algorithm::kSmi)) {
    smi_scm = OasMatrixState::init(scenario.geometry.num_sensors);
    smi_presumed =
        steering_vector(scenario.geometry, scenario.desired_doa_deg);
  }

  for (int i = 0; i < n_snapshots; ++i) {
    const CVector x = batch.snapshots.col(i);
    for (Algorithm a : all_algorithms()) {
      if (!has(a)) continue;
      try {
        const CVector* w = nullptr;
        CVector w_smi;
        switch (a) {
          case Algorithm::kOptimal:
            w = &w_opt;
            break;
          case Algorithm::kLocsme:
            w = &locsme_snapshot(locsme, x);
            break;
          case Algorithm::kSmi:
            smi_scm = scm_update(std::move(smi_scm), x);
            w_smi = smi_weights(scm_mean(smi_scm), smi_presumed, 0.0,
                                &result.smi_diag);
            w = &w_smi;
            break;
        }
        result.sinr_db[a].push_back(
            output_sinr_db(*w, batch.true_desired_cov, batch.true_inc));
      } catch (const Error& e) {
        throw Error("algorithm " + to_string(a) + ", snapshot " +
                    std::to_string(i + 1) + ": " + e.what());
      }
    }
  }
  if (has(Algorithm::kLocsme)) result.locsme_diag = locsme.diag;
  return result;
}

enum class SweepAxis { kSnapshots, kSnrDb };

inline std::string to_string(SweepAxis a) {
  return a == SweepAxis::kSnapshots ? "snapshots" : "snr_db";
}

/// Aggregated mean output SINR per algorithm, indexed by snapshot count or
/// SNR. A failed cell keeps its slot (NaN mean) and carries the error text.
struct SinrCurve {
  SweepAxis axis = SweepAxis::kSnrDb;
  std::vector<double> axis_values;
  std::vector<Algorithm> algorithms;
  std::map<Algorithm, std::vector<double>> mean_sinr_db;
  std::map<Algorithm, std::vector<double>> var_sinr_db;
  std::vector<std::string> cell_errors;  // one per axis value, "" when clean
  int num_trials = 0;
};

namespace detail {

/// Runs tasks 0..count-1 on `workers` threads. Each task writes only its own
/// slot, so the outcome is identical for any worker count.
template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  if (workers < 1) throw InvalidArgument("workers must be >= 1");
  if (workers == 1 || count <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= count) return;
      fn(k);
    }
  };
  std::vector<std::thread> pool;
  const int extra = std::min<int>(workers, static_cast<int>(count)) - 1;
  pool.reserve(static_cast<std::size_t>(extra));
  for (int t = 0; t < extra; ++t) pool.emplace_back(drain);
  drain();
  for (auto& th : pool) th.join();
}

struct MeanVar {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double var = 0.0;
};

inline MeanVar mean_var(const std::vector<double>& xs) {
  MeanVar mv;
  if (xs.empty()) return mv;
  double sum = 0.0;
  for (double x : xs) sum += x;
  mv.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - mv.mean) * (x - mv.mean);
    mv.var = ss / static_cast<double>(xs.size() - 1);
  }
  return mv;
}

}  // namespace detail

/// Monte-Carlo sweep. snr_db axis: each value gets its own batch of trials
/// (seeds derived from (master_seed, value index, trial index)) and reports
/// the terminal-snapshot mean. snapshots axis: one shared batch of trials of
/// length n_snapshots (axis index 0 in the seed derivation) and the mean
/// trajectory is sampled at the requested indices. Deterministic for fixed
/// inputs regardless of worker count.
inline SinrCurve sweep(const Scenario& scenario_template, SweepAxis axis,
                       const std::vector<double>& values, int n_trials,
                       int n_snapshots, std::uint64_t master_seed,
                       int workers = 1,
                       const std::vector<Algorithm>& algorithms =
                           all_algorithms(),
                       const LocsmeConfig& config = {}) {
  if (values.empty()) throw InvalidArgument("sweep: axis values are empty");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (!(values[i] > values[i - 1]))
      throw InvalidArgument("sweep: axis values must be strictly increasing");
  if (n_trials < 1) throw InvalidArgument("sweep: n_trials must be >= 1");
  if (n_snapshots < 1) throw InvalidArgument("sweep: n_snapshots must be >= 1");

  SinrCurve curve;
  curve.axis = axis;
  curve.axis_values = values;
  curve.num_trials = n_trials;
  for (Algorithm a : all_algorithms())
    if (std::find(algorithms.begin(), algorithms.end(), a) != algorithms.end())
      curve.algorithms.push_back(a);
  curve.cell_errors.assign(values.size(), "");
  for (Algorithm a : curve.algorithms) {
    curve.mean_sinr_db[a].assign(values.size(),
                                 std::numeric_limits<double>::quiet_NaN());
    curve.var_sinr_db[a].assign(values.size(), 0.0);
  }

  if (axis == SweepAxis::kSnrDb) {
    const std::size_t cells = values.size();
    const std::size_t tasks = cells * static_cast<std::size_t>(n_trials);
    std::vector<TrialResult> results(tasks);
    std::vector<std::string> errors(tasks);
    detail::parallel_for(tasks, workers, [&](std::size_t k) {
      const std::size_t vi = k / static_cast<std::size_t>(n_trials);
      const std::size_t ti = k % static_cast<std::size_t>(n_trials);
      Scenario s = scenario_template;
      s.snr_db = values[vi];
      try {
        results[k] = run_trial(s, derive_seed(master_seed, vi, ti),
                               n_snapshots, curve.algorithms, config);
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    });
    for (std::size_t vi = 0; vi < cells; ++vi) {
      for (std::size_t ti = 0; ti < static_cast<std::size_t>(n_trials); ++ti) {
        const std::string& err = errors[vi * n_trials + ti];
        if (!err.empty()) {
          curve.cell_errors[vi] =
              "trial " + std::to_string(ti) + ": " + err;
          break;
        }
      }
      if (!curve.cell_errors[vi].empty()) continue;
      for (Algorithm a : curve.algorithms) {
        std::vector<double> terminal(n_trials);
        for (int ti = 0; ti < n_trials; ++ti)
          terminal[ti] =
              results[vi * n_trials + ti].sinr_db.at(a).back();
        const auto mv = detail::mean_var(terminal);
        curve.mean_sinr_db[a][vi] = mv.mean;
        curve.var_sinr_db[a][vi] = mv.var;
      }
    }
    return curve;
  }

  // snapshots axis: one shared batch, sampled along the trajectory.
  for (double v : values) {
    if (v < 1.0 || v > static_cast<double>(n_snapshots) ||
        v != std::floor(v))
      throw InvalidArgument(
          "sweep: snapshot axis values must be integers in [1, n_snapshots]");
  }
  std::vector<TrialResult> results(static_cast<std::size_t>(n_trials));
  std::vector<std::string> errors(static_cast<std::size_t>(n_trials));
  detail::parallel_for(static_cast<std::size_t>(n_trials), workers,
                       [&](std::size_t ti) {
                         try {
                           results[ti] = run_trial(
                               scenario_template,
                               derive_seed(master_seed, 0, ti), n_snapshots,
                               curve.algorithms, config);
                         } catch (const std::exception& e) {
                           errors[ti] = e.what();
                         }
                       });
  std::string batch_error;
  for (std::size_t ti = 0; ti < errors.size(); ++ti) {
    if (!errors[ti].empty()) {
      batch_error = "trial " + std::to_string(ti) + ": " + errors[ti];
      break;
    }
  }
  if (!batch_error.empty()) {
    curve.cell_errors.assign(values.size(), batch_error);
    return curve;
  }
  for (std::size_t vi = 0; vi < values.size(); ++vi) {
    const auto snap = static_cast<std::size_t>(values[vi]) - 1;
    for (Algorithm a : curve.algorithms) {
      std::vector<double> at(n_trials);
      for (int ti = 0; ti < n_trials; ++ti)
        at[ti] = results[ti].sinr_db.at(a)[snap];
      const auto mv = detail::mean_var(at);
      curve.mean_sinr_db[a][vi] = mv.mean;
      curve.var_sinr_db[a][vi] = mv.var;
    }
  }
  return curve;
}

}  // namespace locsme
