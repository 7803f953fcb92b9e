// Command-line Monte-Carlo SINR simulator for the LOCSME beamformer and its
// baselines. Subcommands: run (per-snapshot trajectory of the configured
// scenario), sweep-snr, sweep-snapshots. All output is deterministic in the
// configuration, including the worker count.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "locsme/locsme.hpp"

namespace {

struct CliOverrides {
  CLI::Option* config = nullptr;
  CLI::Option* output = nullptr;
  CLI::Option* format = nullptr;
  CLI::Option* workers = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* mismatch = nullptr;

  std::string config_path;
  std::string output_path;
  std::string format_str;
  int workers_val = 1;
  std::uint64_t seed_val = 0;
  std::string mismatch_str;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw locsme::ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

locsme::MismatchModel mismatch_with_kind(const locsme::MismatchModel& current,
                                         const std::string& kind) {
  locsme::CoherentScattering coh;
  locsme::IncoherentScattering inc;
  // Keep scattering parameters from the config when switching kinds.
  if (const auto* c = std::get_if<locsme::CoherentScattering>(&current)) {
    coh = *c;
    inc.num_paths = c->num_paths;
    inc.angle_mean_deg = c->angle_mean_deg;
    inc.angle_std_deg = c->angle_std_deg;
    inc.angle_dist = c->angle_dist;
  } else if (const auto* i =
                 std::get_if<locsme::IncoherentScattering>(&current)) {
    inc = *i;
    coh.num_paths = i->num_paths;
    coh.angle_mean_deg = i->angle_mean_deg;
    coh.angle_std_deg = i->angle_std_deg;
    coh.angle_dist = i->angle_dist;
  }
  if (kind == "none") return locsme::NoMismatch{};
  if (kind == "coherent") return coh;
  if (kind == "incoherent") return inc;
  throw locsme::ConfigError("--mismatch: expected none, coherent or incoherent");
}

locsme::RunConfig load_config(const CliOverrides& o) {
  locsme::RunConfig cfg;
  if (*o.config) cfg = locsme::parse_config(read_file(o.config_path));
  else cfg = locsme::parse_config("");

  if (*o.output) cfg.output_path = o.output_path;
  if (*o.format) {
    if (o.format_str == "csv") cfg.format = locsme::OutputFormat::kCsv;
    else if (o.format_str == "json") cfg.format = locsme::OutputFormat::kJson;
    else throw locsme::ConfigError("--format: expected csv or json");
  }
  if (*o.workers) cfg.workers = o.workers_val;
  if (*o.seed) cfg.master_seed = o.seed_val;
  if (*o.mismatch)
    cfg.scenario.mismatch = mismatch_with_kind(cfg.scenario.mismatch,
                                               o.mismatch_str);
  locsme::validate_config(cfg);
  return cfg;
}

std::vector<double> default_snr_values() {
  std::vector<double> v;
  for (double s = -10.0; s <= 30.0; s += 5.0) v.push_back(s);
  return v;
}

std::vector<double> snapshot_indices(int n_snapshots) {
  std::vector<double> v(static_cast<std::size_t>(n_snapshots));
  for (int i = 0; i < n_snapshots; ++i) v[static_cast<std::size_t>(i)] = i + 1;
  return v;
}

int emit_and_summarize(const locsme::SinrCurve& curve,
                       const locsme::RunConfig& cfg) {
  const std::string rendered =
      locsme::render_curve(curve, cfg.format == locsme::OutputFormat::kJson);
  if (cfg.output_path.empty()) {
    std::fputs(rendered.c_str(), stdout);
  } else {
    locsme::write_file(cfg.output_path, rendered);
  }

  const std::size_t last = curve.axis_values.size() - 1;
  if (curve.cell_errors[last].empty()) {
    for (locsme::Algorithm a : curve.algorithms)
      std::fprintf(stderr, "%s: terminal mean SINR %.3f dB\n",
                   locsme::to_string(a).c_str(),
                   curve.mean_sinr_db.at(a)[last]);
  }
  int failed = 0;
  for (std::size_t i = 0; i < curve.cell_errors.size(); ++i) {
    if (!curve.cell_errors[i].empty()) {
      ++failed;
      std::fprintf(stderr, "cell %s=%g failed: %s\n",
                   locsme::to_string(curve.axis).c_str(),
                   curve.axis_values[i], curve.cell_errors[i].c_str());
    }
  }
  return failed == 0 ? 0 : 2;
}

int cmd_run(const locsme::RunConfig& cfg) {
  const auto curve = locsme::sweep(
      cfg.scenario, locsme::SweepAxis::kSnapshots,
      snapshot_indices(cfg.n_snapshots), cfg.n_trials, cfg.n_snapshots,
      cfg.master_seed, cfg.workers, cfg.algorithms, cfg.locsme_config());
  return emit_and_summarize(curve, cfg);
}

int cmd_sweep_snr(const locsme::RunConfig& cfg) {
  std::vector<double> values = default_snr_values();
  if (cfg.sweep && cfg.sweep->axis == locsme::SweepAxis::kSnrDb)
    values = cfg.sweep->values;
  const auto curve = locsme::sweep(
      cfg.scenario, locsme::SweepAxis::kSnrDb, values, cfg.n_trials,
      cfg.n_snapshots, cfg.master_seed, cfg.workers, cfg.algorithms,
      cfg.locsme_config());
  return emit_and_summarize(curve, cfg);
}

int cmd_sweep_snapshots(const locsme::RunConfig& cfg) {
  std::vector<double> values = snapshot_indices(cfg.n_snapshots);
  if (cfg.sweep && cfg.sweep->axis == locsme::SweepAxis::kSnapshots)
    values = cfg.sweep->values;
  const auto curve = locsme::sweep(
      cfg.scenario, locsme::SweepAxis::kSnapshots, values, cfg.n_trials,
      cfg.n_snapshots, cfg.master_seed, cfg.workers, cfg.algorithms,
      cfg.locsme_config());
  return emit_and_summarize(curve, cfg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "locsme_sim - Monte-Carlo output-SINR experiments for robust adaptive "
      "beamformers (LOCSME, SMI, optimal MVDR) on a uniform linear array"};
  app.require_subcommand(1);
  app.fallthrough();

  CliOverrides o;
  o.config = app.add_option("--config", o.config_path,
                            "configuration file (key = value with sections)")
                 ->envname("LOCSME_CONFIG");
  o.output = app.add_option("--output", o.output_path,
                            "output file path (default: stdout)")
                 ->envname("LOCSME_OUTPUT");
  o.format = app.add_option("--format", o.format_str, "csv or json")
                 ->envname("LOCSME_FORMAT");
  o.workers = app.add_option("--workers", o.workers_val,
                             "concurrent trial workers; results do not "
                             "depend on this")
                  ->envname("LOCSME_WORKERS");
  o.seed = app.add_option("--seed", o.seed_val, "master seed")
               ->envname("LOCSME_SEED");
  o.mismatch = app.add_option("--mismatch", o.mismatch_str,
                              "steering mismatch model: none, coherent or "
                              "incoherent")
                   ->envname("LOCSME_MISMATCH");

  auto* run = app.add_subcommand(
      "run", "per-snapshot SINR trajectory of the configured scenario");
  auto* sweep_snr =
      app.add_subcommand("sweep-snr", "mean terminal SINR versus input SNR");
  auto* sweep_snapshots = app.add_subcommand(
      "sweep-snapshots", "mean SINR versus snapshot count");

  CLI11_PARSE(app, argc, argv);

  try {
    const locsme::RunConfig cfg = load_config(o);
    if (run->parsed()) return cmd_run(cfg);
    if (sweep_snr->parsed()) return cmd_sweep_snr(cfg);
    if (sweep_snapshots->parsed()) return cmd_sweep_snapshots(cfg);
    std::fprintf(stderr, "no subcommand given\n");
    return 1;
  } catch (const locsme::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
