#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "locsme/array.hpp"
#include "locsme/beamformer.hpp"
#include "locsme/harness.hpp"
#include "locsme/types.hpp"

namespace locsme {

enum class OutputFormat { kCsv, kJson };

struct SweepSpec {
  SweepAxis axis = SweepAxis::kSnrDb;
  std::vector<double> values;
  bool operator==(const SweepSpec&) const = default;
};

/// Everything one experiment needs. Field defaults reproduce the reference
/// protocol: 12-sensor half-wavelength ULA, desired DoA 10 deg, interferers
/// at 50 and 90 deg, SIR 20 dB, sector +-5 deg, rank-8 projection, 50
/// snapshots, 100 trials.
struct RunConfig {
  Scenario scenario;
  std::vector<Algorithm> algorithms = all_algorithms();
  int n_trials = 100;
  int n_snapshots = 50;
  std::uint64_t master_seed = 1;
  int workers = 1;
  std::optional<SweepSpec> sweep;
  std::string output_path;  // empty writes to stdout
  OutputFormat format = OutputFormat::kCsv;
  bool table1_loading = true;
  double rho_init = 0.9;
  int power_window = 1;

  LocsmeConfig locsme_config() const {
    return LocsmeConfig{rho_init, table1_loading, power_window};
  }
  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct IniEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

/// Flat INI-style grammar: [section] headers, key = value lines, blank
/// lines, and comment lines starting with '#' or ';'.
inline std::vector<IniEntry> parse_ini(const std::string& text) {
  std::vector<IniEntry> entries;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    const std::string raw = text.substr(
        pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = (eol == std::string::npos) ? text.size() + 1 : eol + 1;
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line[0] == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ", column " +
                          std::to_string(raw.size() + 1) +
                          ": expected ']' to close section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(line_no) +
                          ", column 2: empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ", column " +
                        std::to_string(raw.size() + 1) +
                        ": expected 'key = value'");
    if (section.empty())
      throw ConfigError("line " + std::to_string(line_no) +
                        ", column 1: key outside of any [section]");
    IniEntry e;
    e.section = section;
    e.key = trim(line.substr(0, eq));
    e.value = trim(line.substr(eq + 1));
    e.line = line_no;
    if (e.key.empty())
      throw ConfigError("line " + std::to_string(line_no) +
                        ", column 1: empty key");
    entries.push_back(std::move(e));
  }
  return entries;
}

inline double to_double(const IniEntry& e) {
  const std::string& v = e.value;
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError(e.section + "." + e.key + " (line " +
                      std::to_string(e.line) + "): expected a number, got '" +
                      v + "'");
  return d;
}

inline long long to_int(const IniEntry& e) {
  const std::string& v = e.value;
  char* end = nullptr;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError(e.section + "." + e.key + " (line " +
                      std::to_string(e.line) +
                      "): expected an integer, got '" + v + "'");
  return i;
}

inline std::uint64_t to_u64(const IniEntry& e) {
  const std::string& v = e.value;
  char* end = nullptr;
  const unsigned long long i = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0' || v.find('-') != std::string::npos)
    throw ConfigError(e.section + "." + e.key + " (line " +
                      std::to_string(e.line) +
                      "): expected an unsigned integer, got '" + v + "'");
  return i;
}

inline bool to_bool(const IniEntry& e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  throw ConfigError(e.section + "." + e.key + " (line " +
                    std::to_string(e.line) + "): expected true or false, got '" +
                    e.value + "'");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    auto comma = v.find(',', start);
    if (comma == std::string::npos) comma = v.size();
    const std::string item = trim(v.substr(start, comma - start));
    if (!item.empty()) out.push_back(item);
    start = comma + 1;
  }
  return out;
}

inline std::vector<double> to_double_list(const IniEntry& e) {
  std::vector<double> out;
  for (const auto& item : split_list(e.value)) {
    IniEntry tmp = e;
    tmp.value = item;
    out.push_back(to_double(tmp));
  }
  return out;
}

}  // namespace detail

/// Validates a fully assembled RunConfig; every violation is reported with
/// its field path and accepted range in a single ConfigError.
inline void validate_config(const RunConfig& c) {
  std::vector<std::string> problems;
  auto bad = [&](const std::string& path, const std::string& what) {
    problems.push_back(path + ": " + what);
  };
  const Scenario& s = c.scenario;
  if (s.geometry.num_sensors < 1)
    bad("array.num_sensors", "must be >= 1 (got " +
                                 std::to_string(s.geometry.num_sensors) + ")");
  if (!(s.geometry.spacing_wavelengths > 0.0))
    bad("array.spacing_wavelengths", "must be > 0");
  auto doa_ok = [](double d) { return d > -90.0 && d <= 90.0; };
  if (!doa_ok(s.desired_doa_deg))
    bad("scenario.desired_doa_deg", "must lie in (-90, 90]");
  for (double d : s.interferer_doas_deg) {
    if (!doa_ok(d)) {
      bad("scenario.interferer_doas_deg", "entries must lie in (-90, 90]");
      break;
    }
  }
  for (double d : s.interferer_doas_deg)
    if (d == s.desired_doa_deg) {
      bad("scenario.interferer_doas_deg",
          "must not contain the desired DoA");
      break;
    }
  if (!(s.noise_power > 0.0)) bad("scenario.noise_power", "must be > 0");
  if (s.sector_half_width_deg < 0.0)
    bad("scenario.sector_half_width_deg", "must be >= 0");
  if (s.subspace_rank < 1 || s.subspace_rank > s.geometry.num_sensors)
    bad("scenario.subspace_rank",
        "must lie in [1, num_sensors] (got " +
            std::to_string(s.subspace_rank) + ")");
  auto check_scatter = [&](int paths, double std_deg) {
    if (paths < 0) bad("mismatch.num_paths", "must be >= 0");
    if (std_deg < 0.0) bad("mismatch.angle_std_deg", "must be >= 0");
  };
  if (const auto* coh = std::get_if<CoherentScattering>(&s.mismatch))
    check_scatter(coh->num_paths, coh->angle_std_deg);
  if (const auto* inc = std::get_if<IncoherentScattering>(&s.mismatch)) {
    check_scatter(inc->num_paths, inc->angle_std_deg);
    if (!(inc->gain_variance_scale > 0.0))
      bad("mismatch.incoherent_gain_variance_scale", "must be > 0");
  }
  if (c.algorithms.empty()) bad("run.algorithms", "must not be empty");
  if (c.n_trials < 1) bad("run.n_trials", "must be >= 1");
  if (c.n_snapshots < 1) bad("run.n_snapshots", "must be >= 1");
  if (c.workers < 1) bad("run.workers", "must be >= 1");
  if (!(c.rho_init > 0.0 && c.rho_init <= 1.0))
    bad("variant.rho_init", "must lie in (0, 1]");
  if (c.power_window < 1) bad("variant.power_window", "must be >= 1");
  if (c.sweep) {
    if (c.sweep->values.empty()) bad("sweep.values", "must not be empty");
    for (std::size_t i = 1; i < c.sweep->values.size(); ++i)
      if (!(c.sweep->values[i] > c.sweep->values[i - 1])) {
        bad("sweep.values", "must be strictly increasing");
        break;
      }
    if (c.sweep->axis == SweepAxis::kSnapshots) {
      for (double v : c.sweep->values)
        if (v < 1.0 || v > c.n_snapshots || v != std::floor(v)) {
          bad("sweep.values",
              "snapshot indices must be integers in [1, n_snapshots]");
          break;
        }
    }
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

/// Parses the key-value configuration document. Unspecified fields keep the
/// reference-protocol defaults; unknown sections or keys are errors. The
/// result is fully validated.
inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  // The mismatch kind must be known before its parameters are applied, so
  // collect entries first.
  const auto entries = detail::parse_ini(text);

  MismatchKind kind = MismatchKind::kNone;
  CoherentScattering coh;
  IncoherentScattering inc;

  auto unknown = [](const detail::IniEntry& e) {
    throw ConfigError("unknown key " + e.section + "." + e.key + " (line " +
                      std::to_string(e.line) + ")");
  };

  for (const auto& e : entries) {
    if (e.section == "array") {
      if (e.key == "num_sensors")
        c.scenario.geometry.num_sensors = static_cast<int>(detail::to_int(e));
      else if (e.key == "spacing_wavelengths")
        c.scenario.geometry.spacing_wavelengths = detail::to_double(e);
      else
        unknown(e);
    } else if (e.section == "scenario") {
      if (e.key == "desired_doa_deg")
        c.scenario.desired_doa_deg = detail::to_double(e);
      else if (e.key == "interferer_doas_deg")
        c.scenario.interferer_doas_deg = detail::to_double_list(e);
      else if (e.key == "snr_db")
        c.scenario.snr_db = detail::to_double(e);
      else if (e.key == "sir_db")
        c.scenario.sir_db = detail::to_double(e);
      else if (e.key == "noise_power")
        c.scenario.noise_power = detail::to_double(e);
      else if (e.key == "sector_half_width_deg")
        c.scenario.sector_half_width_deg = detail::to_double(e);
      else if (e.key == "subspace_rank")
        c.scenario.subspace_rank = static_cast<int>(detail::to_int(e));
      else
        unknown(e);
    } else if (e.section == "mismatch") {
      if (e.key == "kind") {
        if (e.value == "none")
          kind = MismatchKind::kNone;
        else if (e.value == "coherent")
          kind = MismatchKind::kCoherent;
        else if (e.value == "incoherent")
          kind = MismatchKind::kIncoherent;
        else
          throw ConfigError("mismatch.kind (line " + std::to_string(e.line) +
                            "): expected none, coherent or incoherent");
      } else if (e.key == "num_paths") {
        coh.num_paths = inc.num_paths = static_cast<int>(detail::to_int(e));
      } else if (e.key == "angle_mean_deg") {
        coh.angle_mean_deg = inc.angle_mean_deg = detail::to_double(e);
      } else if (e.key == "angle_std_deg") {
        coh.angle_std_deg = inc.angle_std_deg = detail::to_double(e);
      } else if (e.key == "angle_dist") {
        AngleDistribution d;
        if (e.value == "uniform")
          d = AngleDistribution::kUniform;
        else if (e.value == "gaussian")
          d = AngleDistribution::kGaussian;
        else
          throw ConfigError("mismatch.angle_dist (line " +
                            std::to_string(e.line) +
                            "): expected uniform or gaussian");
        coh.angle_dist = inc.angle_dist = d;
      } else if (e.key == "incoherent_gain_variance_scale") {
        inc.gain_variance_scale = detail::to_double(e);
      } else {
        unknown(e);
      }
    } else if (e.section == "run") {
      if (e.key == "algorithms") {
        c.algorithms.clear();
        for (const auto& id : detail::split_list(e.value))
          c.algorithms.push_back(algorithm_from_string(id));
      } else if (e.key == "n_trials")
        c.n_trials = static_cast<int>(detail::to_int(e));
      else if (e.key == "n_snapshots")
        c.n_snapshots = static_cast<int>(detail::to_int(e));
      else if (e.key == "master_seed")
        c.master_seed = detail::to_u64(e);
      else if (e.key == "workers")
        c.workers = static_cast<int>(detail::to_int(e));
      else
        unknown(e);
    } else if (e.section == "sweep") {
      if (!c.sweep) c.sweep.emplace();
      if (e.key == "axis") {
        if (e.value == "snr_db")
          c.sweep->axis = SweepAxis::kSnrDb;
        else if (e.value == "snapshots")
          c.sweep->axis = SweepAxis::kSnapshots;
        else
          throw ConfigError("sweep.axis (line " + std::to_string(e.line) +
                            "): expected snr_db or snapshots");
      } else if (e.key == "values")
        c.sweep->values = detail::to_double_list(e);
      else
        unknown(e);
    } else if (e.section == "output") {
      if (e.key == "path")
        c.output_path = e.value;
      else if (e.key == "format") {
        if (e.value == "csv")
          c.format = OutputFormat::kCsv;
        else if (e.value == "json")
          c.format = OutputFormat::kJson;
        else
          throw ConfigError("output.format (line " + std::to_string(e.line) +
                            "): expected csv or json");
      } else
        unknown(e);
    } else if (e.section == "variant") {
      if (e.key == "table1_loading")
        c.table1_loading = detail::to_bool(e);
      else if (e.key == "rho_init")
        c.rho_init = detail::to_double(e);
      else if (e.key == "power_window")
        c.power_window = static_cast<int>(detail::to_int(e));
      else
        unknown(e);
    } else {
      throw ConfigError("unknown section [" + e.section + "] (line " +
                        std::to_string(e.line) + ")");
    }
  }

  switch (kind) {
    case MismatchKind::kNone:
      c.scenario.mismatch = NoMismatch{};
      break;
    case MismatchKind::kCoherent:
      c.scenario.mismatch = coh;
      break;
    case MismatchKind::kIncoherent:
      c.scenario.mismatch = inc;
      break;
  }

  validate_config(c);
  return c;
}

namespace detail {

inline std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Serializes a RunConfig back to the configuration grammar; parsing the
/// result reproduces the config exactly.
inline std::string emit_config(const RunConfig& c) {
  std::string out;
  auto line = [&](const std::string& s) { out += s + "\n"; };
  const Scenario& s = c.scenario;
  line("[array]");
  line("num_sensors = " + std::to_string(s.geometry.num_sensors));
  line("spacing_wavelengths = " +
       detail::fmt_full(s.geometry.spacing_wavelengths));
  line("");
  line("[scenario]");
  line("desired_doa_deg = " + detail::fmt_full(s.desired_doa_deg));
  std::string doas;
  for (std::size_t i = 0; i < s.interferer_doas_deg.size(); ++i) {
    if (i) doas += ", ";
    doas += detail::fmt_full(s.interferer_doas_deg[i]);
  }
  line("interferer_doas_deg = " + doas);
  line("snr_db = " + detail::fmt_full(s.snr_db));
  line("sir_db = " + detail::fmt_full(s.sir_db));
  line("noise_power = " + detail::fmt_full(s.noise_power));
  line("sector_half_width_deg = " + detail::fmt_full(s.sector_half_width_deg));
  line("subspace_rank = " + std::to_string(s.subspace_rank));
  line("");
  line("[mismatch]");
  auto dist_name = [](AngleDistribution d) {
    return d == AngleDistribution::kUniform ? "uniform" : "gaussian";
  };
  if (const auto* coh = std::get_if<CoherentScattering>(&s.mismatch)) {
    line("kind = coherent");
    line("num_paths = " + std::to_string(coh->num_paths));
    line("angle_mean_deg = " + detail::fmt_full(coh->angle_mean_deg));
    line("angle_std_deg = " + detail::fmt_full(coh->angle_std_deg));
    line(std::string("angle_dist = ") + dist_name(coh->angle_dist));
  } else if (const auto* inc = std::get_if<IncoherentScattering>(&s.mismatch)) {
    line("kind = incoherent");
    line("num_paths = " + std::to_string(inc->num_paths));
    line("angle_mean_deg = " + detail::fmt_full(inc->angle_mean_deg));
    line("angle_std_deg = " + detail::fmt_full(inc->angle_std_deg));
    line(std::string("angle_dist = ") + dist_name(inc->angle_dist));
    line("incoherent_gain_variance_scale = " +
         detail::fmt_full(inc->gain_variance_scale));
  } else {
    line("kind = none");
  }
  line("");
  line("[run]");
  std::string algs;
  for (std::size_t i = 0; i < c.algorithms.size(); ++i) {
    if (i) algs += ", ";
    algs += to_string(c.algorithms[i]);
  }
  line("algorithms = " + algs);
  line("n_trials = " + std::to_string(c.n_trials));
  line("n_snapshots = " + std::to_string(c.n_snapshots));
  line("master_seed = " + std::to_string(c.master_seed));
  line("workers = " + std::to_string(c.workers));
  if (c.sweep) {
    line("");
    line("[sweep]");
    line("axis = " + to_string(c.sweep->axis));
    std::string vals;
    for (std::size_t i = 0; i < c.sweep->values.size(); ++i) {
      if (i) vals += ", ";
      vals += detail::fmt_full(c.sweep->values[i]);
    }
    line("values = " + vals);
  }
  line("");
  line("[output]");
  line("path = " + c.output_path);
  line(std::string("format = ") +
       (c.format == OutputFormat::kCsv ? "csv" : "json"));
  line("");
  line("[variant]");
  line(std::string("table1_loading = ") + (c.table1_loading ? "true" : "false"));
  line("rho_init = " + detail::fmt_full(c.rho_init));
  line("power_window = " + std::to_string(c.power_window));
  return out;
}

}  // namespace locsme
