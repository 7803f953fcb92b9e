#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "locsme/harness.hpp"
#include "locsme/types.hpp"

namespace locsme {

/// Canonical floating-point rendering for CSV cells: 9 significant digits.
inline std::string format_sig9(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// CSV: one header line `<axis>,<algorithm...>,num_trials`, one row per axis
/// value. A failed cell renders its means as nan.
inline std::string curve_to_csv(const SinrCurve& curve) {
  std::string out = to_string(curve.axis);
  for (Algorithm a : curve.algorithms) out += "," + to_string(a);
  out += ",num_trials\n";
  for (std::size_t i = 0; i < curve.axis_values.size(); ++i) {
    out += format_sig9(curve.axis_values[i]);
    for (Algorithm a : curve.algorithms)
      out += "," + format_sig9(curve.mean_sinr_db.at(a)[i]);
    out += "," + std::to_string(curve.num_trials) + "\n";
  }
  return out;
}

/// JSON mirror of the curve, including per-cell variance and error strings.
/// NaN means serialize as null.
inline std::string curve_to_json(const SinrCurve& curve) {
  nlohmann::ordered_json j;
  j["axis"] = to_string(curve.axis);
  j["axis_values"] = curve.axis_values;
  j["num_trials"] = curve.num_trials;
  nlohmann::ordered_json algs = nlohmann::ordered_json::array();
  for (Algorithm a : curve.algorithms) algs.push_back(to_string(a));
  j["algorithms"] = algs;
  nlohmann::ordered_json mean, var;
  for (Algorithm a : curve.algorithms) {
    mean[to_string(a)] = curve.mean_sinr_db.at(a);
    var[to_string(a)] = curve.var_sinr_db.at(a);
  }
  j["mean_sinr_db"] = mean;
  j["var_sinr_db"] = var;
  j["cell_errors"] = curve.cell_errors;
  return j.dump(2) + "\n";
}

inline std::string render_curve(const SinrCurve& curve, bool as_json) {
  return as_json ? curve_to_json(curve) : curve_to_csv(curve);
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file '" + path + "'");
  out << content;
  if (!out) throw Error("failed writing output file '" + path + "'");
}

}  // namespace locsme
