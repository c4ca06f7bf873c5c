// Copyright 2026 The bqec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Analytic per-cycle error budget for one- and two-layer correction cycles.
//
// Two equivalent views are kept. The primitive view stores the per-operation
// errors (detection, recovery unit, reset, thermal) and composes each branch
// from the operations it executes. The row view stores one row per branch
// with intrinsic / detection / recovery / thermal columns, where the recovery
// column already contains the reset error of every reset in that branch.
// Both give the same weighted total; to_rows() converts the first into the
// second.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bqec/errors.hpp"

namespace bqec {

inline constexpr double kOneLayerCycle = 92.46e-6;
inline constexpr double kTwoLayerCycle = 2.0 * kOneLayerCycle;

inline double thermal_error(double nth, double t_w, double t1_q) {
  if (!(t_w > 0.0) || !(t1_q > 0.0)) throw ConfigError("thermal_error: times must be positive");
  if (nth < 0.0) throw ConfigError("thermal_error: negative thermal population");
  return nth * (1.0 - std::exp(-t_w / t1_q));
}

inline double predicted_lifetime(double t_w, double eps) {
  if (!(t_w > 0.0)) throw ConfigError("predicted_lifetime: cycle duration must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("predicted_lifetime: total error must lie in (0, 1)");
  return -t_w / std::log1p(-eps);
}

/// Operations executed in one branch (counts of each primitive error).
struct BranchOps {
  int detections_code = 0;
  int detections_error = 0;
  int resets = 0;
  std::array<int, 4> recoveries{};
};

/// Branch labels are the ancilla outcome strings: "0"/"1" or "00".."11".
inline std::vector<std::string> branch_labels(int layers) {
  if (layers == 1) return {"0", "1"};
  if (layers == 2) return {"00", "01", "10", "11"};
  throw ConfigError("layers must be 1 or 2");
}

inline BranchOps branch_ops(const std::string& label) {
  BranchOps o;
  if (label == "0") {
    o.detections_code = 1;
    o.recoveries[0] = 1;
  } else if (label == "1") {
    o.detections_error = 1;
    o.resets = 1;
    o.recoveries[1] = 1;
  } else if (label == "00") {
    o.detections_code = 2;
    o.recoveries[2] = 1;
  } else if (label == "01") {
    o.detections_code = 1;
    o.detections_error = 1;
    o.resets = 1;
    o.recoveries[3] = 1;
  } else if (label == "10") {
    o.detections_code = 1;
    o.detections_error = 1;
    o.resets = 1;
    o.recoveries[1] = 1;
    o.recoveries[2] = 1;
  } else if (label == "11") {
    o.detections_error = 2;
    o.resets = 2;
    o.recoveries[1] = 1;
    o.recoveries[3] = 1;
  } else {
    throw ConfigError("unknown branch label '" + label + "'");
  }
  return o;
}

struct ErrorBudgetInputs {
  int layers = 1;
  std::vector<double> intrinsic;
  std::vector<double> probabilities;
  double detection_code = 0.011;
  double detection_error = 0.025;
  std::array<double, 4> recovery{0.027, 0.027, 0.027, 0.027};
  double reset = 0.012;
  double nth_q = 0.013;
  double t1_q = 98e-6;
  double cycle_duration = kOneLayerCycle;
  // When set, replaces the thermal formula (tabulated values are rounded).
  std::optional<double> thermal_override;

  double thermal() const { return thermal_override ? *thermal_override : thermal_error(nth_q, cycle_duration, t1_q); }

  std::size_t n_branches() const { return layers == 1 ? 2 : 4; }

  void validate() const {
    const auto labels = branch_labels(layers);
    if (intrinsic.size() != labels.size() || probabilities.size() != labels.size())
      throw ConfigError("error budget needs " + std::to_string(labels.size()) + " intrinsic errors and probabilities");
    double psum = 0.0;
    for (double p : probabilities) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("branch probability outside [0, 1]");
      psum += p;
    }
    if (std::abs(psum - 1.0) > 1e-6) throw ConfigError("branch probabilities must sum to 1");
    auto check = [](double e, const char* name) {
      if (!(e >= 0.0 && e <= 1.0)) throw ConfigError(std::string("error '") + name + "' outside [0, 1]");
    };
    for (double e : intrinsic) check(e, "intrinsic");
    check(detection_code, "eps_D0");
    check(detection_error, "eps_D1");
    for (double e : recovery) check(e, "eps_U");
    check(reset, "eps_pi");
    check(thermal(), "eps_th");
    if (!(cycle_duration > 0.0) || !(t1_q > 0.0)) throw ConfigError("budget times must be positive");
  }
};

/// Tabulated budget defaults. Thermal entries are the rounded 0.8% / 1.1%.
inline ErrorBudgetInputs table_defaults(int layers) {
  ErrorBudgetInputs in;
  in.layers = layers;
  if (layers == 1) {
    in.intrinsic = {0.067, 0.053};
    in.probabilities = {0.781, 0.219};
    in.cycle_duration = kOneLayerCycle;
    in.thermal_override = 0.008;
  } else if (layers == 2) {
    in.intrinsic = {0.121, 0.148, 0.092, 0.204};
    in.probabilities = {0.630, 0.152, 0.174, 0.044};
    in.cycle_duration = kTwoLayerCycle;
    in.thermal_override = 0.011;
  } else {
    throw ConfigError("layers must be 1 or 2");
  }
  return in;
}

struct BranchRow {
  std::string label;
  double probability = 0.0;
  double intrinsic = 0.0;
  double detection = 0.0;
  double recovery = 0.0;  // includes reset errors
  double thermal = 0.0;

  double total() const { return intrinsic + detection + recovery + thermal; }
};

inline std::vector<BranchRow> to_rows(const ErrorBudgetInputs& in) {
  in.validate();
  const auto labels = branch_labels(in.layers);
  const double th = in.thermal();
  std::vector<BranchRow> rows;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const BranchOps o = branch_ops(labels[b]);
    BranchRow r;
    r.label = labels[b];
    r.probability = in.probabilities[b];
    r.intrinsic = in.intrinsic[b];
    r.detection = o.detections_code * in.detection_code + o.detections_error * in.detection_error;
    r.recovery = o.resets * in.reset;
    for (int u = 0; u < 4; ++u) r.recovery += o.recoveries[u] * in.recovery[u];
    r.thermal = th;
    rows.push_back(r);
  }
  return rows;
}

/// Tabulated branch rows (recovery column includes resets).
inline std::vector<BranchRow> table_rows(int layers) {
  if (layers == 1) {
    return {{"0", 0.781, 0.067, 0.011, 0.027, 0.008}, {"1", 0.219, 0.053, 0.025, 0.039, 0.008}};
  }
  if (layers == 2) {
    return {{"00", 0.630, 0.121, 0.022, 0.027, 0.011},
            {"01", 0.152, 0.148, 0.036, 0.039, 0.011},
            {"10", 0.174, 0.092, 0.036, 0.066, 0.011},
            {"11", 0.044, 0.204, 0.050, 0.078, 0.011}};
  }
  throw ConfigError("layers must be 1 or 2");
}

inline double weighted_total(const std::vector<BranchRow>& rows) {
  double psum = 0.0;
  double eps = 0.0;
  for (const auto& r : rows) {
    psum += r.probability;
    eps += r.probability * r.total();
  }
  if (rows.empty() || std::abs(psum - 1.0) > 1e-6) throw ConfigError("branch probabilities must sum to 1");
  return eps;
}

/// p0(ε_i0 + ε_D0 + ε_U0 + ε_th) + p1(ε_i1 + ε_D1 + ε_U1 + ε_π + ε_th).
inline double weighted_total_one_layer(const ErrorBudgetInputs& in) {
  if (in.layers != 1) throw ConfigError("weighted_total_one_layer: inputs are for two layers");
  in.validate();
  const double th = in.thermal();
  return in.probabilities[0] * (in.intrinsic[0] + in.detection_code + in.recovery[0] + th) +
         in.probabilities[1] * (in.intrinsic[1] + in.detection_error + in.recovery[1] + in.reset + th);
}

inline double weighted_total_two_layer(const ErrorBudgetInputs& in) {
  if (in.layers != 2) throw ConfigError("weighted_total_two_layer: inputs are for one layer");
  in.validate();
  const double th = in.thermal();
  const double d0 = in.detection_code;
  const double d1 = in.detection_error;
  const double pi = in.reset;
  const auto& u = in.recovery;
  const auto& p = in.probabilities;
  const auto& i = in.intrinsic;
  return p[0] * (i[0] + d0 + d0 + u[2] + th) +                  //
         p[1] * (i[1] + d0 + d1 + pi + u[3] + th) +             //
         p[2] * (i[2] + d1 + pi + u[1] + d0 + u[2] + th) +      //
         p[3] * (i[3] + d1 + pi + u[1] + d1 + pi + u[3] + th);  //
}

struct BudgetResult {
  int layers = 1;
  std::vector<BranchRow> rows;
  double total = 0.0;
  double cycle_duration = 0.0;
  double lifetime = 0.0;  // +inf for a zero total
};

inline BudgetResult evaluate_budget(const ErrorBudgetInputs& in) {
  BudgetResult r;
  r.layers = in.layers;
  r.rows = to_rows(in);
  r.total = in.layers == 1 ? weighted_total_one_layer(in) : weighted_total_two_layer(in);
  r.cycle_duration = in.cycle_duration;
  if (r.total <= 0.0) {
    r.lifetime = std::numeric_limits<double>::infinity();
  } else if (r.total >= 1.0) {
    r.lifetime = 0.0;
  } else {
    r.lifetime = predicted_lifetime(in.cycle_duration, r.total);
  }
  return r;
}

/// Named entry access for overrides: eps_i<branch>, p<branch>, eps_D0, eps_D1,
/// eps_U0..eps_U3, eps_pi, eps_th, nth_q, t1_q, t_w.
inline void set_budget_entry(ErrorBudgetInputs& in, const std::string& name, double value) {
  const auto labels = branch_labels(in.layers);
  for (std::size_t b = 0; b < labels.size(); ++b) {
    if (name == "eps_i" + labels[b]) {
      in.intrinsic.at(b) = value;
      return;
    }
    if (name == "p" + labels[b]) {
      in.probabilities.at(b) = value;
      return;
    }
  }
  if (name == "eps_D0") {
    in.detection_code = value;
  } else if (name == "eps_D1") {
    in.detection_error = value;
  } else if (name.size() == 6 && name.rfind("eps_U", 0) == 0 && name[5] >= '0' && name[5] <= '3') {
    in.recovery[name[5] - '0'] = value;
  } else if (name == "eps_pi") {
    in.reset = value;
  } else if (name == "eps_th") {
    in.thermal_override = value;
  } else if (name == "nth_q") {
    in.nth_q = value;
  } else if (name == "t1_q") {
    in.t1_q = value;
  } else if (name == "t_w") {
    in.cycle_duration = value;
  } else {
    throw ConfigError("unknown budget entry '" + name + "'");
  }
}

inline nlohmann::json budget_to_json(const ErrorBudgetInputs& in) {
  nlohmann::json j;
  j["layers"] = in.layers;
  j["intrinsic"] = in.intrinsic;
  j["probabilities"] = in.probabilities;
  j["eps_D0"] = in.detection_code;
  j["eps_D1"] = in.detection_error;
  j["eps_U"] = in.recovery;
  j["eps_pi"] = in.reset;
  j["nth_q"] = in.nth_q;
  j["t1_q"] = in.t1_q;
  j["t_w"] = in.cycle_duration;
  if (in.thermal_override) j["eps_th"] = *in.thermal_override;
  return j;
}

inline ErrorBudgetInputs budget_from_json(const nlohmann::json& j) {
  static const std::vector<std::string> known = {"layers", "intrinsic", "probabilities", "eps_D0", "eps_D1", "eps_U",
                                                 "eps_pi", "nth_q",     "t1_q",          "t_w",    "eps_th"};
  if (!j.is_object()) throw ConfigError("budget section must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError("unknown key 'budget." + it.key() + "'");
  }
  const int layers = j.value("layers", 1);
  ErrorBudgetInputs in = table_defaults(layers);
  try {
    if (j.contains("intrinsic")) in.intrinsic = j["intrinsic"].get<std::vector<double>>();
    if (j.contains("probabilities")) in.probabilities = j["probabilities"].get<std::vector<double>>();
    if (j.contains("eps_D0")) in.detection_code = j["eps_D0"].get<double>();
    if (j.contains("eps_D1")) in.detection_error = j["eps_D1"].get<double>();
    if (j.contains("eps_U")) in.recovery = j["eps_U"].get<std::array<double, 4>>();
    if (j.contains("eps_pi")) in.reset = j["eps_pi"].get<double>();
    if (j.contains("nth_q")) in.nth_q = j["nth_q"].get<double>();
    if (j.contains("t1_q")) in.t1_q = j["t1_q"].get<double>();
    if (j.contains("t_w")) in.cycle_duration = j["t_w"].get<double>();
    in.thermal_override.reset();
    if (j.contains("eps_th")) in.thermal_override = j["eps_th"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("budget section: ") + e.what());
  }
  in.validate();
  return in;
}

/// One simulated trajectory: its outcome string, the cardinal input index and
/// the logical state fidelity of the corrected output with that input.
struct BranchRecord {
  std::string outcomes;
  int input = 0;
  double fidelity = 0.0;
};

/// Intrinsic branch errors and branch probabilities from tagged simulation
/// records. The branch error is 1 − normalized process fidelity, i.e.
/// 2(1 − mean state fidelity over cardinal inputs).
inline ErrorBudgetInputs budget_from_simulation(const std::vector<BranchRecord>& records, int layers,
                                                std::size_t min_samples = 20,
                                                std::optional<ErrorBudgetInputs> base = std::nullopt) {
  ErrorBudgetInputs in = base ? *base : table_defaults(layers);
  if (in.layers != layers) throw ConfigError("budget_from_simulation: base inputs have a different layer count");
  const auto labels = branch_labels(layers);
  std::map<std::string, std::size_t> index;
  for (std::size_t b = 0; b < labels.size(); ++b) index[labels[b]] = b;
  std::vector<std::size_t> counts(labels.size(), 0);
  std::vector<std::array<double, 6>> fsum(labels.size());
  std::vector<std::array<std::size_t, 6>> fcount(labels.size());
  for (auto& a : fsum) a.fill(0.0);
  for (auto& a : fcount) a.fill(0);
  for (const auto& r : records) {
    auto it = index.find(r.outcomes);
    if (it == index.end()) throw ConfigError("record outcome '" + r.outcomes + "' does not match the layer count");
    if (r.input < 0 || r.input >= 6) throw ConfigError("record input index outside 0..5");
    ++counts[it->second];
    fsum[it->second][r.input] += r.fidelity;
    ++fcount[it->second][r.input];
  }
  const std::size_t total = records.size();
  for (std::size_t b = 0; b < labels.size(); ++b) {
    if (counts[b] < min_samples)
      throw FitError("branch " + labels[b] + " has " + std::to_string(counts[b]) + " samples, need " +
                     std::to_string(min_samples));
    double mean = 0.0;
    int present = 0;
    for (int c = 0; c < 6; ++c) {
      if (fcount[b][c] == 0) continue;
      mean += fsum[b][c] / static_cast<double>(fcount[b][c]);
      ++present;
    }
    mean /= present;
    in.intrinsic[b] = std::clamp(2.0 * (1.0 - mean), 0.0, 1.0);
    in.probabilities[b] = static_cast<double>(counts[b]) / static_cast<double>(total);
  }
  return in;
}

}  // namespace bqec
