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

// Run configuration: one JSON document with a strict schema. Unknown keys
// and wrong types are rejected with the dotted path of the offending entry.
// Frequencies are written in Hz (cycles), times with an explicit unit suffix.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bqec/error_budget.hpp"
#include "bqec/grape.hpp"
#include "bqec/io.hpp"
#include "bqec/qec_protocol.hpp"

namespace bqec {

struct CombSection {
  int m_pairs = 11;
  double duration = 255e-9;
  double delay = 47e-9;
  double edge = 5e-9;
  double omega_over_chi = 0.25;
  std::vector<double> scalings;
  int n_fock = 12;
  int fock_max = 5;
  std::vector<double> delay_sweep{0e-9, 10e-9, 20e-9, 30e-9, 40e-9, 47e-9, 60e-9, 70e-9, 80e-9, 90e-9, 100e-9};
  double scaling_probe_detuning = 20e6;  ///< Hz
  double ramsey_pulse = 20e-9;
  int ramsey_fock_max = 8;
  bool decoherence = true;

  CombSpec spec(const SystemParams& p) const {
    CombSpec s = CombSpec::device(p.chi_qc, duration, delay);
    s.m_pairs = m_pairs;
    s.edge = edge;
    s.omega = omega_over_chi * p.chi_qc;
    s.scalings = scalings;
    return s;
  }
};

struct SweepSection {
  std::vector<double> grid{20e-6, 40e-6, 60e-6, 75e-6, 90e-6, 105e-6, 120e-6, 140e-6, 170e-6, 220e-6, 300e-6};
  double span = 1.2e-3;
  int trajectories = 500;
  int min_cycles = 4;
  int max_cycles = 600;
};

struct QecSection {
  std::string mode = "budget-matched";
  int layers = 1;
  double t_wait = 90.304e-6;
  double latency = 511e-9;
  double reset = 20e-9;
  double recovery = 770e-9;
  std::string readout = "auto";  ///< auto | ideal | device
  double readout_duration = 600e-9;
  bool pass = true;
  double pass_detuning_over_chi = -3.5;
  double pass_excitation = 0.01;
  std::string case_zero = "after-readout";
  bool mirror = false;
  int n_fock = 12;
  int cycles = 10;
  int trajectories = 500;
  double truncation_limit = 1e-4;
  std::vector<double> baseline_times{0.0,    100e-6, 200e-6, 300e-6, 400e-6, 500e-6, 600e-6,
                                     700e-6, 800e-6, 900e-6, 1000e-6, 1100e-6, 1200e-6};
  std::map<std::string, std::string> recovery_pulses;  ///< role (u0..u3) -> pulse file
  SweepSection sweep;
};

struct GrapeSection {
  std::string target = "encode";
  double duration = 770e-9;
  double dt = 2e-9;
  int n_fock = 12;
  double t_wait = 90.304e-6;
  int max_iter = 2000;
  double target_fidelity = 0.99;
  double qubit_bound = 10e6;  ///< Hz
  double cavity_bound = 2e6;  ///< Hz
  double init_scale = 0.01;
  int memory = 10;
};

struct WignerSection {
  std::string state = "plus_x";
  int n_fock = 12;
  double re_min = -2.5, re_max = 2.5;
  int n_re = 51;
  double im_min = -2.5, im_max = 2.5;
  int n_im = 51;
};

struct RunConfig {
  SystemParams system = SystemParams::device_defaults();
  CombSection comb;
  QecSection qec;
  GrapeSection grape;
  ErrorBudgetInputs budget_one = table_defaults(1);
  ErrorBudgetInputs budget_two = table_defaults(2);
  WignerSection wigner;
  std::string out = "out";
  std::uint64_t seed = 1;
  unsigned threads = 0;

  const ErrorBudgetInputs& budget(int layers) const { return layers == 1 ? budget_one : budget_two; }

  /// QEC cycle configuration built from the qec, comb, budget and system sections.
  QecCycleConfig cycle_config() const {
    QecCycleConfig c;
    c.mode = parse_qec_mode(qec.mode);
    c.layers = qec.layers;
    c.t_wait = qec.t_wait;
    c.comb = comb.spec(system);
    c.latency = qec.latency;
    c.reset_duration = qec.reset;
    c.recovery_duration = qec.recovery;
    const bool device = qec.readout == "device" || (qec.readout == "auto" && c.mode == QecMode::Physical);
    c.readout = device ? MeasurementModel::device_defaults() : MeasurementModel::ideal();
    c.readout.duration = qec.readout_duration;
    if (qec.pass) c.pass = calibrate_pass(system, qec.pass_detuning_over_chi * system.chi_qc);
    c.pass_excitation = c.mode == QecMode::Ideal ? 0.0 : qec.pass_excitation;
    c.errors = OperationErrors::from_budget(budget(qec.layers == 2 ? 2 : 1));
    c.case_zero = qec.case_zero == "before-next-wait" ? CaseZeroTiming::BeforeNextWait : CaseZeroTiming::AfterReadout;
    c.mirror_experiment = qec.mirror;
    c.n_fock = qec.n_fock;
    for (const auto& [role, file] : qec.recovery_pulses) {
      const RecoveryRole r = role == "u0" ? RecoveryRole::U0 : role == "u1" ? RecoveryRole::U1
                             : role == "u2" ? RecoveryRole::U2 : RecoveryRole::U3;
      c.recovery_pulses[r] = load_pulse(file).pulse;
    }
    c.validate();
    return c;
  }

  OptimizerConfig optimizer_config() const {
    OptimizerConfig o;
    o.max_iter = grape.max_iter;
    o.target_fidelity = grape.target_fidelity;
    o.qubit_bound = kTwoPi * grape.qubit_bound;
    o.cavity_bound = kTwoPi * grape.cavity_bound;
    o.init_scale = grape.init_scale;
    o.memory = grape.memory;
    o.seed = seed;
    return o;
  }

  void validate() const {
    system.validate();
    comb.spec(system).validate();
    if (comb.n_fock < 4 || comb.fock_max < 0 || comb.fock_max >= comb.n_fock) {
      throw ConfigError("comb.fock_max must lie below comb.n_fock (>= 4)");
    }
    if (comb.ramsey_fock_max < 0 || comb.ramsey_fock_max + 2 > 40) throw ConfigError("comb.ramsey_fock_max out of range");
    if (comb.delay_sweep.empty()) throw ConfigError("comb.delay_sweep_ns must be non-empty");
    for (double d : comb.delay_sweep) {
      if (d < 0.0) throw ConfigError("comb.delay_sweep_ns entries must be >= 0");
    }
    (void)parse_qec_mode(qec.mode);
    if (qec.readout != "auto" && qec.readout != "ideal" && qec.readout != "device") {
      throw ConfigError("qec.readout must be auto|ideal|device");
    }
    if (qec.case_zero != "after-readout" && qec.case_zero != "before-next-wait") {
      throw ConfigError("qec.case_zero must be after-readout|before-next-wait");
    }
    if (qec.cycles < 0) throw ConfigError("qec.cycles must be >= 0");
    if (qec.trajectories < 1) throw ConfigError("qec.trajectories must be >= 1");
    for (const auto& [role, file] : qec.recovery_pulses) {
      if (role != "u0" && role != "u1" && role != "u2" && role != "u3") {
        throw ConfigError("qec.recovery_pulses: unknown role '" + role + "'");
      }
      if (!std::filesystem::exists(file)) throw ConfigError("qec.recovery_pulses." + role + ": file not found: " + file);
    }
    if (qec.sweep.grid.empty()) throw ConfigError("qec.sweep.grid_us must be non-empty");
    for (double t : qec.sweep.grid) {
      if (!(t > 0.0)) throw ConfigError("qec.sweep.grid_us entries must be > 0");
    }
    if (qec.sweep.trajectories < 1 || qec.sweep.min_cycles < 1 || qec.sweep.max_cycles < qec.sweep.min_cycles) {
      throw ConfigError("qec.sweep: need trajectories >= 1 and 1 <= min_cycles <= max_cycles");
    }
    (void)parse_grape_target(grape.target);
    if (!(grape.duration > 0.0) || !(grape.dt > 0.0)) throw ConfigError("grape: duration and dt must be > 0");
    if (grape.n_fock < 6) throw ConfigError("grape.n_fock must be >= 6");
    optimizer_config().validate();
    budget_one.validate();
    budget_two.validate();
    if (wigner.n_re < 1 || wigner.n_im < 1 || wigner.n_fock < 2) throw ConfigError("wigner: grid sizes must be >= 1");
    (void)cycle_config();
  }
};

namespace detail {

/// Strict reader: every key must be consumed, types are checked.
class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + (path_.empty() ? std::string("<root>") : path_) + "' must be an object");
  }

  template <class T>
  void read(const char* key, T& value) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      value = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config: key '" + full(key) + "' has the wrong type");
    }
  }

  /// Number stored in the file in `unit` (value_in_file * unit = value).
  void read_scaled(const char* key, double& value, double unit) {
    double v = value / unit;
    read(key, v);
    value = v * unit;
  }

  void read_scaled(const char* key, std::vector<double>& values, double unit) {
    std::vector<double> v;
    for (double x : values) v.push_back(x / unit);
    read(key, v);
    values.clear();
    for (double x : v) values.push_back(x * unit);
  }

  ConfigReader child(const char* key) {
    used_.insert(key);
    static const nlohmann::json empty = nlohmann::json::object();
    return ConfigReader(j_.contains(key) ? j_.at(key) : empty, full(key));
  }

  const nlohmann::json* raw(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError("config: unknown key '" + full(it.key().c_str()) + "'");
    }
  }

  std::string full(const char* key) const { return path_.empty() ? std::string(key) : path_ + "." + key; }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> used_;
};

/// Value in file units, rounded to 12 significant digits.
inline double scaled(double v, double unit) { return std::stod(format_number(v / unit, kCsvDigits)); }

inline std::vector<double> scaled(const std::vector<double>& v, double unit) {
  std::vector<double> out;
  for (double x : v) out.push_back(scaled(x, unit));
  return out;
}

}  // namespace detail

inline nlohmann::json config_to_json(const RunConfig& c) {
  using detail::scaled;
  nlohmann::json j;
  const auto& s = c.system;
  j["system"] = {{"chi_qc_hz", scaled(s.chi_qc, kTwoPi)},
                 {"kerr_hz", scaled(s.k_c, kTwoPi)},
                 {"kerr_prime_hz", scaled(s.k_c_prime, kTwoPi)},
                 {"chi_qc_prime_hz", scaled(s.chi_qc_prime, kTwoPi)},
                 {"t1_q_us", scaled(s.t1_q, 1e-6)},
                 {"tphi_q_us", scaled(s.tphi_q, 1e-6)},
                 {"t1_c_us", scaled(s.t1_c, 1e-6)},
                 {"tphi_c_us", scaled(s.tphi_c, 1e-6)},
                 {"nth_q", s.nth_q},
                 {"nth_c", s.nth_c},
                 {"higher_order", s.higher_order}};
  const auto& cb = c.comb;
  j["comb"] = {{"m_pairs", cb.m_pairs},
               {"duration_ns", scaled(cb.duration, 1e-9)},
               {"delay_ns", scaled(cb.delay, 1e-9)},
               {"edge_ns", scaled(cb.edge, 1e-9)},
               {"omega_over_chi", cb.omega_over_chi},
               {"scalings", cb.scalings},
               {"n_fock", cb.n_fock},
               {"fock_max", cb.fock_max},
               {"delay_sweep_ns", scaled(cb.delay_sweep, 1e-9)},
               {"scaling_probe_detuning_mhz", scaled(cb.scaling_probe_detuning, 1e6)},
               {"ramsey_pulse_ns", scaled(cb.ramsey_pulse, 1e-9)},
               {"ramsey_fock_max", cb.ramsey_fock_max},
               {"decoherence", cb.decoherence}};
  const auto& q = c.qec;
  j["qec"] = {{"mode", q.mode},
              {"layers", q.layers},
              {"t_wait_us", scaled(q.t_wait, 1e-6)},
              {"latency_ns", scaled(q.latency, 1e-9)},
              {"reset_ns", scaled(q.reset, 1e-9)},
              {"recovery_ns", scaled(q.recovery, 1e-9)},
              {"readout", q.readout},
              {"readout_ns", scaled(q.readout_duration, 1e-9)},
              {"pass", q.pass},
              {"pass_detuning_over_chi", q.pass_detuning_over_chi},
              {"pass_excitation", q.pass_excitation},
              {"case_zero", q.case_zero},
              {"mirror", q.mirror},
              {"n_fock", q.n_fock},
              {"cycles", q.cycles},
              {"trajectories", q.trajectories},
              {"truncation_limit", q.truncation_limit},
              {"baseline_times_us", scaled(q.baseline_times, 1e-6)},
              {"recovery_pulses", q.recovery_pulses},
              {"sweep",
               {{"grid_us", scaled(q.sweep.grid, 1e-6)},
                {"span_us", scaled(q.sweep.span, 1e-6)},
                {"trajectories", q.sweep.trajectories},
                {"min_cycles", q.sweep.min_cycles},
                {"max_cycles", q.sweep.max_cycles}}}};
  const auto& g = c.grape;
  j["grape"] = {{"target", g.target},
                {"duration_ns", scaled(g.duration, 1e-9)},
                {"dt_ns", scaled(g.dt, 1e-9)},
                {"n_fock", g.n_fock},
                {"t_wait_us", scaled(g.t_wait, 1e-6)},
                {"max_iter", g.max_iter},
                {"target_fidelity", g.target_fidelity},
                {"qubit_bound_mhz", scaled(g.qubit_bound, 1e6)},
                {"cavity_bound_mhz", scaled(g.cavity_bound, 1e6)},
                {"init_scale", g.init_scale},
                {"memory", g.memory}};
  j["budget"] = {{"one_layer", budget_to_json(c.budget_one)}, {"two_layer", budget_to_json(c.budget_two)}};
  const auto& w = c.wigner;
  j["wigner"] = {{"state", w.state}, {"n_fock", w.n_fock}, {"re_min", w.re_min}, {"re_max", w.re_max},
                 {"n_re", w.n_re},   {"im_min", w.im_min}, {"im_max", w.im_max}, {"n_im", w.n_im}};
  j["output"] = {{"out", c.out}, {"seed", c.seed}, {"threads", c.threads}};
  return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  detail::ConfigReader root(j, "");
  {
    auto r = root.child("system");
    auto& s = c.system;
    r.read_scaled("chi_qc_hz", s.chi_qc, kTwoPi);
    r.read_scaled("kerr_hz", s.k_c, kTwoPi);
    r.read_scaled("kerr_prime_hz", s.k_c_prime, kTwoPi);
    r.read_scaled("chi_qc_prime_hz", s.chi_qc_prime, kTwoPi);
    r.read_scaled("t1_q_us", s.t1_q, 1e-6);
    r.read_scaled("tphi_q_us", s.tphi_q, 1e-6);
    r.read_scaled("t1_c_us", s.t1_c, 1e-6);
    r.read_scaled("tphi_c_us", s.tphi_c, 1e-6);
    r.read("nth_q", s.nth_q);
    r.read("nth_c", s.nth_c);
    r.read("higher_order", s.higher_order);
    r.finish();
  }
  {
    auto r = root.child("comb");
    auto& cb = c.comb;
    r.read("m_pairs", cb.m_pairs);
    r.read_scaled("duration_ns", cb.duration, 1e-9);
    r.read_scaled("delay_ns", cb.delay, 1e-9);
    r.read_scaled("edge_ns", cb.edge, 1e-9);
    r.read("omega_over_chi", cb.omega_over_chi);
    r.read("scalings", cb.scalings);
    r.read("n_fock", cb.n_fock);
    r.read("fock_max", cb.fock_max);
    r.read_scaled("delay_sweep_ns", cb.delay_sweep, 1e-9);
    r.read_scaled("scaling_probe_detuning_mhz", cb.scaling_probe_detuning, 1e6);
    r.read_scaled("ramsey_pulse_ns", cb.ramsey_pulse, 1e-9);
    r.read("ramsey_fock_max", cb.ramsey_fock_max);
    r.read("decoherence", cb.decoherence);
    r.finish();
  }
  {
    auto r = root.child("qec");
    auto& q = c.qec;
    r.read("mode", q.mode);
    r.read("layers", q.layers);
    r.read_scaled("t_wait_us", q.t_wait, 1e-6);
    r.read_scaled("latency_ns", q.latency, 1e-9);
    r.read_scaled("reset_ns", q.reset, 1e-9);
    r.read_scaled("recovery_ns", q.recovery, 1e-9);
    r.read("readout", q.readout);
    r.read_scaled("readout_ns", q.readout_duration, 1e-9);
    r.read("pass", q.pass);
    r.read("pass_detuning_over_chi", q.pass_detuning_over_chi);
    r.read("pass_excitation", q.pass_excitation);
    r.read("case_zero", q.case_zero);
    r.read("mirror", q.mirror);
    r.read("n_fock", q.n_fock);
    r.read("cycles", q.cycles);
    r.read("trajectories", q.trajectories);
    r.read("truncation_limit", q.truncation_limit);
    r.read_scaled("baseline_times_us", q.baseline_times, 1e-6);
    r.read("recovery_pulses", q.recovery_pulses);
    auto sw = r.child("sweep");
    sw.read_scaled("grid_us", q.sweep.grid, 1e-6);
    sw.read_scaled("span_us", q.sweep.span, 1e-6);
    sw.read("trajectories", q.sweep.trajectories);
    sw.read("min_cycles", q.sweep.min_cycles);
    sw.read("max_cycles", q.sweep.max_cycles);
    sw.finish();
    r.finish();
  }
  {
    auto r = root.child("grape");
    auto& g = c.grape;
    r.read("target", g.target);
    r.read_scaled("duration_ns", g.duration, 1e-9);
    r.read_scaled("dt_ns", g.dt, 1e-9);
    r.read("n_fock", g.n_fock);
    r.read_scaled("t_wait_us", g.t_wait, 1e-6);
    r.read("max_iter", g.max_iter);
    r.read("target_fidelity", g.target_fidelity);
    r.read_scaled("qubit_bound_mhz", g.qubit_bound, 1e6);
    r.read_scaled("cavity_bound_mhz", g.cavity_bound, 1e6);
    r.read("init_scale", g.init_scale);
    r.read("memory", g.memory);
    r.finish();
  }
  {
    auto r = root.child("budget");
    for (auto [key, target] : {std::pair<const char*, ErrorBudgetInputs*>{"one_layer", &c.budget_one},
                               std::pair<const char*, ErrorBudgetInputs*>{"two_layer", &c.budget_two}}) {
      if (const auto* b = r.raw(key)) {
        try {
          *target = budget_from_json(*b);
        } catch (const ConfigError& e) {
          std::string msg = e.what();
          const std::string from = "'budget.", to = std::string("'budget.") + key + ".";
          if (const auto pos = msg.find(from); pos != std::string::npos) msg.replace(pos, from.size(), to);
          throw ConfigError(std::string("config: budget.") + key + ": " + msg);
        }
      }
    }
    r.finish();
  }
  {
    auto r = root.child("wigner");
    auto& w = c.wigner;
    r.read("state", w.state);
    r.read("n_fock", w.n_fock);
    r.read("re_min", w.re_min);
    r.read("re_max", w.re_max);
    r.read("n_re", w.n_re);
    r.read("im_min", w.im_min);
    r.read("im_max", w.im_max);
    r.read("n_im", w.n_im);
    r.finish();
  }
  {
    auto r = root.child("output");
    r.read("out", c.out);
    r.read("seed", c.seed);
    r.read("threads", c.threads);
    r.finish();
  }
  root.finish();
  if (c.budget_one.layers != 1 || c.budget_two.layers != 2) throw ConfigError("config: budget sections have the wrong layer count");
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  RunConfig c = config_from_json(j);
  c.validate();
  return c;
}

/// Hash of everything that can change results (output directory and thread
/// count excluded).
inline std::string config_hash(const RunConfig& c) {
  nlohmann::json j = config_to_json(c);
  j["output"].erase("out");
  j["output"].erase("threads");
  return hex64(fnv1a64(j.dump()));
}

}  // namespace bqec
