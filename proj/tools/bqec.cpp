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

// bqec: command-line front end.
//
//   bqec [--config FILE] [--seed N] [--out DIR] [--threads N] <command> [options]
//
// Exit status: 0 success, 1 invalid input, 2 finished with warnings.

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bqec/config.hpp"

namespace fs = std::filesystem;
using namespace bqec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitWarnings = 2;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

struct Run {
  RunConfig cfg;
  fs::path out;
  std::string command;
  std::vector<fs::path> outputs;
  Warnings warnings;
  nlohmann::json summary = nlohmann::json::object();

  fs::path file(const std::string& name) {
    outputs.push_back(out / name);
    return outputs.back();
  }

  int finish() {
    write_manifest(out, command, cfg.seed, config_hash(cfg), outputs, summary);
    for (const auto& w : warnings.messages) std::cerr << "warning: " << w << '\n';
    return warnings.empty() ? kExitOk : kExitWarnings;
  }
};

Run start(const Globals& g, const std::string& command) {
  Run r;
  r.command = command;
  if (!g.config_path.empty()) r.cfg = load_config(g.config_path);
  if (g.seed) r.cfg.seed = *g.seed;
  if (g.out) r.cfg.out = *g.out;
  if (g.threads) r.cfg.threads = *g.threads;
  r.cfg.validate();
  r.out = r.cfg.out;
  fs::create_directories(r.out);
  return r;
}

double us(double t) { return t * 1e6; }
double ns(double t) { return t * 1e9; }

std::vector<double> fock_errors(const std::vector<double>& excitation, int n_max) {
  std::vector<double> out;
  for (int n = 0; n <= n_max; ++n) {
    const double p = excitation.at(static_cast<std::size_t>(n));
    out.push_back(n % 2 == 0 ? p : 1.0 - p);
  }
  return out;
}

DensityMatrix fock_density(int n, int dim) {
  return DensityMatrix::from_pure(StateVector(Space::single(dim), fock_vector(dim, n)));
}

// ---------------------------------------------------------------------------
// parity-calib

int cmd_parity_calib(Run& r) {
  const auto& c = r.cfg.comb;
  const SystemParams& p = r.cfg.system;
  const CombSpec spec = c.spec(p);

  {
    CsvWriter csv(r.file("parity_scaling.csv"),
                  {"component", "tone_frequency_hz", "probe_detuning_hz", "stark_shift_hz", "scaling_set", "scaling_recovered"});
    const double omega0 = 2.0 * spec.omega;
    for (int n = 1; n <= spec.m_pairs; ++n) {
      const double tone = (2 * n - 1) * spec.chi;
      const double det = kTwoPi * c.scaling_probe_detuning;
      const double shift = simulated_stark_shift(spec.scaling(n), omega0, det);
      csv.row(std::vector<double>{double(n), tone / kTwoPi, det / kTwoPi, shift / kTwoPi, spec.scaling(n),
                                  calibrate_scaling(det, shift, omega0)});
    }
  }

  std::vector<std::string> fock_cols;
  for (int n = 0; n <= c.fock_max; ++n) fock_cols.push_back("error_n" + std::to_string(n));
  {
    std::vector<std::string> header{"delay_ns"};
    header.insert(header.end(), fock_cols.begin(), fock_cols.end());
    header.push_back("mean_parity_fidelity");
    CsvWriter csv(r.file("parity_delay_sweep.csv"), header);
    for (double d : c.delay_sweep) {
      CombSpec s = spec;
      s.delay = d;
      const auto ex = comb_excitation(s, p, c.fock_max, c.decoherence);
      std::vector<double> row{ns(d)};
      for (double e : fock_errors(ex, c.fock_max)) row.push_back(e);
      row.push_back(1.0 - parity_infidelity(ex));
      csv.row(row);
    }
  }

  ParityOptions noisy;
  noisy.decoherence = c.decoherence;
  noisy.readout = MeasurementModel::device_defaults();
  noisy.n_report = c.fock_max + 1;
  const auto ideal_rep = simulate_parity_map(fock_density(0, c.n_fock), spec, p, {}, &r.warnings);
  const auto noisy_rep = simulate_parity_map(fock_density(0, c.n_fock), spec, p, noisy, &r.warnings);
  {
    CsvWriter csv(r.file("parity_fock_errors.csv"), {"fock", "parity", "error_ideal", "error_decoherence", "qnd_fidelity_ideal"});
    for (int n = 0; n <= c.fock_max; ++n) {
      const auto rep = simulate_parity_map(fock_density(n, c.n_fock), spec, p, {}, &r.warnings);
      const double qnd = n % 2 == 0 ? rep.qnd_fidelity_g : rep.qnd_fidelity_e;
      csv.row(std::vector<double>{double(n), double(n % 2), ideal_rep.fock_error(n), noisy_rep.fock_error(n), qnd});
    }
  }

  {
    const int dim = std::max(c.n_fock, c.ramsey_fock_max + 3);
    RamseySpec rs;
    rs.pulse_duration = c.ramsey_pulse;
    const auto comb = simulate_parity_map(fock_density(0, dim), spec, p, {}, &r.warnings);
    const auto ramsey = ramsey_parity_map(fock_density(0, dim), p, rs, {}, &r.warnings);
    CsvWriter csv(r.file("parity_comb_vs_ramsey.csv"), {"fock", "comb_error", "ramsey_error"});
    for (int n = 0; n <= c.ramsey_fock_max; ++n) csv.row(std::vector<double>{double(n), comb.fock_error(n), ramsey.fock_error(n)});
  }

  r.summary = {{"code_error_ideal", ideal_rep.code_error},
               {"error_error_ideal", ideal_rep.error_error},
               {"code_error_decoherence", noisy_rep.code_error},
               {"error_error_decoherence", noisy_rep.error_error}};
  std::cout << "code-space detection error: " << format_number(ideal_rep.code_error) << " (ideal), "
            << format_number(noisy_rep.code_error) << " (decoherence + readout)\n"
            << "error-space detection error: " << format_number(ideal_rep.error_error) << " (ideal), "
            << format_number(noisy_rep.error_error) << " (decoherence + readout)\n";
  return r.finish();
}

// ---------------------------------------------------------------------------
// grape

int cmd_grape(Run& r, const std::optional<std::string>& target_flag) {
  const auto& g = r.cfg.grape;
  const std::string name = target_flag.value_or(g.target);
  const GrapeTarget target = parse_grape_target(name);
  const SystemParams& p = r.cfg.system;
  const auto h0 = dispersive_hamiltonian(p, Space::qubit_cavity(g.n_fock));
  const CodeSpec code = lowest_order_binomial(g.n_fock);
  const auto prob = make_problem(h0, grape_transfers(target, code, p.kappa_c(), g.t_wait), g.duration, g.dt);
  const auto res = optimize(prob, r.cfg.optimizer_config());

  const fs::path pulse_path = r.file("grape_" + name + "_pulse.csv");
  save_pulse(pulse_path, res.pulse, matrix_hash(h0.matrix));
  {
    CsvWriter csv(r.file("grape_" + name + "_convergence.csv"), {"iteration", "fidelity", "objective"});
    for (const auto& t : res.trace) csv.row(std::vector<double>{double(t.iteration), t.fidelity, t.objective});
  }
  r.summary = {{"target", name},
               {"fidelity", res.fidelity},
               {"target_fidelity", g.target_fidelity},
               {"target_reached", res.target_reached},
               {"iterations", res.trace.empty() ? 0 : res.trace.back().iteration},
               {"message", res.message}};
  std::cout << "grape " << name << ": fidelity " << format_number(res.fidelity) << " after "
            << (res.trace.empty() ? 0 : res.trace.back().iteration) << " iterations (" << res.message << ")\n";
  if (!res.target_reached) {
    r.warnings.add("grape: target fidelity " + format_number(g.target_fidelity) + " not reached");
  }
  return r.finish();
}

// ---------------------------------------------------------------------------
// qec

struct QecFlags {
  std::optional<int> layers, cycles, trajectories;
  std::optional<std::string> mode, baseline;
};

void write_fidelity(Run& r, const std::string& series, const std::vector<FidelityPoint>& pts) {
  CsvWriter csv(r.file("qec_" + series + "_fidelity.csv"), {"index", "time_us", "f_chi", "f_chi_err"});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    csv.row(std::vector<double>{double(i), us(pts[i].time), pts[i].f_chi, pts[i].f_chi_err});
  }
}

int write_fit(Run& r, const std::string& series, const std::vector<FidelityPoint>& pts) {
  DecayFit fit;
  try {
    fit = fit_decay(pts);
  } catch (const FitError& e) {
    r.warnings.add(std::string("fit failed: ") + e.what());
    return r.finish();
  }
  CsvWriter csv(r.file("qec_" + series + "_fit.csv"),
                {"amplitude", "amplitude_err", "lifetime_us", "lifetime_err_us", "offset", "residual_norm"});
  csv.row(std::vector<double>{fit.amplitude, fit.amplitude_err, us(fit.lifetime), us(fit.lifetime_err), fit.offset,
                              fit.residual_norm});
  r.summary["lifetime_us"] = us(fit.lifetime);
  r.summary["lifetime_err_us"] = us(fit.lifetime_err);
  std::cout << series << ": lifetime " << format_number(us(fit.lifetime), 6) << " +/- "
            << format_number(us(fit.lifetime_err), 3) << " us\n";
  return r.finish();
}

int cmd_qec(Run& r, const QecFlags& f) {
  auto& q = r.cfg.qec;
  if (f.baseline) {
    const Baseline b = parse_baseline(*f.baseline);
    const auto pts = baseline_lifetimes(r.cfg.system, b, q.baseline_times, q.n_fock);
    const std::string series = "baseline_" + to_string(b);
    write_fidelity(r, series, pts);
    r.summary["series"] = series;
    return write_fit(r, series, pts);
  }
  if (f.layers) q.layers = *f.layers;
  if (f.cycles) q.cycles = *f.cycles;
  if (f.trajectories) q.trajectories = *f.trajectories;
  if (f.mode) q.mode = *f.mode;
  r.cfg.validate();

  const QecModel m = prepare_qec_model(r.cfg.system, r.cfg.cycle_config(), lowest_order_binomial(q.n_fock));
  RepetitiveOptions opt;
  opt.n_cycles = q.cycles;
  opt.n_traj = q.trajectories;
  opt.seed = r.cfg.seed;
  opt.threads = r.cfg.threads;
  opt.truncation_limit = q.truncation_limit;
  const auto run = run_repetitive(m, opt, &r.warnings);
  const std::string series = q.layers == 1 ? "one_layer" : "two_layer";
  write_fidelity(r, series, run.points);
  r.summary["series"] = series;
  r.summary["mode"] = q.mode;
  r.summary["cycle_duration_us"] = us(m.config.cycle_duration());
  r.summary["aborted_trajectories"] = run.aborted;
  if (run.points.size() < 3) return r.finish();
  return write_fit(r, series, run.points);
}

// ---------------------------------------------------------------------------
// budget

void print_budget(const BudgetResult& b) {
  std::cout << (b.layers == 1 ? "One-layer" : "Two-layer") << " QEC error budget (%)\n";
  std::cout << std::left << std::setw(8) << "branch" << std::right;
  for (const char* h : {"prob", "intr", "det", "rec", "therm", "total"}) std::cout << std::setw(8) << h;
  std::cout << '\n' << std::fixed << std::setprecision(1);
  for (const auto& row : b.rows) {
    std::cout << std::left << std::setw(8) << row.label << std::right;
    for (double v : {row.probability, row.intrinsic, row.detection, row.recovery, row.thermal, row.total()}) {
      std::cout << std::setw(8) << 100.0 * v;
    }
    std::cout << '\n';
  }
  std::cout << "weighted total " << std::setprecision(2) << 100.0 * b.total << " %, cycle " << us(b.cycle_duration)
            << " us, predicted lifetime " << std::setprecision(1) << us(b.lifetime) << " us\n\n";
  std::cout.unsetf(std::ios::floatfield);
  std::cout << std::setprecision(6);
}

int cmd_budget(Run& r, const std::string& table, const std::vector<std::string>& overrides) {
  std::vector<int> layers;
  if (table == "1" || table == "both") layers.push_back(1);
  if (table == "2" || table == "both") layers.push_back(2);
  if (layers.empty()) throw ConfigError("--table must be 1, 2 or both");

  std::vector<BudgetResult> results;
  for (int l : layers) {
    ErrorBudgetInputs in = r.cfg.budget(l);
    for (const auto& o : overrides) {
      std::string spec = o;
      std::optional<int> only;
      if (spec.size() > 2 && (spec[0] == '1' || spec[0] == '2') && spec[1] == ':') {
        only = spec[0] - '0';
        spec = spec.substr(2);
      }
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--eps-override expects name=value, got '" + o + "'");
      if (only && *only != l) continue;
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(spec.substr(eq + 1), &used);
        if (used != spec.size() - eq - 1) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ConfigError("--eps-override: bad number in '" + o + "'");
      }
      set_budget_entry(in, spec.substr(0, eq), v);
    }
    results.push_back(evaluate_budget(in));
  }

  {
    CsvWriter csv(r.file("budget_rows.csv"),
                  {"layers", "branch", "probability", "intrinsic", "detection", "recovery", "thermal", "total"});
    for (const auto& b : results) {
      for (const auto& row : b.rows) {
        csv.row(std::vector<std::string>{std::to_string(b.layers), row.label, format_number(row.probability),
                                         format_number(row.intrinsic), format_number(row.detection),
                                         format_number(row.recovery), format_number(row.thermal),
                                         format_number(row.total())});
      }
    }
  }
  {
    CsvWriter csv(r.file("budget_totals.csv"), {"layers", "weighted_total", "cycle_duration_us", "predicted_lifetime_us"});
    for (const auto& b : results) csv.row(std::vector<double>{double(b.layers), b.total, us(b.cycle_duration), us(b.lifetime)});
  }
  for (const auto& b : results) {
    print_budget(b);
    r.summary[b.layers == 1 ? "one_layer" : "two_layer"] = {{"total", b.total}, {"lifetime_us", us(b.lifetime)}};
  }
  return r.finish();
}

// ---------------------------------------------------------------------------
// wigner

Vector named_state(const std::string& name, int dim) {
  const CodeSpec code = lowest_order_binomial(dim);
  const auto cards = cardinal_states(code);
  static const std::vector<std::string> logical{"zero_l", "one_l", "plus_x", "minus_x", "plus_y", "minus_y"};
  for (std::size_t k = 0; k < logical.size(); ++k) {
    if (name == logical[k]) return cards[k].amplitudes;
  }
  if (name == "vacuum") return fock_vector(dim, 0);
  if (name.rfind("fock:", 0) == 0) {
    int n = -1;
    try {
      n = std::stoi(name.substr(5));
    } catch (const std::exception&) {
    }
    if (n < 0 || n >= dim) throw ConfigError("wigner: Fock index out of range in '" + name + "'");
    return fock_vector(dim, n);
  }
  if (name.rfind("coherent:", 0) == 0) {
    std::stringstream ss(name.substr(9));
    double re = 0.0, im = 0.0;
    char sep = 0;
    if (!(ss >> re >> sep >> im) || sep != ',') throw ConfigError("wigner: expected coherent:RE,IM, got '" + name + "'");
    return coherent_vector(dim, {re, im});
  }
  throw ConfigError("wigner: unknown state '" + name +
                    "' (vacuum|fock:N|coherent:RE,IM|zero_l|one_l|plus_x|minus_x|plus_y|minus_y)");
}

Vector file_state(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("wigner: state file not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("wigner: state file is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object() || j.size() != 1 || !j.contains("amplitudes")) {
    throw ConfigError("wigner: state file must hold exactly one key 'amplitudes'");
  }
  Vector v = detail::vector_from_json(j.at("amplitudes"), "amplitudes");
  if (v.size() < 1 || !(v.norm() > 0.0)) throw ConfigError("wigner: state amplitudes must be non-empty and nonzero");
  return v.normalized();
}

int cmd_wigner(Run& r, const std::optional<std::string>& state, const std::optional<std::string>& state_file) {
  const auto& w = r.cfg.wigner;
  const Vector psi = state_file ? file_state(*state_file) : named_state(state.value_or(w.state), w.n_fock);
  const auto rho = DensityMatrix::from_pure(StateVector(Space::single(static_cast<int>(psi.size())), psi));
  const auto re = linspace(w.re_min, w.re_max, w.n_re);
  const auto im = linspace(w.im_min, w.im_max, w.n_im);
  const Eigen::MatrixXd grid = wigner_grid(rho, re, im, &r.warnings);

  std::vector<std::string> header{"im_alpha\\re_alpha"};
  for (double x : re) header.push_back(format_number(x));
  CsvWriter csv(r.file("wigner.csv"), header);
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    std::vector<double> row{im[static_cast<std::size_t>(i)]};
    for (Eigen::Index j = 0; j < grid.cols(); ++j) row.push_back(grid(i, j));
    csv.row(row);
  }
  r.summary = {{"state", state_file ? "file:" + *state_file : state.value_or(w.state)},
               {"rows", grid.rows()},
               {"cols", grid.cols()}};
  return r.finish();
}

// ---------------------------------------------------------------------------
// sweep-twait

int cmd_sweep(Run& r) {
  const auto& q = r.cfg.qec;
  SweepOptions opt;
  opt.n_traj = q.sweep.trajectories;
  opt.seed = r.cfg.seed;
  opt.threads = r.cfg.threads;
  opt.span = q.sweep.span;
  opt.min_cycles = q.sweep.min_cycles;
  opt.max_cycles = q.sweep.max_cycles;
  WaitSweep sweep;
  try {
    sweep = sweep_waiting_time(r.cfg.system, r.cfg.cycle_config(), q.sweep.grid, opt, &r.warnings,
                               lowest_order_binomial(q.n_fock));
  } catch (const FitError& e) {
    r.warnings.add(std::string("sweep: fit failed: ") + e.what());
    return r.finish();
  }
  CsvWriter csv(r.file("sweep_twait.csv"), {"t_wait_us", "n_cycles", "amplitude", "lifetime_us", "lifetime_err_us"});
  for (const auto& row : sweep.rows) {
    csv.row(std::vector<double>{us(row.t_wait), double(row.n_cycles), row.fit.amplitude, us(row.fit.lifetime),
                                us(row.fit.lifetime_err)});
  }
  const auto& best = sweep.rows[sweep.best];
  r.summary = {{"best_t_wait_us", us(best.t_wait)}, {"best_lifetime_us", us(best.fit.lifetime)}};
  std::cout << "best waiting time " << format_number(us(best.t_wait), 6) << " us, lifetime "
            << format_number(us(best.fit.lifetime), 6) << " us\n";
  return r.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bqec: binomial-code QEC simulations"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads (0 = hardware)");

  auto* parity = app.add_subcommand("parity-calib", "comb parity calibration tables");

  auto* grape = app.add_subcommand("grape", "optimal-control pulse");
  std::optional<std::string> target;
  grape->add_option("--target", target, "encode|decode|u0|u1|u2|u3");

  auto* qec = app.add_subcommand("qec", "repetitive QEC fidelity decay");
  QecFlags qf;
  qec->add_option("--layers", qf.layers, "1 or 2");
  qec->add_option("--cycles", qf.cycles, "number of cycles");
  qec->add_option("--trajectories", qf.trajectories, "trajectories per cardinal input");
  qec->add_option("--mode", qf.mode, "ideal|intrinsic|budget-matched|physical");
  qec->add_option("--baseline", qf.baseline, "fock01|transmon|uncorrected-binomial");

  auto* budget = app.add_subcommand("budget", "error budget tables");
  std::string table = "both";
  std::vector<std::string> overrides;
  budget->add_option("--table", table, "1|2|both");
  budget->add_option("--eps-override", overrides, "[1:|2:]name=value, repeatable")->allow_extra_args(false);

  auto* wig = app.add_subcommand("wigner", "Wigner function grid");
  std::optional<std::string> state, state_file;
  wig->add_option("--state", state, "vacuum|fock:N|coherent:RE,IM|zero_l|one_l|plus_x|minus_x|plus_y|minus_y");
  wig->add_option("--state-file", state_file, "JSON file with Fock amplitudes")->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep-twait", "lifetime versus waiting time");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (parity->parsed()) {
      Run r = start(g, "parity-calib");
      return cmd_parity_calib(r);
    }
    if (grape->parsed()) {
      Run r = start(g, "grape");
      return cmd_grape(r, target);
    }
    if (qec->parsed()) {
      Run r = start(g, "qec");
      return cmd_qec(r, qf);
    }
    if (budget->parsed()) {
      Run r = start(g, "budget");
      return cmd_budget(r, table, overrides);
    }
    if (wig->parsed()) {
      if (state && state_file) throw ConfigError("wigner: --state and --state-file are exclusive");
      Run r = start(g, "wigner");
      return cmd_wigner(r, state, state_file);
    }
    if (sweep->parsed()) {
      Run r = start(g, "sweep-twait");
      return cmd_sweep(r);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
