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

// Repetitive one- and two-layer correction cycles with feedback, process
// tomography of the logical channel, decay fits and unprotected baselines.
//
// A layer is: PASS idle -> parity map -> ancilla readout -> latency ->
// feedback (reset pi pulse and/or recovery unitary). Every layer occupies the
// same time slot whatever the outcome, so snapshots sit on a uniform grid.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <unsupported/Eigen/LevenbergMarquardt>

#include "bqec/binomial_code.hpp"
#include "bqec/comb_parity.hpp"
#include "bqec/dynamics.hpp"
#include "bqec/error_budget.hpp"

namespace bqec {

// ---------------------------------------------------------------------------
// Configuration

/// Ideal: Hamiltonian only. Intrinsic: cavity decay, heating and Kerr with
/// ideal operations and the PASS excitation allowance. BudgetMatched adds the
/// operation errors as logical depolarizing injections. Physical: all
/// Lindblad channels, comb unitary and device readout, no injections.
enum class QecMode { Ideal, Intrinsic, BudgetMatched, Physical };

inline QecMode parse_qec_mode(const std::string& s) {
  if (s == "ideal") return QecMode::Ideal;
  if (s == "intrinsic") return QecMode::Intrinsic;
  if (s == "budget-matched") return QecMode::BudgetMatched;
  if (s == "physical") return QecMode::Physical;
  throw ConfigError("unknown qec mode '" + s + "' (expected ideal|intrinsic|budget-matched|physical)");
}

inline std::string to_string(QecMode m) {
  switch (m) {
    case QecMode::Ideal: return "ideal";
    case QecMode::Intrinsic: return "intrinsic";
    case QecMode::BudgetMatched: return "budget-matched";
    case QecMode::Physical: return "physical";
  }
  return "?";
}

enum class RecoveryRole { U0 = 0, U1 = 1, U2 = 2, U3 = 3 };

inline const char* role_name(RecoveryRole r) {
  static const char* names[] = {"U0", "U1", "U2", "U3"};
  return names[static_cast<int>(r)];
}

enum class FeedbackAction { ResetPi, U0, U1, U2, U3 };

inline bool is_recovery(FeedbackAction a) { return a != FeedbackAction::ResetPi; }
inline RecoveryRole role_of(FeedbackAction a) { return static_cast<RecoveryRole>(static_cast<int>(a) - 1); }

/// Actions per (layer, reported outcome); an empty list means "none".
struct FeedbackPolicy {
  std::vector<std::array<std::vector<FeedbackAction>, 2>> table;

  const std::vector<FeedbackAction>& actions(int layer, Outcome o) const {
    return table.at(static_cast<std::size_t>(layer))[static_cast<std::size_t>(o)];
  }

  /// One layer: g -> U0, e -> reset + U1. Two layers: first g -> none,
  /// first e -> reset + U1, second g -> U2, second e -> reset + U3.
  static FeedbackPolicy standard(int layers) {
    using A = FeedbackAction;
    FeedbackPolicy p;
    if (layers == 1) {
      p.table.push_back({std::vector<A>{A::U0}, std::vector<A>{A::ResetPi, A::U1}});
    } else if (layers == 2) {
      p.table.push_back({std::vector<A>{}, std::vector<A>{A::ResetPi, A::U1}});
      p.table.push_back({std::vector<A>{A::U2}, std::vector<A>{A::ResetPi, A::U3}});
    } else {
      throw ConfigError("layers must be 1 or 2");
    }
    return p;
  }

  void validate(int layers) const {
    if (static_cast<int>(table.size()) != layers) throw ConfigError("feedback policy must cover every layer");
    for (const auto& layer : table) {
      for (const auto& acts : layer) {
        int resets = 0, recoveries = 0;
        for (auto a : acts) (is_recovery(a) ? recoveries : resets)++;
        if (resets > 1 || recoveries > 1) throw ConfigError("feedback policy: at most one reset and one recovery per outcome");
        if (recoveries == 1 && resets == 1 && acts.front() != FeedbackAction::ResetPi) {
          throw ConfigError("feedback policy: reset must precede the recovery");
        }
      }
    }
  }
};

/// Whether the case-0 recovery pulse follows the readout directly or occupies
/// the end of the slot right before the next idle.
enum class CaseZeroTiming { AfterReadout, BeforeNextWait };

/// Operation error allowances injected in budget-matched mode.
struct OperationErrors {
  double detection_code = 0.011;
  double detection_error = 0.025;
  std::array<double, 4> recovery{0.027, 0.027, 0.027, 0.027};
  double reset = 0.012;
  double encode_decode = 0.027;

  static OperationErrors from_budget(const ErrorBudgetInputs& b) {
    OperationErrors e;
    e.detection_code = b.detection_code;
    e.detection_error = b.detection_error;
    e.recovery = b.recovery;
    e.reset = b.reset;
    e.encode_decode = b.recovery[0];
    return e;
  }

  void validate() const {
    for (double p : {detection_code, detection_error, reset, encode_decode, recovery[0], recovery[1], recovery[2],
                     recovery[3]}) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("operation errors must lie in [0, 1]");
    }
  }
};

struct QecCycleConfig {
  int layers = 1;
  QecMode mode = QecMode::BudgetMatched;
  double t_wait = 90.304e-6;
  CombSpec comb = CombSpec::device(kTwoPi * 2.59e6);
  MeasurementModel readout = MeasurementModel::ideal(600e-9);
  double latency = 511e-9;
  double reset_duration = 20e-9;
  double recovery_duration = 770e-9;
  std::map<RecoveryRole, PiecewisePulse> recovery_pulses;  ///< missing roles use ideal unitaries
  std::optional<PassCalibration> pass;
  double pass_excitation = 0.01;  ///< ancilla excitation probability per PASS idle
  OperationErrors errors;
  CaseZeroTiming case_zero = CaseZeroTiming::AfterReadout;
  bool mirror_experiment = false;  ///< include encode/decode and read the ancilla
  int n_fock = 12;
  double engine_dt = 1e-9;  ///< jump-time resolution scale for trajectories

  double layer_duration() const {
    return t_wait + comb.duration + readout.duration + latency + reset_duration + recovery_duration;
  }
  double cycle_duration() const { return layers * layer_duration(); }

  void validate() const {
    if (layers != 1 && layers != 2) throw ConfigError("qec.layers must be 1 or 2");
    for (double d : {t_wait, latency, reset_duration, recovery_duration, engine_dt}) {
      if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("qec: durations must be > 0");
    }
    comb.validate();
    readout.validate();
    if (!(readout.duration > 0.0)) throw ConfigError("qec: readout duration must be > 0");
    if (!(pass_excitation >= 0.0 && pass_excitation <= 1.0)) throw ConfigError("qec: pass_excitation outside [0, 1]");
    if (n_fock < 6) throw ConfigError("qec: n_fock must be >= 6");
    errors.validate();
    if (pass) pass->validate();
    for (const auto& [role, pulse] : recovery_pulses) {
      pulse.validate();
      if (pulse.n_channels() != static_cast<int>(standard_channel_names().size())) {
        throw ConfigError(std::string("qec: recovery pulse ") + role_name(role) + " must use the standard channels");
      }
    }
  }

  /// Mode presets: readout model and PASS drive.
  static QecCycleConfig preset(QecMode mode, int layers, const SystemParams& p) {
    QecCycleConfig c;
    c.mode = mode;
    c.layers = layers;
    c.comb = CombSpec::device(p.chi_qc);
    if (mode == QecMode::Physical) c.readout = MeasurementModel::device_defaults();
    if (mode == QecMode::Ideal) c.pass_excitation = 0.0;
    try {
      c.pass = calibrate_pass(p, -3.5 * p.chi_qc);
    } catch (const CalibrationError&) {
      c.pass.reset();
    }
    return c;
  }
};

// ---------------------------------------------------------------------------
// Prepared model

struct QecOp {
  enum class Kind { Idle, Flip, Recover } kind = Kind::Idle;
  double duration = 0.0;
  RecoveryRole role = RecoveryRole::U0;
};

struct CycleRecord {
  std::string outcomes;  ///< reported outcomes, '0' = g, '1' = e
  int jumps = 0;
  int injected = 0;
};

/// Everything a cycle needs, built once and shared read-only by trajectories.
struct QecModel {
  SystemParams params;
  QecCycleConfig config;
  FeedbackPolicy policy;
  CodeSpec code;
  Space space{{2, 12}};
  int n_fock = 12;
  Matrix h_idle, h_wait;
  std::vector<Matrix> collapse;
  std::vector<std::string> labels;
  Matrix kick, flip, encode;
  std::array<Matrix, 4> recovery;
  std::array<bool, 4> has_recovery{};
  std::array<Matrix, 3> paulis;  ///< logical X, Y, Z on the code space
  Vector logical0, logical1;
  bool inject = false;
  double thermal_per_cycle = 0.0;
  std::optional<TrajectoryEngine> wait_engine, idle_engine;

  double layer_duration() const { return config.layer_duration(); }
  double cycle_duration() const { return config.cycle_duration(); }

  const Matrix& recovery_unitary(RecoveryRole r) const {
    const auto i = static_cast<std::size_t>(r);
    if (!has_recovery[i]) throw ConfigError(std::string("qec: missing recovery role ") + role_name(r));
    return recovery[i];
  }

  /// Operations after the readout for a reported outcome.
  std::vector<QecOp> post_measure_ops(int layer, Outcome o, const FeedbackPolicy& pol) const {
    std::vector<QecOp> ops{{QecOp::Kind::Idle, config.readout.duration + config.latency, RecoveryRole::U0}};
    bool reset = false;
    std::optional<RecoveryRole> rec;
    for (auto a : pol.actions(layer, o)) {
      if (is_recovery(a)) rec = role_of(a); else reset = true;
    }
    auto idle = [&](double d) { ops.push_back({QecOp::Kind::Idle, d, RecoveryRole::U0}); };
    auto recover = [&] {
      idle(config.recovery_duration);
      if (rec) ops.push_back({QecOp::Kind::Recover, 0.0, *rec});
    };
    if (!reset && rec && config.case_zero == CaseZeroTiming::AfterReadout) {
      recover();
      idle(config.reset_duration);
      return ops;
    }
    if (reset) ops.push_back({QecOp::Kind::Flip, 0.0, RecoveryRole::U0});
    idle(config.reset_duration);
    recover();
    return ops;
  }

  double injection_for(const QecOp& op) const {
    if (!inject) return 0.0;
    if (op.kind == QecOp::Kind::Flip) return config.errors.reset;
    if (op.kind == QecOp::Kind::Recover) return config.errors.recovery[static_cast<std::size_t>(op.role)];
    return 0.0;
  }

  double detection_injection(Outcome reported) const {
    if (!inject) return 0.0;
    return reported == Outcome::G ? config.errors.detection_code : config.errors.detection_error;
  }
};

namespace detail {

inline Matrix ideal_parity_kick(int nf) {
  Matrix u = Matrix::Zero(2 * nf, 2 * nf);
  for (int n = 0; n < nf; ++n) {
    if (n % 2 == 0) {
      u(n, n) = 1.0;
      u(nf + n, nf + n) = 1.0;
    } else {
      u(nf + n, n) = 1.0;
      u(n, nf + n) = 1.0;
    }
  }
  return u;
}

/// Comb map in the interaction frame of its own drift (free evolution removed).
inline Matrix comb_kick(const CombSpec& spec, const SystemParams& p, int nf) {
  const Matrix u = comb_unitary(spec, p, nf);
  const Eigen::VectorXd g = dispersive_levels(p, nf, false);
  const Eigen::VectorXd det = comb_frame_detunings(p, nf);
  Eigen::VectorXcd undo(2 * nf);
  for (int n = 0; n < nf; ++n) {
    undo(n) = std::exp(kI * g(n) * spec.duration);
    undo(nf + n) = std::exp(kI * (g(n) + det(n)) * spec.duration);
  }
  return u * undo.asDiagonal();
}

inline Matrix logical_pauli(const Vector& v0, const Vector& v1, int which) {
  const Eigen::Index d = v0.size();
  Matrix m = Matrix::Identity(d, d) - v0 * v0.adjoint() - v1 * v1.adjoint();
  switch (which) {
    case 0: m += v0 * v1.adjoint() + v1 * v0.adjoint(); break;
    case 1: m += -kI * v0 * v1.adjoint() + kI * v1 * v0.adjoint(); break;
    default: m += v0 * v0.adjoint() - v1 * v1.adjoint(); break;
  }
  return m;
}

inline Eigen::VectorXcd effective_diagonal(const Matrix& h, const std::vector<Matrix>& collapse) {
  const Matrix heff = effective_hamiltonian(h, collapse);
  const Matrix off = heff - Matrix(heff.diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, heff.cwiseAbs().maxCoeff())) {
    throw InvalidDimension("qec: idle generators must be diagonal in the Fock basis");
  }
  return heff.diagonal();
}

/// Noise-free reference transport of the two logical images along a branch.
struct ReferencePath {
  struct Layer {
    bool jump = false;
    Outcome outcome = Outcome::G;
  };
  std::vector<Layer> layers;
};

/// With `stop_before_last_recovery` the transport ends at the final recovery
/// and `trailing_idle` receives the idle time that follows it in the slot.
inline std::array<Vector, 2> reference_images(const QecModel& m, const ReferencePath& path, bool stop_before_last_recovery,
                                              const std::array<Vector, 2>& start, double* trailing_idle = nullptr) {
  const Eigen::VectorXcd dw = effective_diagonal(m.h_wait, m.collapse);
  const Eigen::VectorXcd di = effective_diagonal(m.h_idle, m.collapse);
  const Matrix lower = on_cavity(annihilation(m.n_fock).matrix);
  const int nf = m.n_fock;
  std::array<Vector, 2> v = start;
  auto evolve = [&](const Eigen::VectorXcd& d, double t) {
    for (auto& x : v) {
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) *= std::exp(-kI * d(i) * t);
      x /= x.norm();
    }
  };
  auto apply = [&](const Matrix& u) {
    for (auto& x : v) {
      x = u * x;
      const double n = x.norm();
      if (!(n > 1e-12)) throw ConfigError("qec: reference path annihilates a logical state");
      x /= n;
    }
  };
  for (std::size_t l = 0; l < path.layers.size(); ++l) {
    const auto& step = path.layers[l];
    if (step.jump) {
      evolve(dw, 0.5 * m.config.t_wait);
      apply(lower);
      evolve(dw, 0.5 * m.config.t_wait);
    } else {
      evolve(dw, m.config.t_wait);
    }
    evolve(di, m.config.comb.duration);
    apply(m.kick);
    // project on the expected readout outcome
    for (auto& x : v) {
      if (step.outcome == Outcome::G) x.tail(nf).setZero(); else x.head(nf).setZero();
    }
    apply(Matrix::Identity(2 * nf, 2 * nf));
    const auto ops = m.post_measure_ops(static_cast<int>(l), step.outcome, m.policy);
    const bool last = l + 1 == path.layers.size();
    bool stopped = false;
    double trailing = 0.0;
    for (const auto& op : ops) {
      if (stopped) {
        if (op.kind != QecOp::Kind::Idle) throw ConfigError("qec: recovery must be the last pulse of its slot");
        trailing += op.duration;
      } else if (op.kind == QecOp::Kind::Idle) {
        evolve(di, op.duration);
      } else if (op.kind == QecOp::Kind::Flip) {
        apply(m.flip);
      } else if (last && stop_before_last_recovery) {
        stopped = true;
      } else {
        apply(m.recovery_unitary(op.role));
      }
    }
    if (last && trailing_idle) *trailing_idle = trailing;
  }
  return v;
}

/// Code words rotated back through `t` of idle Hamiltonian evolution.
inline std::array<Vector, 2> back_rotated(const QecModel& m, const std::array<Vector, 2>& target, double t) {
  std::array<Vector, 2> out = target;
  const Eigen::VectorXcd d = m.h_idle.diagonal();
  for (auto& x : out) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) *= std::exp(kI * d(i).real() * t);
  }
  return out;
}

}  // namespace detail

/// Ancilla-ground logical basis vectors on qubit (x) cavity.
inline std::array<Vector, 2> logical_basis(const CodeSpec& code) {
  return {product_state(ground_qubit(), code.code0).amplitudes, product_state(ground_qubit(), code.code1).amplitudes};
}

inline QecModel prepare_qec_model(const SystemParams& params, const QecCycleConfig& cfg,
                                  const CodeSpec& code_in = lowest_order_binomial(12),
                                  std::optional<FeedbackPolicy> policy = std::nullopt) {
  cfg.validate();
  params.validate();
  QecModel m;
  m.params = params;
  m.config = cfg;
  m.policy = policy ? *policy : FeedbackPolicy::standard(cfg.layers);
  m.policy.validate(cfg.layers);
  m.code = code_in;
  if (m.code.n_fock() != cfg.n_fock) throw InvalidDimension("qec: code truncation differs from qec.n_fock");
  m.code.validate(1e-9);
  const int nf = cfg.n_fock;
  m.n_fock = nf;
  m.space = Space({2, nf});

  DecoherenceMask mask = DecoherenceMask::all();
  if (cfg.mode == QecMode::Ideal) mask = DecoherenceMask::none();
  if (cfg.mode == QecMode::Intrinsic || cfg.mode == QecMode::BudgetMatched) mask = DecoherenceMask::cavity_loss();
  const auto ops = collapse_operators(params, m.space, mask);
  m.collapse = matrices_of(ops);
  for (const auto& o : ops) m.labels.push_back(o.label);

  m.h_idle = dispersive_hamiltonian(params, m.space).matrix;
  m.h_wait = m.h_idle;
  if (cfg.pass) {
    const Eigen::VectorXd lv = pass_dressed_levels(params, cfg.pass->detuning, cfg.pass->amplitude, nf);
    for (int n = 0; n < nf; ++n) m.h_wait(n, n) = lv(n);
  }
  m.flip = on_qubit(qubit::sx(), nf);
  m.kick = cfg.mode == QecMode::Physical ? detail::comb_kick(cfg.comb, params, nf) : detail::ideal_parity_kick(nf);

  const auto basis = logical_basis(m.code);
  m.logical0 = basis[0];
  m.logical1 = basis[1];
  for (int k = 0; k < 3; ++k) m.paulis[static_cast<std::size_t>(k)] = detail::logical_pauli(basis[0], basis[1], k);
  m.encode = isometry_completion({product_state(ground_qubit(), fock_vector(nf, 0)).amplitudes,
                                  product_state(excited_qubit(), fock_vector(nf, 0)).amplitudes},
                                 {basis[0], basis[1]});
  m.inject = cfg.mode == QecMode::BudgetMatched;
  if (m.inject && std::isfinite(params.t1_q)) {
    m.thermal_per_cycle = thermal_error(params.nth_q, cfg.cycle_duration(), params.t1_q);
  }

  // Recovery unitaries from noise-free reference paths.
  using L = detail::ReferencePath::Layer;
  auto define = [&](RecoveryRole role, const detail::ReferencePath& src, const std::array<Vector, 2>& target) {
    double trailing = 0.0;
    const auto s = detail::reference_images(m, src, true, basis, &trailing);
    const auto t = detail::back_rotated(m, target, trailing);
    m.recovery[static_cast<std::size_t>(role)] = isometry_completion({s[0], s[1]}, {t[0], t[1]});
    m.has_recovery[static_cast<std::size_t>(role)] = true;
  };
  // Roles are defined on the standard policy shape; a custom policy reuses them.
  const FeedbackPolicy user_policy = m.policy;
  m.policy = FeedbackPolicy::standard(cfg.layers);
  if (cfg.layers == 1) {
    define(RecoveryRole::U0, {{L{false, Outcome::G}}}, basis);
    define(RecoveryRole::U1, {{L{true, Outcome::E}}}, basis);
  } else {
    // first-layer jump recovery returns to the first-layer no-jump state
    m.policy.table[0][0].clear();
    const auto deformed = detail::reference_images(m, {{L{false, Outcome::G}}}, true, basis);
    define(RecoveryRole::U1, {{L{true, Outcome::E}}}, deformed);
    define(RecoveryRole::U2, {{L{false, Outcome::G}, L{false, Outcome::G}}}, basis);
    define(RecoveryRole::U3, {{L{false, Outcome::G}, L{true, Outcome::E}}}, basis);
  }
  m.policy = user_policy;
  for (const auto& layer : m.policy.table) {
    for (const auto& acts : layer) {
      for (auto a : acts) {
        if (is_recovery(a)) (void)m.recovery_unitary(role_of(a));
      }
    }
  }
  // GRAPE pulses replace the ideal unitaries (interaction frame of the drift).
  for (const auto& [role, pulse] : cfg.recovery_pulses) {
    const Matrix u = pulse_unitary(m.h_idle, standard_controls(nf), pulse);
    const Matrix undo = unitary_propagator(-m.h_idle, pulse.duration());
    m.recovery[static_cast<std::size_t>(role)] = u * undo;
    m.has_recovery[static_cast<std::size_t>(role)] = true;
  }

  m.wait_engine.emplace(m.h_wait, m.collapse, m.labels, cfg.engine_dt);
  m.idle_engine.emplace(m.h_idle, m.collapse, m.labels, cfg.engine_dt);
  return m;
}

// ---------------------------------------------------------------------------
// Logical readout

/// 2x2 logical density matrix; population outside the logical subspace is
/// returned as the identity-deficit (filled with I/2).
inline Matrix logical_density(const Vector& psi, const QecModel& m) {
  const double n2 = psi.squaredNorm();
  if (!(n2 > 0.0)) throw NumericError("logical_density: zero state");
  Matrix rho(2, 2);
  if (m.config.mirror_experiment) {
    const Vector v = m.encode.adjoint() * psi;
    const int nf = m.n_fock;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) rho(i, j) = v.segment(j * nf, nf).dot(v.segment(i * nf, nf)) / n2;
    }
    return rho;
  }
  Vector a(2);
  a << m.logical0.dot(psi), m.logical1.dot(psi);
  rho = a * a.adjoint() / n2;
  const double leak = std::max(0.0, 1.0 - rho.trace().real());
  rho += 0.5 * leak * Matrix::Identity(2, 2);
  return rho;
}

inline Matrix logical_density(const DensityMatrix& rho, const QecModel& m) {
  const double tr = rho.matrix.trace().real();
  if (!(tr > 0.0)) throw NumericError("logical_density: zero state");
  if (m.config.mirror_experiment) {
    const Matrix r = m.encode.adjoint() * rho.matrix * m.encode;
    const int nf = m.n_fock;
    Matrix out(2, 2);
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) out(i, j) = r.block(i * nf, j * nf, nf, nf).trace() / tr;
    }
    return out;
  }
  const std::array<const Vector*, 2> b{&m.logical0, &m.logical1};
  Matrix out(2, 2);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = b[i]->dot(rho.matrix * *b[j]) / tr;
  }
  out += 0.5 * std::max(0.0, 1.0 - out.trace().real()) * Matrix::Identity(2, 2);
  return out;
}

inline Eigen::Vector3d bloch_vector(const Matrix& rho) {
  return {2.0 * rho(0, 1).real(), -2.0 * rho(0, 1).imag(), (rho(0, 0) - rho(1, 1)).real()};
}

inline Matrix density_from_bloch(const Eigen::Vector3d& b) {
  Matrix rho(2, 2);
  rho << 0.5 * (1.0 + b(2)), 0.5 * cplx(b(0), -b(1)), 0.5 * cplx(b(0), b(1)), 0.5 * (1.0 - b(2));
  return rho;
}

/// Logical cardinal states +Z, -Z, +X, -X, +Y, -Y as 2-vectors.
inline std::array<Vector, 6> logical_cardinals() {
  const double r = 1.0 / std::sqrt(2.0);
  std::array<Vector, 6> out;
  const cplx amps[6][2] = {{1, 0}, {0, 1}, {r, r}, {r, -r}, {r, kI * r}, {r, -kI * r}};
  for (int k = 0; k < 6; ++k) {
    out[static_cast<std::size_t>(k)] = Vector(2);
    out[static_cast<std::size_t>(k)] << amps[k][0], amps[k][1];
  }
  return out;
}

/// Initial joint state for cardinal input k (ancilla-side cardinal when mirroring).
inline Vector cardinal_input(const QecModel& m, int k) {
  const Vector c = logical_cardinals().at(static_cast<std::size_t>(k));
  if (m.config.mirror_experiment) {
    return product_state(c, fock_vector(m.n_fock, 0)).amplitudes;
  }
  return c(0) * m.logical0 + c(1) * m.logical1;
}

// ---------------------------------------------------------------------------
// Process tomography

struct ProcessMatrix {
  Matrix chi = Matrix::Zero(4, 4);  ///< Pauli basis I, X, Y, Z

  double fidelity() const { return chi(0, 0).real(); }
  double normalized_fidelity() const { return (fidelity() - 0.25) / 0.75; }
};

/// Process matrix from the outputs for the six cardinal inputs (least-squares
/// linear inversion). Outputs with trace below 1 are filled with I/2.
inline ProcessMatrix process_tomography(const std::array<Matrix, 6>& outputs, Warnings* sink = nullptr) {
  std::array<Matrix, 6> o;
  for (std::size_t k = 0; k < 6; ++k) {
    if (outputs[k].rows() != 2 || outputs[k].cols() != 2) throw InvalidDimension("process_tomography: outputs must be 2x2");
    o[k] = outputs[k];
    const double leak = 1.0 - o[k].trace().real();
    if (leak < -1e-6) throw NumericError("process_tomography: output trace exceeds 1");
    o[k] += 0.5 * std::max(0.0, leak) * Matrix::Identity(2, 2);
  }
  const Matrix ei = (o[0] + o[1] + o[2] + o[3] + o[4] + o[5]) / 3.0;
  const Matrix ex = o[2] - o[3], ey = o[4] - o[5], ez = o[0] - o[1];
  const Matrix e00 = 0.5 * (ei + ez), e11 = 0.5 * (ei - ez);
  const Matrix e01 = 0.5 * (ex + kI * ey), e10 = 0.5 * (ex - kI * ey);
  Matrix choi(4, 4);
  choi.block(0, 0, 2, 2) = e00;
  choi.block(0, 2, 2, 2) = e01;
  choi.block(2, 0, 2, 2) = e10;
  choi.block(2, 2, 2, 2) = e11;
  const std::array<Matrix, 4> p{Matrix::Identity(2, 2), qubit::sx(), qubit::sy(), qubit::sz()};
  ProcessMatrix pm;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      pm.chi(a, b) = vec(p[static_cast<std::size_t>(a)]).dot(choi * vec(p[static_cast<std::size_t>(b)])) / 4.0;
    }
  }
  pm.chi = 0.5 * (pm.chi + pm.chi.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(pm.chi);
  if (es.eigenvalues().minCoeff() < -1e-6) {
    warn(sink, "process_tomography: non-physical process matrix projected to the nearest positive matrix");
    const double tr = pm.chi.trace().real();
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    ev *= tr / ev.sum();
    pm.chi = es.eigenvectors() * ev.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
  }
  return pm;
}

/// Channel evaluated on the six cardinal density matrices.
inline ProcessMatrix process_tomography(const std::function<Matrix(const Matrix&)>& channel, Warnings* sink = nullptr) {
  std::array<Matrix, 6> out;
  const auto c = logical_cardinals();
  for (std::size_t k = 0; k < 6; ++k) out[k] = channel(c[k] * c[k].adjoint());
  return process_tomography(out, sink);
}

// ---------------------------------------------------------------------------
// Trajectory cycle

namespace detail {

inline Outcome measure_trajectory(TrajectoryState& st, const MeasurementModel& model, int nf, Rng& rng) {
  const double pg = st.psi.head(nf).squaredNorm();
  const double pe = st.psi.tail(nf).squaredNorm();
  const Outcome truth = rng.uniform() * (pg + pe) < pg ? Outcome::G : Outcome::E;
  if (truth == Outcome::G) {
    st.psi.tail(nf).setZero();
    st.psi /= std::sqrt(pg);
  } else {
    st.psi.head(nf).setZero();
    st.psi /= std::sqrt(pe);
  }
  Outcome rep = truth;
  if (rng.bernoulli(model.assign_err(truth))) rep = truth == Outcome::G ? Outcome::E : Outcome::G;
  if (rng.bernoulli(model.qnd_flip(truth))) {
    Vector swapped(2 * nf);
    swapped << st.psi.tail(nf), st.psi.head(nf);
    st.psi = swapped;
  }
  st.threshold = rng.uniform();
  return rep;
}

inline void apply_injections(TrajectoryState& st, const QecModel& m, const std::vector<double>& probs, Rng& rng,
                             CycleRecord* rec) {
  for (double p : probs) {
    if (p <= 0.0) continue;
    if (rng.uniform() < p) {
      const int k = std::min(3, static_cast<int>(rng.uniform() * 4.0));
      if (k > 0) {
        st.psi = m.paulis[static_cast<std::size_t>(k - 1)] * st.psi;
        if (rec) ++rec->injected;
      }
    }
  }
}

}  // namespace detail

/// Operator applied at a chosen time into the idle of one layer.
struct ForcedJump {
  int layer = 0;
  double time = 0.0;
  Matrix op;
};

/// One full cycle (all layers) on a trajectory state, in place.
inline CycleRecord run_cycle_trajectory(TrajectoryState& st, const QecModel& m, const FeedbackPolicy& policy, Rng& rng,
                                        const std::optional<ForcedJump>& forced = std::nullopt) {
  CycleRecord rec;
  TrajectoryRecord jumps;
  std::vector<double> inject;
  const auto& cfg = m.config;
  const int nf = m.n_fock;
  for (int layer = 0; layer < cfg.layers; ++layer) {
    if (forced && forced->layer == layer) {
      if (!(forced->time >= 0.0 && forced->time <= cfg.t_wait)) throw ConfigError("forced jump outside the idle");
      m.wait_engine->advance(st, forced->time, rng, &jumps);
      st.renormalize();
      st.psi = forced->op * st.psi;
      st.renormalize();
      ++rec.jumps;
      m.wait_engine->advance(st, cfg.t_wait - forced->time, rng, &jumps);
    } else {
      m.wait_engine->advance(st, cfg.t_wait, rng, &jumps);
    }
    st.renormalize();
    if (cfg.pass_excitation > 0.0 && rng.bernoulli(cfg.pass_excitation)) st.psi = m.flip * st.psi;
    m.idle_engine->advance(st, cfg.comb.duration, rng, &jumps);
    st.psi = m.kick * st.psi;
    const Outcome o = detail::measure_trajectory(st, cfg.readout, nf, rng);
    rec.outcomes += o == Outcome::G ? '0' : '1';
    inject.push_back(m.detection_injection(o));
    for (const auto& op : m.post_measure_ops(layer, o, policy)) {
      switch (op.kind) {
        case QecOp::Kind::Idle:
          m.idle_engine->advance(st, op.duration, rng, &jumps);
          break;
        case QecOp::Kind::Flip:
          st.psi = m.flip * st.psi;
          break;
        case QecOp::Kind::Recover:
          st.psi = m.recovery_unitary(op.role) * st.psi;
          break;
      }
      inject.push_back(m.injection_for(op));
    }
  }
  st.renormalize();
  inject.push_back(m.thermal_per_cycle);
  detail::apply_injections(st, m, inject, rng, &rec);
  rec.jumps += static_cast<int>(jumps.jumps.size());
  return rec;
}

struct CycleResult {
  StateVector state;
  CycleRecord record;
};

inline CycleResult run_cycle(const StateVector& state, const QecModel& m, const FeedbackPolicy& policy, Rng& rng) {
  if (state.space.factors() != m.space.factors()) throw InvalidDimension("run_cycle: state must live on qubit (x) cavity");
  TrajectoryState st{state.normalized().amplitudes, rng.uniform(), 0.0};
  const CycleRecord rec = run_cycle_trajectory(st, m, policy, rng);
  st.renormalize();
  return {StateVector(m.space, st.psi), rec};
}

inline CycleResult run_cycle(const StateVector& state, const QecModel& m, Rng& rng) {
  return run_cycle(state, m, m.policy, rng);
}

// ---------------------------------------------------------------------------
// Density-matrix cycle

/// Lindblad propagators of the idle segments, cached per duration.
class DensityCycle {
 public:
  explicit DensityCycle(const QecModel& m) : m_(m) {}

  struct Result {
    DensityMatrix state;
    std::map<std::string, double> branch_probabilities;
  };

  Result run(const DensityMatrix& rho) {
    if (rho.space.factors() != m_.space.factors()) throw InvalidDimension("run_cycle: state must live on qubit (x) cavity");
    if (m_.config.mirror_experiment) throw ConfigError("density cycle supports the ideal-subspace view only");
    struct Branch {
      std::string label;
      Matrix rho;
      std::vector<double> inject;
    };
    std::vector<Branch> branches{{"", rho.matrix, {}}};
    const auto& cfg = m_.config;
    for (int layer = 0; layer < cfg.layers; ++layer) {
      std::vector<Branch> next;
      for (auto& b : branches) {
        Matrix r = propagate(true, cfg.t_wait, b.rho);
        if (cfg.pass_excitation > 0.0) {
          r = (1.0 - cfg.pass_excitation) * r + cfg.pass_excitation * (m_.flip * r * m_.flip);
        }
        r = propagate(false, cfg.comb.duration, r);
        r = m_.kick * r * m_.kick.adjoint();
        const auto split = measure_ancilla_branches(DensityMatrix(m_.space, r), cfg.readout);
        for (Outcome o : {Outcome::G, Outcome::E}) {
          Branch c{b.label + (o == Outcome::G ? '0' : '1'), split[static_cast<std::size_t>(o)].matrix, b.inject};
          c.inject.push_back(m_.detection_injection(o));
          for (const auto& op : m_.post_measure_ops(layer, o, m_.policy)) {
            if (op.kind == QecOp::Kind::Idle) {
              c.rho = propagate(false, op.duration, c.rho);
            } else {
              const Matrix& u = op.kind == QecOp::Kind::Flip ? m_.flip : m_.recovery_unitary(op.role);
              c.rho = u * c.rho * u.adjoint();
            }
            c.inject.push_back(m_.injection_for(op));
          }
          next.push_back(std::move(c));
        }
      }
      branches = std::move(next);
    }
    Result res{DensityMatrix(m_.space, Matrix::Zero(rho.matrix.rows(), rho.matrix.cols())), {}};
    for (auto& b : branches) {
      b.inject.push_back(m_.thermal_per_cycle);
      for (double p : b.inject) {
        if (p <= 0.0) continue;
        Matrix dep = b.rho;
        for (const auto& x : m_.paulis) dep += x * b.rho * x.adjoint();
        b.rho = (1.0 - p) * b.rho + 0.25 * p * dep;
      }
      res.branch_probabilities[b.label] = b.rho.trace().real();
      res.state.matrix += b.rho;
    }
    return res;
  }

 private:
  Matrix propagate(bool wait, double duration, const Matrix& rho) {
    const std::pair<bool, double> key{wait, duration};
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      it = cache_.emplace(key, lindblad_propagator(wait ? m_.h_wait : m_.h_idle, m_.collapse, duration)).first;
    }
    return apply_superop(it->second, rho);
  }

  const QecModel& m_;
  std::map<std::pair<bool, double>, Matrix> cache_;
};

// ---------------------------------------------------------------------------
// Repetitive cycles

struct FidelityPoint {
  double time = 0.0;
  double f_chi = 0.0;
  double f_chi_err = 0.0;
};

struct RepetitiveOptions {
  int n_cycles = 10;
  int n_traj = 500;  ///< per cardinal input
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double truncation_limit = 1e-4;  ///< top-level population that aborts a trajectory
};

struct RepetitiveResult {
  std::vector<FidelityPoint> points;
  std::vector<ProcessMatrix> processes;
  std::vector<BranchRecord> first_cycle;
  std::size_t aborted = 0;
};

/// Monte-Carlo trajectories through repeated cycles with a tomography
/// snapshot after every cycle. Trajectory i uses Rng(seed).split(i).
inline RepetitiveResult run_repetitive(const QecModel& m, const RepetitiveOptions& opt, Warnings* sink = nullptr) {
  if (opt.n_cycles < 0 || opt.n_traj < 1) throw ConfigError("run_repetitive: need n_cycles >= 0 and n_traj >= 1");
  const int snaps = opt.n_cycles + 1;
  const int nf = m.n_fock;
  struct Traj {
    std::vector<Eigen::Vector3d> bloch;
    std::string first_outcomes;
    double first_fidelity = 1.0;
    bool aborted = false;
  };
  const auto cards = logical_cardinals();
  const std::size_t total = static_cast<std::size_t>(opt.n_traj) * 6;
  auto outs = run_parallel(total, opt.seed, opt.threads, [&](std::size_t i, Rng& rng) {
    const int input = static_cast<int>(i / static_cast<std::size_t>(opt.n_traj));
    Traj t;
    t.bloch.reserve(static_cast<std::size_t>(snaps));
    TrajectoryState st{cardinal_input(m, input), rng.uniform(), 0.0};
    if (m.config.mirror_experiment) {
      st.psi = m.encode * st.psi;
      if (m.inject) detail::apply_injections(st, m, {m.config.errors.encode_decode}, rng, nullptr);
    }
    auto snapshot = [&] {
      if (t.aborted) {
        t.bloch.push_back(Eigen::Vector3d::Zero());
        return;
      }
      TrajectoryState copy = st;
      if (m.config.mirror_experiment && m.inject) {
        detail::apply_injections(copy, m, {m.config.errors.encode_decode}, rng, nullptr);
      }
      t.bloch.push_back(bloch_vector(logical_density(copy.psi, m)));
    };
    snapshot();
    for (int c = 0; c < opt.n_cycles; ++c) {
      if (!t.aborted) {
        const CycleRecord rec = run_cycle_trajectory(st, m, m.policy, rng);
        const double top = (std::norm(st.psi(nf - 1)) + std::norm(st.psi(2 * nf - 1))) / st.psi.squaredNorm();
        if (top > opt.truncation_limit) t.aborted = true;
        if (c == 0) t.first_outcomes = rec.outcomes;
      }
      snapshot();
      if (c == 0) {
        const Vector& in = cards[static_cast<std::size_t>(input)];
        t.first_fidelity = (in.adjoint() * density_from_bloch(t.bloch.back()) * in)(0, 0).real();
      }
    }
    return t;
  });

  RepetitiveResult res;
  for (std::size_t i = 0; i < total; ++i) {
    if (outs[i].aborted) ++res.aborted;
    if (opt.n_cycles > 0) {
      res.first_cycle.push_back({outs[i].first_outcomes, static_cast<int>(i / static_cast<std::size_t>(opt.n_traj)),
                                 outs[i].first_fidelity});
    }
  }
  if (res.aborted > 0) {
    warn(sink, "run_repetitive: " + std::to_string(res.aborted) +
                   " trajectories aborted on Fock truncation overflow (counted as fully mixed afterwards)");
  }
  // component of the Bloch vector probed by each cardinal input
  const int probe[6] = {2, 2, 0, 0, 1, 1};
  const double n = opt.n_traj;
  for (int s = 0; s < snaps; ++s) {
    std::array<Matrix, 6> mean;
    double var = 0.0;
    for (int k = 0; k < 6; ++k) {
      Eigen::Vector3d sum = Eigen::Vector3d::Zero();
      double sq = 0.0;
      for (int j = 0; j < opt.n_traj; ++j) {
        const auto& b = outs[static_cast<std::size_t>(k * opt.n_traj + j)].bloch[static_cast<std::size_t>(s)];
        sum += b;
        sq += b(probe[k]) * b(probe[k]);
      }
      const Eigen::Vector3d mb = sum / n;
      mean[static_cast<std::size_t>(k)] = density_from_bloch(mb);
      const double m2 = mb(probe[k]) * mb(probe[k]);
      const double spread = sq / n - m2;
      if (opt.n_traj > 1 && spread > 1e-12) var += spread / (n - 1.0);
    }
    const ProcessMatrix pm = process_tomography(mean, sink);
    res.processes.push_back(pm);
    res.points.push_back({s * m.cycle_duration(), pm.fidelity(), std::sqrt(var) / 8.0});
  }
  return res;
}

// ---------------------------------------------------------------------------
// Decay fit

struct DecayFit {
  double amplitude = 0.0;
  double lifetime = 0.0;
  double offset = 0.25;
  double residual_norm = 0.0;
  double amplitude_err = 0.0;
  double lifetime_err = 0.0;
};

namespace detail {

struct DecayFunctor : Eigen::DenseFunctor<double> {
  const std::vector<double>& t;  // scaled times
  const std::vector<double>& f;
  const std::vector<double>& w;  // 1 / sigma
  DecayFunctor(const std::vector<double>& tt, const std::vector<double>& ff, const std::vector<double>& ww)
      : Eigen::DenseFunctor<double>(2, static_cast<int>(tt.size())), t(tt), f(ff), w(ww) {}

  int operator()(const InputType& x, ValueType& r) const {
    for (std::size_t i = 0; i < t.size(); ++i) {
      r(static_cast<Eigen::Index>(i)) = w[i] * (x(0) * std::exp(-x(1) * t[i]) + 0.25 - f[i]);
    }
    return 0;
  }
  int df(const InputType& x, JacobianType& j) const {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double e = std::exp(-x(1) * t[i]);
      j(static_cast<Eigen::Index>(i), 0) = w[i] * e;
      j(static_cast<Eigen::Index>(i), 1) = -w[i] * x(0) * t[i] * e;
    }
    return 0;
  }
};

}  // namespace detail

/// F = A exp(-t / tau) + 0.25 by Levenberg-Marquardt. When error bars are
/// given they weight the points (absolute sigma; zero bars take the smallest
/// positive one); otherwise the fit is unweighted with the residual variance
/// estimated from the data.
inline DecayFit fit_decay(const std::vector<FidelityPoint>& pts) {
  if (pts.size() < 3) throw ConfigError("fit_decay: need at least 3 points");
  std::vector<double> times;
  for (const auto& p : pts) times.push_back(p.time);
  std::sort(times.begin(), times.end());
  if (std::adjacent_find(times.begin(), times.end()) != times.end()) throw ConfigError("fit_decay: times must be distinct");
  const double tscale = std::max(std::abs(times.front()), std::abs(times.back()));
  if (!(tscale > 0.0)) throw ConfigError("fit_decay: times must span a nonzero range");
  double min_err = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    if (p.f_chi_err < 0.0 || !std::isfinite(p.f_chi_err)) throw ConfigError("fit_decay: error bars must be finite and >= 0");
    if (p.f_chi_err > 0.0) min_err = std::min(min_err, p.f_chi_err);
  }
  const bool weighted = std::isfinite(min_err);
  std::vector<double> t, f, w;
  for (const auto& p : pts) {
    t.push_back(p.time / tscale);
    f.push_back(p.f_chi);
    w.push_back(weighted ? 1.0 / std::max(p.f_chi_err, min_err) : 1.0);
  }
  // log-linear start
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double y = f[i] - 0.25;
    if (y <= 1e-3) continue;
    const double ly = std::log(y);
    sx += t[i];
    sy += ly;
    sxx += t[i] * t[i];
    sxy += t[i] * ly;
    ++used;
  }
  double rss0 = 0.0;
  for (double v : f) rss0 += (v - 0.25) * (v - 0.25);
  const std::string report = "residual norm about 0.25 = " + std::to_string(std::sqrt(rss0));
  if (used < 2) throw FitError("fit_decay: degenerate data (no decay above the 0.25 floor); " + report);
  const double den = used * sxx - sx * sx;
  double slope = std::abs(den) > 1e-300 ? (used * sxy - sx * sy) / den : -1.0;
  const double icpt = (sy - slope * sx) / used;
  Eigen::VectorXd x(2);
  x << std::exp(icpt), std::max(1e-3, -slope);
  detail::DecayFunctor fn(t, f, w);
  Eigen::LevenbergMarquardt<detail::DecayFunctor> lm(fn);
  lm.setXtol(1e-14);
  lm.setFtol(1e-14);
  lm.setGtol(0.0);
  lm.setMaxfev(2000);
  lm.minimize(x);
  Eigen::VectorXd r(static_cast<Eigen::Index>(t.size()));
  fn(x, r);
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(t.size()), 2);
  fn.df(x, jac);
  DecayFit out;
  out.amplitude = x(0);
  out.lifetime = tscale / x(1);
  out.residual_norm = r.norm();
  const Eigen::Matrix2d jtj = jac.transpose() * jac;
  const Eigen::Vector2d scale = jtj.diagonal().cwiseSqrt().cwiseMax(1e-300).cwiseInverse();
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(scale.asDiagonal() * jtj * scale.asDiagonal());
  const double cond = svd.singularValues()(1) / std::max(svd.singularValues()(0), 1e-300);
  if (!(x.allFinite()) || !(x(0) > 1e-4) || !(x(1) > 0.0) || cond < 1e-14) {
    throw FitError("fit_decay: degenerate fit (A = " + std::to_string(x(0)) + ", tau = " + std::to_string(out.lifetime) +
                   "); " + report);
  }
  Eigen::Matrix2d cov = jtj.inverse();
  if (!weighted) {
    const double dof = std::max<double>(1.0, static_cast<double>(t.size()) - 2.0);
    cov *= r.squaredNorm() / dof;
  }
  out.amplitude_err = std::sqrt(std::max(0.0, cov(0, 0)));
  out.lifetime_err = tscale * std::sqrt(std::max(0.0, cov(1, 1))) / (x(1) * x(1));
  return out;
}

// ---------------------------------------------------------------------------
// Unprotected baselines

enum class Baseline { Fock01, Transmon, UncorrectedBinomial };

inline Baseline parse_baseline(const std::string& s) {
  if (s == "fock01") return Baseline::Fock01;
  if (s == "transmon") return Baseline::Transmon;
  if (s == "uncorrected-binomial" || s == "binomial") return Baseline::UncorrectedBinomial;
  throw ConfigError("unknown baseline '" + s + "' (expected fock01|transmon|uncorrected-binomial)");
}

inline std::string to_string(Baseline b) {
  switch (b) {
    case Baseline::Fock01: return "fock01";
    case Baseline::Transmon: return "transmon";
    case Baseline::UncorrectedBinomial: return "uncorrected-binomial";
  }
  return "?";
}

/// Idle Lindblad evolution of an unprotected encoding with process
/// tomography at each time. Cavity encodings are read in the frame of the
/// deterministic cavity Hamiltonian (decoding calibrated to the idle time).
inline std::vector<FidelityPoint> baseline_lifetimes(const SystemParams& p, Baseline which, const std::vector<double>& times,
                                                     int n_fock = 12) {
  p.validate();
  Matrix h;
  std::vector<Matrix> collapse;
  Vector v0, v1;
  if (which == Baseline::Transmon) {
    h = Matrix::Zero(2, 2);
    const double g = p.gamma_q();
    if (std::isfinite(g) && g > 0.0) {
      collapse.push_back(std::sqrt(g * (1.0 + p.nth_q)) * qubit::lower());
      if (p.nth_q > 0.0) collapse.push_back(std::sqrt(g * p.nth_q) * qubit::raise());
    }
    if (std::isfinite(p.tphi_q)) collapse.push_back(std::sqrt(2.0 / p.tphi_q) * qubit::proj_e());
    v0 = ground_qubit();
    v1 = excited_qubit();
  } else {
    h = cavity_kerr_hamiltonian(p, n_fock);
    collapse = cavity_collapse_matrices(p, n_fock, true);
    const CodeSpec code = which == Baseline::Fock01 ? fock01_code(n_fock) : lowest_order_binomial(n_fock);
    v0 = code.code0;
    v1 = code.code1;
  }
  const Matrix l = liouvillian(h, collapse);
  const auto cards = logical_cardinals();
  std::vector<FidelityPoint> out;
  for (double t : times) {
    if (t < 0.0) throw ConfigError("baseline_lifetimes: times must be >= 0");
    const Matrix s = expm(t * l);
    const Matrix frame = unitary_propagator(-h, t);
    std::array<Matrix, 6> outs;
    for (std::size_t k = 0; k < 6; ++k) {
      const Vector psi = cards[k](0) * v0 + cards[k](1) * v1;
      Matrix rho = apply_superop(s, psi * psi.adjoint());
      rho = frame * rho * frame.adjoint();
      Matrix lg(2, 2);
      const std::array<const Vector*, 2> b{&v0, &v1};
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) lg(i, j) = b[static_cast<std::size_t>(i)]->dot(rho * *b[static_cast<std::size_t>(j)]);
      }
      outs[k] = lg;
    }
    out.push_back({t, process_tomography(outs).fidelity(), 0.0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Waiting-time sweep

struct SweepOptions {
  int n_traj = 500;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  double span = 1.2e-3;  ///< simulated time per grid point
  int min_cycles = 4;
  int max_cycles = 600;
};

struct SweepRow {
  double t_wait = 0.0;
  int n_cycles = 0;
  DecayFit fit;
};

struct WaitSweep {
  std::vector<SweepRow> rows;
  std::size_t best = 0;
};

/// Every grid point reuses the same trajectory seeds (common random numbers),
/// so neighbouring lifetimes differ mostly by the waiting time.
inline WaitSweep sweep_waiting_time(const SystemParams& p, const QecCycleConfig& tmpl, const std::vector<double>& grid,
                                    const SweepOptions& opt, Warnings* sink = nullptr,
                                    const CodeSpec& code = lowest_order_binomial(12)) {
  if (grid.empty()) throw ConfigError("sweep_waiting_time: grid must be non-empty");
  WaitSweep out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    QecCycleConfig cfg = tmpl;
    cfg.t_wait = grid[i];
    const QecModel m = prepare_qec_model(p, cfg, code);
    const int cycles = std::clamp(static_cast<int>(std::ceil(opt.span / m.cycle_duration())), opt.min_cycles, opt.max_cycles);
    RepetitiveOptions ro;
    ro.n_cycles = cycles;
    ro.n_traj = opt.n_traj;
    ro.seed = opt.seed;
    ro.threads = opt.threads;
    const auto run = run_repetitive(m, ro, sink);
    out.rows.push_back({grid[i], cycles, fit_decay(run.points)});
    if (out.rows.back().fit.lifetime > out.rows[out.best].fit.lifetime) out.best = i;
  }
  return out;
}

}  // namespace bqec
