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

// Gradient ascent pulse engineering for simultaneous state transfers with
// piecewise-constant qubit and cavity drives.
//
// Fidelity: F = |sum_i <target_i| U |initial_i>|^2 / N^2. Gradients use the
// exact Frechet derivative of each segment exponential in the eigenbasis of
// the segment Hamiltonian. The optimizer is a projected limited-memory BFGS
// ascent in amplitudes normalized by the per-channel bounds.

#pragma once

#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bqec/binomial_code.hpp"
#include "bqec/core.hpp"
#include "bqec/dynamics.hpp"
#include "bqec/io.hpp"
#include "bqec/system_model.hpp"

namespace bqec {

struct Transfer {
  StateVector initial;
  StateVector target;
};

struct ControlProblem {
  LinearOperator h0;
  std::vector<Matrix> controls;
  std::vector<std::string> channels;
  std::vector<Transfer> transfers;
  int n_segments = 0;
  double dt = 0.0;

  int dim() const { return static_cast<int>(h0.matrix.rows()); }

  void validate() const {
    if (n_segments < 1) throw ConfigError("grape: n_segments must be >= 1");
    if (!(dt > 0.0)) throw ConfigError("grape: dt must be > 0");
    if (controls.size() != channels.size()) throw ConfigError("grape: one channel name per control");
    if (transfers.empty()) throw ConfigError("grape: no transfers");
    for (const auto& c : controls) {
      if (c.rows() != dim() || c.cols() != dim()) throw InvalidDimension("grape: control dimension mismatch");
    }
    for (const auto& t : transfers) {
      if (!(t.initial.space == h0.space) || !(t.target.space == h0.space)) {
        throw InvalidDimension("grape: transfer space mismatch");
      }
      if (std::abs(t.target.norm() - 1.0) > 1e-9 || std::abs(t.initial.norm() - 1.0) > 1e-9) {
        throw ConfigError("grape: transfer states must be unit norm");
      }
    }
    for (std::size_t i = 0; i < transfers.size(); ++i) {
      for (std::size_t j = i + 1; j < transfers.size(); ++j) {
        if (std::abs(transfers[i].initial.amplitudes.dot(transfers[j].initial.amplitudes)) > 1e-9) {
          throw ConfigError("grape: initial states must be mutually orthogonal");
        }
      }
    }
  }

  void check_pulse(const PiecewisePulse& p) const {
    p.validate();
    if (p.n_segments() != n_segments) throw InvalidDimension("grape: pulse length does not match n_segments");
    if (p.n_channels() != static_cast<int>(controls.size())) throw InvalidDimension("grape: pulse channel mismatch");
    if (std::abs(p.dt - dt) > 1e-15 * dt) throw InvalidDimension("grape: pulse dt does not match problem");
  }

  PiecewisePulse zero_pulse() const {
    PiecewisePulse p;
    p.channels = channels;
    p.dt = dt;
    p.samples.assign(channels.size(), std::vector<double>(static_cast<std::size_t>(n_segments), 0.0));
    return p;
  }
};

/// Standard qubit-cavity problem with the four quadrature controls.
inline ControlProblem make_problem(const LinearOperator& drift, std::vector<Transfer> transfers, double duration,
                                   double dt) {
  ControlProblem p;
  p.h0 = drift;
  p.controls = standard_controls(drift.space.n_fock());
  p.channels = standard_channel_names();
  p.transfers = std::move(transfers);
  p.dt = dt;
  p.n_segments = static_cast<int>(std::lround(duration / dt));
  p.validate();
  return p;
}

struct OptimizerConfig {
  int max_iter = 2000;
  double grad_tol = 1e-10;
  double target_fidelity = 0.99999;
  double qubit_bound = kTwoPi * 10e6;   ///< rad/s
  double cavity_bound = kTwoPi * 2e6;   ///< rad/s
  double amplitude_penalty = 0.0;       ///< weight on (|x| - 1)^2 above the bound
  bool clip_to_bound = true;
  double slope_penalty = 0.0;           ///< weight on squared first differences
  bool boundary_zero = false;
  std::uint64_t seed = 1;
  double init_scale = 0.01;             ///< initial amplitude as a fraction of the bound
  int memory = 10;

  void validate() const {
    if (max_iter < 0) throw ConfigError("grape: max_iter must be >= 0");
    if (amplitude_penalty < 0.0 || slope_penalty < 0.0) throw ConfigError("grape: penalty weights must be >= 0");
    if (!(qubit_bound > 0.0) || !(cavity_bound > 0.0)) throw ConfigError("grape: bounds must be > 0");
    if (memory < 1) throw ConfigError("grape: memory must be >= 1");
  }

  /// Bound for a channel of standard_channel_names() (qubit first, cavity second).
  double bound(const std::string& channel) const { return channel.rfind("qubit", 0) == 0 ? qubit_bound : cavity_bound; }
};

// ---------------------------------------------------------------------------
// Fidelity and gradient

namespace detail {

inline Matrix stack_initial(const ControlProblem& p) {
  Matrix m(p.dim(), static_cast<Eigen::Index>(p.transfers.size()));
  for (std::size_t i = 0; i < p.transfers.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = p.transfers[i].initial.amplitudes;
  return m;
}

inline Matrix stack_target(const ControlProblem& p) {
  Matrix m(p.dim(), static_cast<Eigen::Index>(p.transfers.size()));
  for (std::size_t i = 0; i < p.transfers.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = p.transfers[i].target.amplitudes;
  return m;
}

inline double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

}  // namespace detail

/// Coherent-sum overlap sum_i <target_i| U |initial_i>.
inline cplx transfer_overlap(const PiecewisePulse& pulse, const ControlProblem& prob) {
  prob.check_pulse(pulse);
  Matrix x = detail::stack_initial(prob);
  for (int k = 0; k < prob.n_segments; ++k) {
    x = unitary_propagator(segment_hamiltonian(prob.h0.matrix, prob.controls, pulse, k), prob.dt) * x;
  }
  return (detail::stack_target(prob).adjoint() * x).trace();
}

inline double transfer_fidelity(const PiecewisePulse& pulse, const ControlProblem& prob) {
  const double n = static_cast<double>(prob.transfers.size());
  return std::norm(transfer_overlap(pulse, prob)) / (n * n);
}

struct FidelityGradient {
  double fidelity = 0.0;
  cplx overlap;
  std::vector<std::vector<double>> grad;  ///< dF / d sample, [channel][segment], per rad/s
  std::vector<std::vector<cplx>> overlap_grad;  ///< d overlap / d sample
};

inline FidelityGradient fidelity_gradient(const PiecewisePulse& pulse, const ControlProblem& prob) {
  prob.check_pulse(pulse);
  const int ns = prob.n_segments, nc = static_cast<int>(prob.controls.size());
  const double dt = prob.dt;
  std::vector<Matrix> vecs(static_cast<std::size_t>(ns));
  std::vector<Eigen::VectorXd> vals(static_cast<std::size_t>(ns));
  std::vector<Matrix> fwd(static_cast<std::size_t>(ns) + 1);
  fwd[0] = detail::stack_initial(prob);
  for (int k = 0; k < ns; ++k) {
    const Matrix h = segment_hamiltonian(prob.h0.matrix, prob.controls, pulse, k);
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
    if (es.info() != Eigen::Success) throw NumericError("grape: eigendecomposition failed");
    vecs[static_cast<std::size_t>(k)] = es.eigenvectors();
    vals[static_cast<std::size_t>(k)] = es.eigenvalues();
    const Eigen::VectorXcd ph = (-kI * dt * es.eigenvalues().cast<cplx>()).array().exp();
    const Matrix& v = vecs[static_cast<std::size_t>(k)];
    fwd[static_cast<std::size_t>(k) + 1] = v * ph.asDiagonal() * (v.adjoint() * fwd[static_cast<std::size_t>(k)]);
  }
  const Matrix target = detail::stack_target(prob);
  FidelityGradient out;
  out.overlap = (target.adjoint() * fwd[static_cast<std::size_t>(ns)]).trace();
  const double n = static_cast<double>(prob.transfers.size());
  out.fidelity = std::norm(out.overlap) / (n * n);
  out.grad.assign(static_cast<std::size_t>(nc), std::vector<double>(static_cast<std::size_t>(ns), 0.0));
  out.overlap_grad.assign(static_cast<std::size_t>(nc), std::vector<cplx>(static_cast<std::size_t>(ns), 0.0));
  Matrix back = target;  // (U_N ... U_{k+1})^dag target
  const int d = prob.dim();
  Matrix g(d, d), m(d, d);
  for (int k = ns - 1; k >= 0; --k) {
    const Matrix& v = vecs[static_cast<std::size_t>(k)];
    const Eigen::VectorXd& lam = vals[static_cast<std::size_t>(k)];
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        g(a, b) = std::exp(-kI * (0.5 * (lam(a) + lam(b)) * dt)) * (-kI * dt) * detail::sinc(0.5 * (lam(a) - lam(b)) * dt);
      }
    }
    const Matrix p = (v.adjoint() * fwd[static_cast<std::size_t>(k)]) * (back.adjoint() * v);
    for (int c = 0; c < nc; ++c) {
      m.noalias() = v.adjoint() * prob.controls[static_cast<std::size_t>(c)] * v;
      const cplx dg = (g.cwiseProduct(m).cwiseProduct(p.transpose())).sum();
      out.overlap_grad[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)] = dg;
      out.grad[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)] = 2.0 * std::real(std::conj(out.overlap) * dg) / (n * n);
    }
    const Eigen::VectorXcd ph = (kI * dt * lam.cast<cplx>()).array().exp();
    back = v * ph.asDiagonal() * (v.adjoint() * back);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer

struct TracePoint {
  int iteration = 0;
  double fidelity = 0.0;
  double objective = 0.0;
};

struct OptimizeResult {
  PiecewisePulse pulse;
  double fidelity = 0.0;
  std::vector<TracePoint> trace;
  bool converged = false;       ///< stationary point or target reached
  bool target_reached = false;  ///< fidelity >= target_fidelity
  std::string message;
};

namespace detail {

struct GrapeObjective {
  const ControlProblem& prob;
  const OptimizerConfig& cfg;
  std::vector<double> scale;  ///< per channel bound

  int n_seg() const { return prob.n_segments; }

  PiecewisePulse to_pulse(const Eigen::VectorXd& x) const {
    PiecewisePulse p = prob.zero_pulse();
    for (std::size_t c = 0; c < scale.size(); ++c) {
      for (int k = 0; k < n_seg(); ++k) p.samples[c][static_cast<std::size_t>(k)] = scale[c] * x(static_cast<Eigen::Index>(c) * n_seg() + k);
    }
    return p;
  }

  /// Returns objective, fills fidelity and gradient in normalized units.
  double eval(const Eigen::VectorXd& x, double& fid, Eigen::VectorXd& grad) const {
    const auto fg = fidelity_gradient(to_pulse(x), prob);
    fid = fg.fidelity;
    grad.resize(x.size());
    double obj = fid;
    for (std::size_t c = 0; c < scale.size(); ++c) {
      for (int k = 0; k < n_seg(); ++k) {
        const Eigen::Index i = static_cast<Eigen::Index>(c) * n_seg() + k;
        grad(i) = fg.grad[c][static_cast<std::size_t>(k)] * scale[c];
        const double over = std::abs(x(i)) - 1.0;
        if (cfg.amplitude_penalty > 0.0 && over > 0.0) {
          obj -= cfg.amplitude_penalty * over * over;
          grad(i) -= cfg.amplitude_penalty * 2.0 * over * (x(i) > 0.0 ? 1.0 : -1.0);
        }
        if (cfg.slope_penalty > 0.0 && k + 1 < n_seg()) {
          const double dx = x(i + 1) - x(i);
          obj -= cfg.slope_penalty * dx * dx;
          grad(i) += cfg.slope_penalty * 2.0 * dx;
          grad(i + 1) -= cfg.slope_penalty * 2.0 * dx;
        }
      }
    }
    return obj;
  }
};

}  // namespace detail

inline OptimizeResult optimize(const ControlProblem& prob, const OptimizerConfig& cfg,
                               const PiecewisePulse* initial = nullptr) {
  prob.validate();
  cfg.validate();
  const int ns = prob.n_segments, nc = static_cast<int>(prob.controls.size());
  detail::GrapeObjective obj{prob, cfg, {}};
  for (const auto& ch : prob.channels) obj.scale.push_back(cfg.bound(ch));
  const Eigen::Index nv = static_cast<Eigen::Index>(nc) * ns;

  Eigen::VectorXd x(nv);
  if (initial != nullptr) {
    prob.check_pulse(*initial);
    for (int c = 0; c < nc; ++c)
      for (int k = 0; k < ns; ++k) x(c * ns + k) = initial->samples[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)] / obj.scale[static_cast<std::size_t>(c)];
  } else {
    Rng rng(cfg.seed);
    for (Eigen::Index i = 0; i < nv; ++i) x(i) = cfg.init_scale * rng.normal();
  }
  Eigen::Array<bool, Eigen::Dynamic, 1> fixed = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(nv, false);
  if (cfg.boundary_zero) {
    for (int c = 0; c < nc; ++c) {
      fixed(c * ns) = true;
      fixed(c * ns + ns - 1) = true;
    }
  }
  auto project = [&](Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < nv; ++i) {
      if (fixed(i)) v(i) = 0.0;
      else if (cfg.clip_to_bound) v(i) = std::clamp(v(i), -1.0, 1.0);
    }
  };
  // free-direction gradient: zero on fixed entries and on active bounds pushing outward
  auto projected = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& g) {
    Eigen::VectorXd pg = g;
    for (Eigen::Index i = 0; i < nv; ++i) {
      if (fixed(i)) pg(i) = 0.0;
      else if (cfg.clip_to_bound && ((v(i) >= 1.0 && g(i) > 0.0) || (v(i) <= -1.0 && g(i) < 0.0))) pg(i) = 0.0;
    }
    return pg;
  };
  project(x);

  OptimizeResult res;
  double fid = 0.0;
  Eigen::VectorXd grad;
  double f = obj.eval(x, fid, grad);
  res.trace.push_back({0, fid, f});
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> mem;  // (s, y) for the minimization of -objective
  res.message = "max_iter reached";
  for (int it = 1; it <= cfg.max_iter; ++it) {
    if (fid >= cfg.target_fidelity) {
      res.converged = true;
      res.message = "target fidelity reached";
      break;
    }
    const Eigen::VectorXd pg = projected(x, grad);
    if (pg.lpNorm<Eigen::Infinity>() < cfg.grad_tol) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      break;
    }
    // two-loop recursion on q = -pg (descent for -objective)
    Eigen::VectorXd q = -pg;
    std::vector<double> alphas(mem.size());
    for (std::size_t j = mem.size(); j-- > 0;) {
      const auto& [s, y] = mem[j];
      alphas[j] = s.dot(q) / y.dot(s);
      q -= alphas[j] * y;
    }
    if (!mem.empty()) {
      const auto& [s, y] = mem.back();
      q *= s.dot(y) / y.dot(y);
    } else {
      q *= 0.1 / std::max(pg.lpNorm<Eigen::Infinity>(), 1e-300);
    }
    for (std::size_t j = 0; j < mem.size(); ++j) {
      const auto& [s, y] = mem[j];
      const double beta = y.dot(q) / y.dot(s);
      q += (alphas[j] - beta) * s;
    }
    Eigen::VectorXd dir = -q;  // ascent direction for the objective
    for (Eigen::Index i = 0; i < nv; ++i) {
      if (pg(i) == 0.0 && grad(i) != 0.0) dir(i) = 0.0;
    }
    if (dir.dot(pg) <= 0.0) {
      mem.clear();
      dir = pg * (0.1 / std::max(pg.lpNorm<Eigen::Infinity>(), 1e-300));
    }
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new, g_new;
    double f_new = 0.0, fid_new = 0.0;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = x + step * dir;
      project(x_new);
      const double gain = grad.dot(x_new - x);
      f_new = obj.eval(x_new, fid_new, g_new);
      if (f_new >= f + 1e-4 * gain && f_new > f && fid_new >= fid) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = fid >= cfg.target_fidelity;
      res.message = "line search stalled";
      break;
    }
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = -(g_new - grad);
    if (s.dot(y) > 1e-14 * s.squaredNorm()) {
      mem.emplace_back(s, y);
      if (static_cast<int>(mem.size()) > cfg.memory) mem.pop_front();
    }
    x = x_new;
    grad = g_new;
    f = f_new;
    fid = fid_new;
    res.trace.push_back({it, fid, f});
  }
  if (!res.converged && fid >= cfg.target_fidelity) {
    res.converged = true;
    res.message = "target fidelity reached";
  }
  res.pulse = obj.to_pulse(x);
  res.fidelity = fid;
  res.target_reached = fid >= cfg.target_fidelity;
  return res;
}

// ---------------------------------------------------------------------------
// Named problems

enum class GrapeTarget { Encode, Decode, U0, U1, U2, U3 };

inline GrapeTarget parse_grape_target(const std::string& s) {
  if (s == "encode") return GrapeTarget::Encode;
  if (s == "decode") return GrapeTarget::Decode;
  if (s == "u0") return GrapeTarget::U0;
  if (s == "u1") return GrapeTarget::U1;
  if (s == "u2") return GrapeTarget::U2;
  if (s == "u3") return GrapeTarget::U3;
  throw ConfigError("unknown grape target '" + s + "' (expected encode|decode|u0|u1|u2|u3)");
}

/// Transfer sets on qubit (x) cavity with the ancilla ending in |g>:
/// encode |g,0> -> |g,0_L>, |e,0> -> |g,1_L>; decode the reverse;
/// u0 no-jump recovery after one wait; u1 and u3 jump recovery; u2 no-jump
/// recovery after two waits.
inline std::vector<Transfer> grape_transfers(GrapeTarget target, const CodeSpec& code, double kappa, double t_wait) {
  const int nf = code.n_fock();
  const Vector g = ground_qubit(), e = excited_qubit();
  auto on_g = [&](const Vector& cav) { return product_state(g, cav); };
  std::vector<Transfer> out;
  switch (target) {
    case GrapeTarget::Encode:
      out.push_back({product_state(g, fock_vector(nf, 0)), on_g(code.code0)});
      out.push_back({product_state(e, fock_vector(nf, 0)), on_g(code.code1)});
      break;
    case GrapeTarget::Decode:
      out.push_back({on_g(code.code0), product_state(g, fock_vector(nf, 0))});
      out.push_back({on_g(code.code1), product_state(e, fock_vector(nf, 0))});
      break;
    case GrapeTarget::U0:
    case GrapeTarget::U2: {
      const CodeSpec d = no_jump_deformation(code, kappa, target == GrapeTarget::U0 ? t_wait : 2.0 * t_wait);
      out.push_back({on_g(d.code0), on_g(code.code0)});
      out.push_back({on_g(d.code1), on_g(code.code1)});
      break;
    }
    case GrapeTarget::U1:
    case GrapeTarget::U3:
      out.push_back({on_g(code.err0), on_g(code.code0)});
      out.push_back({on_g(code.err1), on_g(code.code1)});
      break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pulse files

/// CSV with columns time, channel samples; header comments carry dt and the
/// drift hash. Samples use 17 significant digits so reloading is exact.
inline void save_pulse(const std::filesystem::path& path, const PiecewisePulse& pulse, const std::string& drift_hash) {
  pulse.validate();
  std::vector<std::string> header{"time"};
  header.insert(header.end(), pulse.channels.begin(), pulse.channels.end());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "# dt=" << format_number(pulse.dt, kExactDigits) << '\n';
  out << "# drift_hash=" << drift_hash << '\n';
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (int k = 0; k < pulse.n_segments(); ++k) {
    out << format_number(k * pulse.dt, kExactDigits);
    for (const auto& ch : pulse.samples) out << ',' << format_number(ch[static_cast<std::size_t>(k)], kExactDigits);
    out << '\n';
  }
}

struct LoadedPulse {
  PiecewisePulse pulse;
  std::string drift_hash;
};

/// Reads a pulse file; when `expected_hash` is non-empty it must match.
inline LoadedPulse load_pulse(const std::filesystem::path& path, const std::string& expected_hash = "") {
  std::ifstream in(path);
  if (!in) throw ConfigError("pulse file not found: " + path.string());
  LoadedPulse out;
  std::string line;
  bool have_dt = false, have_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# dt=", 0) == 0) {
      out.pulse.dt = std::stod(line.substr(5));
      have_dt = true;
      continue;
    }
    if (line.rfind("# drift_hash=", 0) == 0) {
      out.drift_hash = line.substr(13);
      continue;
    }
    if (line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!have_header) {
      if (cells.size() < 2 || cells[0] != "time") throw ConfigError("pulse file: bad header in " + path.string());
      out.pulse.channels.assign(cells.begin() + 1, cells.end());
      out.pulse.samples.assign(out.pulse.channels.size(), {});
      have_header = true;
      continue;
    }
    if (cells.size() != out.pulse.channels.size() + 1) throw ConfigError("pulse file: ragged row in " + path.string());
    for (std::size_t c = 0; c < out.pulse.channels.size(); ++c) out.pulse.samples[c].push_back(std::stod(cells[c + 1]));
  }
  if (!have_dt || !have_header) throw ConfigError("pulse file: missing dt or header in " + path.string());
  out.pulse.validate();
  if (!expected_hash.empty() && out.drift_hash != expected_hash) {
    throw ConfigError("pulse file " + path.string() + " was optimized for a different drift Hamiltonian");
  }
  return out;
}

}  // namespace bqec
