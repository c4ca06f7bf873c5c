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

// Frequency-comb parity mapping: envelope synthesis, analytic rotation
// angles, amplitude-scaling calibration, timing optimization and the
// Ramsey-interferometer baseline.
//
// The comb is simulated in the frame rotating at the ancilla transition
// frequency for two cavity photons. Every drive here commutes with the
// photon number, so decoherence-free runs split into independent 2x2
// blocks, one per Fock level.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "bqec/core.hpp"
#include "bqec/dynamics.hpp"
#include "bqec/system_model.hpp"

namespace bqec {

struct CombSpec {
  int m_pairs = 11;
  double chi = kTwoPi * 2.59e6;
  double omega = kTwoPi * 2.59e6 / 4.0;
  double duration = 1.0 / 2.59e6;
  double delay = 0.0;
  double edge = 0.0;
  std::vector<double> scalings;  ///< per component pair; empty means all 1

  /// Omega = chi/4, T = 2 pi / chi, no delay, no edges.
  static CombSpec ideal(double chi, int m_pairs = 11) {
    CombSpec s;
    s.m_pairs = m_pairs;
    s.chi = chi;
    s.omega = chi / 4.0;
    s.duration = kTwoPi / chi;
    return s;
  }

  /// Delayed comb with 5 ns edges (timing from optimize_pulse_timing).
  static CombSpec device(double chi, double duration = 255e-9, double delay = 47e-9) {
    CombSpec s = ideal(chi);
    s.duration = duration;
    s.delay = delay;
    s.edge = 5e-9;
    return s;
  }

  double scaling(int n) const {
    return scalings.empty() ? 1.0 : scalings.at(static_cast<std::size_t>(n - 1));
  }

  void validate() const {
    if (m_pairs < 1) throw ConfigError("comb: m_pairs must be >= 1");
    if (!(omega > 0.0)) throw ConfigError("comb: omega must be > 0");
    if (!(chi > 0.0)) throw ConfigError("comb: chi must be > 0");
    if (!(duration > 2.0 * edge) || edge < 0.0) throw ConfigError("comb: duration must exceed twice the edge");
    if (!scalings.empty() && static_cast<int>(scalings.size()) != m_pairs) {
      throw ConfigError("comb: scalings must have m_pairs entries");
    }
  }
};

/// Raised-cosine rise and fall of width `edge`.
inline double edge_window(double t, double duration, double edge) {
  if (edge <= 0.0) return 1.0;
  if (t < edge) return 0.5 * (1.0 - std::cos(kPi * t / edge));
  if (t > duration - edge) return 0.5 * (1.0 - std::cos(kPi * (duration - t) / edge));
  return 1.0;
}

/// Real comb amplitude (rad/s) multiplying sigma_x.
inline double comb_envelope(const CombSpec& spec, double t) {
  if (t < -1e-15 || t > spec.duration * (1.0 + 1e-12) + 1e-15) throw std::out_of_range("comb_envelope: t outside pulse");
  const double x = spec.chi * (t - spec.delay);
  // cos((2n+1)x) by the Chebyshev recurrence in steps of 2x
  const double c2 = 2.0 * std::cos(2.0 * x);
  double prev = std::cos(x), cur = std::cos(3.0 * x);
  double s = spec.scaling(1) * prev;
  for (int n = 2; n <= spec.m_pairs; ++n) {
    s += spec.scaling(n) * cur;
    const double next = c2 * cur - prev;
    prev = cur;
    cur = next;
  }
  return 2.0 * spec.omega * s * edge_window(t, spec.duration, spec.edge);
}

/// Rotation angle of the even (two-photon) branch for a constant-amplitude comb.
inline double analytic_xi(const CombSpec& spec, double t) {
  double s = 0.0;
  for (int n = 0; n < spec.m_pairs; ++n) {
    const double w = (2.0 * n + 1.0) * spec.chi;
    s += spec.omega / w * std::sin(w * t);
  }
  return 2.0 * s;
}

/// Rotation angle of the odd branch (one resonant component).
inline double analytic_mu(const CombSpec& spec, double t) {
  double s = spec.omega * t;
  for (int n = 1; n < spec.m_pairs; ++n) {
    const double w = 2.0 * n * spec.chi;
    s += 2.0 * spec.omega / w * std::sin(w * t);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Block propagation

/// Excited-minus-ground energy of each Fock block in the two-photon frame.
inline Eigen::VectorXd comb_frame_detunings(const SystemParams& p, int n_fock) {
  const Eigen::VectorXd g = dispersive_levels(p, n_fock, false);
  const Eigen::VectorXd e = dispersive_levels(p, n_fock, true);
  const double ref = (n_fock > 2) ? e(2) - g(2) : -2.0 * p.chi_qc;
  Eigen::VectorXd d(n_fock);
  for (int n = 0; n < n_fock; ++n) d(n) = e(n) - g(n) - ref;
  return d;
}

namespace detail {

/// exp(-i tau [[0, x], [x, d]]) applied to (cg, ce).
inline void rotate_block(cplx& cg, cplx& ce, double d, double x, double tau) {
  const double half = 0.5 * d;
  const double r = std::sqrt(half * half + x * x);
  const cplx ph = std::exp(-kI * half * tau);
  double c = std::cos(r * tau), s = 0.0;
  double sx = 0.0, sz = 0.0;
  if (r > 0.0) {
    s = std::sin(r * tau);
    sx = s * x / r;
    sz = s * half / r;
  }
  // exp(-i tau (half I + half' sz' + x sx)) with sz' = diag(-1, 1)
  const cplx u00 = ph * cplx(c, sz);
  const cplx u11 = ph * cplx(c, -sz);
  const cplx u01 = ph * cplx(0.0, -sx);
  const cplx ng = u00 * cg + u01 * ce;
  const cplx ne = u01 * cg + u11 * ce;
  cg = ng;
  ce = ne;
}

}  // namespace detail

/// Envelope samples shared by every Fock block of one pulse.
struct BlockSchedule {
  double step = 0.0;
  std::vector<double> first, second;  ///< doubled Magnus-weighted amplitudes per step
  std::vector<double> knots, mids;    ///< env(k h) and env((k + 1/2) h)
};

inline BlockSchedule block_schedule(const std::function<double(double)>& env, double duration, double dt,
                                    bool with_rk4_samples = false) {
  const int steps = std::max(1, static_cast<int>(std::ceil(duration / dt - 1e-9)));
  BlockSchedule s;
  s.step = duration / steps;
  const double h = s.step;
  const double s3 = std::sqrt(3.0);
  const double c1 = 0.5 - s3 / 6.0, c2 = 0.5 + s3 / 6.0;
  const double a1 = (3.0 - 2.0 * s3) / 12.0, a2 = (3.0 + 2.0 * s3) / 12.0;
  s.first.resize(static_cast<std::size_t>(steps));
  s.second.resize(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    const double x1 = env(t + c1 * h), x2 = env(t + c2 * h);
    s.first[static_cast<std::size_t>(k)] = 2.0 * (a2 * x1 + a1 * x2);
    s.second[static_cast<std::size_t>(k)] = 2.0 * (a1 * x1 + a2 * x2);
  }
  if (with_rk4_samples) {
    for (int k = 0; k <= steps; ++k) s.knots.push_back(env(std::min(k * h, duration)));
    for (int k = 0; k < steps; ++k) s.mids.push_back(env((k + 0.5) * h));
  }
  return s;
}

/// 2x2 propagator [[gg, ge], [eg, ee]] for one Fock block under
/// d |e><e| + env(t) sigma_x, integrated with fourth-order Magnus steps.
struct BlockPropagator {
  cplx gg, ge, eg, ee;
};

inline BlockPropagator propagate_block(double detuning, const BlockSchedule& s) {
  cplx g0 = 1.0, e0 = 0.0, g1 = 0.0, e1 = 1.0;
  const double half = 0.5 * s.step;
  for (std::size_t k = 0; k < s.first.size(); ++k) {
    detail::rotate_block(g0, e0, detuning, s.first[k], half);
    detail::rotate_block(g1, e1, detuning, s.first[k], half);
    detail::rotate_block(g0, e0, detuning, s.second[k], half);
    detail::rotate_block(g1, e1, detuning, s.second[k], half);
  }
  return {g0, g1, e0, e1};
}

/// Ancilla relaxation, heating and dephasing rates for the block model.
struct AncillaRates {
  double decay = 0.0;
  double heating = 0.0;
  double dephasing = 0.0;  ///< rate of the |e><e| collapse operator

  static AncillaRates from(const SystemParams& p) {
    AncillaRates r;
    const double g = p.gamma_q();
    if (std::isfinite(g)) {
      r.decay = g * (1.0 + p.nth_q);
      r.heating = g * p.nth_q;
    }
    if (p.tphi_q > 0.0 && std::isfinite(p.tphi_q)) r.dephasing = 2.0 / p.tphi_q;
    return r;
  }
};

/// Excited population of one Fock block starting from |g> under ancilla
/// decoherence only (RK4 on the 2x2 density matrix).
inline double block_excitation_lindblad(double detuning, const BlockSchedule& s, const AncillaRates& r) {
  using M2 = Eigen::Matrix2cd;
  M2 lm, lp, le;
  lm << 0.0, std::sqrt(r.decay), 0.0, 0.0;
  lp << 0.0, 0.0, std::sqrt(r.heating), 0.0;
  le << 0.0, 0.0, 0.0, std::sqrt(r.dephasing);
  const M2 damp = -0.5 * kI * (lm.adjoint() * lm + lp.adjoint() * lp + le.adjoint() * le);
  auto rhs = [&](const M2& rho, double x) {
    M2 h;
    h << 0.0, x, x, detuning;
    const M2 heff = h + damp;
    const M2 hr = heff * rho;
    return M2(-kI * hr + kI * hr.adjoint() + lm * rho * lm.adjoint() + lp * rho * lp.adjoint() +
              le * rho * le.adjoint());
  };
  M2 rho = M2::Zero();
  rho(0, 0) = 1.0;
  const double h = s.step;
  for (std::size_t k = 0; k < s.mids.size(); ++k) {
    const M2 k1 = rhs(rho, s.knots[k]);
    const M2 k2 = rhs(rho + 0.5 * h * k1, s.mids[k]);
    const M2 k3 = rhs(rho + 0.5 * h * k2, s.mids[k]);
    const M2 k4 = rhs(rho + h * k3, s.knots[k + 1]);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return rho(1, 1).real();
}

/// Frame-dependent cavity phases accumulated by the ground-state energies are
/// applied separately by the caller; blocks use the ground level as zero.
inline Matrix block_unitary(const std::vector<BlockPropagator>& blocks, const Eigen::VectorXd& ground_phase) {
  const int nf = static_cast<int>(blocks.size());
  Matrix u = Matrix::Zero(2 * nf, 2 * nf);
  for (int n = 0; n < nf; ++n) {
    const cplx ph = std::exp(-kI * ground_phase(n));
    const auto& b = blocks[static_cast<std::size_t>(n)];
    u(n, n) = ph * b.gg;
    u(n, nf + n) = ph * b.ge;
    u(nf + n, n) = ph * b.eg;
    u(nf + n, nf + n) = ph * b.ee;
  }
  return u;
}

inline constexpr double kCombStep = 0.05e-9;

/// Full decoherence-free comb unitary on qubit (x) cavity in the two-photon
/// frame, including the dispersive ground-level phases.
inline Matrix comb_unitary(const CombSpec& spec, const SystemParams& p, int n_fock, double dt = kCombStep) {
  spec.validate();
  const Eigen::VectorXd det = comb_frame_detunings(p, n_fock);
  const Eigen::VectorXd g = dispersive_levels(p, n_fock, false);
  const auto env = [&](double t) { return comb_envelope(spec, std::clamp(t, 0.0, spec.duration)); };
  const BlockSchedule sched = block_schedule(env, spec.duration, dt);
  std::vector<BlockPropagator> blocks;
  for (int n = 0; n < n_fock; ++n) blocks.push_back(propagate_block(det(n), sched));
  return block_unitary(blocks, g * spec.duration);
}

// ---------------------------------------------------------------------------
// Reports

struct ParityReport {
  std::vector<double> excitation;  ///< P(e) after the pulse for each Fock input
  double code_error = 0.0;         ///< mean detection error over code-space cardinal states
  double error_error = 0.0;        ///< mean detection error over error-space cardinal states
  double p_excited = 0.0;          ///< P(e) for the supplied input state
  double p_ground = 0.0;           ///< P(g) for the supplied input state
  DensityMatrix post_g;            ///< cavity state conditioned on g (normalized)
  DensityMatrix post_e;            ///< cavity state conditioned on e (normalized)
  double qnd_fidelity_g = 1.0;     ///< F(input, post_g) when the input has even parity
  double qnd_fidelity_e = 1.0;     ///< F(input, post_e) when the input has odd parity

  /// Wrong-parity probability for Fock n.
  double fock_error(int n) const {
    const double p = excitation.at(static_cast<std::size_t>(n));
    return n % 2 == 0 ? p : 1.0 - p;
  }

  double mean_fock_error(int n_max) const {
    double s = 0.0;
    for (int n = 0; n <= n_max; ++n) s += fock_error(n);
    return s / (n_max + 1);
  }
};

/// Reported-parity error for a cavity state with known parity given
/// per-Fock excitation and a readout model.
inline double detection_error(const std::vector<double>& excitation, const Eigen::VectorXd& populations, bool odd,
                              const MeasurementModel& readout) {
  double pe = 0.0;
  for (Eigen::Index n = 0; n < populations.size(); ++n) pe += populations(n) * excitation.at(static_cast<std::size_t>(n));
  const double report_e = pe * (1.0 - readout.assign_err_e) + (1.0 - pe) * readout.assign_err_g;
  return odd ? 1.0 - report_e : report_e;
}

/// Fock populations of the six cardinal states built on (w0, w1).
inline std::vector<Eigen::VectorXd> cardinal_populations(const Vector& w0, const Vector& w1) {
  std::vector<Eigen::VectorXd> out;
  const double r = 1.0 / std::sqrt(2.0);
  const std::vector<Vector> states{w0, w1, r * (w0 + w1), r * (w0 - w1), r * (w0 + kI * w1), r * (w0 - kI * w1)};
  for (const auto& s : states) out.push_back(s.cwiseAbs2());
  return out;
}

struct ParityOptions {
  bool decoherence = false;
  MeasurementModel readout = MeasurementModel::ideal();
  double dt = kCombStep;          ///< block integrator step
  double lindblad_dt = 0.0;       ///< 0 selects the automatic RK4 step
  int n_report = -1;              ///< Fock levels to report (-1: all)
};

namespace detail {

inline void fill_space_errors(ParityReport& rep, int n_fock, const MeasurementModel& readout) {
  if (n_fock < 5) return;
  auto word = [&](std::initializer_list<std::pair<int, double>> c) {
    Vector v = Vector::Zero(n_fock);
    for (auto [n, a] : c) v(n) = a;
    return v;
  };
  const double r = 1.0 / std::sqrt(2.0);
  const auto code = cardinal_populations(word({{0, r}, {4, r}}), word({{2, 1.0}}));
  const auto err = cardinal_populations(word({{3, 1.0}}), word({{1, 1.0}}));
  rep.code_error = 0.0;
  rep.error_error = 0.0;
  for (const auto& p : code) rep.code_error += detection_error(rep.excitation, p, false, readout) / 6.0;
  for (const auto& p : err) rep.error_error += detection_error(rep.excitation, p, true, readout) / 6.0;
}

inline Eigen::VectorXd parity_weights(const DensityMatrix& cav, bool odd) {
  Eigen::VectorXd w(cav.space.dim());
  for (int n = 0; n < cav.space.dim(); ++n) w(n) = ((n % 2 == 1) == odd) ? cav.matrix(n, n).real() : 0.0;
  return w;
}

}  // namespace detail

/// Simulate a comb (or any photon-number-conserving ancilla pulse described
/// by `env`) acting on ancilla |g> (x) cavity.
inline ParityReport simulate_ancilla_map(const DensityMatrix& cavity, const std::function<double(double)>& env,
                                         double duration, const Eigen::VectorXd& detunings, const SystemParams& params,
                                         const ParityOptions& opt, Warnings* sink) {
  const int nf = cavity.space.dim();
  if (cavity.space.n_factors() != 1) throw InvalidDimension("parity map expects a cavity-only state");
  if (truncation_tail(cavity) > kTruncationTailThreshold) {
    warn(sink, "parity map: input population in top two Fock levels exceeds 1e-6");
  }
  ParityReport rep;
  rep.excitation.assign(static_cast<std::size_t>(nf), 0.0);
  const Space s = Space::qubit_cavity(nf);
  const Eigen::VectorXd g = dispersive_levels(params, nf, false);
  Matrix rho_out;
  if (!opt.decoherence) {
    const BlockSchedule sched = block_schedule(env, duration, opt.dt);
    std::vector<BlockPropagator> blocks;
    for (int n = 0; n < nf; ++n) {
      blocks.push_back(propagate_block(detunings(n), sched));
      rep.excitation[static_cast<std::size_t>(n)] = std::norm(blocks.back().eg);
    }
    const Matrix u = block_unitary(blocks, g * duration);
    const Matrix rho0 = kron(qubit::proj_g(), cavity.matrix);
    rho_out = u * rho0 * u.adjoint();
  } else {
    Matrix h0 = Matrix::Zero(2 * nf, 2 * nf);
    for (int n = 0; n < nf; ++n) {
      h0(n, n) = g(n);
      h0(nf + n, nf + n) = g(n) + detunings(n);
    }
    const LinearOperator hs(s, h0, "H_comb_frame");
    const Matrix x = on_qubit(qubit::sx(), nf);
    const TimeDependentTerm ht = [&](double t) -> Matrix { return env(std::clamp(t, 0.0, duration)) * x; };
    const auto ops = collapse_operators(params, s);
    double dt = opt.lindblad_dt;
    if (dt <= 0.0) {
      double peak = 0.0;
      for (int k = 0; k <= 2000; ++k) peak = std::max(peak, std::abs(env(duration * k / 2000.0)));
      Matrix probe = h0;
      probe += peak * x;
      dt = std::min(duration, auto_step(probe));
    }
    const int n_rep = opt.n_report < 0 ? nf : std::min(nf, opt.n_report);
    for (int n = 0; n < n_rep; ++n) {
      const auto r0 = DensityMatrix::from_pure(product_state(ground_qubit(), fock_vector(nf, n)));
      const auto r1 = evolve_lindblad(r0, hs, ht, ops, duration, dt);
      double pe = 0.0;
      for (int k = 0; k < nf; ++k) pe += r1.matrix(nf + k, nf + k).real();
      rep.excitation[static_cast<std::size_t>(n)] = pe;
    }
    // the full input is only propagated when it is not a single Fock level
    const auto r0 = DensityMatrix(s, kron(qubit::proj_g(), cavity.matrix));
    rho_out = evolve_lindblad(r0, hs, ht, ops, duration, dt).matrix;
  }
  const DensityMatrix full(s, rho_out);
  const Matrix pg = on_qubit(qubit::proj_g(), nf);
  const Matrix pe = on_qubit(qubit::proj_e(), nf);
  const DensityMatrix bg(s, pg * rho_out * pg);
  const DensityMatrix be(s, pe * rho_out * pe);
  rep.p_excited = be.trace();
  rep.p_ground = bg.trace();
  auto cav_of = [&](const DensityMatrix& b) {
    DensityMatrix c = partial_trace(b, 1);
    const double tr = c.trace();
    if (tr > 1e-14) c.matrix /= tr;
    return c;
  };
  rep.post_g = cav_of(bg);
  rep.post_e = cav_of(be);
  const double w_even = detail::parity_weights(cavity, false).sum();
  const double w_odd = detail::parity_weights(cavity, true).sum();
  if (w_even > 1.0 - 1e-12) rep.qnd_fidelity_g = state_fidelity(cavity, rep.post_g);
  if (w_odd > 1.0 - 1e-12) rep.qnd_fidelity_e = state_fidelity(cavity, rep.post_e);
  detail::fill_space_errors(rep, nf, opt.readout);
  return rep;
}

inline ParityReport simulate_parity_map(const DensityMatrix& cavity, const CombSpec& spec, const SystemParams& params,
                                        const ParityOptions& opt = {}, Warnings* sink = nullptr) {
  spec.validate();
  const auto env = [&spec](double t) { return comb_envelope(spec, std::clamp(t, 0.0, spec.duration)); };
  return simulate_ancilla_map(cavity, env, spec.duration, comb_frame_detunings(params, cavity.space.dim()), params, opt,
                              sink);
}

/// Per-Fock excitation from the block model. With `ancilla_decoherence` the
/// ancilla relaxation and dephasing of `params` act during the pulse.
inline std::vector<double> comb_excitation(const CombSpec& spec, const SystemParams& params, int n_max,
                                           bool ancilla_decoherence = false, double dt = kCombStep) {
  spec.validate();
  const Eigen::VectorXd det = comb_frame_detunings(params, std::max(n_max + 1, 3));
  const auto env = [&spec](double t) { return comb_envelope(spec, std::clamp(t, 0.0, spec.duration)); };
  const BlockSchedule sched = block_schedule(env, spec.duration, dt, ancilla_decoherence);
  const AncillaRates rates = AncillaRates::from(params);
  std::vector<double> out;
  for (int n = 0; n <= n_max; ++n) {
    out.push_back(ancilla_decoherence ? block_excitation_lindblad(det(n), sched, rates)
                                      : std::norm(propagate_block(det(n), sched).eg));
  }
  return out;
}

/// Mean wrong-parity probability over Fock 0..n_max.
inline double parity_infidelity(const std::vector<double>& excitation) {
  double s = 0.0;
  for (std::size_t n = 0; n < excitation.size(); ++n) s += n % 2 == 0 ? excitation[n] : 1.0 - excitation[n];
  return s / static_cast<double>(excitation.size());
}

// ---------------------------------------------------------------------------
// Amplitude-scaling calibration

/// |delta| = (sqrt(Delta^2 + (lambda Omega0)^2) - |Delta|) / 2
inline double stark_shift_magnitude(double lambda, double omega0, double detuning) {
  const double w = lambda * omega0;
  return 0.5 * (std::sqrt(detuning * detuning + w * w) - std::abs(detuning));
}

inline double calibrate_scaling(double detuning, double measured_shift, double omega0) {
  if (detuning == 0.0 || !std::isfinite(detuning)) throw ConfigError("calibrate_scaling: detuning must be nonzero");
  if (measured_shift < 0.0 || !std::isfinite(measured_shift)) {
    throw ConfigError("calibrate_scaling: measured shift magnitude must be >= 0");
  }
  if (!(omega0 > 0.0)) throw ConfigError("calibrate_scaling: omega0 must be > 0");
  const double d = measured_shift;
  return 2.0 * std::sqrt(d * (d + std::abs(detuning))) / omega0;
}

/// Level shift of a two-level system driven off resonance with Rabi
/// frequency lambda*omega0 (convention of stark_shift_magnitude), obtained by
/// diagonalization.
inline double simulated_stark_shift(double lambda, double omega0, double detuning) {
  Eigen::Matrix2d h;
  h << 0.0, 0.5 * lambda * omega0, 0.5 * lambda * omega0, detuning;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
  const double ground_like = detuning > 0.0 ? es.eigenvalues()(0) : es.eigenvalues()(1);
  return std::abs(ground_like);
}

// ---------------------------------------------------------------------------
// Timing optimization

struct TimingResult {
  double duration = 0.0;
  double delay = 0.0;
  double objective = 0.0;  ///< mean parity fidelity over Fock 0..4
  std::vector<std::vector<double>> grid;  ///< objective[duration index][delay index]
};

struct TimingSearch {
  std::vector<double> durations;
  std::vector<double> delays;
  int refine_rounds = 3;
  int n_max = 4;
  bool ancilla_decoherence = false;
};

inline double timing_objective(CombSpec spec, const SystemParams& p, double duration, double delay,
                               const TimingSearch& search) {
  spec.duration = duration;
  spec.delay = delay;
  return 1.0 - parity_infidelity(comb_excitation(spec, p, search.n_max, search.ancilla_decoherence));
}

/// Grid search followed by shrinking local grids around the best point.
inline TimingResult optimize_pulse_timing(const CombSpec& spec, const SystemParams& p, const TimingSearch& search) {
  if (search.durations.empty() || search.delays.empty()) throw ConfigError("optimize_pulse_timing: empty range");
  TimingResult res;
  res.objective = -1.0;
  res.grid.assign(search.durations.size(), std::vector<double>(search.delays.size(), 0.0));
  std::size_t bi = 0, bj = 0;
  for (std::size_t i = 0; i < search.durations.size(); ++i) {
    for (std::size_t j = 0; j < search.delays.size(); ++j) {
      const double f = timing_objective(spec, p, search.durations[i], search.delays[j], search);
      res.grid[i][j] = f;
      if (f > res.objective) {
        res.objective = f;
        bi = i;
        bj = j;
      }
    }
  }
  res.duration = search.durations[bi];
  res.delay = search.delays[bj];
  auto step_of = [](const std::vector<double>& v, std::size_t i) {
    if (v.size() < 2) return 0.0;
    const std::size_t k = i + 1 < v.size() ? i + 1 : i;
    return std::abs(v[k] - v[k - 1]);
  };
  double hd = step_of(search.durations, bi), hl = step_of(search.delays, bj);
  const double d_lo = *std::min_element(search.durations.begin(), search.durations.end());
  const double d_hi = *std::max_element(search.durations.begin(), search.durations.end());
  const double l_lo = *std::min_element(search.delays.begin(), search.delays.end());
  const double l_hi = *std::max_element(search.delays.begin(), search.delays.end());
  for (int r = 0; r < search.refine_rounds && (hd > 0.0 || hl > 0.0); ++r) {
    hd *= 0.5;
    hl *= 0.5;
    const double d0 = res.duration, l0 = res.delay;
    for (int a = -1; a <= 1; ++a) {
      for (int b = -1; b <= 1; ++b) {
        const double d = std::clamp(d0 + a * hd, d_lo, d_hi);
        const double l = std::clamp(l0 + b * hl, l_lo, l_hi);
        const double f = timing_objective(spec, p, d, l, search);
        if (f > res.objective) {
          res.objective = f;
          res.duration = d;
          res.delay = l;
        }
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Ramsey baseline

struct RamseySpec {
  double pulse_duration = 20e-9;  ///< 0 selects instantaneous rotations
  double pulse_amplitude = 0.0;   ///< 0 selects a pi/2 area for the cosine envelope
};

/// pi/2 - wait - pi/2(-x) with pulse centers separated by pi/chi, in the frame
/// of the bare ancilla transition (zero photons).
inline ParityReport ramsey_parity_map(const DensityMatrix& cavity, const SystemParams& params,
                                      const RamseySpec& rs = {}, const ParityOptions& opt = {},
                                      Warnings* sink = nullptr) {
  const int nf = cavity.space.dim();
  const double chi = params.chi_qc;
  const double sep = kPi / chi;
  const Eigen::VectorXd g = dispersive_levels(params, nf, false);
  const Eigen::VectorXd e = dispersive_levels(params, nf, true);
  const double ref = e(0) - g(0);
  Eigen::VectorXd det(nf);
  for (int n = 0; n < nf; ++n) det(n) = e(n) - g(n) - ref;
  if (rs.pulse_duration <= 0.0) {
    // ideal instantaneous rotations: exp(-i pi/4 sx), free evolution, exp(+i pi/4 sx)
    ParityReport rep;
    rep.excitation.resize(static_cast<std::size_t>(nf));
    for (int n = 0; n < nf; ++n) {
      cplx cg = 1.0, ce = 0.0;
      detail::rotate_block(cg, ce, 0.0, 1.0, kPi / 4.0);
      ce *= std::exp(-kI * det(n) * sep);
      detail::rotate_block(cg, ce, 0.0, -1.0, kPi / 4.0);
      rep.excitation[static_cast<std::size_t>(n)] = std::norm(ce);
    }
    detail::fill_space_errors(rep, nf, opt.readout);
    double pe = 0.0;
    for (int n = 0; n < nf; ++n) pe += cavity.matrix(n, n).real() * rep.excitation[static_cast<std::size_t>(n)];
    rep.p_excited = pe;
    rep.p_ground = cavity.trace() - pe;
    return rep;
  }
  const double tp = rs.pulse_duration;
  // cosine envelope A (1 - cos(2 pi t / tp)) / 2 has area A tp / 2; pi/2 rotation needs area pi/4
  const double amp = rs.pulse_amplitude > 0.0 ? rs.pulse_amplitude : (kPi / 4.0) / (0.5 * tp);
  const double total = sep + tp;
  const auto env = [tp, amp, total](double t) {
    auto shape = [&](double s) { return (s >= 0.0 && s <= tp) ? 0.5 * amp * (1.0 - std::cos(kTwoPi * s / tp)) : 0.0; };
    return shape(t) - shape(t - (total - tp));
  };
  return simulate_ancilla_map(cavity, env, total, det, params, opt, sink);
}

// ---------------------------------------------------------------------------
// CSV helpers

inline void write_parity_row(std::ostream& os, double parameter, const std::vector<double>& excitation) {
  os << parameter;
  for (std::size_t n = 0; n < excitation.size(); ++n) os << ',' << (n % 2 == 0 ? excitation[n] : 1.0 - excitation[n]);
  os << ',' << 1.0 - parity_infidelity(excitation) << '\n';
}

}  // namespace bqec
