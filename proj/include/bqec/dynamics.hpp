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

// Time evolution: Lindblad master equation (RK4 and exact superoperators),
// Schroedinger propagation for piecewise and analytic drives, Monte-Carlo
// jump trajectories and a phenomenological ancilla readout.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bqec/core.hpp"
#include "bqec/system_model.hpp"

namespace bqec {

// ---------------------------------------------------------------------------
// Pulses and controls

inline const std::vector<std::string>& standard_channel_names() {
  static const std::vector<std::string> names{"qubit-I", "qubit-Q", "cavity-I", "cavity-Q"};
  return names;
}

struct PiecewisePulse {
  std::vector<std::string> channels;
  double dt = 0.0;
  std::vector<std::vector<double>> samples;  // samples[channel][segment], rad/s

  static PiecewisePulse zeros(int n_segments, double dt) {
    PiecewisePulse p;
    p.channels = standard_channel_names();
    p.dt = dt;
    p.samples.assign(p.channels.size(), std::vector<double>(static_cast<std::size_t>(n_segments), 0.0));
    p.validate();
    return p;
  }

  int n_channels() const { return static_cast<int>(channels.size()); }
  int n_segments() const { return samples.empty() ? 0 : static_cast<int>(samples.front().size()); }
  double duration() const { return dt * n_segments(); }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("pulse: dt must be > 0");
    if (samples.size() != channels.size()) throw ConfigError("pulse: channel count mismatch");
    for (const auto& s : samples) {
      if (s.size() != samples.front().size()) throw ConfigError("pulse: channels have unequal lengths");
      for (double v : s) {
        if (!std::isfinite(v)) throw NumericError("pulse: non-finite sample");
      }
    }
  }

  double max_abs(int channel) const {
    double m = 0.0;
    for (double v : samples.at(static_cast<std::size_t>(channel))) m = std::max(m, std::abs(v));
    return m;
  }
};

/// sigma_x, sigma_y, a + a^dag, i(a - a^dag) on qubit (x) cavity, matching
/// standard_channel_names().
inline std::vector<Matrix> standard_controls(int n_fock) {
  const Matrix a = annihilation(n_fock).matrix;
  return {on_qubit(qubit::sx(), n_fock), on_qubit(qubit::sy(), n_fock), on_cavity(a + a.adjoint()),
          on_cavity(kI * (a - a.adjoint()))};
}

inline Matrix segment_hamiltonian(const Matrix& h0, const std::vector<Matrix>& controls,
                                  const PiecewisePulse& pulse, int k) {
  if (static_cast<int>(controls.size()) != pulse.n_channels()) {
    throw InvalidDimension("control operator count does not match pulse channels");
  }
  Matrix h = h0;
  for (std::size_t c = 0; c < controls.size(); ++c) h += pulse.samples[c][static_cast<std::size_t>(k)] * controls[c];
  return h;
}

/// Product of exact segment exponentials U_N ... U_1.
inline Matrix pulse_unitary(const Matrix& h0, const std::vector<Matrix>& controls, const PiecewisePulse& pulse) {
  pulse.validate();
  Matrix u = Matrix::Identity(h0.rows(), h0.cols());
  for (int k = 0; k < pulse.n_segments(); ++k) {
    u = unitary_propagator(segment_hamiltonian(h0, controls, pulse, k), pulse.dt) * u;
  }
  return u;
}

// ---------------------------------------------------------------------------
// Step-size control

/// Centered infinity-norm of a Hamiltonian; equals the largest |frequency|
/// for diagonal matrices and bounds it otherwise.
inline double frequency_scale(const Matrix& h) {
  const Eigen::VectorXd d = h.diagonal().real();
  const double c = 0.5 * (d.maxCoeff() + d.minCoeff());
  double m = 0.0;
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < h.cols(); ++j) row += std::abs(i == j ? h(i, j) - c : h(i, j));
    m = std::max(m, row);
  }
  return m;
}

inline constexpr double kMaxPhasePerStep = 0.1;

inline void check_step(double dt, double duration, const Matrix& h) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be > 0");
  if (dt > duration * (1.0 + 1e-12)) throw ConfigError("time step exceeds duration");
  if (dt * frequency_scale(h) >= kMaxPhasePerStep) {
    throw ConfigError("time step too coarse: dt * |H| must stay below 0.1");
  }
}

/// min(1 ns, 0.02 / |H|)
inline double auto_step(const Matrix& h) {
  const double f = frequency_scale(h);
  return f > 0.0 ? std::min(1e-9, 0.2 * kMaxPhasePerStep / f) : 1e-9;
}

using TimeDependentTerm = std::function<Matrix(double)>;

// ---------------------------------------------------------------------------
// Unitary evolution

inline StateVector evolve_unitary(const StateVector& psi0, const LinearOperator& h_static, const PiecewisePulse& pulse,
                                  const std::vector<Matrix>& controls) {
  if (!(psi0.space == h_static.space)) throw InvalidDimension("evolve_unitary: space mismatch");
  pulse.validate();
  Vector v = psi0.amplitudes;
  for (int k = 0; k < pulse.n_segments(); ++k) {
    v = unitary_propagator(segment_hamiltonian(h_static.matrix, controls, pulse, k), pulse.dt) * v;
  }
  return {psi0.space, std::move(v)};
}

inline StateVector evolve_unitary(const StateVector& psi0, const LinearOperator& h_static, const PiecewisePulse& pulse) {
  return evolve_unitary(psi0, h_static, pulse, standard_controls(psi0.space.n_fock()));
}

/// Fourth-order commutator-free Magnus integration of H_static + h_t(t).
inline StateVector evolve_unitary(const StateVector& psi0, const LinearOperator& h_static, const TimeDependentTerm& h_t,
                                  double duration, double dt) {
  if (!(psi0.space == h_static.space)) throw InvalidDimension("evolve_unitary: space mismatch");
  if (duration == 0.0) return psi0;
  if (!h_t) return {psi0.space, unitary_propagator(h_static.matrix, duration) * psi0.amplitudes};
  const int steps = static_cast<int>(std::ceil(duration / dt - 1e-9));
  const double h = duration / steps;
  const double s3 = std::sqrt(3.0);
  const double c1 = 0.5 - s3 / 6.0, c2 = 0.5 + s3 / 6.0;
  const double a1 = (3.0 - 2.0 * s3) / 12.0, a2 = (3.0 + 2.0 * s3) / 12.0;
  Vector v = psi0.amplitudes;
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    const Matrix h1 = h_static.matrix + h_t(t + c1 * h);
    const Matrix h2 = h_static.matrix + h_t(t + c2 * h);
    check_step(dt, duration, h1);
    v = unitary_propagator(a2 * h1 + a1 * h2, h) * v;
    v = unitary_propagator(a1 * h1 + a2 * h2, h) * v;
  }
  return {psi0.space, std::move(v)};
}

// ---------------------------------------------------------------------------
// Lindblad master equation

inline Matrix effective_hamiltonian(const Matrix& h, const std::vector<Matrix>& collapse) {
  Matrix heff = h;
  for (const auto& l : collapse) heff -= 0.5 * kI * (l.adjoint() * l);
  return heff;
}

inline std::vector<Matrix> matrices_of(const std::vector<LinearOperator>& ops) {
  std::vector<Matrix> out;
  out.reserve(ops.size());
  for (const auto& o : ops) out.push_back(o.matrix);
  return out;
}

inline Matrix lindblad_rhs(const Matrix& rho, const Matrix& heff, const std::vector<Matrix>& collapse) {
  Matrix hr = heff * rho;
  Matrix d = -kI * hr + kI * hr.adjoint();  // -i(Heff rho - rho Heff^dag) for Hermitian rho
  for (const auto& l : collapse) d.noalias() += l * rho * l.adjoint();
  return d;
}

/// RK4 on the density matrix. dt <= 0 selects auto_step.
inline DensityMatrix evolve_lindblad(const DensityMatrix& rho0, const LinearOperator& h_static,
                                     const TimeDependentTerm& h_t, const std::vector<LinearOperator>& collapse,
                                     double duration, double dt) {
  if (!(rho0.space == h_static.space)) throw InvalidDimension("evolve_lindblad: space mismatch");
  for (const auto& c : collapse) {
    if (!(c.space == rho0.space)) throw InvalidDimension("evolve_lindblad: collapse operator space mismatch");
  }
  if (duration < 0.0 || !std::isfinite(duration)) throw ConfigError("evolve_lindblad: invalid duration");
  if (duration == 0.0) return rho0;
  const std::vector<Matrix> ls = matrices_of(collapse);
  const Matrix heff0 = effective_hamiltonian(h_static.matrix, ls);
  if (dt <= 0.0) {
    Matrix probe = h_static.matrix;
    if (h_t) probe += h_t(0.0);
    dt = std::min(duration, auto_step(probe));
  }
  check_step(dt, duration, h_static.matrix + (h_t ? h_t(0.0) : Matrix::Zero(rho0.space.dim(), rho0.space.dim())));
  const int steps = static_cast<int>(std::ceil(duration / dt - 1e-9));
  const double h = duration / steps;
  const double tr0 = rho0.trace();
  Matrix rho = rho0.matrix;
  auto heff_at = [&](double t) -> Matrix { return h_t ? Matrix(heff0 + h_t(t)) : heff0; };
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    const Matrix ha = heff_at(t);
    const Matrix hm = h_t ? heff_at(t + 0.5 * h) : ha;
    const Matrix hb = h_t ? heff_at(t + h) : ha;
    if (h_t && h * frequency_scale(hm - heff0 + h_static.matrix) >= kMaxPhasePerStep) {
      throw ConfigError("time step too coarse for the time-dependent drive");
    }
    const Matrix k1 = lindblad_rhs(rho, ha, ls);
    const Matrix k2 = lindblad_rhs(rho + 0.5 * h * k1, hm, ls);
    const Matrix k3 = lindblad_rhs(rho + 0.5 * h * k2, hm, ls);
    const Matrix k4 = lindblad_rhs(rho + h * k3, hb, ls);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const double tr = rho.trace().real();
  if (std::abs(tr - tr0) > 1e-6 * std::max(1.0, std::abs(tr0)) || !rho.allFinite()) {
    throw NumericError("evolve_lindblad: trace drift exceeds 1e-6");
  }
  return {rho0.space, std::move(rho)};
}

inline DensityMatrix evolve_lindblad(const DensityMatrix& rho0, const LinearOperator& h_static,
                                     const std::vector<LinearOperator>& collapse, double duration, double dt) {
  return evolve_lindblad(rho0, h_static, TimeDependentTerm{}, collapse, duration, dt);
}

// Column-stacking vectorization: vec(A X B) = (B^T (x) A) vec(X).

inline Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

inline Matrix unvec(const Vector& v, Eigen::Index d) {
  if (v.size() != d * d) throw InvalidDimension("unvec: length mismatch");
  return Eigen::Map<const Matrix>(v.data(), d, d);
}

inline Matrix liouvillian(const Matrix& h, const std::vector<Matrix>& collapse) {
  const Eigen::Index d = h.rows();
  const Matrix id = Matrix::Identity(d, d);
  Matrix l = -kI * (kron(id, h) - kron(h.transpose(), id));
  for (const auto& c : collapse) {
    const Matrix cdc = c.adjoint() * c;
    l += kron(c.conjugate(), c) - 0.5 * kron(id, cdc) - 0.5 * kron(cdc.transpose(), id);
  }
  return l;
}

/// Exact exp(L t) for a time-independent generator.
inline Matrix lindblad_propagator(const Matrix& h, const std::vector<Matrix>& collapse, double t) {
  return expm(t * liouvillian(h, collapse));
}

/// rho -> U rho U^dag
inline Matrix unitary_superop(const Matrix& u) { return kron(u.conjugate(), u); }

/// rho -> sum_k K rho K^dag
inline Matrix kraus_superop(const std::vector<Matrix>& kraus) {
  Matrix s = Matrix::Zero(kraus.front().size(), kraus.front().size());
  for (const auto& k : kraus) s += kron(k.conjugate(), k);
  return s;
}

inline Matrix apply_superop(const Matrix& s, const Matrix& rho) { return unvec(s * vec(rho), rho.rows()); }

// ---------------------------------------------------------------------------
// Random numbers

/// Seedable generator with deterministic stream splitting.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }

  /// Independent child stream; depends only on (seed, stream).
  Rng split(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream + 0x9E3779B97F4A7C15ull))); }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  std::mt19937_64& engine() { return engine_; }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Measurement model and trajectory records

enum class Outcome { G = 0, E = 1 };

inline char outcome_char(Outcome o) { return o == Outcome::G ? 'g' : 'e'; }

struct MeasurementModel {
  double assign_err_g = 0.0;  ///< P(report e | g)
  double assign_err_e = 0.0;  ///< P(report g | e)
  double qnd_flip_g = 0.0;
  double qnd_flip_e = 0.0;
  double duration = 0.0;

  static MeasurementModel ideal(double duration = 0.0) { return {0.0, 0.0, 0.0, 0.0, duration}; }
  static MeasurementModel device_defaults() { return {0.002, 0.012, 0.002, 0.028, 600e-9}; }

  double assign_err(Outcome o) const { return o == Outcome::G ? assign_err_g : assign_err_e; }
  double qnd_flip(Outcome o) const { return o == Outcome::G ? qnd_flip_g : qnd_flip_e; }

  void validate() const {
    for (double p : {assign_err_g, assign_err_e, qnd_flip_g, qnd_flip_e}) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("measurement model: probabilities must be in [0,1]");
    }
    if (!(duration >= 0.0)) throw ConfigError("measurement model: duration must be >= 0");
  }
};

struct JumpEvent {
  double time = 0.0;
  std::string label;
};

struct MeasurementEvent {
  double time = 0.0;
  Outcome reported = Outcome::G;
  Outcome true_outcome = Outcome::G;
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::vector<JumpEvent> jumps;
  std::vector<MeasurementEvent> measurements;
  StateVector final_state;

  /// One JSON object on a single line.
  std::string to_json_line() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["jumps"] = nlohmann::json::array();
    for (const auto& e : jumps) j["jumps"].push_back({{"time", e.time}, {"op", e.label}});
    j["measurements"] = nlohmann::json::array();
    for (const auto& m : measurements) {
      j["measurements"].push_back({{"time", m.time},
                                   {"reported", std::string(1, outcome_char(m.reported))},
                                   {"true", std::string(1, outcome_char(m.true_outcome))}});
    }
    nlohmann::json amp = nlohmann::json::array();
    for (Eigen::Index i = 0; i < final_state.amplitudes.size(); ++i) {
      amp.push_back({final_state.amplitudes(i).real(), final_state.amplitudes(i).imag()});
    }
    j["dims"] = final_state.space.factors();
    j["final_state"] = std::move(amp);
    return j.dump();
  }
};

// ---------------------------------------------------------------------------
// Monte-Carlo jump unraveling

/// Unnormalized conditional state: the no-jump probability so far is
/// |psi|^2 and a jump fires when it crosses `threshold`.
struct TrajectoryState {
  Vector psi;
  double threshold = 0.0;
  double time = 0.0;

  void renormalize() {
    const double n2 = psi.squaredNorm();
    if (!(n2 > 1e-250)) throw NumericError("trajectory: norm underflow");
    psi /= std::sqrt(n2);
    threshold /= n2;
  }
};

inline constexpr double kJumpResolutionFraction = 0.01;

/// Jump unraveling of a Lindblad generator with static Hamiltonian and
/// optional time-dependent addition (integrated with RK4 steps of `dt`).
class TrajectoryEngine {
 public:
  TrajectoryEngine(Matrix h_static, std::vector<Matrix> collapse, std::vector<std::string> labels, double dt,
                   TimeDependentTerm h_t = {})
      : collapse_(std::move(collapse)), labels_(std::move(labels)), dt_(dt), h_t_(std::move(h_t)) {
    if (labels_.size() != collapse_.size()) labels_.resize(collapse_.size(), "L");
    if (!(dt_ > 0.0)) throw ConfigError("trajectory: dt must be > 0");
    heff_ = effective_hamiltonian(h_static, collapse_);
    if (!h_t_) {
      Eigen::ComplexEigenSolver<Matrix> es(heff_);
      vecs_ = es.eigenvectors();
      vals_ = es.eigenvalues();
      Eigen::PartialPivLU<Matrix> lu(vecs_);
      inv_ = lu.inverse();
      const Matrix recon = vecs_ * vals_.asDiagonal() * inv_;
      exact_diag_ = (recon - heff_).norm() <= 1e-9 * std::max(1.0, heff_.norm()) && inv_.allFinite();
    }
  }

  TrajectoryEngine(const LinearOperator& h_static, const std::vector<LinearOperator>& collapse, double dt,
                   TimeDependentTerm h_t = {})
      : TrajectoryEngine(h_static.matrix, matrices_of(collapse), labels_of(collapse), dt, std::move(h_t)) {}

  double dt() const { return dt_; }

  /// Advance `st` by `duration`, firing jumps as they occur.
  void advance(TrajectoryState& st, double duration, Rng& rng, TrajectoryRecord* rec) const {
    if (duration <= 0.0) return;
    if (h_t_) {
      advance_rk4(st, duration, rng, rec);
    } else {
      advance_static(st, duration, rng, rec);
    }
  }

  /// exp(-i Heff tau) psi
  Vector no_jump(const Vector& psi, double tau) const {
    if (exact_diag_) {
      Vector c = inv_ * psi;
      for (Eigen::Index k = 0; k < c.size(); ++k) c(k) *= std::exp(-kI * vals_(k) * tau);
      return vecs_ * c;
    }
    return expm(-kI * tau * heff_) * psi;
  }

 private:
  static std::vector<std::string> labels_of(const std::vector<LinearOperator>& ops) {
    std::vector<std::string> l;
    for (const auto& o : ops) l.push_back(o.label);
    return l;
  }

  void jump(TrajectoryState& st, Rng& rng, TrajectoryRecord* rec) const {
    std::vector<double> w(collapse_.size());
    double total = 0.0;
    for (std::size_t k = 0; k < collapse_.size(); ++k) total += (w[k] = (collapse_[k] * st.psi).squaredNorm());
    if (!(total > 0.0)) throw NumericError("trajectory: jump with vanishing rates");
    double r = rng.uniform() * total;
    std::size_t k = 0;
    for (; k + 1 < w.size(); ++k) {
      if (r < w[k]) break;
      r -= w[k];
    }
    st.psi = collapse_[k] * st.psi;
    st.psi /= st.psi.norm();
    st.threshold = rng.uniform();
    if (rec) rec->jumps.push_back({st.time, labels_[k]});
  }

  void advance_static(TrajectoryState& st, double duration, Rng& rng, TrajectoryRecord* rec) const {
    const double t_end = st.time + duration;
    while (true) {
      const double span = t_end - st.time;
      if (span <= 0.0) break;
      Vector trial = no_jump(st.psi, span);
      if (trial.squaredNorm() >= st.threshold || collapse_.empty()) {
        st.psi = std::move(trial);
        st.time = t_end;
        break;
      }
      double lo = 0.0, hi = span;
      const double res = dt_ * kJumpResolutionFraction;
      while (hi - lo > res) {
        const double mid = 0.5 * (lo + hi);
        if (no_jump(st.psi, mid).squaredNorm() >= st.threshold) lo = mid; else hi = mid;
      }
      st.psi = no_jump(st.psi, hi);
      st.time += hi;
      if (!(st.psi.squaredNorm() > 1e-250)) throw NumericError("trajectory: norm underflow");
      jump(st, rng, rec);
    }
  }

  Vector rk4(const Vector& psi, double t, double h) const {
    auto f = [&](double s, const Vector& v) -> Vector { return -kI * ((heff_ + h_t_(s)) * v); };
    const Vector k1 = f(t, psi);
    const Vector k2 = f(t + 0.5 * h, psi + 0.5 * h * k1);
    const Vector k3 = f(t + 0.5 * h, psi + 0.5 * h * k2);
    const Vector k4 = f(t + h, psi + h * k3);
    return psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  void advance_rk4(TrajectoryState& st, double duration, Rng& rng, TrajectoryRecord* rec) const {
    const int steps = static_cast<int>(std::ceil(duration / dt_ - 1e-9));
    const double h = duration / steps;
    const double t0 = st.time;
    for (int k = 0; k < steps; ++k) {
      const double t = t0 + k * h;
      double done = 0.0;
      st.time = t;
      while (h - done > 1e-15 * h) {
        const double span = h - done;
        Vector trial = rk4(st.psi, st.time, span);
        if (trial.squaredNorm() >= st.threshold || collapse_.empty()) {
          st.psi = std::move(trial);
          st.time += span;
          break;
        }
        double lo = 0.0, hi = span;
        const double res = h * kJumpResolutionFraction;
        while (hi - lo > res) {
          const double mid = 0.5 * (lo + hi);
          if (rk4(st.psi, st.time, mid).squaredNorm() >= st.threshold) lo = mid; else hi = mid;
        }
        st.psi = rk4(st.psi, st.time, hi);
        st.time += hi;
        done += hi;
        if (!(st.psi.squaredNorm() > 1e-250)) throw NumericError("trajectory: norm underflow");
        jump(st, rng, rec);
      }
      st.time = t0 + (k + 1) * h;
    }
  }

  std::vector<Matrix> collapse_;
  std::vector<std::string> labels_;
  double dt_;
  TimeDependentTerm h_t_;
  Matrix heff_;
  Matrix vecs_;
  Vector vals_;
  Matrix inv_;
  bool exact_diag_ = false;
};

struct TimedEvent {
  double time = 0.0;
  std::string label;
  std::function<void(TrajectoryState&, Rng&, TrajectoryRecord&)> action;
};

/// Single trajectory over [0, duration] with events applied at their times.
inline TrajectoryRecord mc_trajectory(const StateVector& psi0, const LinearOperator& h_static, const TimeDependentTerm& h_t,
                                      const std::vector<LinearOperator>& collapse, const std::vector<TimedEvent>& events,
                                      double duration, std::uint64_t seed, double dt) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].time < events[i - 1].time) throw ConfigError("mc_trajectory: events must be sorted by time");
  }
  const TrajectoryEngine engine(h_static, collapse, dt, h_t);
  Rng rng(seed);
  TrajectoryRecord rec;
  rec.seed = seed;
  TrajectoryState st{psi0.normalized().amplitudes, rng.uniform(), 0.0};
  for (const auto& ev : events) {
    if (ev.time > duration) break;
    engine.advance(st, ev.time - st.time, rng, &rec);
    st.renormalize();
    if (ev.action) ev.action(st, rng, rec);
  }
  engine.advance(st, duration - st.time, rng, &rec);
  st.renormalize();
  rec.final_state = StateVector(psi0.space, st.psi);
  return rec;
}

// ---------------------------------------------------------------------------
// Ancilla readout

struct MeasurementResult {
  Outcome reported = Outcome::G;
  Outcome true_outcome = Outcome::G;
  StateVector post_state;
};

/// Projective ancilla readout with assignment and QND-flip errors. When an
/// idle engine is supplied the post-state then idles for model.duration.
inline MeasurementResult measure_ancilla(const StateVector& state, const MeasurementModel& model, Rng& rng,
                                         const TrajectoryEngine* idle = nullptr, TrajectoryRecord* rec = nullptr,
                                         double t_now = 0.0) {
  if (!state.space.is_qubit_cavity()) throw InvalidDimension("measure_ancilla: expected qubit (x) cavity");
  const int nf = state.space.n_fock();
  const Vector& v = state.amplitudes;
  const double pg = v.head(nf).squaredNorm();
  const double pe = v.tail(nf).squaredNorm();
  const Outcome truth = rng.uniform() * (pg + pe) < pg ? Outcome::G : Outcome::E;
  Vector post = Vector::Zero(2 * nf);
  if (truth == Outcome::G) {
    post.head(nf) = v.head(nf) / std::sqrt(pg);
  } else {
    post.tail(nf) = v.tail(nf) / std::sqrt(pe);
  }
  Outcome rep = truth;
  if (rng.bernoulli(model.assign_err(truth))) rep = truth == Outcome::G ? Outcome::E : Outcome::G;
  if (rng.bernoulli(model.qnd_flip(truth))) post = on_qubit(qubit::sx(), nf) * post;
  if (rec) rec->measurements.push_back({t_now, rep, truth});
  if (idle && model.duration > 0.0) {
    TrajectoryState st{post, rng.uniform(), t_now};
    idle->advance(st, model.duration, rng, rec);
    st.renormalize();
    post = st.psi;
  }
  return {rep, truth, StateVector(state.space, std::move(post))};
}

/// Density-matrix readout: unnormalized post-states indexed by the reported outcome.
inline std::array<DensityMatrix, 2> measure_ancilla_branches(const DensityMatrix& rho, const MeasurementModel& model) {
  if (!rho.space.is_qubit_cavity()) throw InvalidDimension("measure_ancilla: expected qubit (x) cavity");
  const int nf = rho.space.n_fock();
  const Matrix pg = on_qubit(qubit::proj_g(), nf);
  const Matrix pe = on_qubit(qubit::proj_e(), nf);
  const Matrix x = on_qubit(qubit::sx(), nf);
  std::array<Matrix, 2> out{Matrix::Zero(2 * nf, 2 * nf), Matrix::Zero(2 * nf, 2 * nf)};
  for (Outcome t : {Outcome::G, Outcome::E}) {
    const Matrix& p = t == Outcome::G ? pg : pe;
    Matrix proj = p * rho.matrix * p;
    const double q = model.qnd_flip(t);
    proj = (1.0 - q) * proj + q * (x * proj * x);
    const double a = model.assign_err(t);
    const int right = static_cast<int>(t);
    out[static_cast<std::size_t>(right)] += (1.0 - a) * proj;
    out[static_cast<std::size_t>(1 - right)] += a * proj;
  }
  return {DensityMatrix(rho.space, out[0]), DensityMatrix(rho.space, out[1])};
}

// ---------------------------------------------------------------------------
// Parallel trajectories

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Runs fn(index, rng) for index in [0, n) with rng = Rng(seed).split(index);
/// results do not depend on the thread count.
template <class Fn>
auto run_parallel(std::size_t n, std::uint64_t seed, unsigned threads, Fn fn)
    -> std::vector<decltype(fn(std::size_t{}, std::declval<Rng&>()))> {
  using R = decltype(fn(std::size_t{}, std::declval<Rng&>()));
  std::vector<R> out(n);
  const Rng root(seed);
  const unsigned nt = std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        Rng rng = root.split(i);
        out[i] = fn(i, rng);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace bqec
