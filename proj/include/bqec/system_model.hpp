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

// Dispersive qubit-cavity model in the frame rotating at the bare mode
// frequencies: Hamiltonian, drives and Lindblad collapse operators.

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bqec/core.hpp"

namespace bqec {

/// Device values that are not part of the simulated Hamiltonian.
struct DeviceMetadata {
  double omega_q = kTwoPi * 4.962e9;
  double omega_c = kTwoPi * 6.532e9;
  double omega_r = kTwoPi * 8.562e9;
  double anharmonicity_q = kTwoPi * 216e6;
  double chi_qr = kTwoPi * 1.9e6;
  double chi_cr = kTwoPi * 12.7e3;  // predicted
  double kerr_r = kTwoPi * 4.2e3;   // predicted
  double t1_r = 58e-9;
  double kappa_r = kTwoPi * 2.7e6;
  double nth_r_upper = 1e-3;
};

/// Rates in rad/s, times in seconds.
struct SystemParams {
  double chi_qc = 0.0;
  double k_c = 0.0;
  double k_c_prime = 0.0;
  double chi_qc_prime = 0.0;
  double t1_q = 1.0;
  double tphi_q = 1.0;
  double t1_c = 1.0;
  double tphi_c = 1.0;
  double nth_q = 0.0;
  double nth_c = 0.0;
  bool higher_order = true;  ///< include k_c_prime and chi_qc_prime
  std::optional<DeviceMetadata> metadata;

  /// Measured device values (qubit, storage cavity).
  static SystemParams device_defaults() {
    SystemParams p;
    p.chi_qc = kTwoPi * 2.59e6;
    p.k_c = kTwoPi * 9.7e3;
    p.k_c_prime = kTwoPi * 0.32e3;
    p.chi_qc_prime = kTwoPi * 5.41e3;
    p.t1_q = 98e-6;
    p.tphi_q = 968e-6;
    p.t1_c = 578e-6;
    p.tphi_c = 4389e-6;
    p.nth_q = 0.013;
    p.nth_c = 0.006;
    p.metadata = DeviceMetadata{};
    return p;
  }

  /// All couplings zero, coherence effectively infinite.
  static SystemParams zero() {
    SystemParams p;
    p.t1_q = p.tphi_q = p.t1_c = p.tphi_c = std::numeric_limits<double>::infinity();
    return p;
  }

  double kappa_c() const { return 1.0 / t1_c; }
  double gamma_q() const { return 1.0 / t1_q; }

  void validate() const {
    for (double r : {chi_qc, k_c, k_c_prime, chi_qc_prime}) {
      if (!std::isfinite(r)) throw ConfigError("system params: rates must be finite");
    }
    for (double t : {t1_q, tphi_q, t1_c, tphi_c}) {
      if (!(t > 0.0)) throw ConfigError("system params: coherence times must be > 0");
    }
    for (double n : {nth_q, nth_c}) {
      if (!(n >= 0.0 && n < 0.5)) throw ConfigError("system params: thermal population must be in [0, 0.5)");
    }
  }
};

/// Which Lindblad channels to include.
struct DecoherenceMask {
  bool qubit_decay = true;
  bool qubit_heating = true;
  bool qubit_dephasing = true;
  bool cavity_decay = true;
  bool cavity_heating = true;
  bool cavity_dephasing = true;

  static DecoherenceMask all() { return {}; }
  static DecoherenceMask none() { return {false, false, false, false, false, false}; }
  static DecoherenceMask cavity_loss() { return {false, false, false, true, true, false}; }
  static DecoherenceMask cavity_only() { return {false, false, false, true, true, true}; }
  static DecoherenceMask qubit_only() { return {true, true, true, false, false, false}; }
};

struct DriveTerm {
  enum class Target { Qubit, Cavity };
  Target target = Target::Qubit;
  double detuning = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
};

namespace detail {

inline void require_qubit_cavity(const Space& s) {
  if (!s.is_qubit_cavity()) throw InvalidDimension("expected a qubit (x) cavity space");
}

}  // namespace detail

/// Diagonal of the dispersive Hamiltonian over the cavity for a given qubit level.
inline Eigen::VectorXd dispersive_levels(const SystemParams& p, int n_fock, bool excited) {
  Eigen::VectorXd e(n_fock);
  const double kp = p.higher_order ? p.k_c_prime : 0.0;
  const double cp = p.higher_order ? p.chi_qc_prime : 0.0;
  for (int n = 0; n < n_fock; ++n) {
    const double nn = n;
    double v = -0.5 * p.k_c * nn * (nn - 1.0) + kp / 6.0 * nn * (nn - 1.0) * (nn - 2.0);
    if (excited) v += -p.chi_qc * nn + 0.5 * cp * nn * (nn - 1.0);
    e(n) = v;
  }
  return e;
}

/// H/hbar = -chi n |e><e| - (K/2) a^2dag a^2 + (K'/6) a^3dag a^3 + (chi'/2) |e><e| a^2dag a^2
inline LinearOperator dispersive_hamiltonian(const SystemParams& p, const Space& space) {
  detail::require_qubit_cavity(space);
  const int nf = space.n_fock();
  Matrix h = Matrix::Zero(space.dim(), space.dim());
  const Eigen::VectorXd g = dispersive_levels(p, nf, false);
  const Eigen::VectorXd e = dispersive_levels(p, nf, true);
  for (int n = 0; n < nf; ++n) {
    h(n, n) = g(n);
    h(nf + n, nf + n) = e(n);
  }
  return {space, std::move(h), "H_disp"};
}

/// Cavity-only self-Kerr Hamiltonian (ancilla in |g>).
inline Matrix cavity_kerr_hamiltonian(const SystemParams& p, int n_fock) {
  return dispersive_levels(p, n_fock, false).cast<cplx>().asDiagonal();
}

inline std::vector<LinearOperator> collapse_operators(const SystemParams& p, const Space& space,
                                                      const DecoherenceMask& mask = {}) {
  detail::require_qubit_cavity(space);
  p.validate();
  const int nf = space.n_fock();
  std::vector<LinearOperator> out;
  auto add = [&](double rate, const Matrix& m, const char* label) {
    if (rate > 0.0 && std::isfinite(rate)) out.emplace_back(space, std::sqrt(rate) * m, label);
  };
  const Matrix a = annihilation(nf).matrix;
  const Matrix n = number_operator(nf).matrix;
  const double kc = p.kappa_c();
  const double gq = p.gamma_q();
  if (mask.cavity_decay) add(kc * (1.0 + p.nth_c), on_cavity(a), "cavity_decay");
  if (mask.cavity_heating) add(kc * p.nth_c, on_cavity(a.adjoint()), "cavity_heating");
  if (mask.cavity_dephasing) add(2.0 / p.tphi_c, on_cavity(n), "cavity_dephasing");
  if (mask.qubit_decay) add(gq * (1.0 + p.nth_q), on_qubit(qubit::lower(), nf), "qubit_decay");
  if (mask.qubit_heating) add(gq * p.nth_q, on_qubit(qubit::raise(), nf), "qubit_heating");
  if (mask.qubit_dephasing) add(2.0 / p.tphi_q, on_qubit(qubit::proj_e(), nf), "qubit_dephasing");
  return out;
}

/// Cavity-only collapse operators (decay, heating, optional dephasing).
inline std::vector<Matrix> cavity_collapse_matrices(const SystemParams& p, int n_fock, bool dephasing) {
  std::vector<Matrix> out;
  const Matrix a = annihilation(n_fock).matrix;
  const double kc = p.kappa_c();
  if (kc > 0.0 && std::isfinite(kc)) out.push_back(std::sqrt(kc * (1.0 + p.nth_c)) * a);
  if (kc * p.nth_c > 0.0 && std::isfinite(kc)) out.push_back(std::sqrt(kc * p.nth_c) * a.adjoint());
  if (dephasing && std::isfinite(2.0 / p.tphi_c) && p.tphi_c > 0.0 && 2.0 / p.tphi_c > 0.0) {
    out.push_back(std::sqrt(2.0 / p.tphi_c) * number_operator(n_fock).matrix);
  }
  return out;
}

/// Qubit drive: A e^{-i(dt+phi)} |e><g| + h.c.; cavity drive: A e^{-i(dt+phi)} a^dag + h.c.
inline LinearOperator drive_hamiltonian(const DriveTerm& term, double t, const Space& space) {
  detail::require_qubit_cavity(space);
  if (!std::isfinite(t)) throw NumericError("drive_hamiltonian: non-finite time");
  const int nf = space.n_fock();
  const cplx c = term.amplitude * std::exp(-kI * (term.detuning * t + term.phase));
  Matrix up;
  if (term.target == DriveTerm::Target::Qubit) {
    up = on_qubit(qubit::raise(), nf);
  } else {
    up = on_cavity(creation(nf).matrix);
  }
  Matrix h = c * up;
  h += h.adjoint().eval();
  return {space, std::move(h), "H_drive"};
}

}  // namespace bqec
