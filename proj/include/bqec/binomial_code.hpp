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

// Lowest-order binomial code: codewords, error words, cardinal states,
// no-jump deformation, recovery unitaries and the photon-number-selective
// ac-Stark (PASS) idle drive that makes photon loss error-transparent.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "bqec/core.hpp"
#include "bqec/system_model.hpp"

namespace bqec {

struct CodeSpec {
  std::string name;
  Vector code0, code1;  ///< logical codewords
  Vector err0, err1;    ///< single-loss images of code0, code1

  int n_fock() const { return static_cast<int>(code0.size()); }

  /// Throws ConfigError unless the words are orthonormal, the two spaces are
  /// orthogonal and the mean photon numbers agree.
  void validate(double tol = 1e-10) const {
    const int d = n_fock();
    for (const Vector* v : {&code1, &err0, &err1}) {
      if (v->size() != d) throw ConfigError("code spec: word lengths differ");
    }
    const std::array<const Vector*, 4> w{&code0, &code1, &err0, &err1};
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        const double want = i == j ? 1.0 : 0.0;
        if (std::abs(w[i]->dot(*w[j]) - want) > tol) throw ConfigError("code spec: words are not orthonormal");
      }
    }
    if (knill_laflamme_violation() > tol) throw ConfigError("code spec: mean photon numbers differ");
  }

  /// max(|<0|n|0> - <1|n|1>|, |<0|n|1>|)
  double knill_laflamme_violation() const {
    const Matrix n = number_operator(n_fock()).matrix;
    const cplx n00 = code0.dot(n * code0), n11 = code1.dot(n * code1), n01 = code0.dot(n * code1);
    return std::max(std::abs(n00 - n11), std::abs(n01));
  }
};

inline Vector fock_superposition(int n_fock, std::initializer_list<std::pair<int, cplx>> terms) {
  Vector v = Vector::Zero(n_fock);
  for (const auto& [n, a] : terms) {
    if (n < 0 || n >= n_fock) throw InvalidDimension("fock index outside truncation");
    v(n) += a;
  }
  return v;
}

/// |0_L> = (|0> + |4>)/sqrt2, |1_L> = |2>, |0_E> = |3>, |1_E> = |1>.
inline CodeSpec lowest_order_binomial(int n_fock = 12) {
  if (n_fock < 5) throw InvalidDimension("binomial code needs at least 5 Fock levels");
  const double r = 1.0 / std::sqrt(2.0);
  CodeSpec c;
  c.name = "binomial";
  c.code0 = fock_superposition(n_fock, {{0, r}, {4, r}});
  c.code1 = fock_vector(n_fock, 2);
  c.err0 = fock_vector(n_fock, 3);
  c.err1 = fock_vector(n_fock, 1);
  return c;
}

/// Fock {|0>, |1>} encoding used as the break-even reference.
inline CodeSpec fock01_code(int n_fock = 12) {
  if (n_fock < 3) throw InvalidDimension("fock01 code needs at least 3 Fock levels");
  CodeSpec c;
  c.name = "fock01";
  c.code0 = fock_vector(n_fock, 0);
  c.code1 = fock_vector(n_fock, 1);
  c.err0 = Vector::Zero(n_fock);
  c.err1 = Vector::Zero(n_fock);
  return c;
}

enum class Subspace { Code, Error };

/// +Z, -Z, +X, -X, +Y, -Y built on the code or error words.
inline std::array<StateVector, 6> cardinal_states(const CodeSpec& spec, Subspace which = Subspace::Code) {
  const Vector& w0 = which == Subspace::Code ? spec.code0 : spec.err0;
  const Vector& w1 = which == Subspace::Code ? spec.code1 : spec.err1;
  const Space s = Space::single(spec.n_fock());
  const double r = 1.0 / std::sqrt(2.0);
  return {StateVector(s, w0),
          StateVector(s, w1),
          StateVector(s, r * (w0 + w1)),
          StateVector(s, r * (w0 - w1)),
          StateVector(s, r * (w0 + kI * w1)),
          StateVector(s, r * (w0 - kI * w1))};
}

inline const std::array<const char*, 6>& cardinal_labels() {
  static const std::array<const char*, 6> labels{"+Z", "-Z", "+X", "-X", "+Y", "-Y"};
  return labels;
}

/// exp(-kappa t n / 2)
inline Matrix no_jump_operator(int n_fock, double kappa, double t) {
  Eigen::VectorXd d(n_fock);
  for (int n = 0; n < n_fock; ++n) d(n) = std::exp(-0.5 * kappa * t * n);
  return d.cast<cplx>().asDiagonal();
}

/// Codewords and error words after no-jump evolution, each renormalized.
inline CodeSpec no_jump_deformation(const CodeSpec& spec, double kappa, double t) {
  if (!(kappa * t < 3.0) || kappa < 0.0 || t < 0.0) throw ConfigError("no_jump_deformation: need 0 <= kappa t < 3");
  const Matrix k0 = no_jump_operator(spec.n_fock(), kappa, t);
  auto map = [&](const Vector& v) -> Vector {
    if (v.norm() == 0.0) return v;
    const Vector w = k0 * v;
    return w / w.norm();
  };
  CodeSpec out = spec;
  out.name = spec.name + "_deformed";
  out.code0 = map(spec.code0);
  out.code1 = map(spec.code1);
  out.err0 = map(spec.err0);
  out.err1 = map(spec.err1);
  return out;
}

/// 2 (kappa t)^2 exp(-2 kappa t)
inline double two_photon_loss_prob(double kappa, double t) {
  if (kappa * t < 0.0) throw ConfigError("two_photon_loss_prob: kappa t must be >= 0");
  const double x = kappa * t;
  return 2.0 * x * x * std::exp(-2.0 * x);
}

/// Unitary U with U sources[i] = targets[i]; the complement of the sources is
/// sent to the complement of the targets by the closest unitary (polar part),
/// which is the identity where the two complements coincide.
inline Matrix isometry_completion(const std::vector<Vector>& sources, const std::vector<Vector>& targets) {
  if (sources.size() != targets.size() || sources.empty()) {
    throw InvalidDimension("isometry_completion: need matching non-empty source and target lists");
  }
  const Eigen::Index d = sources.front().size();
  Matrix s(d, static_cast<Eigen::Index>(sources.size())), t(d, static_cast<Eigen::Index>(targets.size()));
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].size() != d || targets[i].size() != d) throw InvalidDimension("isometry_completion: length mismatch");
    s.col(static_cast<Eigen::Index>(i)) = sources[i];
    t.col(static_cast<Eigen::Index>(i)) = targets[i];
  }
  const Matrix gram_s = s.adjoint() * s, gram_t = t.adjoint() * t;
  if ((gram_s - gram_t).cwiseAbs().maxCoeff() > 1e-8) {
    throw ConfigError("isometry_completion: source and target overlaps differ");
  }
  const Matrix id = Matrix::Identity(d, d);
  // projectors onto the spans (sources may be non-orthonormal only if the Gram matrices match)
  const Matrix ps = s * gram_s.inverse() * s.adjoint();
  const Matrix pt = t * gram_t.inverse() * t.adjoint();
  const Matrix m = t * gram_s.inverse() * s.adjoint() + (id - pt) * (id - ps);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

enum class RecoveryCase { NoJump, Jump };

/// Exact recovery unitary on the cavity. NoJump maps the codewords deformed
/// for time t back to the codewords; Jump maps the error words to them.
inline LinearOperator ideal_recovery(const CodeSpec& spec, RecoveryCase which, double kappa = 0.0, double t = 0.0) {
  const Space s = Space::single(spec.n_fock());
  if (which == RecoveryCase::NoJump) {
    const CodeSpec def = no_jump_deformation(spec, kappa, t);
    return {s, isometry_completion({def.code0, def.code1}, {spec.code0, spec.code1}), "recovery_no_jump"};
  }
  const CodeSpec def = no_jump_deformation(spec, kappa, t);
  return {s, isometry_completion({def.err0, def.err1}, {spec.code0, spec.code1}), "recovery_jump"};
}

/// First stage of the two-layer correction: error words into the deformed
/// code basis.
inline LinearOperator deformed_code_recovery(const CodeSpec& spec, double kappa, double t) {
  const CodeSpec def = no_jump_deformation(spec, kappa, t);
  return {Space::single(spec.n_fock()),
          isometry_completion({def.err0, def.err1}, {def.code0, def.code1}),
          "recovery_deformed"};
}

// ---------------------------------------------------------------------------
// PASS idle drive

struct PassCalibration {
  double detuning = 0.0;         ///< drive detuning from the bare ancilla transition, rad/s
  double amplitude = 0.0;        ///< drive coupling (sigma_x coefficient), rad/s
  std::array<double, 4> rates{};  ///< phase accumulation rates f_1..f_4 relative to vacuum, Hz

  void validate() const {
    if (!std::isfinite(detuning) || !std::isfinite(amplitude)) throw ConfigError("pass: non-finite drive");
    for (double f : rates) {
      if (!std::isfinite(f)) throw ConfigError("pass: non-finite phase rate");
    }
  }
};

/// (f4 - f2) - (f3 - f1)
inline double pass_residual(const PassCalibration& cal) {
  return (cal.rates[3] - cal.rates[1]) - (cal.rates[2] - cal.rates[0]);
}

/// Ancilla-ground dressed energies (rad/s) of each Fock level in the frame of
/// a drive detuned by `detuning` from the bare ancilla transition.
inline Eigen::VectorXd pass_dressed_levels(const SystemParams& p, double detuning, double amplitude, int n_fock) {
  const Eigen::VectorXd g = dispersive_levels(p, n_fock, false);
  const Eigen::VectorXd e = dispersive_levels(p, n_fock, true);
  Eigen::VectorXd out(n_fock);
  for (int n = 0; n < n_fock; ++n) {
    const double eg = g(n), ee = e(n) - detuning;
    const double mid = 0.5 * (eg + ee), half = 0.5 * (ee - eg);
    const double r = std::sqrt(half * half + amplitude * amplitude);
    // branch continuously connected to |g> as amplitude -> 0
    out(n) = half >= 0.0 ? mid - r : mid + r;
  }
  return out;
}

/// f_n = (E_n - E_0) / 2 pi for n = 1..4.
inline std::array<double, 4> phase_rates(const SystemParams& p, double detuning, double amplitude) {
  const Eigen::VectorXd lv = pass_dressed_levels(p, detuning, amplitude, 5);
  std::array<double, 4> f{};
  for (int n = 1; n <= 4; ++n) f[static_cast<std::size_t>(n - 1)] = (lv(n) - lv(0)) / kTwoPi;
  return f;
}

inline PassCalibration pass_calibration(const SystemParams& p, double detuning, double amplitude) {
  PassCalibration c;
  c.detuning = detuning;
  c.amplitude = amplitude;
  c.rates = phase_rates(p, detuning, amplitude);
  return c;
}

/// Sweep the drive amplitude and return the first zero crossing of the
/// residual (linear interpolation between sweep points).
inline PassCalibration calibrate_pass(const SystemParams& p, double detuning, const std::vector<double>& amplitudes) {
  for (int n = 0; n <= 4; ++n) {
    if (std::abs(detuning + p.chi_qc * n) < 1e-9 * std::max(1.0, std::abs(p.chi_qc))) {
      throw ConfigError("calibrate_pass: drive resonant with a number-split line");
    }
  }
  double prev_a = 0.0, prev_r = 0.0;
  bool have_prev = false;
  for (double a : amplitudes) {
    if (!(a > 0.0)) continue;
    const double r = pass_residual(pass_calibration(p, detuning, a));
    if (have_prev && ((prev_r < 0.0) != (r < 0.0) || r == 0.0)) {
      const double root = r == prev_r ? a : prev_a + (a - prev_a) * prev_r / (prev_r - r);
      return pass_calibration(p, detuning, root);
    }
    prev_a = a;
    prev_r = r;
    have_prev = true;
  }
  throw CalibrationError("calibrate_pass: residual never changes sign over the sweep");
}

inline PassCalibration calibrate_pass(const SystemParams& p, double detuning) {
  std::vector<double> sweep;
  for (int k = 1; k <= 60; ++k) sweep.push_back(kTwoPi * 5e3 * k);
  return calibrate_pass(p, detuning, sweep);
}

/// Cavity Hamiltonian during a PASS idle: dressed ground energies as a
/// diagonal operator (ancilla adiabatically eliminated).
inline Matrix pass_cavity_hamiltonian(const SystemParams& p, const PassCalibration& cal, int n_fock) {
  return pass_dressed_levels(p, cal.detuning, cal.amplitude, n_fock).cast<cplx>().asDiagonal();
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline nlohmann::json vector_to_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
  return a;
}

inline Vector vector_from_json(const nlohmann::json& j, const char* key) {
  if (!j.is_array()) throw ConfigError(std::string("code spec: ") + key + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if (e.is_number()) {
      v(static_cast<Eigen::Index>(i)) = e.get<double>();
    } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
      v(static_cast<Eigen::Index>(i)) = cplx(e[0].get<double>(), e[1].get<double>());
    } else {
      throw ConfigError(std::string("code spec: bad entry in ") + key);
    }
  }
  return v;
}

}  // namespace detail

inline nlohmann::json code_to_json(const CodeSpec& c) {
  return {{"name", c.name},
          {"codeword_0", detail::vector_to_json(c.code0)},
          {"codeword_1", detail::vector_to_json(c.code1)},
          {"error_0", detail::vector_to_json(c.err0)},
          {"error_1", detail::vector_to_json(c.err1)}};
}

/// Accepts real or [re, im] entries; validates the result.
inline CodeSpec code_from_json(const nlohmann::json& j) {
  static const std::array<const char*, 5> keys{"name", "codeword_0", "codeword_1", "error_0", "error_1"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }) == keys.end()) {
      throw ConfigError("code spec: unknown key " + it.key());
    }
  }
  CodeSpec c;
  c.name = j.value("name", std::string("custom"));
  for (const char* k : {"codeword_0", "codeword_1", "error_0", "error_1"}) {
    if (!j.contains(k)) throw ConfigError(std::string("code spec: missing ") + k);
  }
  c.code0 = detail::vector_from_json(j.at("codeword_0"), "codeword_0");
  c.code1 = detail::vector_from_json(j.at("codeword_1"), "codeword_1");
  c.err0 = detail::vector_from_json(j.at("error_0"), "error_0");
  c.err1 = detail::vector_from_json(j.at("error_1"), "error_1");
  c.validate();
  return c;
}

}  // namespace bqec
