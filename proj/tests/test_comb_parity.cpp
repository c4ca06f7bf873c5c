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

#include <catch_amalgamated.hpp>

#include "bqec/comb_parity.hpp"

using namespace bqec;
using Catch::Approx;

namespace {

const double kChi = kTwoPi * 2.59e6;

DensityMatrix fock_density(int n, int nf = 12) {
  return DensityMatrix::from_pure(StateVector(Space::single(nf), fock_vector(nf, n)));
}

SystemParams chi_only() {
  SystemParams p = SystemParams::zero();
  p.chi_qc = kChi;
  return p;
}

// Rotation angle of a resonantly driven block: P(e) = sin^2(angle).
double angle_from_excitation(double pe) { return std::asin(std::sqrt(std::clamp(pe, 0.0, 1.0))); }

}  // namespace

TEST_CASE("comb envelope values") {
  CombSpec s = CombSpec::ideal(kChi);
  s.delay = 40e-9;
  CHECK(comb_envelope(s, s.delay) == Approx(2.0 * s.m_pairs * s.omega).epsilon(1e-12));

  CombSpec d = CombSpec::device(kChi);
  d.edge = 0.0;
  CHECK(std::abs(comb_envelope(d, 0.0)) < 0.15 * 2.0 * d.m_pairs * d.omega);

  CombSpec e = CombSpec::device(kChi);
  CHECK(comb_envelope(e, 0.0) == Approx(0.0).margin(1e-6));
  CHECK(std::abs(comb_envelope(e, e.duration)) < 1e-6 * e.omega);
  CHECK_THROWS_AS(comb_envelope(e, -1e-9), std::out_of_range);
  CHECK_THROWS_AS(comb_envelope(e, e.duration + 1e-9), std::out_of_range);

  // recurrence against direct cosine sum
  s.scalings.assign(static_cast<std::size_t>(s.m_pairs), 1.0);
  s.scalings[3] = 0.7;
  for (double t : {3e-9, 77e-9, 201e-9}) {
    double ref = 0.0;
    for (int n = 1; n <= s.m_pairs; ++n) ref += s.scaling(n) * 2.0 * std::cos((2 * n - 1) * kChi * (t - s.delay));
    CHECK(comb_envelope(s, t) == Approx(s.omega * ref).epsilon(1e-10));
  }
}

TEST_CASE("comb spec validation") {
  CombSpec s = CombSpec::ideal(kChi);
  s.m_pairs = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = CombSpec::ideal(kChi);
  s.duration = 8e-9;
  s.edge = 5e-9;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = CombSpec::ideal(kChi);
  s.omega = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("comb spectrum sits at odd multiples of chi") {
  CombSpec s = CombSpec::ideal(kChi, 4);
  s.duration = 4.0 * kTwoPi / kChi;  // bin width chi/4
  const int n = 4096;
  std::vector<double> x(n);
  for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] = comb_envelope(s, s.duration * k / n);
  const int bins = 4 * (2 * s.m_pairs + 2);
  for (int b = 0; b <= bins; ++b) {
    cplx acc = 0.0;
    for (int k = 0; k < n; ++k) acc += x[static_cast<std::size_t>(k)] * std::exp(-kI * (kTwoPi * b * k / n));
    const double amp = std::abs(acc) / n;
    const bool on_comb = b % 4 == 0 && (b / 4) % 2 == 1 && b / 4 <= 2 * s.m_pairs - 1;
    if (on_comb) {
      CHECK(amp == Approx(s.omega).epsilon(1e-9));
    } else {
      CHECK(amp < 1e-9 * s.omega);
    }
  }
}

TEST_CASE("analytic rotation angles") {
  CombSpec s = CombSpec::ideal(kChi);
  CHECK(std::abs(analytic_xi(s, kTwoPi / kChi)) < 1e-12);
  for (int m = 1; m <= 5; ++m) CHECK(std::abs(analytic_xi(s, m * kPi / kChi)) < 1e-12);
  CHECK(analytic_mu(s, kTwoPi / kChi) == Approx(kPi / 2.0).epsilon(1e-12));
  CHECK(analytic_mu(s, 0.0) == 0.0);

  CombSpec one = CombSpec::ideal(kChi, 1);
  CHECK(analytic_xi(one, kPi / 2.0 / kChi) == Approx(2.0 * one.omega / kChi).epsilon(1e-14));

  const double t = 3.0 * kPi / kChi;
  CombSpec q = CombSpec::ideal(kChi);
  q.omega = kPi / (2.0 * t);
  CHECK(analytic_mu(q, t) == Approx(kPi / 2.0).epsilon(1e-12));
}

TEST_CASE("analytic angles match block simulation of the constant comb") {
  const SystemParams p = chi_only();
  for (double ratio : {0.25, 0.125}) {
    CombSpec s = CombSpec::ideal(kChi);
    s.omega = ratio * kChi;
    for (double frac : {0.1, 0.23, 0.37, 0.5}) {
      s.duration = frac * kTwoPi / kChi;
      const auto ex = comb_excitation(s, p, 3, false, 0.01e-9);
      const double xi = analytic_xi(s, s.duration);
      const double mu = analytic_mu(s, s.duration);
      INFO("omega/chi " << ratio << " T chi/2pi " << frac);
      CHECK(std::abs(angle_from_excitation(ex[2]) - std::abs(std::remainder(xi, kPi))) < 0.02);
      if (mu <= kPi / 2.0) CHECK(std::abs(angle_from_excitation(ex[1]) - mu) < 0.02);
    }
  }
}

TEST_CASE("decoherence-free parity map of the device comb") {
  const SystemParams p = SystemParams::device_defaults();
  const CombSpec s = CombSpec::device(p.chi_qc);
  for (int n = 0; n <= 5; ++n) {
    const auto rep = simulate_parity_map(fock_density(n), s, p);
    INFO("fock " << n);
    CHECK(rep.fock_error(n) < 0.01);
    CHECK(rep.p_excited + rep.p_ground == Approx(1.0).margin(1e-9));
    const double qnd = n % 2 == 0 ? rep.qnd_fidelity_g : rep.qnd_fidelity_e;
    CHECK(qnd > 0.99);
    for (double x : rep.excitation) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0 + 1e-12);
    }
  }
  const auto code = simulate_parity_map(fock_density(0), s, p);
  CHECK(code.code_error < 0.01);
  CHECK(code.error_error < 0.01);
}

TEST_CASE("parity map on a superposition keeps coherence") {
  const SystemParams p = SystemParams::device_defaults();
  const CombSpec s = CombSpec::device(p.chi_qc);
  Vector v = Vector::Zero(12);
  v(0) = v(4) = 1.0 / std::sqrt(2.0);
  const auto rho = DensityMatrix::from_pure(StateVector(Space::single(12), v));
  const auto rep = simulate_parity_map(rho, s, p);
  CHECK(rep.p_excited < 0.01);
  // the comb imprints a deterministic relative phase between |0> and |4>
  CHECK(std::abs(rep.post_g.matrix(0, 4)) == Approx(0.5).margin(0.01));
}

TEST_CASE("parity map with device decoherence") {
  const SystemParams p = SystemParams::device_defaults();
  const CombSpec s = CombSpec::device(p.chi_qc);
  ParityOptions opt;
  opt.decoherence = true;
  opt.readout = MeasurementModel::device_defaults();
  opt.n_report = 6;
  const auto rep = simulate_parity_map(fock_density(0, 8), s, p, opt);
  // measured detection error 1.1% with a one point band
  CHECK(rep.code_error > 0.001);
  CHECK(rep.code_error < 0.021);
  CHECK(rep.p_excited + rep.p_ground == Approx(1.0).margin(1e-6));
}

TEST_CASE("parity map warns on truncation") {
  const SystemParams p = SystemParams::device_defaults();
  Warnings sink;
  simulate_parity_map(fock_density(11), CombSpec::device(p.chi_qc), p, {}, &sink);
  CHECK_FALSE(sink.empty());
  Warnings quiet;
  simulate_parity_map(fock_density(2), CombSpec::device(p.chi_qc), p, {}, &quiet);
  CHECK(quiet.empty());
  CHECK_THROWS_AS(simulate_parity_map(DensityMatrix::from_pure(product_state(ground_qubit(), fock_vector(4, 0))),
                                      CombSpec::device(p.chi_qc), p),
                  InvalidDimension);
}

TEST_CASE("amplitude scaling calibration") {
  CHECK(calibrate_scaling(kTwoPi * 20e6, 0.0, kTwoPi * 1e6) == 0.0);
  const double delta = kTwoPi * 15e6;
  CHECK(stark_shift_magnitude(delta / 3.0, 3.0, delta) == Approx((std::sqrt(2.0) - 1.0) * delta / 2.0).epsilon(1e-14));
  for (double lambda : {0.0, 0.3, 1.0, 1.7, 4.2}) {
    for (double det : {-kTwoPi * 8e6, kTwoPi * 30e6}) {
      const double omega0 = kTwoPi * 2e6;
      const double shift = stark_shift_magnitude(lambda, omega0, det);
      CHECK(std::abs(calibrate_scaling(det, shift, omega0) - lambda) < 1e-10);
      CHECK(simulated_stark_shift(lambda, omega0, det) == Approx(shift).epsilon(1e-9).margin(1e-6));
    }
  }
  CHECK_THROWS_AS(calibrate_scaling(0.0, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(calibrate_scaling(1.0, -1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(calibrate_scaling(1.0, 1.0, 0.0), ConfigError);
}

TEST_CASE("pulse timing optimization") {
  const SystemParams p = SystemParams::device_defaults();
  const CombSpec base = CombSpec::device(p.chi_qc);

  TimingSearch single;
  single.durations = {300e-9};
  single.delays = {20e-9};
  const auto r1 = optimize_pulse_timing(base, p, single);
  CHECK(r1.duration == 300e-9);
  CHECK(r1.delay == 20e-9);

  TimingSearch empty;
  CHECK_THROWS_AS(optimize_pulse_timing(base, p, empty), ConfigError);

  TimingSearch no_delay;
  no_delay.delays = {0.0};
  for (double t = 150e-9; t <= 700e-9 + 1e-12; t += 25e-9) no_delay.durations.push_back(t);
  const auto r0 = optimize_pulse_timing(base, p, no_delay);
  const double period = kTwoPi / p.chi_qc;
  CHECK(r0.duration >= 0.8 * period);
  CHECK(r0.duration <= 1.4 * period);

  TimingSearch grid;
  for (double t = 200e-9; t <= 340e-9 + 1e-12; t += 20e-9) grid.durations.push_back(t);
  for (double d = 20e-9; d <= 80e-9 + 1e-12; d += 15e-9) grid.delays.push_back(d);
  grid.ancilla_decoherence = true;
  const auto r = optimize_pulse_timing(base, p, grid);
  for (std::size_t i = 0; i < grid.durations.size(); ++i) {
    for (std::size_t j = 0; j < grid.delays.size(); ++j) CHECK(r.objective >= r.grid[i][j]);
  }
  CombSpec best = base;
  best.duration = r.duration;
  best.delay = r.delay;
  const auto ex = comb_excitation(best, p, 5);
  for (int n = 0; n <= 5; ++n) CHECK((n % 2 == 0 ? ex[n] : 1.0 - ex[n]) < 0.01);
}

TEST_CASE("ramsey parity map") {
  const SystemParams p = chi_only();
  RamseySpec instant;
  instant.pulse_duration = 0.0;
  CHECK(ramsey_parity_map(fock_density(1), p, instant).excitation[1] == Approx(1.0).margin(1e-12));
  CHECK(ramsey_parity_map(fock_density(0), p, instant).p_excited == Approx(0.0).margin(1e-12));

  const SystemParams d = SystemParams::device_defaults();
  const auto ramsey = ramsey_parity_map(fock_density(8), d);
  const auto comb = simulate_parity_map(fock_density(8), CombSpec::device(d.chi_qc), d);
  CHECK(comb.fock_error(8) < ramsey.fock_error(8));
}
