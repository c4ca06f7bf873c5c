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

#include <random>

#include "bqec/qec_protocol.hpp"

using namespace bqec;
using Catch::Approx;

namespace {

const SystemParams& device() {
  static const SystemParams p = SystemParams::device_defaults();
  return p;
}

QecModel model(QecMode mode, int layers, int nf = 12) {
  auto cfg = QecCycleConfig::preset(mode, layers, device());
  cfg.n_fock = nf;
  return prepare_qec_model(device(), cfg, lowest_order_binomial(nf));
}

double state_fidelity(const Vector& target, const Vector& psi) {
  return std::norm(target.dot(psi)) / (target.squaredNorm() * psi.squaredNorm());
}

/// <target| rho_cavity |target> after tracing out the ancilla.
double cavity_fidelity(const Vector& target_joint, const Vector& psi, int nf) {
  const Vector t = target_joint.head(nf);
  const double n2 = psi.squaredNorm();
  return (std::norm(t.dot(psi.head(nf))) + std::norm(t.dot(psi.tail(nf)))) / n2;
}

FeedbackPolicy no_feedback(int layers) {
  FeedbackPolicy p;
  for (int l = 0; l < layers; ++l) p.table.push_back({std::vector<FeedbackAction>{}, std::vector<FeedbackAction>{}});
  return p;
}

Matrix depolarize(const Matrix& rho, double p) {
  return (1.0 - p) * rho + p * 0.5 * rho.trace() * Matrix::Identity(2, 2);
}

}  // namespace

TEST_CASE("mode and baseline names round-trip") {
  for (auto m : {QecMode::Ideal, QecMode::Intrinsic, QecMode::BudgetMatched, QecMode::Physical}) {
    CHECK(parse_qec_mode(to_string(m)) == m);
  }
  for (auto b : {Baseline::Fock01, Baseline::Transmon, Baseline::UncorrectedBinomial}) CHECK(parse_baseline(to_string(b)) == b);
  CHECK_THROWS_AS(parse_qec_mode("noisy"), ConfigError);
  CHECK_THROWS_AS(parse_baseline("cat"), ConfigError);
}

TEST_CASE("cycle configuration invariants") {
  const auto cfg = QecCycleConfig::preset(QecMode::BudgetMatched, 1, device());
  CHECK(cfg.layer_duration() == Approx(92.46e-6).epsilon(1e-12));
  CHECK(QecCycleConfig::preset(QecMode::BudgetMatched, 2, device()).cycle_duration() == Approx(184.92e-6).epsilon(1e-12));
  REQUIRE(cfg.pass.has_value());

  auto bad = cfg;
  bad.t_wait = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.layers = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.latency = -1e-9;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK_THROWS_AS(FeedbackPolicy::standard(3), ConfigError);
  auto pol = FeedbackPolicy::standard(1);
  pol.table[0][1] = {FeedbackAction::U1, FeedbackAction::ResetPi};
  CHECK_THROWS_AS(pol.validate(1), ConfigError);
  CHECK_THROWS_AS(FeedbackPolicy::standard(2).validate(1), ConfigError);

  // a one-layer model has no U2/U3
  auto wrong = FeedbackPolicy::standard(1);
  wrong.table[0][0] = {FeedbackAction::U2};
  CHECK_THROWS_AS(prepare_qec_model(device(), cfg, lowest_order_binomial(12), wrong), ConfigError);
}

TEST_CASE("error-free cycles are an exact fixed point") {
  for (int layers : {1, 2}) {
    for (auto timing : {CaseZeroTiming::AfterReadout, CaseZeroTiming::BeforeNextWait}) {
      auto cfg = QecCycleConfig::preset(QecMode::Ideal, layers, device());
      cfg.case_zero = timing;
      const auto m = prepare_qec_model(device(), cfg);
      RepetitiveOptions opt;
      opt.n_cycles = 6;
      opt.n_traj = 2;
      const auto r = run_repetitive(m, opt);
      REQUIRE(r.points.size() == 7);
      for (const auto& pt : r.points) CHECK(std::abs(pt.f_chi - 1.0) < 1e-8);
      for (const auto& rec : r.first_cycle) CHECK(rec.outcomes == std::string(static_cast<std::size_t>(layers), '0'));

      Rng rng(4);
      for (int k = 0; k < 6; ++k) {
        const StateVector in(m.space, cardinal_input(m, k));
        const auto out = run_cycle(in, m, rng);
        CHECK(state_fidelity(in.amplitudes, out.state.amplitudes) > 1.0 - 1e-8);
      }
    }
  }
}

TEST_CASE("zero cycles give unit process fidelity") {
  const auto m = model(QecMode::Physical, 1);
  RepetitiveOptions opt;
  opt.n_cycles = 0;
  opt.n_traj = 3;
  const auto r = run_repetitive(m, opt);
  REQUIRE(r.points.size() == 1);
  CHECK(r.points[0].f_chi == Approx(1.0).margin(1e-12));
  CHECK(r.first_cycle.empty());
}

TEST_CASE("a single forced photon jump is detected and corrected") {
  const Matrix a = on_cavity(annihilation(12).matrix);
  for (int layers : {1, 2}) {
    const auto m = model(QecMode::Ideal, layers);
    for (int jump_layer = 0; jump_layer < layers; ++jump_layer) {
      for (double frac : {0.25, 0.5, 0.75}) {
        for (int k = 0; k < 6; ++k) {
          Rng rng(static_cast<std::uint64_t>(k));
          TrajectoryState st{cardinal_input(m, k), 0.5, 0.0};
          const auto rec = run_cycle_trajectory(st, m, m.policy, rng, ForcedJump{jump_layer, frac * m.config.t_wait, a});
          std::string expect(static_cast<std::size_t>(layers), '0');
          expect[static_cast<std::size_t>(jump_layer)] = '1';
          CHECK(rec.outcomes == expect);
          CHECK(state_fidelity(cardinal_input(m, k), st.psi) > 0.98);
        }
      }
    }
  }
}

TEST_CASE("photon-number-resolved Stark drive removes the jump-time dependence") {
  const Matrix a = on_cavity(annihilation(12).matrix);
  auto cfg = QecCycleConfig::preset(QecMode::Ideal, 1, device());
  cfg.pass.reset();
  const auto bare = prepare_qec_model(device(), cfg);
  const auto pass = model(QecMode::Ideal, 1);
  auto fid = [&](const QecModel& m, double frac) {
    Rng rng(1);
    TrajectoryState st{cardinal_input(m, 2), 0.5, 0.0};
    run_cycle_trajectory(st, m, m.policy, rng, ForcedJump{0, frac * m.config.t_wait, a});
    return state_fidelity(cardinal_input(m, 2), st.psi);
  };
  CHECK(fid(bare, 0.5) > 0.98);
  CHECK(fid(bare, 0.2) < 0.9);
  CHECK(fid(pass, 0.2) > 0.98);
}

TEST_CASE("one cycle on +X with and without correction") {
  const int nf = 12;
  const auto m = model(QecMode::Physical, 1);
  const Vector target = cardinal_input(m, 2);
  const auto none = no_feedback(1);
  const double t_rest = m.layer_duration() - m.config.t_wait;
  auto mean_fidelity = [&](const FeedbackPolicy& pol, bool remove_free_evolution) {
    const auto f = run_parallel(3000, 21, 0, [&](std::size_t, Rng& rng) {
      TrajectoryState st{target, rng.uniform(), 0.0};
      run_cycle_trajectory(st, m, pol, rng);
      if (remove_free_evolution) {
        for (int i = 0; i < 2 * nf; ++i) {
          st.psi(i) *= std::exp(kI * (m.h_wait(i, i).real() * m.config.t_wait + m.h_idle(i, i).real() * t_rest));
        }
      }
      return cavity_fidelity(target, st.psi, nf);
    });
    double s = 0.0;
    for (double x : f) s += x;
    return s / static_cast<double>(f.size());
  };
  const double with = mean_fidelity(m.policy, false);
  const double without = mean_fidelity(none, true);
  INFO("with correction " << with << ", without " << without);
  CHECK(std::abs(with - 0.88) <= 0.04);
  CHECK(with > without);
  CHECK(std::abs(without - 0.81) <= 0.04);
}

TEST_CASE("process tomography of elementary channels") {
  const auto id = process_tomography([](const Matrix& r) { return r; });
  CHECK(id.fidelity() == Approx(1.0).margin(1e-12));
  CHECK((id.chi - Matrix(Eigen::Vector4cd(1, 0, 0, 0).asDiagonal())).norm() < 1e-12);

  const auto dep = process_tomography([](const Matrix& r) { return depolarize(r, 1.0); });
  CHECK(dep.fidelity() == Approx(0.25).margin(1e-12));
  CHECK(dep.normalized_fidelity() == Approx(0.0).margin(1e-12));

  const auto x = process_tomography([](const Matrix& r) { return Matrix(qubit::sx() * r * qubit::sx()); });
  CHECK(x.chi(1, 1).real() == Approx(1.0).margin(1e-12));
  CHECK(x.fidelity() == Approx(0.0).margin(1e-12));

  // total leakage reads as the fully mixed state
  const auto lost = process_tomography([](const Matrix&) { return Matrix::Zero(2, 2).eval(); });
  CHECK(lost.fidelity() == Approx(0.25).margin(1e-12));

  // partial depolarizing: F = 1 - 3p/4
  const auto part = process_tomography([](const Matrix& r) { return depolarize(r, 0.2); });
  CHECK(part.fidelity() == Approx(0.85).margin(1e-12));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix h(2, 2);
    h << g(rng), cplx(g(rng), g(rng)), 0, g(rng);
    h(1, 0) = std::conj(h(0, 1));
    const Matrix u = expm(-kI * h);
    const double gamma = std::uniform_real_distribution<double>(0, 1)(rng);
    const auto pm = process_tomography([&](const Matrix& r) {
      Matrix k0 = Matrix::Zero(2, 2), k1 = Matrix::Zero(2, 2);
      k0 << 1, 0, 0, std::sqrt(1 - gamma);
      k1(0, 1) = std::sqrt(gamma);
      const Matrix v = u * r * u.adjoint();
      return Matrix(k0 * v * k0.adjoint() + k1 * v * k1.adjoint());
    });
    CHECK((pm.chi - pm.chi.adjoint()).norm() < 1e-12);
    CHECK(std::abs(pm.chi.trace() - 1.0) < 1e-6);
    Eigen::SelfAdjointEigenSolver<Matrix> es(pm.chi);
    CHECK(es.eigenvalues().minCoeff() > -1e-6);
  }

  Warnings w;
  std::array<Matrix, 6> bad;
  // both Z eigenstates reset to +Z while X and Y survive: not completely positive
  const Eigen::Vector3d dirs[6] = {{0, 0, 1}, {0, 0, 1}, {1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
  for (std::size_t k = 0; k < 6; ++k) bad[k] = density_from_bloch(dirs[k]);
  const auto projected = process_tomography(bad, &w);
  CHECK_FALSE(w.messages.empty());
  Eigen::SelfAdjointEigenSolver<Matrix> es(projected.chi);
  CHECK(es.eigenvalues().minCoeff() > -1e-9);
  CHECK(std::abs(projected.chi.trace() - 1.0) < 1e-9);
}

TEST_CASE("decay fit recovers synthetic parameters") {
  std::vector<FidelityPoint> pts;
  for (int k = 0; k <= 12; ++k) {
    const double t = k * 92.46e-6;
    pts.push_back({t, 0.71 * std::exp(-t / 755e-6) + 0.25, 0.0});
  }
  const auto fit = fit_decay(pts);
  CHECK(std::abs(fit.amplitude / 0.71 - 1.0) < 1e-6);
  CHECK(std::abs(fit.lifetime / 755e-6 - 1.0) < 1e-6);
  CHECK(fit.offset == 0.25);
  CHECK(fit.residual_norm < 1e-8);

  std::vector<FidelityPoint> flat;
  for (int k = 0; k < 8; ++k) flat.push_back({k * 1e-4, 0.25, 0.0});
  CHECK_THROWS_AS(fit_decay(flat), FitError);
  CHECK_THROWS_AS(fit_decay({pts[0], pts[1]}), ConfigError);
  CHECK_THROWS_AS(fit_decay({pts[0], pts[1], pts[1]}), ConfigError);
}

TEST_CASE("decay fit error bars cover the truth") {
  std::mt19937_64 rng(2026);
  std::normal_distribution<double> noise(0.0, 0.01);
  int covered = 0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    std::vector<FidelityPoint> pts;
    for (int k = 0; k <= 15; ++k) {
      const double t = k * 92.46e-6;
      pts.push_back({t, 0.71 * std::exp(-t / 755e-6) + 0.25 + noise(rng), 0.0});
    }
    const auto fit = fit_decay(pts);
    if (std::abs(fit.lifetime - 755e-6) <= 3.0 * fit.lifetime_err) ++covered;
  }
  CHECK(covered >= 0.95 * seeds);
}

TEST_CASE("transmon baseline matches the closed form") {
  SystemParams p = device();
  p.nth_q = 0.0;
  std::vector<double> ts;
  for (int k = 0; k <= 40; ++k) ts.push_back(k * 10e-6);
  const auto pts = baseline_lifetimes(p, Baseline::Transmon, ts);
  const double t2 = 1.0 / (0.5 / p.t1_q + 1.0 / p.tphi_q);
  double worst = 0.0;
  for (const auto& pt : pts) {
    const double exact = (1.0 + std::exp(-pt.time / p.t1_q) + 2.0 * std::exp(-pt.time / t2)) / 4.0;
    worst = std::max(worst, std::abs(pt.f_chi - exact));
  }
  CHECK(worst < 1e-3);

  // short-time rate of the fitted curve
  std::vector<double> early;
  for (int k = 0; k <= 10; ++k) early.push_back(k * 0.05 * p.t1_q);
  const auto fit = fit_decay(baseline_lifetimes(p, Baseline::Transmon, early));
  const double rate = (1.0 / 3.0) / p.t1_q + (2.0 / 3.0) / t2;
  CHECK(std::abs((1.0 / fit.lifetime) / rate - 1.0) < 0.05);
}

TEST_CASE("unprotected baselines") {
  const std::vector<double> zero{0.0};
  for (auto b : {Baseline::Fock01, Baseline::Transmon, Baseline::UncorrectedBinomial}) {
    CHECK(baseline_lifetimes(device(), b, zero)[0].f_chi == Approx(1.0).margin(1e-12));
  }
  std::vector<double> ts;
  for (int k = 0; k <= 10; ++k) ts.push_back(k * 100e-6);
  const double fock = fit_decay(baseline_lifetimes(device(), Baseline::Fock01, ts)).lifetime;
  const double bin = fit_decay(baseline_lifetimes(device(), Baseline::UncorrectedBinomial, ts)).lifetime;
  const double tmon = fit_decay(baseline_lifetimes(device(), Baseline::Transmon, ts)).lifetime;
  INFO("fock01 " << fock * 1e6 << " us, binomial " << bin * 1e6 << " us, transmon " << tmon * 1e6 << " us");
  CHECK(fock > bin);
  CHECK(bin > tmon);
  // amplitude damping of |0>,|1>: 1/tau is between 1/T1 and (1/3 + 2/3 * 1/2)/T1
  CHECK(fock > 0.9 * device().t1_c);
  CHECK(fock < 1.5 * device().t1_c);
  CHECK_THROWS_AS(baseline_lifetimes(device(), Baseline::Fock01, {-1.0}), ConfigError);
}

TEST_CASE("snapshot times follow the cycle duration") {
  for (int layers : {1, 2}) {
    const auto m = model(QecMode::BudgetMatched, layers);
    RepetitiveOptions opt;
    opt.n_cycles = 4;
    opt.n_traj = 5;
    const auto r = run_repetitive(m, opt);
    for (std::size_t k = 0; k < r.points.size(); ++k) {
      CHECK(r.points[k].time == Approx(static_cast<double>(k) * layers * 92.46e-6).epsilon(1e-12));
    }
  }
}

TEST_CASE("feedback is deterministic for a fixed seed") {
  const auto m = model(QecMode::Physical, 2);
  RepetitiveOptions opt;
  opt.n_cycles = 3;
  opt.n_traj = 20;
  opt.seed = 99;
  opt.threads = 1;
  const auto a = run_repetitive(m, opt);
  opt.threads = 3;
  const auto b = run_repetitive(m, opt);
  REQUIRE(a.first_cycle.size() == b.first_cycle.size());
  for (std::size_t i = 0; i < a.first_cycle.size(); ++i) {
    CHECK(a.first_cycle[i].outcomes == b.first_cycle[i].outcomes);
    CHECK(a.first_cycle[i].fidelity == b.first_cycle[i].fidelity);
  }
  for (std::size_t k = 0; k < a.points.size(); ++k) CHECK(a.points[k].f_chi == b.points[k].f_chi);

  Rng r1(7), r2(7);
  const StateVector in(m.space, cardinal_input(m, 4));
  const auto c1 = run_cycle(in, m, r1);
  const auto c2 = run_cycle(in, m, r2);
  CHECK(c1.record.outcomes == c2.record.outcomes);
  CHECK((c1.state.amplitudes - c2.state.amplitudes).norm() == 0.0);
}

TEST_CASE("density-matrix cycle preserves trace and matches trajectories") {
  const int nf = 8;
  for (auto mode : {QecMode::Physical, QecMode::BudgetMatched}) {
    const auto m = model(mode, 1, nf);
    DensityCycle dc(m);
    for (int k : {0, 2, 4}) {
      const Vector in = cardinal_input(m, k);
      const auto r = dc.run(DensityMatrix(m.space, in * in.adjoint()));
      CHECK(std::abs(r.state.matrix.trace().real() - 1.0) < 1e-8);
      CHECK(std::abs(r.state.matrix.trace().imag()) < 1e-10);
      double total = 0.0;
      for (const auto& [label, pr] : r.branch_probabilities) total += pr;
      CHECK(total == Approx(1.0).margin(1e-8));
      CHECK((r.state.matrix - r.state.matrix.adjoint()).norm() < 1e-10);
    }
  }

  // trajectory average against the density-matrix cycle, per cardinal input
  const auto m = model(QecMode::BudgetMatched, 1, nf);
  DensityCycle dc(m);
  const int n = 2000;
  for (int k : {0, 2}) {
    const Vector in = cardinal_input(m, k);
    const Vector card = logical_cardinals()[static_cast<std::size_t>(k)];
    const auto exact = dc.run(DensityMatrix(m.space, in * in.adjoint()));
    const double f_dm = (card.adjoint() * logical_density(exact.state, m) * card)(0, 0).real();
    const auto f = run_parallel(static_cast<std::size_t>(n), 31 + static_cast<std::uint64_t>(k), 0,
                                [&](std::size_t, Rng& rng) {
                                  TrajectoryState st{in, rng.uniform(), 0.0};
                                  const auto rec = run_cycle_trajectory(st, m, m.policy, rng);
                                  const double fid = (card.adjoint() * logical_density(st.psi, m) * card)(0, 0).real();
                                  return std::pair<double, bool>(fid, rec.outcomes == "0");
                                });
    double s = 0.0, s2 = 0.0, zeros = 0.0;
    for (const auto& [fid, zero] : f) {
      s += fid;
      s2 += fid * fid;
      zeros += zero ? 1.0 : 0.0;
    }
    const double mean = s / n;
    const double se = std::sqrt(std::max(s2 / n - mean * mean, 1e-12) / (n - 1));
    INFO("input " << k << ": trajectories " << mean << " +- " << se << ", master equation " << f_dm);
    CHECK(std::abs(mean - f_dm) < 3.0 * se);
    const double p0 = exact.branch_probabilities.at("0");
    CHECK(std::abs(zeros / n - p0) < 3.0 * std::sqrt(p0 * (1 - p0) / n));
  }
}

TEST_CASE("operation-error injections lower the fidelity by their weighted sum") {
  const int nf = 8;
  const auto base = model(QecMode::Intrinsic, 1, nf);
  const auto inj = model(QecMode::BudgetMatched, 1, nf);
  DensityCycle d0(base), d1(inj);
  auto chi_fidelity = [&](DensityCycle& dc, const QecModel& m, std::map<std::string, double>* probs) {
    std::array<Matrix, 6> outs;
    for (int k = 0; k < 6; ++k) {
      const Vector in = cardinal_input(m, k);
      const auto r = dc.run(DensityMatrix(m.space, in * in.adjoint()));
      outs[static_cast<std::size_t>(k)] = logical_density(r.state, m);
      if (probs && k == 0) *probs = r.branch_probabilities;
    }
    return process_tomography(outs).fidelity();
  };
  std::map<std::string, double> pr;
  const double f0 = chi_fidelity(d0, base, &pr);
  const double f1 = chi_fidelity(d1, inj, nullptr);
  const auto& e = inj.config.errors;
  const double expected = pr["0"] * (e.detection_code + e.recovery[0]) +
                          pr["1"] * (e.detection_error + e.reset + e.recovery[1]) + inj.thermal_per_cycle;
  INFO("intrinsic " << f0 << ", with injections " << f1 << ", expected injected error " << expected);
  CHECK(std::abs((f0 - f1) / (f0 - 0.25) - expected) < 0.1 * expected);
}

TEST_CASE("budget inputs from simulated first cycles") {
  RepetitiveOptions opt;
  opt.n_cycles = 1;
  opt.n_traj = 600;
  opt.seed = 12;
  const auto one = run_repetitive(model(QecMode::Intrinsic, 1), opt);
  const auto b1 = budget_from_simulation(one.first_cycle, 1);
  INFO("one-layer p0 " << b1.probabilities[0] << ", case-0 intrinsic " << b1.intrinsic[0]);
  CHECK(std::abs(b1.probabilities[0] - 0.781) <= 0.03);
  CHECK(std::abs(b1.intrinsic[0] - 0.067) <= 0.02);

  const auto two = run_repetitive(model(QecMode::Intrinsic, 2), opt);
  const auto b2 = budget_from_simulation(two.first_cycle, 2);
  INFO("two-layer p00 " << b2.probabilities[0]);
  CHECK(std::abs(b2.probabilities[0] - 0.630) <= 0.04);
}

TEST_CASE("mirrored encode and decode") {
  auto cfg = QecCycleConfig::preset(QecMode::Ideal, 1, device());
  cfg.mirror_experiment = true;
  const auto m = prepare_qec_model(device(), cfg);
  RepetitiveOptions opt;
  opt.n_cycles = 3;
  opt.n_traj = 2;
  const auto r = run_repetitive(m, opt);
  for (const auto& pt : r.points) CHECK(std::abs(pt.f_chi - 1.0) < 1e-8);

  auto noisy = QecCycleConfig::preset(QecMode::BudgetMatched, 1, device());
  noisy.mirror_experiment = true;
  const auto mn = prepare_qec_model(device(), noisy);
  opt.n_cycles = 0;
  opt.n_traj = 1500;
  const auto r0 = run_repetitive(mn, opt);
  // encode and decode errors alone: F = 1 - (3/4)(1 - (1 - eps)^2)
  const double eps = noisy.errors.encode_decode;
  const double expect = 1.0 - 0.75 * (1.0 - (1.0 - eps) * (1.0 - eps));
  CHECK(std::abs(r0.points[0].f_chi - expect) < 4.0 * r0.points[0].f_chi_err + 0.005);
}

TEST_CASE("waiting-time sweep prefers intermediate idles") {
  auto cfg = QecCycleConfig::preset(QecMode::BudgetMatched, 1, device());
  SweepOptions opt;
  opt.n_traj = 150;
  opt.span = 0.7e-3;
  const auto sweep = sweep_waiting_time(device(), cfg, {1e-6, 90e-6, 400e-6}, opt);
  REQUIRE(sweep.rows.size() == 3);
  CHECK(sweep.best == 1);
  CHECK(sweep.rows[0].fit.lifetime < sweep.rows[1].fit.lifetime);
  CHECK(sweep.rows[2].fit.lifetime < sweep.rows[1].fit.lifetime);
  CHECK(sweep.rows[0].n_cycles == static_cast<int>(std::ceil(opt.span / (cfg.layer_duration() - cfg.t_wait + 1e-6))));
  CHECK(sweep.rows[2].n_cycles == opt.min_cycles);
  CHECK_THROWS_AS(sweep_waiting_time(device(), cfg, {}, opt), ConfigError);
}
