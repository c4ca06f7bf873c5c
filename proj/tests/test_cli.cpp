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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bqec/config.hpp"

using namespace bqec;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

const fs::path kCli = BQEC_CLI_PATH;
const fs::path kSource = BQEC_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bqec_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Result {
  int status = -1;
  std::string err;
};

Result run(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = kCli.string() + " " + args + " > " + (dir / "stdout.txt").string() + " 2> " + err.string();
  const int raw = std::system(cmd.c_str());
  Result r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

using Table = std::vector<std::vector<std::string>>;

Table read_csv(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  Table t;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    t.push_back(cells);
  }
  return t;
}

double num(const std::string& s) { return std::stod(s); }

void write_json(const fs::path& p, const nlohmann::json& j) { std::ofstream(p) << j.dump(2); }

}  // namespace

TEST_CASE("shipped default config mirrors the built-in defaults") {
  std::ifstream in(kSource / "config" / "default.json");
  REQUIRE(in);
  const auto file = nlohmann::json::parse(in);
  CHECK(file == config_to_json(RunConfig{}));
  const RunConfig c = load_config(kSource / "config" / "default.json");
  CHECK(config_to_json(c) == config_to_json(RunConfig{}));
  CHECK(c.system.chi_qc == Approx(kTwoPi * 2.59e6));
  CHECK(c.qec.t_wait == Approx(90.304e-6));
  CHECK(c.comb.delay == Approx(47e-9));
}

TEST_CASE("config reader is strict") {
  auto j = config_to_json(RunConfig{});
  j["qec"]["t_wiat_us"] = 3.0;
  try {
    config_from_json(j);
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("qec.t_wiat_us") != std::string::npos);
  }

  j = config_to_json(RunConfig{});
  j["qec"]["sweep"]["gird_us"] = nlohmann::json::array();
  CHECK_THROWS_WITH(config_from_json(j), Catch::Matchers::ContainsSubstring("qec.sweep.gird_us"));

  j = config_to_json(RunConfig{});
  j["comb"]["m_pairs"] = "eleven";
  CHECK_THROWS_WITH(config_from_json(j), Catch::Matchers::ContainsSubstring("comb.m_pairs"));

  j = config_to_json(RunConfig{});
  j["budget"]["two_layer"]["eps_Dx"] = 0.1;
  CHECK_THROWS_WITH(config_from_json(j), Catch::Matchers::ContainsSubstring("budget.two_layer.eps_Dx"));

  j = config_to_json(RunConfig{});
  j["extra"] = 1;
  CHECK_THROWS_AS(config_from_json(j), ConfigError);

  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), ConfigError);

  // partial files keep defaults
  const RunConfig partial = config_from_json({{"qec", {{"layers", 2}}}});
  CHECK(partial.qec.layers == 2);
  CHECK(partial.qec.t_wait == Approx(90.304e-6));

  RunConfig bad;
  bad.qec.recovery_pulses["u1"] = "/nonexistent/pulse.csv";
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  RunConfig bad_role;
  bad_role.qec.recovery_pulses["u7"] = (kSource / "config" / "default.json").string();
  CHECK_THROWS_AS(bad_role.validate(), ConfigError);
  RunConfig bad_mode;
  bad_mode.qec.mode = "perfect";
  CHECK_THROWS_AS(bad_mode.validate(), ConfigError);
}

TEST_CASE("config round trip") {
  RunConfig c;
  c.qec.layers = 2;
  c.qec.t_wait = 105e-6;
  c.comb.scalings.assign(11, 1.1);
  c.seed = 99;
  set_budget_entry(c.budget_two, "eps_U2", 0.03);
  const auto j = config_to_json(c);
  const RunConfig back = config_from_json(j);
  CHECK(config_to_json(back) == j);
  CHECK(back.budget_two.recovery[2] == 0.03);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(back) != config_hash(RunConfig{}));
}

TEST_CASE("cli rejects invalid input with status 1") {
  const auto dir = scratch("invalid");
  write_json(dir / "typo.json", {{"qec", {{"t_wiat_us", 3}}}});
  auto r = run("--config " + (dir / "typo.json").string() + " --out " + (dir / "o").string() + " budget", dir);
  CHECK(r.status == 1);
  CHECK(r.err.find("qec.t_wiat_us") != std::string::npos);
  CHECK(run("--out " + dir.string() + " qec --layers 3", dir).status == 1);
  CHECK(run("--out " + dir.string() + " grape --target u9", dir).status == 1);
  CHECK(run("--out " + dir.string() + " budget --eps-override bogus=1", dir).status == 1);
  CHECK(run("--out " + dir.string() + " budget --eps-override eps_D0=abc", dir).status == 1);
  CHECK(run("nosuch", dir).status == 1);
  CHECK(run("--config /nonexistent.json budget", dir).status == 1);
}

TEST_CASE("budget command") {
  const auto dir = scratch("budget");
  REQUIRE(run("--out " + (dir / "a").string() + " budget", dir).status == 0);
  const auto rows = read_csv(dir / "a" / "budget_rows.csv");
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == std::vector<std::string>{"layers", "branch", "probability", "intrinsic", "detection", "recovery",
                                            "thermal", "total"});
  CHECK(rows[6][1] == "11");
  CHECK(num(rows[6][7]) == Approx(0.343).margin(1e-12));
  const auto totals = read_csv(dir / "a" / "budget_totals.csv");
  REQUIRE(totals.size() == 3);
  CHECK(totals[0] == std::vector<std::string>{"layers", "weighted_total", "cycle_duration_us", "predicted_lifetime_us"});
  CHECK(std::abs(num(totals[1][1]) - 0.115) < 1e-3);
  CHECK(std::abs(num(totals[2][1]) - 0.201) < 1e-3);
  CHECK(num(totals[1][2]) == Approx(92.46));
  CHECK(num(totals[2][2]) == Approx(184.92));
  const std::string text = slurp(dir / "stdout.txt");
  CHECK(text.find("One-layer") != std::string::npos);
  CHECK(text.find("Two-layer") != std::string::npos);
  CHECK(fs::exists(dir / "a" / "manifest.json"));

  // one override changes one entry of one table
  REQUIRE(run("--out " + (dir / "b").string() + " budget --eps-override 2:eps_U3=0.05", dir).status == 0);
  const auto changed = read_csv(dir / "b" / "budget_rows.csv");
  REQUIRE(changed.size() == rows.size());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const bool uses_u3 = rows[i][0] == "2" && rows[i][1].back() == '1';
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      if (uses_u3 && (k == 5 || k == 7)) {
        CHECK(num(changed[i][k]) == Approx(num(rows[i][k]) + 0.023).margin(1e-12));
      } else {
        CHECK(changed[i][k] == rows[i][k]);
      }
    }
  }

  REQUIRE(run("--out " + (dir / "c").string() + " budget --table 1 --eps-override eps_D0=0.02", dir).status == 0);
  const auto one = read_csv(dir / "c" / "budget_rows.csv");
  REQUIRE(one.size() == 3);
  CHECK(num(one[1][4]) == Approx(0.02));
  CHECK(one[2] == rows[2]);
}

TEST_CASE("wigner command") {
  const auto dir = scratch("wigner");
  write_json(dir / "grid.json", {{"wigner", {{"re_min", -2.0}, {"re_max", 2.0}, {"n_re", 21}, {"im_min", -1.5},
                                             {"im_max", 1.5}, {"n_im", 13}}}});
  const std::string cfg = "--config " + (dir / "grid.json").string();

  REQUIRE(run(cfg + " --out " + (dir / "vac").string() + " wigner --state vacuum", dir).status == 0);
  const auto vac = read_csv(dir / "vac" / "wigner.csv");
  REQUIRE(vac.size() == 14);
  REQUIRE(vac[0].size() == 22);
  CHECK(vac[0][0] == "im_alpha\\re_alpha");
  CHECK(num(vac[0][1]) == -2.0);
  CHECK(num(vac[0][21]) == 2.0);
  CHECK(num(vac[1][0]) == -1.5);
  CHECK(num(vac[7][0]) == Approx(0.0).margin(1e-15));
  CHECK(num(vac[7][11]) == Approx(2.0 / kPi).epsilon(1e-11));

  REQUIRE(run(cfg + " --out " + (dir / "px").string() + " wigner --state plus_x", dir).status == 0);
  const auto px = read_csv(dir / "px" / "wigner.csv");
  double maxabs = 0.0;
  for (std::size_t i = 1; i < px.size(); ++i) {
    for (std::size_t j = 1; j < px[i].size(); ++j) {
      const double mirrored = num(px[i][px[i].size() - j]);
      CHECK(num(px[i][j]) == Approx(mirrored).margin(1e-11));
      maxabs = std::max(maxabs, std::abs(num(px[i][j])));
    }
  }
  CHECK(maxabs > 0.1);

  write_json(dir / "state.json", {{"amplitudes", {0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}}});
  REQUIRE(run(cfg + " --out " + (dir / "f").string() + " wigner --state-file " + (dir / "state.json").string(), dir)
              .status == 0);
  CHECK(num(read_csv(dir / "f" / "wigner.csv")[7][11]) == Approx(-2.0 / kPi).epsilon(1e-11));

  const auto trunc = run(cfg + " --out " + (dir / "t").string() + " wigner --state fock:11", dir);
  CHECK(trunc.status == 2);
  CHECK(trunc.err.find("truncation") != std::string::npos);
  CHECK(run(cfg + " --out " + (dir / "t").string() + " wigner --state fock:40", dir).status == 1);
  CHECK(run(cfg + " --out " + (dir / "t").string() + " wigner --state cat", dir).status == 1);
}

TEST_CASE("parity-calib command") {
  const auto dir = scratch("parity");
  RunConfig c;
  c.comb.delay_sweep = {30e-9, 47e-9, 55e-9};
  c.comb.decoherence = false;
  c.comb.fock_max = 5;
  write_json(dir / "cfg.json", config_to_json(c));
  const auto r = run("--config " + (dir / "cfg.json").string() + " --out " + (dir / "o").string() + " parity-calib", dir);
  REQUIRE(r.status == 0);
  for (const char* f : {"parity_scaling.csv", "parity_delay_sweep.csv", "parity_fock_errors.csv", "parity_comb_vs_ramsey.csv"}) {
    INFO(f);
    CHECK(fs::exists(dir / "o" / f));
  }
  const auto sweep = read_csv(dir / "o" / "parity_delay_sweep.csv");
  REQUIRE(sweep.size() == 4);
  CHECK(sweep[0].front() == "delay_ns");
  CHECK(sweep[1][0] == "30");
  CHECK(sweep[2][0] == "47");
  CHECK(sweep[3][0] == "55");

  const auto fock = read_csv(dir / "o" / "parity_fock_errors.csv");
  REQUIRE(fock.size() == 7);
  for (std::size_t n = 1; n < fock.size(); ++n) {
    CHECK(num(fock[n][2]) < 0.01);
    CHECK(num(fock[n][4]) > 0.99);
  }
  const auto manifest = nlohmann::json::parse(slurp(dir / "o" / "manifest.json"));
  CHECK(manifest["summary"]["error_error_ideal"].get<double>() < 0.01);
  CHECK(manifest["outputs"].size() == 4);

  const auto cvr = read_csv(dir / "o" / "parity_comb_vs_ramsey.csv");
  REQUIRE(cvr.size() == 10);
  CHECK(num(cvr[9][1]) < num(cvr[9][2]));

  const auto scaling = read_csv(dir / "o" / "parity_scaling.csv");
  REQUIRE(scaling.size() == 12);
  for (std::size_t i = 1; i < scaling.size(); ++i) CHECK(num(scaling[i][5]) == Approx(num(scaling[i][4])).epsilon(1e-9));
}

TEST_CASE("grape command") {
  const auto dir = scratch("grape");
  write_json(dir / "cfg.json", {{"grape", {{"max_iter", 4}, {"n_fock", 8}}}});
  const auto r = run("--config " + (dir / "cfg.json").string() + " --out " + (dir / "o").string() + " grape --target u1", dir);
  CHECK(r.status == 2);
  CHECK(r.err.find("not reached") != std::string::npos);
  const auto trace = read_csv(dir / "o" / "grape_u1_convergence.csv");
  REQUIRE(trace.size() >= 3);
  for (std::size_t i = 2; i < trace.size(); ++i) CHECK(num(trace[i][1]) >= num(trace[i - 1][1]));

  const fs::path pulse = dir / "o" / "grape_u1_pulse.csv";
  const auto loaded = load_pulse(pulse);
  CHECK(loaded.pulse.n_segments() == 385);
  save_pulse(dir / "again.csv", loaded.pulse, loaded.drift_hash);
  CHECK(slurp(dir / "again.csv") == slurp(pulse));

  // the pulse can drive the two-photon-loss recovery of a QEC run
  RunConfig c;
  c.qec.recovery_pulses["u1"] = pulse.string();
  c.qec.n_fock = 8;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("qec command") {
  const auto dir = scratch("qec");
  const auto ideal = run("--out " + (dir / "ideal").string() + " qec --mode ideal --cycles 3 --trajectories 4", dir);
  CHECK(ideal.status == 0);
  const auto f = read_csv(dir / "ideal" / "qec_one_layer_fidelity.csv");
  REQUIRE(f.size() == 5);
  CHECK(f[0] == std::vector<std::string>{"index", "time_us", "f_chi", "f_chi_err"});
  for (std::size_t i = 1; i < f.size(); ++i) CHECK(num(f[i][2]) == Approx(1.0).margin(1e-6));
  CHECK(num(f[2][1]) == Approx(92.46));

  write_json(dir / "cfg.json", {{"qec", {{"n_fock", 8}}}});
  const std::string cfg = "--config " + (dir / "cfg.json").string();
  const std::string args = " qec --layers 2 --cycles 3 --trajectories 40 --seed 5";
  const auto a = run(cfg + " --out " + (dir / "a").string() + args, dir);
  const auto b = run(cfg + " --out " + (dir / "b").string() + args + " --threads 2", dir);
  CHECK(a.status == b.status);
  CHECK(a.status != 1);
  const auto two = read_csv(dir / "a" / "qec_two_layer_fidelity.csv");
  REQUIRE(two.size() == 5);
  CHECK(num(two[2][1]) == Approx(184.92));
  CHECK(num(two[3][2]) < 1.0);
  for (const char* file : {"qec_two_layer_fidelity.csv", "qec_two_layer_fit.csv"}) {
    INFO(file);
    CHECK(slurp(dir / "a" / file) == slurp(dir / "b" / file));
  }
  auto ma = nlohmann::json::parse(slurp(dir / "a" / "manifest.json"));
  auto mb = nlohmann::json::parse(slurp(dir / "b" / "manifest.json"));
  ma.erase("timestamp");
  mb.erase("timestamp");
  CHECK(ma == mb);
  CHECK(ma["seed"] == 5);

  const auto other = run(cfg + " --out " + (dir / "c").string() + " qec --layers 2 --cycles 3 --trajectories 40 --seed 6", dir);
  CHECK(other.status != 1);
  CHECK(slurp(dir / "c" / "qec_two_layer_fidelity.csv") != slurp(dir / "a" / "qec_two_layer_fidelity.csv"));

  REQUIRE(run("--out " + (dir / "base").string() + " qec --baseline fock01", dir).status == 0);
  const auto base = read_csv(dir / "base" / "qec_baseline_fock01_fidelity.csv");
  CHECK(base.size() == RunConfig{}.qec.baseline_times.size() + 1);
  const auto fit = read_csv(dir / "base" / "qec_baseline_fock01_fit.csv");
  REQUIRE(fit.size() == 2);
  CHECK(num(fit[1][2]) > 500.0);
  CHECK(num(fit[1][2]) < 1000.0);
  CHECK(run("--out " + (dir / "base").string() + " qec --baseline squeezed", dir).status == 1);
}

TEST_CASE("sweep-twait command") {
  const auto dir = scratch("sweep");
  write_json(dir / "cfg.json",
             {{"qec", {{"n_fock", 8}, {"sweep", {{"grid_us", {20.0, 90.0}}, {"trajectories", 30}, {"max_cycles", 5}}}}}});
  const std::string args = "--config " + (dir / "cfg.json").string() + " sweep-twait --out ";
  const auto a = run(args + (dir / "a").string(), dir);
  const auto b = run(args + (dir / "b").string(), dir);
  CHECK(a.status != 1);
  const auto t = read_csv(dir / "a" / "sweep_twait.csv");
  REQUIRE(t.size() == 3);
  CHECK(t[0] == std::vector<std::string>{"t_wait_us", "n_cycles", "amplitude", "lifetime_us", "lifetime_err_us"});
  CHECK(t[1][0] == "20");
  CHECK(t[2][0] == "90");
  CHECK(t[2][1] == "5");
  CHECK(slurp(dir / "a" / "sweep_twait.csv") == slurp(dir / "b" / "sweep_twait.csv"));
}
