// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cli/config.hpp>
#include <cli/runner.hpp>

#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

using namespace mqlab;
using namespace mqlab::cli;
namespace fs = std::filesystem;

namespace {

RunConfig resolve_yaml(const std::string& text) { return resolve_config(parse_config_text(text)); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::path(MQLAB_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + MQLAB_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmallMq = R"(
seed: 5
system: {n: 4}
hamiltonian:
  preset: dipolar-secular
  couplings: {model: random}
experiment:
  kind: mq-spectrum
  times: {start: 0, stop: 5, count: 11}
)";

}  // namespace

TEST_CASE("config: unknown keys are rejected at every level", "[cli]") {
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: mq-spectrum}\nbogus: 1\n"), ConfigError);
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: mq-spectrum}\nsystem: {n: 4, spins: 4}\n"), ConfigError);
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: mq-spectrum, tau: 2}\n"), ConfigError);
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: mq-spectrum}\nhamiltonian: {couplings: {modle: chain}}\n"),
                  ConfigError);
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: mq-spectrum, times: {start: 0, end: 3}}\n"), ConfigError);
  try {
    (void)resolve_yaml("experiment: {kind: mq-spectrum}\nsystem: {n: 4, spins: 4}\n");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()) == "system.spins: unknown key");
  }
}

TEST_CASE("config: values are type and range checked", "[cli]") {
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: nonsense}\n"), ConfigError);
  CHECK_THROWS_AS(resolve_yaml("system: {n: 4}\n"), ConfigError);  // kind is required
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: loschmidt, tau: fast}\n"), ConfigError);
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: mq-spectrum}\nsystem: {n: 2.5}\n"), ConfigError);
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: mq-spectrum}\nsystem: {basis: y}\n"), ConfigError);
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: mq-spectrum}\nhamiltonian: {preset: heisenberg}\n"), ConfigError);
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: mq-spectrum, times: {start: 3, stop: 1}}\n"), ConfigError);
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: mq-spectrum}\nhamiltonian: {couplings: {model: geometry}}\n"),
                  ConfigError);
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: mq-spectrum}\nsystem: {n: 3}\n"
                               "hamiltonian: {offsets: {values: [1, 2]}}\n"),
                  ConfigError);
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: mq-spectrum}\nsystem: {n: 3}\n"
                               "hamiltonian: {offsets: {values: [1, 2, 3], ratio: 0.1}}\n"),
                  ConfigError);
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: verify, checks: [sum-rule, everything]}\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("{\"seed\": }"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("a: [1, 2"), ConfigError);
}

TEST_CASE("config: N above the cap is refused with the cap in the message", "[cli]") {
  try {
    (void)resolve_yaml("experiment: {kind: mq-spectrum}\nsystem: {n: 13}\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("system.n") != std::string::npos);
    CHECK(msg.find("[1, 12]") != std::string::npos);
  }
  CHECK(resolve_yaml("experiment: {kind: mq-spectrum}\nnumerics: {max_spins: 14}\nsystem: {n: 13}\n").n_spins == 13);
  CHECK_THROWS_AS(resolve_yaml("experiment: {kind: mq-spectrum}\nnumerics: {max_spins: 21}\n"), ConfigError);
}

TEST_CASE("config: defaults are written into the effective config", "[cli]") {
  const RunConfig c = resolve_yaml("experiment: {kind: mq-spectrum}\n");
  CHECK(c.n_spins == 6);
  CHECK(c.basis == Basis::XProduct);
  CHECK(c.preset == "dipolar-secular");
  CHECK(c.effective["system"]["n"] == 6);
  CHECK(c.effective["system"]["basis"] == "x");
  CHECK(c.effective["hamiltonian"]["couplings"]["model"] == "random");
  CHECK(c.effective["experiment"]["times"]["count"] == 51);
  CHECK(c.effective["numerics"]["tolerance_profile"] == "default");
  CHECK(c.effective["seed"] == 1);
  CHECK(resolve_yaml("experiment: {kind: partial-echo}\n").basis == Basis::ZProduct);
  CHECK(resolve_yaml("experiment: {kind: spin-diffusion}\n").basis == Basis::ZProduct);
  CHECK_FALSE(resolve_yaml("experiment: {kind: verify}\n").effective.contains("system"));
}

TEST_CASE("config: YAML and JSON encodings resolve identically", "[cli]") {
  const RunConfig y = resolve_yaml(kSmallMq);
  const RunConfig j = resolve_config(parse_config_text(
      R"({"seed": 5, "system": {"n": 4}, "hamiltonian": {"preset": "dipolar-secular", "couplings": {"model": "random"}},
          "experiment": {"kind": "mq-spectrum", "times": {"start": 0, "stop": 5, "count": 11}}})"));
  CHECK(y.effective == j.effective);
  CHECK(y.config_hash() == j.config_hash());
}

TEST_CASE("config: the hash tracks results but not the output location", "[cli]") {
  const std::string base = kSmallMq;
  const auto h0 = resolve_yaml(base).config_hash();
  CHECK(resolve_yaml(base + "output: {dir: elsewhere}\n").config_hash() == h0);
  CHECK(resolve_yaml("seed: 6\n" + base.substr(base.find("system"))).config_hash() != h0);
  CHECK(resolve_yaml(base + "numerics: {tolerance_profile: strict}\n").config_hash() != h0);
  CHECK(resolve_yaml(base + "numerics: {tolerance_profile: strict}\n").tolerance_scale() == 0.1);
}

TEST_CASE("parallel_for visits every index and rethrows the lowest failure", "[cli]") {
  ::setenv("MQLAB_THREADS", "3", 1);
  std::vector<int> hit(37, 0);
  parallel_for(hit.size(), [&](std::size_t k) { hit[k] += 1; });
  CHECK(std::count(hit.begin(), hit.end(), 1) == 37);
  try {
    parallel_for(20, [](std::size_t k) {
      if (k == 7 || k == 13) throw std::runtime_error(std::to_string(k));
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "7");
  }
  ::setenv("MQLAB_THREADS", "junk", 1);
  CHECK(thread_count() >= 1);
  ::unsetenv("MQLAB_THREADS");
}

TEST_CASE("runs are deterministic and independent of the thread count", "[cli]") {
  const RunConfig c = resolve_yaml(std::string(kSmallMq) + "output: {format: csv}\n");
  ::setenv("MQLAB_THREADS", "1", 1);
  const RunResult a = run_experiment(c);
  ::setenv("MQLAB_THREADS", "4", 1);
  const RunResult b = run_experiment(c);
  ::unsetenv("MQLAB_THREADS");
  REQUIRE(a.tables.size() == b.tables.size());
  for (std::size_t k = 0; k < a.tables.size(); ++k) {
    CHECK(csv_string(a.tables[k], header_comments(c)) == csv_string(b.tables[k], header_comments(c)));
  }
  CHECK(summary_json(c, a).dump() == summary_json(c, b).dump());
  CHECK(a.failures().empty());
}

TEST_CASE("outputs embed version, config hash and seed and are byte-stable", "[cli]") {
  const fs::path d1 = scratch_dir("stable1"), d2 = scratch_dir("stable2");
  for (const auto& d : {d1, d2}) {
    RunConfig c = resolve_yaml(kSmallMq);
    c.out_dir = d.string();
    (void)write_outputs(c, run_experiment(c));
  }
  const RunConfig c = resolve_yaml(kSmallMq);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(d1)) {
    ++files;
    const std::string s = slurp(e.path());
    CHECK(s == slurp(d2 / e.path().filename()));
    CHECK(s.find(std::string(kVersion)) != std::string::npos);
    CHECK(s.find(c.config_hash()) != std::string::npos);
  }
  CHECK(files == 2);
  const std::string csv = slurp(d1 / "mq-spectrum_intensities.csv");
  CHECK(csv.rfind("# mqlab " + std::string(kVersion) + "\n# config_hash " + c.config_hash() + "\n# seed 5\n# config {", 0) == 0);
  CHECK(csv.find("\nt,I_-4,I_-3,I_-2,I_-1,I_0,I_1,I_2,I_3,I_4,m2\n") != std::string::npos);

  const auto summary = nlohmann::json::parse(slurp(d1 / "mq-spectrum_summary.json"));
  CHECK(summary["status"] == "ok");
  CHECK(summary["config"] == c.effective);
  CHECK(summary["identity_checks"].size() == 4);
}

TEST_CASE("full-precision CSV reproduces the sum rule from the file", "[cli]") {
  const RunConfig c = resolve_yaml(kSmallMq);
  const RunResult r = run_experiment(c);
  std::istringstream in(csv_string(r.tables.front(), header_comments(c)));
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
    REQUIRE(v.size() == 11);
    double s = 0.0;
    for (std::size_t k = 1; k <= 9; ++k) s += v[k];
    CHECK(std::abs(s - 1.0) <= 1e-10);
    ++rows;
  }
  CHECK(rows == 11);
}

TEST_CASE("every experiment kind runs and reports its identity checks", "[cli]") {
  const std::string sys4 = "seed: 3\nsystem: {n: 4}\n";
  for (const std::string& exp :
       {std::string("experiment: {kind: loschmidt, tau: 2, delta: 0.3}\n"),
        std::string("experiment: {kind: echo-sweep, taus: {start: 1, stop: 3, count: 3}}\n"),
        std::string("experiment: {kind: weak-irrev, horizon: 20, taus: {start: 2, stop: 4, count: 5}, fit_lo: 2, fit_hi: 4}\n"),
        std::string("experiment: {kind: partial-echo, tau: 2}\n"),
        std::string("experiment: {kind: spin-diffusion, horizon: 20, count: 201}\n")}) {
    const std::string text = (exp.find("partial") != std::string::npos || exp.find("spin-diff") != std::string::npos)
                                 ? "seed: 3\nsystem: {n: 4, basis: z}\n" + exp
                                 : sys4 + exp;
    const RunConfig c = resolve_yaml(text);
    const RunResult r = run_experiment(c);
    INFO(c.kind);
    CHECK_FALSE(r.tables.empty());
    CHECK_FALSE(r.plots.empty());
    CHECK_FALSE(r.checks.empty());
    CHECK(r.failures().empty());
  }
}

TEST_CASE("spin diffusion on a non-conserving Hamiltonian warns without failing", "[cli]") {
  const RunConfig c = resolve_yaml(
      "system: {n: 4, basis: z}\nhamiltonian: {preset: xx, couplings: {model: chain}}\n"
      "experiment: {kind: spin-diffusion, horizon: 10, count: 101}\n");
  const RunResult r = run_experiment(c);
  CHECK(r.results["conserving"] == false);
  CHECK_FALSE(r.results["warning"].get<std::string>().empty());
  REQUIRE(r.checks.size() == 1);
  CHECK_FALSE(r.checks[0].gating);
  CHECK(r.failures().empty());
}

TEST_CASE("coupling models and offsets build the expected Hamiltonians", "[cli]") {
  const RunConfig chain = resolve_yaml(
      "system: {n: 5}\nhamiltonian: {preset: double-quantum, couplings: {model: chain, strength: 2, next_nearest: 0.5}}\n"
      "experiment: {kind: mq-spectrum}\n");
  CouplingTable expect = chain_couplings(5, 2.0, false);
  for (int i = 0; i + 2 < 5; ++i) expect(i, i + 2) = expect(i + 2, i) = 0.5;
  CHECK((build_couplings(chain) - expect).cwiseAbs().maxCoeff() == 0.0);

  const RunConfig r1 = resolve_yaml("seed: 1\nexperiment: {kind: mq-spectrum}\n");
  const RunConfig r2 = resolve_yaml("seed: 2\nexperiment: {kind: mq-spectrum}\n");
  CHECK((build_couplings(r1) - random_couplings(6, 1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((build_couplings(r1) - build_couplings(r2)).cwiseAbs().maxCoeff() > 0.1);

  const RunConfig dip = resolve_yaml(
      "system: {n: 4}\nhamiltonian: {couplings: {model: dipolar-ring, field: [0, 0, 2]}}\nexperiment: {kind: mq-spectrum}\n");
  CHECK((build_couplings(dip) - dipolar_couplings(ring_positions(4), {0, 0, 1})).cwiseAbs().maxCoeff() <= 1e-15);

  const fs::path d = scratch_dir("tables");
  {
    std::ofstream(d / "geo.xyz") << "# site x y z\n0 0 0 0\n1 1 0 0\n2 0 1 0\n";
    std::ofstream(d / "b.txt") << "0 1 0.5\n1 2 -1.5\n";
  }
  const RunConfig geo = resolve_yaml("system: {n: 3}\nhamiltonian: {couplings: {model: geometry, path: \"" +
                                     (d / "geo.xyz").string() + "\"}}\nexperiment: {kind: mq-spectrum}\n");
  const std::vector<Vec3> pos = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  CHECK((build_couplings(geo) - dipolar_couplings(pos, {0, 0, 1})).cwiseAbs().maxCoeff() <= 1e-15);
  const RunConfig geo4 = resolve_yaml("system: {n: 4}\nhamiltonian: {couplings: {model: geometry, path: \"" +
                                      (d / "geo.xyz").string() + "\"}}\nexperiment: {kind: mq-spectrum}\n");
  CHECK_THROWS_AS(build_couplings(geo4), ConfigError);
  const RunConfig tab = resolve_yaml("system: {n: 3}\nhamiltonian: {couplings: {model: table, path: \"" +
                                     (d / "b.txt").string() + "\"}}\nexperiment: {kind: mq-spectrum}\n");
  CHECK(build_couplings(tab)(1, 2) == -1.5);
  CHECK(build_couplings(tab)(0, 2) == 0.0);

  const RunConfig off = resolve_yaml("seed: 4\nsystem: {n: 4}\nhamiltonian: {offsets: {ratio: 0.2}}\n"
                                     "experiment: {kind: mq-spectrum}\n");
  const BuiltSystem b = build_system(off);
  const Operator delta = b.h - b.bare;
  CHECK(std::abs(std::sqrt(trace_product(delta, delta).real() / trace_product(b.bare, b.bare).real()) - 0.2) <= 1e-12);
  CHECK(std::abs(b.unit * b.omega_loc - 1.0) <= 1e-15);

  const RunConfig zero = resolve_yaml("system: {n: 3}\nhamiltonian: {couplings: {model: chain, strength: 0}}\n"
                                      "experiment: {kind: mq-spectrum}\n");
  CHECK_THROWS_AS(build_system(zero), ConfigError);
}

TEST_CASE("plot data: spectra ascend in order and growth carries the prediction", "[cli]") {
  {
    const RunConfig c = resolve_yaml(kSmallMq);
    const RunResult r = run_experiment(c);
    const Table& s = r.plots.front();
    REQUIRE(s.columns == std::vector<std::string>{"n", "I_n"});
    REQUIRE(s.rows.size() == 9);
    for (std::size_t k = 0; k < s.rows.size(); ++k) CHECK(s.rows[k][0] == static_cast<double>(k) - 4.0);
  }
  {
    const RunConfig c = resolve_yaml("system: {n: 4}\nexperiment: {kind: echo-sweep, taus: {start: 1, stop: 2, count: 2}}\n");
    const RunResult r = run_experiment(c);
    REQUIRE(r.plots.size() == 2);
    CHECK(r.plots[0].columns.front() == "delta");
    CHECK(r.plots[0].columns.size() == 3);
    CHECK(r.plots[1].columns.front() == "tau");
    CHECK(r.plots[1].columns[1] == "decay_over_delta2@0.1");
  }
  {
    const RunConfig c = resolve_yaml("system: {n: 6}\nhamiltonian: {couplings: {model: dipolar-chain}}\n"
                                     "experiment: {kind: weak-irrev, horizon: 30, taus: {start: 2, stop: 4, count: 5}, "
                                     "fit_lo: 2, fit_hi: 4}\n");
    const RunResult r = run_experiment(c);
    const Table& g = r.plots.front();
    REQUIRE(g.columns == std::vector<std::string>{"tau", "m2", "predicted"});
    REQUIRE(r.results["applicable"] == true);
    const double slope = (g.rows.back()[2] - g.rows.front()[2]) / (g.rows.back()[0] - g.rows.front()[0]);
    CHECK(std::abs(slope - r.results["predicted_m2_slope"].get<double>()) <= 1e-9 * std::abs(slope));
  }
  const fs::path d = scratch_dir("plots");
  RunConfig c = resolve_yaml(kSmallMq);
  c.out_dir = d.string();
  const auto files = write_plots(c, run_experiment(c));
  CHECK(files.back().filename() == "mq-spectrum_plot.py");
  const std::string script = slurp(files.back());
  CHECK(script.find("plot('mq-spectrum_spectrum_final.dat', bars=True)") != std::string::npos);
  const std::string dat = slurp(d / "mq-spectrum_spectrum_final.dat");
  CHECK(dat.find("\n# n I_n\n-4 ") != std::string::npos);
}

TEST_CASE("verify kind on the nearest-neighbour chain passes", "[cli]") {
  const RunConfig c = resolve_yaml("experiment: {kind: verify, checks: [nn-chain, cross-path]}\n");
  const RunResult r = run_experiment(c);
  CHECK(r.results["verdict"] == "PASS");
  CHECK(r.results["checks"].size() == 2);
  CHECK(r.failures().empty());
}

TEST_CASE("command line: exit codes and subcommand handling", "[cli]") {
  const fs::path d = scratch_dir("exe");
  CHECK(run_cli("verify --config \"" MQLAB_SOURCE_DIR "/configs/verify_nn_chain.yaml\" --out-dir \"" + (d / "nn").string() + "\"") == 0);
  const auto verdict = nlohmann::json::parse(slurp(d / "nn" / "verify_summary.json"));
  CHECK(verdict["results"]["verdict"] == "PASS");

  {
    std::ofstream(d / "big.yaml") << "system: {n: 13}\n";
    std::ofstream(d / "typo.yaml") << "system: {n: 4}\nexperimnt: {}\n";
    std::ofstream(d / "other.yaml") << "experiment: {kind: loschmidt}\n";
  }
  CHECK(run_cli("mq-spectrum --config \"" + (d / "big.yaml").string() + "\"") == 1);
  CHECK(run_cli("mq-spectrum --config \"" + (d / "typo.yaml").string() + "\"") == 1);
  CHECK(run_cli("mq-spectrum --config \"" + (d / "other.yaml").string() + "\"") == 1);
  CHECK(run_cli("mq-spectrum --config \"" + (d / "missing.yaml").string() + "\"") == 1);
  CHECK(run_cli("mq-spectrum --format xml") == 1);
  CHECK(run_cli("emit-plots") == 1);
  CHECK(run_cli("") == 1);

  // Flags override the file and land in the effective config.
  CHECK(run_cli("loschmidt --seed 9 --format json --tolerance-profile strict --out-dir \"" + (d / "flags").string() + "\"") == 0);
  const auto s = nlohmann::json::parse(slurp(d / "flags" / "loschmidt_summary.json"));
  CHECK(s["config"]["seed"] == 9);
  CHECK(s["config"]["output"]["format"] == "json");
  CHECK(s["config"]["numerics"]["tolerance_profile"] == "strict");
  CHECK(fs::exists(d / "flags" / "loschmidt_echo.json"));

  // Exit status 2 exactly when the summary reports a failed invariant.
  {
    std::ofstream(d / "mixed.yaml") << "experiment: {kind: verify, checks: [sum-rule, partial-echo]}\n";
  }
  const int code = run_cli("verify --config \"" + (d / "mixed.yaml").string() + "\" --out-dir \"" + (d / "all").string() + "\"");
  const auto all = nlohmann::json::parse(slurp(d / "all" / "verify_summary.json"));
  CHECK((code == 2) == (all["status"] == "invariant-failure"));
  CHECK((code == 0) == (all["results"]["verdict"] == "PASS"));
}
