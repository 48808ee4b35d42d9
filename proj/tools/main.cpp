// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli/config.hpp"
#include "cli/runner.hpp"

#include <mqlab/spin_system.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitInvariant = 2;

struct Flags {
  std::string config;
  std::optional<long long> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  std::optional<std::string> tolerance_profile;
};

void add_flags(CLI::App* app, Flags& f, bool config_required) {
  auto* c = app->add_option("--config", f.config, "YAML or JSON run configuration");
  if (config_required) c->required();
  app->add_option("--seed", f.seed, "override the top-level seed");
  app->add_option("--out-dir", f.out_dir, "override output.dir");
  app->add_option("--format", f.format, "table format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--tolerance-profile", f.tolerance_profile, "identity-check tolerances")
      ->check(CLI::IsMember({"default", "strict"}));
}

mqlab::cli::RunConfig load(const std::string& sub, const Flags& f) {
  using mqlab::cli::ConfigError;
  nlohmann::json j = f.config.empty() ? nlohmann::json::object() : mqlab::cli::read_config_file(f.config);
  if (j.is_null()) j = nlohmann::json::object();
  if (!j.is_object()) throw ConfigError("config root must be a mapping");
  auto block = [&](const char* key) -> nlohmann::json& {
    nlohmann::json& b = j[key];
    if (b.is_null()) b = nlohmann::json::object();
    if (!b.is_object()) throw ConfigError(std::string(key) + ": expected a mapping");
    return b;
  };
  if (sub != "emit-plots") {
    nlohmann::json& e = block("experiment");
    if (!e.contains("kind") || e["kind"].is_null()) {
      e["kind"] = sub;
    } else if (e["kind"] != sub) {
      const std::string given = e["kind"].is_string() ? e["kind"].get<std::string>() : e["kind"].dump();
      throw ConfigError("experiment.kind '" + given + "' does not match subcommand '" + sub + "'");
    }
  }
  if (f.seed) j["seed"] = *f.seed;
  if (f.out_dir) block("output")["dir"] = *f.out_dir;
  if (f.format) block("output")["format"] = *f.format;
  if (f.tolerance_profile) block("numerics")["tolerance_profile"] = *f.tolerance_profile;
  return mqlab::cli::resolve_config(j);
}

void report(const mqlab::cli::RunResult& r) {
  if (r.results.contains("checks")) {
    for (const auto& c : r.results["checks"]) {
      std::cout << c["verdict"].get<std::string>() << "  " << c["id"].get<int>() << " " << c["check"].get<std::string>()
                << "\n";
    }
    std::cout << "verdict " << r.results["verdict"].get<std::string>() << "\n";
    return;
  }
  for (const auto& c : r.checks) {
    std::cout << (c.pass() ? "ok    " : (c.gating ? "FAIL  " : "warn  ")) << c.name << " = "
              << mqlab::format_double(c.value) << " (limit " << mqlab::format_double(c.limit) << ")\n";
  }
}

int execute(const std::string& sub, const Flags& f) {
  mqlab::cli::RunConfig cfg;
  mqlab::cli::RunResult res;
  try {
    cfg = load(sub, f);
    res = mqlab::cli::run_experiment(cfg);
  } catch (const mqlab::InvariantError& e) {
    std::cerr << "mqlab: invariant failure: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "mqlab: configuration error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const auto files = sub == "emit-plots" ? mqlab::cli::write_plots(cfg, res) : mqlab::cli::write_outputs(cfg, res);
    report(res);
    for (const auto& p : files) std::cout << "wrote " << p.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "mqlab: " << e.what() << "\n";
    return kExitConfig;
  }
  const auto failed = res.failures();
  for (const auto& name : failed) std::cerr << "mqlab: invariant failure: " << name << "\n";
  return failed.empty() ? 0 : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mqlab: multiple-quantum coherence and Loschmidt echo simulations for spin-1/2 clusters"};
  app.set_version_flag("--version", std::string(mqlab::kVersion));
  app.require_subcommand(1);
  Flags flags;
  std::string chosen;
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"mq-spectrum", "MQ intensities I_n(t) for rho0 = S_x"},
      {"loschmidt", "single echo amplitude and its Fourier identity"},
      {"echo-sweep", "echo over a tau x delta grid with the quadratic decay law"},
      {"weak-irrev", "correlation-time prediction against measured m2 growth"},
      {"partial-echo", "Hahn partial echo with static offsets"},
      {"spin-diffusion", "site polarizations from a local source"},
      {"verify", "built-in verification checks"},
      {"emit-plots", "run the configured experiment and write plot data with a script stub"},
  };
  for (const auto& [name, help] : subs) {
    CLI::App* s = app.add_subcommand(name, help);
    add_flags(s, flags, name == "emit-plots");
    s->callback([&chosen, n = name] { chosen = n; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  return execute(chosen, flags);
}
