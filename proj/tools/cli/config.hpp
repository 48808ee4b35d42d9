// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration: a YAML or JSON tree validated against a fixed schema.
// Unknown keys are rejected and every default is written back into the
// effective configuration that is echoed into the outputs.

#pragma once

#include <mqlab/hamiltonians.hpp>
#include <mqlab/io.hpp>
#include <mqlab/spin_system.hpp>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mqlab::cli {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string> kExperimentKinds = {"mq-spectrum", "loschmidt", "echo-sweep", "weak-irrev",
                                                         "partial-echo", "spin-diffusion", "verify"};

inline const std::vector<std::string> kCouplingModels = {"chain", "ring", "complete", "random",
                                                        "dipolar-chain", "dipolar-ring", "geometry", "table"};

struct Grid {
  double start = 0.0;
  double stop = 1.0;
  std::size_t count = 2;

  [[nodiscard]] std::vector<double> values(double unit = 1.0) const {
    return linspace(start * unit, stop * unit, count);
  }
};

struct RunConfig {
  std::uint64_t seed = 1;

  int n_spins = 6;
  Basis basis = Basis::XProduct;

  std::string preset = "dipolar-secular";
  std::optional<double> a, b, c;
  std::string coupling_model = "random";
  double strength = 1.0;
  double next_nearest = 0.0;
  Vec3 field{0.0, 0.0, 1.0};
  std::string coupling_path;
  std::vector<double> offsets;
  std::optional<double> offset_ratio;

  std::string kind;
  Grid times{0.0, 10.0, 51};
  double tau = 2.0;
  double delta = 0.1;
  std::vector<double> deltas{0.1, 0.5, 1.0, 2.0};
  std::vector<double> quadratic_deltas;
  Grid taus{1.0, 6.0, 6};
  double dt = 0.05;
  double horizon = 50.0;
  double fit_lo = 3.0;
  double fit_hi = 6.0;
  double window_lo = 1.5;
  double window_hi = 2.5;
  std::size_t samples = 401;
  int source = 0;
  std::size_t count = 2001;
  std::vector<std::string> checks;

  std::string time_unit = "omega_loc";
  std::string tolerance_profile = "default";
  int max_spins = kDefaultMaxSpins;

  std::string out_dir = "out";
  std::string prefix;
  std::string format = "csv";

  json effective;

  [[nodiscard]] std::string config_hash() const { return fnv1a_hex(effective.dump()); }
  [[nodiscard]] double tolerance_scale() const { return tolerance_profile == "strict" ? 0.1 : 1.0; }
};

namespace detail {

inline json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      json a = json::array();
      for (const auto& item : node) a.push_back(yaml_to_json(item));
      return a;
    }
    case YAML::NodeType::Map: {
      json o = json::object();
      for (const auto& kv : node) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return o;
    }
    case YAML::NodeType::Scalar: {
      const std::string s = node.Scalar();
      if (node.Tag() == "!") return s;  // quoted
      if (s == "true" || s == "True") return true;
      if (s == "false" || s == "False") return false;
      if (s == "null" || s == "~") return nullptr;
      try {
        std::size_t pos = 0;
        const long long i = std::stoll(s, &pos);
        if (pos == s.size()) return i;
      } catch (const std::exception&) {
      }
      try {
        std::size_t pos = 0;
        const double d = std::stod(s, &pos);
        if (pos == s.size()) return d;
      } catch (const std::exception&) {
      }
      return s;
    }
  }
  return nullptr;
}

// Typed access to one block, tracking which keys were consumed.
class Block {
 public:
  Block(const json& j, std::string path) : path_(std::move(path)) {
    if (j.is_null()) {
      j_ = json::object();
    } else if (!j.is_object()) {
      throw ConfigError(path_ + ": expected a mapping");
    } else {
      j_ = j;
    }
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  [[nodiscard]] json raw(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) ? j_.at(key) : json(nullptr);
  }

  double number(const std::string& key, double def) {
    used_.insert(key);
    if (!has(key)) {
      out_[key] = def;
      return def;
    }
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(where(key) + ": must be finite");
    out_[key] = d;
    return d;
  }

  std::optional<double> optional_number(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return number(key, 0.0);
  }

  long long integer(const std::string& key, long long def, long long lo, long long hi) {
    used_.insert(key);
    long long v = def;
    if (has(key)) {
      const json& x = j_.at(key);
      if (!x.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
      v = x.get<long long>();
    }
    if (v < lo || v > hi) {
      throw ConfigError(where(key) + ": " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    }
    out_[key] = v;
    return v;
  }

  std::string text(const std::string& key, const std::string& def, const std::vector<std::string>& allowed = {}) {
    used_.insert(key);
    std::string v = def;
    if (has(key)) {
      if (!j_.at(key).is_string()) throw ConfigError(where(key) + ": expected a string");
      v = j_.at(key).get<std::string>();
    }
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw ConfigError(where(key) + ": '" + v + "' is not one of " + list);
    }
    out_[key] = v;
    return v;
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& def) {
    used_.insert(key);
    std::vector<double> v = def;
    if (has(key)) {
      const json& x = j_.at(key);
      if (!x.is_array()) throw ConfigError(where(key) + ": expected a list of numbers");
      v.clear();
      for (const auto& e : x) {
        if (!e.is_number()) throw ConfigError(where(key) + ": expected a list of numbers");
        v.push_back(e.get<double>());
      }
    }
    out_[key] = v;
    return v;
  }

  std::vector<std::string> texts(const std::string& key, const std::vector<std::string>& def,
                                 const std::vector<std::string>& allowed) {
    used_.insert(key);
    std::vector<std::string> v = def;
    if (has(key)) {
      const json& x = j_.at(key);
      if (!x.is_array()) throw ConfigError(where(key) + ": expected a list of strings");
      v.clear();
      for (const auto& e : x) {
        if (!e.is_string()) throw ConfigError(where(key) + ": expected a list of strings");
        const auto s = e.get<std::string>();
        if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
          throw ConfigError(where(key) + ": unknown entry '" + s + "'");
        }
        v.push_back(s);
      }
    }
    out_[key] = v;
    return v;
  }

  Grid grid(const std::string& key, const Grid& def) {
    Block g(raw(key), where(key));
    Grid out;
    out.start = g.number("start", def.start);
    out.stop = g.number("stop", def.stop);
    out.count = static_cast<std::size_t>(g.integer("count", static_cast<long long>(def.count), 1, 1000000));
    if (out.stop < out.start) throw ConfigError(where(key) + ": stop must not precede start");
    out_[key] = g.finish();
    return out;
  }

  Block child(const std::string& key) { return {raw(key), where(key)}; }

  void put(const std::string& key, json v) { out_[key] = std::move(v); }

  /// Rejects unconsumed keys and returns the resolved block.
  json finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(where(k) + ": unknown key");
    }
    return out_.is_null() ? json::object() : out_;
  }

  [[nodiscard]] std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  json j_;
  std::string path_;
  std::set<std::string> used_;
  json out_ = json::object();
};

}  // namespace detail

/// Parses text as JSON when it starts with '{', otherwise as YAML.
[[nodiscard]] inline json parse_config_text(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
  }
  try {
    return detail::yaml_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("invalid YAML: ") + e.what());
  }
}

[[nodiscard]] inline json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config_text(s.str());
}

/// Validates the tree and fills in defaults.
[[nodiscard]] inline RunConfig resolve_config(const json& root_json) {
  using detail::Block;
  RunConfig c;
  Block root(root_json, "");
  json eff = json::object();

  c.seed = static_cast<std::uint64_t>(root.integer("seed", 1, 0, (1LL << 62)));
  eff["seed"] = c.seed;

  {
    Block n = root.child("numerics");
    c.time_unit = n.text("time_unit", "omega_loc", {"omega_loc", "absolute"});
    c.tolerance_profile = n.text("tolerance_profile", "default", {"default", "strict"});
    c.max_spins = static_cast<int>(n.integer("max_spins", kDefaultMaxSpins, 1, 20));
    eff["numerics"] = n.finish();
  }

  {
    Block e = root.child("experiment");
    c.kind = e.text("kind", "", kExperimentKinds);
    const std::string& k = c.kind;
    if (k == "mq-spectrum") {
      c.times = e.grid("times", {0.0, 10.0, 51});
    } else if (k == "loschmidt") {
      c.tau = e.number("tau", 2.0);
      c.delta = e.number("delta", 0.1);
    } else if (k == "echo-sweep") {
      c.taus = e.grid("taus", {1.0, 6.0, 6});
      c.deltas = e.numbers("deltas", {0.1, 0.5, 1.0, 2.0});
      c.quadratic_deltas = e.numbers("quadratic_deltas", {0.1, 0.05, 0.02, 0.01});
    } else if (k == "weak-irrev") {
      c.delta = e.number("delta", 1e-3);
      c.dt = e.number("dt", 0.05);
      c.horizon = e.number("horizon", 50.0);
      c.taus = e.grid("taus", {3.0, 6.0, 13});
      c.fit_lo = e.number("fit_lo", 3.0);
      c.fit_hi = e.number("fit_hi", 6.0);
      if (!(c.dt > 0.0) || !(c.horizon > 2.0 * c.dt)) throw ConfigError("experiment: need dt > 0 and horizon > 2 dt");
    } else if (k == "partial-echo") {
      c.tau = e.number("tau", 10.0);
      c.window_lo = e.number("window_lo", 1.5);
      c.window_hi = e.number("window_hi", 2.5);
      c.samples = static_cast<std::size_t>(e.integer("samples", 401, 2, 1000000));
    } else if (k == "spin-diffusion") {
      c.source = static_cast<int>(e.integer("source", 0, 0, 19));
      c.horizon = e.number("horizon", 200.0);
      c.count = static_cast<std::size_t>(e.integer("count", 2001, 2, 10000000));
    } else if (k == "verify") {
      c.checks = e.texts("checks", {}, {"sum-rule", "fourier-identity", "quadratic-decay", "second-order-echo",
                                        "nn-chain", "zz-model", "weak-irrev", "partial-echo", "bounds-diffusion",
                                        "cross-path"});
    }
    eff["experiment"] = e.finish();
  }

  const bool needs_system = c.kind != "verify";
  if (needs_system || root.has("system")) {
    Block s = root.child("system");
    c.n_spins = static_cast<int>(s.integer("n", 6, 1, c.max_spins));
    const std::string def_basis = c.kind == "partial-echo" || c.kind == "spin-diffusion" ? "z" : "x";
    c.basis = parse_basis(s.text("basis", def_basis, {"x", "z"}));
    eff["system"] = s.finish();
  }
  if (needs_system || root.has("hamiltonian")) {
    Block h = root.child("hamiltonian");
    c.preset = h.text("preset", "dipolar-secular", {"dipolar-secular", "double-quantum", "yy-zz", "zz", "xx"});
    c.a = h.optional_number("a");
    c.b = h.optional_number("b");
    c.c = h.optional_number("c");
    {
      Block cp = h.child("couplings");
      c.coupling_model = cp.text("model", "random", kCouplingModels);
      c.strength = cp.number("strength", 1.0);
      c.next_nearest = cp.number("next_nearest", 0.0);
      const auto f = cp.numbers("field", {0.0, 0.0, 1.0});
      if (f.size() != 3) throw ConfigError("hamiltonian.couplings.field: expected three components");
      c.field = Vec3(f[0], f[1], f[2]);
      c.coupling_path = cp.text("path", "");
      if ((c.coupling_model == "geometry" || c.coupling_model == "table") && c.coupling_path.empty()) {
        throw ConfigError("hamiltonian.couplings.path: required for model '" + c.coupling_model + "'");
      }
      h.put("couplings", cp.finish());
    }
    if (h.has("offsets")) {
      Block o = h.child("offsets");
      if (o.has("values")) c.offsets = o.numbers("values", {});
      if (o.has("ratio")) c.offset_ratio = o.number("ratio", 0.1);
      if (!c.offsets.empty() && c.offset_ratio) throw ConfigError("hamiltonian.offsets: give either values or ratio");
      if (!c.offsets.empty() && static_cast<int>(c.offsets.size()) != c.n_spins) {
        throw ConfigError("hamiltonian.offsets.values: need one offset per site");
      }
      h.put("offsets", o.finish());
    } else {
      (void)h.raw("offsets");
    }
    eff["hamiltonian"] = h.finish();
  }

  {
    Block o = root.child("output");
    c.out_dir = o.text("dir", "out");
    c.prefix = o.text("prefix", c.kind);
    c.format = o.text("format", "csv", {"csv", "json"});
    // The output location does not change any result, so it stays out of the hash.
    json out = o.finish();
    out.erase("dir");
    eff["output"] = std::move(out);
  }
  (void)root.finish();
  c.effective = std::move(eff);
  return c;
}

}  // namespace mqlab::cli
