// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment execution for the command-line tool: builds the Hamiltonian from
// a resolved config, runs one experiment kind, evaluates its identity checks
// and writes the tables, summary and plot data.

#pragma once

#include "cli/config.hpp"
#include "cli/verify.hpp"

#include <mqlab/coherence.hpp>
#include <mqlab/dynamics.hpp>
#include <mqlab/experiments/correlations.hpp>
#include <mqlab/experiments/echo.hpp>
#include <mqlab/experiments/partial_echo.hpp>
#include <mqlab/experiments/spin_diffusion.hpp>
#include <mqlab/hamiltonians.hpp>
#include <mqlab/io.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

namespace mqlab::cli {

// ---- threading ---------------------------------------------------------------

/// Worker count from MQLAB_THREADS, defaulting to the hardware concurrency.
[[nodiscard]] inline unsigned thread_count() {
  if (const char* env = std::getenv("MQLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(std::min(v, 256L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs f(0..n-1). Each index writes only its own slot, so results do not
/// depend on the worker count; the exception from the lowest index wins.
template <class F>
void parallel_for(std::size_t n, F&& f) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) f(k);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < n; k = next++) {
        try {
          f(k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// ---- system construction -----------------------------------------------------

inline CouplingTable build_couplings(const RunConfig& c) {
  const int n = c.n_spins;
  const std::string& m = c.coupling_model;
  CouplingTable b;
  if (m == "chain") {
    b = chain_couplings(n, c.strength, false);
  } else if (m == "ring") {
    b = ring_couplings(n, c.strength);
  } else if (m == "complete") {
    b = complete_couplings(n, c.strength);
  } else if (m == "random") {
    b = random_couplings(n, c.seed, c.strength);
  } else if (m == "dipolar-chain") {
    b = dipolar_couplings(line_positions(n), c.field, c.strength);
  } else if (m == "dipolar-ring") {
    b = dipolar_couplings(ring_positions(n), c.field, c.strength);
  } else {
    std::ifstream in(c.coupling_path);
    if (!in) throw ConfigError("hamiltonian.couplings.path: cannot read '" + c.coupling_path + "'");
    if (m == "geometry") {
      const auto pos = read_geometry(in);
      if (static_cast<int>(pos.size()) != n) {
        throw ConfigError("hamiltonian.couplings.path: geometry has " + std::to_string(pos.size()) +
                          " sites but system.n is " + std::to_string(n));
      }
      b = dipolar_couplings(pos, c.field, c.strength);
    } else {
      b = c.strength * read_coupling_table(in, n);
    }
  }
  if (c.next_nearest != 0.0) {
    for (int i = 0; i + 2 < n; ++i) b(i, i + 2) = b(i + 2, i) = c.next_nearest;
  }
  return b;
}

struct BuiltSystem {
  SpinSystem sys;
  Operator h;                  // including offsets, except for partial-echo
  Operator bare;               // without offsets
  std::vector<double> offsets;
  double omega_loc = 0.0;      // of the bare Hamiltonian
  double unit = 1.0;           // one config time unit in absolute time
};

inline BuiltSystem build_system(const RunConfig& c) {
  const SpinSystem sys(c.n_spins, c.basis, c.max_spins);
  HamiltonianSpec spec = preset(c.preset, build_couplings(c), c.c);
  if (c.a) spec.a = *c.a;
  if (c.b) spec.b = *c.b;
  if (c.c) spec.c = *c.c;
  const Operator bare = build_hamiltonian(sys, spec);
  const double w = local_field(bare);
  std::vector<double> offsets = c.offsets;
  if (c.offset_ratio) offsets = scaled_random_offsets(bare, *c.offset_ratio, c.seed);
  if (c.kind == "partial-echo" && offsets.empty()) offsets = scaled_random_offsets(bare, 0.1, c.seed);
  Operator h = bare;
  if (!offsets.empty() && c.kind != "partial-echo") {
    spec.offsets = offsets;
    h = build_hamiltonian(sys, spec);
  }
  double unit = 1.0;
  if (c.time_unit == "omega_loc") {
    if (!(w > 0.0)) throw ConfigError("numerics.time_unit: the Hamiltonian has zero local field; use 'absolute'");
    unit = 1.0 / w;
  }
  return {sys, h, bare, offsets, w, unit};
}

// ---- results -----------------------------------------------------------------

struct IdentityCheck {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool gating = true;  // a failure makes the run exit with status 2

  [[nodiscard]] bool pass() const { return value <= limit; }
};

struct RunResult {
  std::vector<Table> tables;
  std::vector<Table> plots;
  nlohmann::json results = nlohmann::json::object();
  std::vector<IdentityCheck> checks;

  [[nodiscard]] std::vector<std::string> failures() const {
    std::vector<std::string> out;
    for (const auto& c : checks) {
      if (c.gating && !c.pass()) out.push_back(c.name);
    }
    return out;
  }
};

namespace run_detail {

inline std::vector<std::string> order_columns(const std::string& prefix, int n) {
  std::vector<std::string> cols;
  for (int k = -n; k <= n; ++k) cols.push_back(prefix + std::to_string(k));
  return cols;
}

// Compact number for column labels.
inline std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline Table spectrum_table(const std::string& name, const MQSpectrum& s, int n) {
  Table t{name, {"n", "I_n"}, {}};
  for (int k = -n; k <= n; ++k) t.row({static_cast<double>(k), s.at(k)});
  return t;
}

struct SpectrumStats {
  double sum_rule = 0.0;
  double symmetry = 0.0;
  double m2_over_bound = 0.0;
};

inline void accumulate(SpectrumStats& st, const MQSpectrum& s, int n) {
  const auto c = check_spectrum(s, n);
  st.sum_rule = std::max(st.sum_rule, c.sum_rule_error);
  st.symmetry = std::max(st.symmetry, c.symmetry_error);
  st.m2_over_bound = std::max(st.m2_over_bound, c.m2 / c.m2_bound);
}

inline void add_spectrum_checks(RunResult& r, const SpectrumStats& st, double scale) {
  r.checks.push_back({"sum rule: max |sum I_n - 1|", st.sum_rule, 1e-10 * scale});
  r.checks.push_back({"symmetry: max |I_n - I_-n|", st.symmetry, 1e-10 * scale});
  r.checks.push_back({"bound: max m2 / N^2", st.m2_over_bound, 1.0});
}

inline double purity_error(const Operator& rho, double n0) {
  return std::abs(trace_product(rho, rho).real() / n0 - 1.0);
}

}  // namespace run_detail

// ---- experiment kinds --------------------------------------------------------

inline RunResult run_mq_spectrum(const RunConfig& c, const BuiltSystem& b) {
  using namespace run_detail;
  const int n = c.n_spins;
  const auto ts = c.times.values();
  const EchoEngine eng(b.h);
  std::vector<MQSpectrum> spectra(ts.size());
  std::vector<double> purity(ts.size());
  parallel_for(ts.size(), [&](std::size_t k) {
    const Operator rho = eng.forward(ts[k] * b.unit);
    spectra[k] = mq_spectrum(rho, eng.norm(), ts[k] * b.unit);
    purity[k] = purity_error(rho, eng.norm());
  });
  RunResult r;
  std::vector<std::string> cols = {"t"};
  for (const auto& s : order_columns("I_", n)) cols.push_back(s);
  cols.push_back("m2");
  Table tab{"intensities", cols, {}};
  Table m2tab{"m2", {"t", "m2"}, {}};
  SpectrumStats st;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    std::vector<double> row = {ts[k]};
    for (int o = -n; o <= n; ++o) row.push_back(spectra[k].at(o));
    row.push_back(second_moment(spectra[k]));
    tab.row(row);
    m2tab.row({ts[k], second_moment(spectra[k])});
    accumulate(st, spectra[k], n);
  }
  r.tables.push_back(tab);
  r.plots = {spectrum_table("spectrum_final", spectra.back(), n), tab, m2tab};
  add_spectrum_checks(r, st, c.tolerance_scale());
  r.checks.push_back({"purity: max |Tr rho(t)^2 / Tr rho(0)^2 - 1|", *std::max_element(purity.begin(), purity.end()),
                      1e-10 * c.tolerance_scale()});
  r.results["final_spectrum"] = to_json(spectra.back());
  return r;
}

inline RunResult run_loschmidt(const RunConfig& c, const BuiltSystem& b) {
  using namespace run_detail;
  const int n = c.n_spins;
  const EchoEngine eng(b.h);
  const double tau = c.tau * b.unit;
  const Operator rho = eng.forward(tau);
  const MQSpectrum s = mq_spectrum(rho, eng.norm(), tau);
  const double direct = eng.echo_from_state(rho, c.delta, tau).real();
  const cplx fourier = echo_from_spectrum(s, c.delta);
  RunResult r;
  r.tables.push_back(Table{"echo", {"tau", "delta", "M_direct", "M_fourier", "m2"}, {}}.row(
      {c.tau, c.delta, direct, fourier.real(), second_moment(s)}));
  r.tables.push_back(spectrum_table("spectrum", s, n));
  Table curve{"echo_vs_delta", {"delta", "M"}, {}};
  for (double d : linspace(0.0, std::numbers::pi, 65)) curve.row({d, echo_from_spectrum(s, d).real()});
  r.plots = {spectrum_table("spectrum", s, n), curve};
  SpectrumStats st;
  accumulate(st, s, n);
  add_spectrum_checks(r, st, c.tolerance_scale());
  r.checks.push_back({"echo identity: |M - sum I_n e^{i n delta}|", std::abs(direct - fourier.real()),
                      1e-9 * c.tolerance_scale()});
  r.checks.push_back({"purity: |Tr rho(tau)^2 / Tr rho(0)^2 - 1|", purity_error(rho, eng.norm()),
                      1e-10 * c.tolerance_scale()});
  r.results["echo"] = json_number(direct);
  r.results["echo_fourier"] = json_number(fourier.real());
  r.results["decay"] = json_number(1.0 - direct);
  r.results["half_m2_delta2"] = json_number(0.5 * second_moment(s) * c.delta * c.delta);
  r.results["spectrum"] = to_json(s);
  return r;
}

inline RunResult run_echo_sweep(const RunConfig& c, const BuiltSystem& b) {
  using namespace run_detail;
  const int n = c.n_spins;
  const EchoEngine eng(b.h);
  const auto taus = c.taus.values();
  struct Cell {
    MQSpectrum s;
    std::vector<double> direct;
    QuadraticCheckReport q;
    double purity = 0.0;
  };
  std::vector<Cell> cells(taus.size());
  parallel_for(taus.size(), [&](std::size_t k) {
    const double tau = taus[k] * b.unit;
    const Operator rho = eng.forward(tau);
    Cell& cell = cells[k];
    cell.s = mq_spectrum(rho, eng.norm(), tau);
    for (double d : c.deltas) cell.direct.push_back(eng.echo_from_state(rho, d, tau).real());
    cell.q = echo_quadratic_check(eng, tau, c.quadratic_deltas);
    cell.purity = purity_error(rho, eng.norm());
  });
  RunResult r;
  Table echo{"echo", {"tau", "delta", "M_direct", "M_fourier", "m2"}, {}};
  Table quad{"quadratic", {"tau", "half_m2", "extrapolated", "relative_discrepancy", "slope_at_zero"}, {}};
  std::vector<std::string> qcols = {"tau"};
  for (double d : c.quadratic_deltas) qcols.push_back("decay_over_delta2@" + label(d));
  qcols.push_back("half_m2");
  Table qplot{"decay_over_delta2", qcols, {}};
  std::vector<std::string> dcols = {"delta"};
  for (double t : taus) dcols.push_back("M@tau=" + label(t));
  Table dplot{"echo_vs_delta", dcols, {}};
  SpectrumStats st;
  double ident = 0.0, qdisc = 0.0, slope = 0.0, purity = 0.0;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    const Cell& cell = cells[k];
    accumulate(st, cell.s, n);
    for (std::size_t j = 0; j < c.deltas.size(); ++j) {
      const double f = echo_from_spectrum(cell.s, c.deltas[j]).real();
      echo.row({taus[k], c.deltas[j], cell.direct[j], f, second_moment(cell.s)});
      ident = std::max(ident, std::abs(cell.direct[j] - f));
    }
    quad.row({taus[k], cell.q.half_m2, cell.q.extrapolated, cell.q.relative_discrepancy, cell.q.slope_at_zero});
    std::vector<double> qrow = {taus[k]};
    std::vector<double> sorted = c.quadratic_deltas;
    std::sort(sorted.begin(), sorted.end());
    for (double d : c.quadratic_deltas) {
      const auto it = std::lower_bound(sorted.begin(), sorted.end(), d);
      qrow.push_back(cell.q.decay_over_delta2[static_cast<std::size_t>(it - sorted.begin())]);
    }
    qrow.push_back(cell.q.half_m2);
    qplot.row(qrow);
    qdisc = std::max(qdisc, cell.q.relative_discrepancy);
    slope = std::max(slope, std::abs(cell.q.slope_at_zero));
    purity = std::max(purity, cell.purity);
  }
  for (double d : linspace(0.0, std::numbers::pi, 65)) {
    std::vector<double> row = {d};
    for (const auto& cell : cells) row.push_back(echo_from_spectrum(cell.s, d).real());
    dplot.row(row);
  }
  r.tables = {echo, quad};
  r.plots = {dplot, qplot};
  add_spectrum_checks(r, st, c.tolerance_scale());
  r.checks.push_back({"echo identity: max |M - sum I_n e^{i n delta}|", ident, 1e-9 * c.tolerance_scale()});
  r.checks.push_back({"quadratic law: max relative |lim (1 - M)/delta^2 - m2/2|", qdisc, 1e-4 * c.tolerance_scale()});
  r.checks.push_back({"quadratic law: max |dM/d delta| at 0", slope, 1e-8 * c.tolerance_scale()});
  r.checks.push_back({"purity: max |Tr rho(tau)^2 / Tr rho(0)^2 - 1|", purity, 1e-10 * c.tolerance_scale()});
  return r;
}

inline RunResult run_weak_irrev(const RunConfig& c, const BuiltSystem& b) {
  using namespace run_detail;
  const int n = c.n_spins;
  const double w = b.omega_loc;
  const auto steps = static_cast<std::size_t>(std::llround(c.horizon / c.dt));
  const auto wr = weak_irrev_prediction(b.h, c.delta, c.dt * b.unit, steps);
  const EchoEngine eng(b.h);
  const auto taus = c.taus.values(b.unit);
  const auto g = measure_growth(eng, taus, c.delta, c.fit_lo * b.unit, c.fit_hi * b.unit);
  RunResult r;
  Table growth{"growth", {"tau", "m2", "echo_decay"}, {}};
  for (std::size_t k = 0; k < taus.size(); ++k) growth.row({taus[k] / b.unit, g.m2[k], g.echo_decay[k]});
  std::vector<std::string> ccols = {"t"};
  for (const auto& hc : wr.correlations.harmonics) {
    ccols.push_back("Re_g_" + std::to_string(hc.n));
    ccols.push_back("Im_g_" + std::to_string(hc.n));
  }
  Table corr{"correlations", ccols, {}};
  for (std::size_t k = 0; k < wr.correlations.times.size(); ++k) {
    std::vector<double> row = {wr.correlations.times[k] / b.unit};
    for (const auto& hc : wr.correlations.harmonics) {
      row.push_back(hc.g[k].real());
      row.push_back(hc.g[k].imag());
    }
    corr.row(row);
  }
  // Prediction drawn through the measured mean point, slope in config time units.
  double tbar = 0.0, mbar = 0.0;
  for (std::size_t k = 0; k < taus.size(); ++k) tbar += taus[k], mbar += g.m2[k];
  tbar /= static_cast<double>(taus.size());
  mbar /= static_cast<double>(taus.size());
  Table gplot{"m2_growth", {"tau", "m2", "predicted"}, {}};
  for (std::size_t k = 0; k < taus.size(); ++k) {
    const double pred = wr.applicable ? mbar + wr.m2_slope * (taus[k] - tbar) : NAN;
    gplot.row({taus[k] / b.unit, g.m2[k], pred});
  }
  r.tables = {growth, corr};
  r.plots = {gplot, corr};
  SpectrumStats st;
  for (double t : taus) accumulate(st, eng.spectrum(t), n);
  add_spectrum_checks(r, st, c.tolerance_scale());
  r.checks.push_back({"growth identity: |echo slope - delta^2/2 m2 slope| / (delta^2/2 m2 slope)",
                      g.identity_relative_error, 1e-3 * c.tolerance_scale()});
  nlohmann::json harm = nlohmann::json::array();
  for (const auto& hc : wr.correlations.harmonics) {
    auto ct = [&](const CorrelationTime& t) {
      return nlohmann::json{{"status", std::string(to_string(t.status))}, {"tau", json_number(t.tau / b.unit)},
                            {"window_end", json_number(t.window_end / b.unit)}, {"cutoff", json_number(t.cutoff)},
                            {"plateau", json_number(t.plateau)}, {"recurrence", json_number(t.recurrence / b.unit)}};
    };
    harm.push_back({{"n", hc.n}, {"pair_trace", json_number(hc.pair_trace)},
                    {"infinite_time", json_number(hc.infinite_time)}, {"tau", ct(hc.tau)},
                    {"tau_connected", ct(hc.tau_connected)}});
  }
  const double ratio = wr.applicable && wr.m2_slope != 0.0 ? g.m2_fit.slope / wr.m2_slope : NAN;
  r.results = {{"applicable", wr.applicable},
               {"reason", wr.reason},
               {"omega_loc", json_number(w)},
               {"harmonics", harm},
               {"predicted_m2_slope", json_number(wr.m2_slope * b.unit)},
               {"predicted_echo_slope", json_number(wr.echo_slope * b.unit)},
               {"rough_m2_slope", json_number(wr.m2_slope_rough * b.unit)},
               {"rough_echo_slope", json_number(wr.echo_slope_rough * b.unit)},
               {"criterion_sum", json_number(wr.criterion_sum)},
               {"measured_m2_slope", json_number(g.m2_fit.slope * b.unit)},
               {"measured_echo_slope", json_number(g.echo_fit.slope * b.unit)},
               {"measured_over_predicted", json_number(ratio)},
               {"within_factor_two", std::isfinite(ratio) && ratio >= 0.5 && ratio <= 2.0},
               {"note", "finite cluster: slopes are compared within a factor of two, not as thermodynamic-limit values"}};
  return r;
}

inline RunResult run_partial_echo(const RunConfig& c, const BuiltSystem& b) {
  const Operator d = offset_operator(b.sys, b.offsets);
  const auto pe = partial_echo({b.bare, d, c.tau * b.unit, c.window_lo, c.window_hi, c.samples});
  RunResult r;
  Table tab{"echo", {"t", "Mx", "My", "M_perp", "Mx_no_pulse", "My_no_pulse", "M_perp_no_pulse"}, {}};
  Table plot{"echo", {"t_over_2tau", "M_perp", "M_perp_no_pulse"}, {}};
  const auto& ex = pe.echo.observables.at("Mx");
  const auto& ey = pe.echo.observables.at("My");
  const auto& bx = pe.baseline.observables.at("Mx");
  const auto& by = pe.baseline.observables.at("My");
  for (std::size_t k = 0; k < pe.echo.times.size(); ++k) {
    const double t = pe.echo.times[k];
    const double mp = std::hypot(ex[k].real(), ey[k].real());
    const double bp = std::hypot(bx[k].real(), by[k].real());
    tab.row({t / b.unit, ex[k].real(), ey[k].real(), mp, bx[k].real(), by[k].real(), bp});
    plot.row({t / (2.0 * pe.tau), mp, bp});
  }
  r.tables = {tab};
  r.plots = {plot};
  r.checks.push_back({"pi_x conjugation: |R (H + D) R^dag - (H - D)| / |H + D|", pe.conjugation_error,
                      1e-10 * c.tolerance_scale()});
  r.checks.push_back({"pi_x invariance of H: |R H R^dag - H| / |H|", pe.invariance_error, 1e-10 * c.tolerance_scale()});
  const double rel = std::abs(pe.peak_time - 2.0 * pe.tau) / (2.0 * pe.tau);
  r.results = {{"offsets", b.offsets},
               {"norm_ratio", json_number(pe.norm_ratio)},
               {"t2_star", json_number(pe.t2_star)},
               {"tau", json_number(pe.tau / b.unit)},
               {"peak_time", json_number(pe.peak_time / b.unit)},
               {"peak_time_over_2tau", json_number(pe.peak_time / (2.0 * pe.tau))},
               {"peak_amplitude", json_number(pe.peak_amplitude)},
               {"peak_amplitude_over_norm_ratio", json_number(pe.peak_amplitude / pe.norm_ratio)},
               {"no_pulse_at_peak", json_number(pe.baseline_at_peak)},
               {"peak_within_2_percent", rel <= 0.02},
               {"amplitude_within_factor_3",
                pe.peak_amplitude >= pe.norm_ratio / 3.0 && pe.peak_amplitude <= 3.0 * pe.norm_ratio},
               {"above_5x_no_pulse", pe.peak_amplitude >= 5.0 * pe.baseline_at_peak}};
  return r;
}

inline RunResult run_spin_diffusion(const RunConfig& c, const BuiltSystem& b) {
  if (c.source >= c.n_spins) throw ConfigError("experiment.source: site " + std::to_string(c.source) + " out of range");
  const auto ts = linspace(0.0, c.horizon * b.unit, c.count);
  const auto sd = spin_diffusion(b.h, c.source, ts);
  RunResult r;
  std::vector<std::string> cols = {"t"};
  for (int i = 0; i < c.n_spins; ++i) cols.push_back("P_" + std::to_string(i));
  cols.push_back("sum");
  Table tab{"polarization", cols, {}};
  for (std::size_t k = 0; k < ts.size(); ++k) {
    std::vector<double> row = {ts[k] / b.unit};
    double s = 0.0;
    for (const auto& p : sd.polarization) row.push_back(p[k]), s += p[k];
    row.push_back(s);
    tab.row(row);
  }
  Table avg{"site_averages", {"site", "time_average", "minimum"}, {}};
  for (int i = 0; i < c.n_spins; ++i) {
    avg.row({static_cast<double>(i), sd.time_average[static_cast<std::size_t>(i)], sd.minimum[static_cast<std::size_t>(i)]});
  }
  r.tables = {tab, avg};
  r.plots = {tab};
  r.checks.push_back({"conservation: max |sum_i P_i - 1|", sd.conservation_error, 1e-10 * c.tolerance_scale(),
                      sd.conserving});
  const double src = sd.time_average[static_cast<std::size_t>(c.source)];
  r.results = {{"conserving", sd.conserving},
               {"warning", sd.warning},
               {"equilibrium", json_number(sd.equilibrium)},
               {"source_time_average", json_number(src)},
               {"source_minimum", json_number(sd.minimum[static_cast<std::size_t>(c.source)])},
               {"source_above_equilibrium", src > sd.equilibrium}};
  return r;
}

inline RunResult run_verify(const RunConfig& c) {
  const VerifyOptions o{c.seed, c.tolerance_scale()};
  std::vector<NamedCheck> selected;
  for (const auto& nc : all_checks()) {
    if (c.checks.empty() || std::find(c.checks.begin(), c.checks.end(), nc.key) != c.checks.end()) {
      selected.push_back(nc);
    }
  }
  std::vector<CheckResult> out(selected.size());
  parallel_for(selected.size(), [&](std::size_t k) { out[k] = selected[k].run(o); });
  RunResult r;
  Table tab{"checks", {"id", "measurement", "value", "lo", "hi", "pass"}, {}};
  nlohmann::json arr = nlohmann::json::array();
  bool all = true;
  for (const auto& res : out) {
    for (std::size_t j = 0; j < res.measurements.size(); ++j) {
      const auto& m = res.measurements[j];
      tab.row({static_cast<double>(res.id), static_cast<double>(j), m.value, m.lo, m.hi, m.pass ? 1.0 : 0.0});
    }
    arr.push_back(to_json(res));
    all = all && res.passed();
    r.checks.push_back({"check " + std::to_string(res.id) + " (" + res.key + ")", res.passed() ? 0.0 : 1.0, 0.0});
  }
  r.tables = {tab};
  r.plots = {tab};
  r.results = {{"verdict", all ? "PASS" : "FAIL"}, {"checks", arr}};
  return r;
}

[[nodiscard]] inline RunResult run_experiment(const RunConfig& c) {
  if (c.kind == "verify") return run_verify(c);
  const BuiltSystem b = build_system(c);
  if (c.kind == "mq-spectrum") return run_mq_spectrum(c, b);
  if (c.kind == "loschmidt") return run_loschmidt(c, b);
  if (c.kind == "echo-sweep") return run_echo_sweep(c, b);
  if (c.kind == "weak-irrev") return run_weak_irrev(c, b);
  if (c.kind == "partial-echo") return run_partial_echo(c, b);
  if (c.kind == "spin-diffusion") return run_spin_diffusion(c, b);
  throw ConfigError("experiment.kind: '" + c.kind + "' is not runnable");
}

// ---- emission ----------------------------------------------------------------

[[nodiscard]] inline std::vector<std::string> header_comments(const RunConfig& c) {
  return {"mqlab " + std::string(kVersion), "config_hash " + c.config_hash(), "seed " + std::to_string(c.seed),
          "config " + c.effective.dump()};
}

[[nodiscard]] inline nlohmann::json summary_json(const RunConfig& c, const RunResult& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& k : r.checks) {
    checks.push_back({{"name", k.name}, {"value", json_number(k.value)}, {"limit", json_number(k.limit)},
                      {"pass", k.pass()}, {"gating", k.gating}});
  }
  const auto failed = r.failures();
  return {{"tool", "mqlab"},
          {"version", std::string(kVersion)},
          {"config_hash", c.config_hash()},
          {"config", c.effective},
          {"kind", c.kind},
          {"results", r.results},
          {"identity_checks", checks},
          {"status", failed.empty() ? "ok" : "invariant-failure"},
          {"failed", failed}};
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << s;
}

[[nodiscard]] inline std::string file_stem(const RunConfig& c) { return c.prefix.empty() ? c.kind : c.prefix; }

/// Writes the tables (CSV or JSON) and the summary; returns the paths written.
inline std::vector<std::filesystem::path> write_outputs(const RunConfig& c, const RunResult& r) {
  namespace fs = std::filesystem;
  fs::create_directories(c.out_dir);
  const fs::path dir(c.out_dir);
  const auto comments = header_comments(c);
  const std::string stem = file_stem(c);
  std::vector<fs::path> written;
  for (const auto& t : r.tables) {
    if (c.format == "csv") {
      written.push_back(dir / (stem + "_" + t.name + ".csv"));
      write_text(written.back(), csv_string(t, comments));
    } else {
      nlohmann::json j = to_json(t);
      j["version"] = std::string(kVersion);
      j["config_hash"] = c.config_hash();
      j["seed"] = c.seed;
      j["config"] = c.effective;
      written.push_back(dir / (stem + "_" + t.name + ".json"));
      write_text(written.back(), j.dump(2) + "\n");
    }
  }
  written.push_back(dir / (stem + "_summary.json"));
  write_text(written.back(), summary_json(c, r).dump(2) + "\n");
  return written;
}

/// Writes the plot data as columnar .dat files plus a matplotlib script stub.
inline std::vector<std::filesystem::path> write_plots(const RunConfig& c, const RunResult& r) {
  namespace fs = std::filesystem;
  fs::create_directories(c.out_dir);
  const fs::path dir(c.out_dir);
  const auto comments = header_comments(c);
  const std::string stem = file_stem(c);
  std::vector<fs::path> written;
  std::string script =
      "# mqlab " + std::string(kVersion) + " config_hash " + c.config_hash() +
      "\n# Plots the .dat files written next to this script.\n"
      "import pathlib\n\nimport matplotlib.pyplot as plt\nimport numpy as np\n\n"
      "HERE = pathlib.Path(__file__).resolve().parent\n\n\n"
      "def load(name):\n"
      "    path = HERE / name\n"
      "    header = [l for l in path.read_text().splitlines() if l.startswith('#')][-1]\n"
      "    return header[1:].split(), np.loadtxt(path, ndmin=2)\n\n\n"
      "def plot(name, bars=False):\n"
      "    cols, data = load(name)\n"
      "    fig, ax = plt.subplots()\n"
      "    for k in range(1, data.shape[1]):\n"
      "        if bars:\n"
      "            ax.bar(data[:, 0], data[:, k], label=cols[k])\n"
      "        else:\n"
      "            ax.plot(data[:, 0], data[:, k], label=cols[k])\n"
      "    ax.set_xlabel(cols[0])\n"
      "    if data.shape[1] <= 12:\n"
      "        ax.legend()\n"
      "    fig.savefig(HERE / (name[:-4] + '.png'), dpi=150)\n\n\n"
      "if __name__ == '__main__':\n";
  for (const auto& t : r.plots) {
    const std::string name = stem + "_" + t.name + ".dat";
    written.push_back(dir / name);
    write_text(written.back(), columnar_string(t, comments));
    const bool bars = !t.columns.empty() && t.columns.front() == "n";
    script += "    plot('" + name + "'" + (bars ? ", bars=True" : "") + ")\n";
  }
  written.push_back(dir / (stem + "_plot.py"));
  write_text(written.back(), script);
  return written;
}

}  // namespace mqlab::cli
