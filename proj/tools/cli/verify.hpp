// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

// The verification suite: each check rebuilds its own system from fixed
// parameters and a seed, and compares against its stated tolerances.

#pragma once

#include <mqlab/coherence.hpp>
#include <mqlab/dynamics.hpp>
#include <mqlab/experiments/correlations.hpp>
#include <mqlab/experiments/echo.hpp>
#include <mqlab/experiments/partial_echo.hpp>
#include <mqlab/experiments/spin_diffusion.hpp>
#include <mqlab/hamiltonians.hpp>
#include <mqlab/io.hpp>
#include <mqlab/refmodels.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace mqlab::cli {

struct Measurement {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=", ">=", "in"
  double lo = 0.0;
  double hi = 0.0;
  bool pass = false;
};

struct CheckResult {
  int id = 0;
  std::string key;
  std::string title;
  std::vector<Measurement> measurements;
  std::vector<std::string> notes;

  [[nodiscard]] bool passed() const {
    for (const auto& m : measurements) {
      if (!m.pass) return false;
    }
    return !measurements.empty();
  }

  void at_most(std::string name, double v, double limit) {
    measurements.push_back({std::move(name), v, "<=", limit, limit, v <= limit});
  }
  void at_least(std::string name, double v, double limit) {
    measurements.push_back({std::move(name), v, ">=", limit, limit, v >= limit});
  }
  void within(std::string name, double v, double lo, double hi) {
    measurements.push_back({std::move(name), v, "in", lo, hi, v >= lo && v <= hi});
  }
};

[[nodiscard]] inline nlohmann::json to_json(const CheckResult& r) {
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& m : r.measurements) {
    nlohmann::json j = {{"name", m.name}, {"value", json_number(m.value)}, {"relation", m.relation}, {"pass", m.pass}};
    if (m.relation == "in") {
      j["range"] = {json_number(m.lo), json_number(m.hi)};
    } else {
      j["limit"] = json_number(m.lo);
    }
    ms.push_back(std::move(j));
  }
  return {{"id", r.id}, {"check", r.key}, {"title", r.title}, {"verdict", r.passed() ? "PASS" : "FAIL"},
          {"measurements", std::move(ms)}, {"notes", r.notes}};
}

struct VerifyOptions {
  std::uint64_t seed = 1;
  double tolerance_scale = 1.0;  // 0.1 for the strict profile
};

namespace verify_detail {

inline Operator random_dipolar(int n, std::uint64_t seed, Basis basis = Basis::XProduct) {
  return build_hamiltonian(SpinSystem(n, basis), preset("dipolar-secular", random_couplings(n, seed)));
}

inline Operator dipolar_geometry(const std::vector<Vec3>& pos, Basis basis = Basis::XProduct) {
  const int n = static_cast<int>(pos.size());
  return build_hamiltonian(SpinSystem(n, basis), preset("dipolar-secular", dipolar_couplings(pos, {0, 0, 1})));
}

inline double norm_sq(const Operator& a) { return trace_product(a, a).real(); }

// Echo by explicit pulse-sequence simulation, independent of EchoEngine.
inline double sequence_echo(const Operator& h, double delta, double tau) {
  const SpinSystem& sys = h.system();
  const Operator sx = total_operator(sys, Axis::X);
  PropagatorTable props;
  props.emplace("H", Propagator(h));
  props.emplace("V", Propagator(sx));
  PulseSequence seq;
  seq.evolve("H", tau).perturb("V", delta).evolve("H", tau, -1);
  const auto res = run_sequence(sys, seq, props, sx, {2.0 * tau}, {{"M", sx}});
  return res.observables.at("M")[0].real() / norm_sq(sx);
}

}  // namespace verify_detail

/// 1. Sum rule and symmetry along a random dipolar N=8 trajectory.
[[nodiscard]] inline CheckResult check_sum_rule(const VerifyOptions& o) {
  using namespace verify_detail;
  CheckResult r{1, "sum-rule", "sum rule and I_n = I_-n, random dipolar N=8, 50 times", {}, {}};
  const Operator h = random_dipolar(8, o.seed);
  const Propagator p(h);
  const Operator sx = total_operator(h.system(), Axis::X);
  const double n0 = norm_sq(sx), w = local_field(h);
  double sum_err = 0.0, sym_err = 0.0, m2_ratio = 0.0;
  for (double t : linspace(0.0, 20.0 / w, 50)) {
    const auto c = check_spectrum(mq_spectrum(p.evolve(sx, t), n0, t), 8);
    sum_err = std::max(sum_err, c.sum_rule_error);
    sym_err = std::max(sym_err, c.symmetry_error);
    m2_ratio = std::max(m2_ratio, c.m2 / c.m2_bound);
  }
  r.at_most("max |sum I_n - 1|", sum_err, 1e-10 * o.tolerance_scale);
  r.at_most("max |I_n - I_-n|", sym_err, 1e-10 * o.tolerance_scale);
  r.at_most("max m2 / N^2", m2_ratio, 1.0);
  return r;
}

/// 2. Direct echo against sum_n I_n e^{i n delta}, N=6 dipolar ring.
[[nodiscard]] inline CheckResult check_fourier_identity(const VerifyOptions& o) {
  using namespace verify_detail;
  CheckResult r{2, "fourier-identity", "direct echo = sum I_n e^{i n delta}, N=6 dipolar ring, 12 cells", {}, {}};
  const Operator h = dipolar_geometry(ring_positions(6));
  const EchoEngine eng(h);
  const double w = eng.omega_loc();
  double worst = 0.0, imag = 0.0;
  for (double tf : {1.0, 3.0, 6.0}) {
    const MQSpectrum s = eng.spectrum(tf / w);
    for (double d : {0.1, 0.5, 1.0, 2.0}) {
      const double direct = sequence_echo(h, d, tf / w);
      const cplx f = echo_from_spectrum(s, d);
      worst = std::max(worst, std::abs(direct - f.real()));
      imag = std::max(imag, std::abs(f.imag()));
    }
  }
  r.at_most("max |M - sum I_n e^{i n delta}|", worst, 1e-9 * o.tolerance_scale);
  r.at_most("max |Im sum I_n e^{i n delta}|", imag, 1e-10 * o.tolerance_scale);
  return r;
}

/// 3. Richardson-extrapolated (1 - M) / delta^2 against m2 / 2.
[[nodiscard]] inline CheckResult check_quadratic_decay(const VerifyOptions& o) {
  using namespace verify_detail;
  CheckResult r{3, "quadratic-decay", "(1 - M) / delta^2 -> m2 / 2, random dipolar N=6, tau = 2 / omega_loc", {}, {}};
  const EchoEngine eng(random_dipolar(6, o.seed));
  const auto q = echo_quadratic_check(eng, 2.0 / eng.omega_loc(), {0.1, 0.05, 0.02, 0.01});
  r.at_most("relative discrepancy", q.relative_discrepancy, 1e-4 * o.tolerance_scale);
  r.at_most("|dM/d delta| at 0", std::abs(q.slope_at_zero), 1e-8 * o.tolerance_scale);
  r.notes.push_back("extrapolated " + format_double(q.extrapolated) + ", m2/2 " + format_double(q.half_m2));
  return r;
}

/// 4. Second-order echo against the exact echo and m2 / 2.
[[nodiscard]] inline CheckResult check_second_order_echo(const VerifyOptions& o) {
  using namespace verify_detail;
  CheckResult r{4, "second-order-echo", "second-order echo at delta = 1e-3, random dipolar N=6", {}, {}};
  const Operator h = random_dipolar(6, o.seed);
  const EchoEngine eng(h);
  const double w = eng.omega_loc();
  double diff = 0.0, rel = 0.0;
  for (double tf : {1.0, 2.0, 4.0}) {
    const double tau = tf / w;
    const auto s = second_order_echo(h, 1e-3, tau);
    diff = std::max(diff, std::abs(s.echo - eng.echo(1e-3, tau).real()));
    const double half = 0.5 * second_moment(eng.spectrum(tau));
    rel = std::max(rel, std::abs(s.coefficient - half) / half);
  }
  r.at_most("max |M2nd - M|", diff, 1e-9 * o.tolerance_scale);
  r.at_most("max |coefficient - m2/2| / (m2/2)", rel, 1e-6 * o.tolerance_scale);
  return r;
}

/// 5. yy - zz nearest-neighbour chain and its long-range negative control.
[[nodiscard]] inline CheckResult check_nn_chain(const VerifyOptions& o) {
  CheckResult r{5, "nn-chain", "N=8 yy-zz chain over bt in [0, 30]; next-nearest b/2 control", {}, {}};
  const auto times = linspace(0.0, 30.0, 60);
  NnChainOptions opt;
  opt.support_tol = 1e-10 * o.tolerance_scale;
  opt.m2_tol = 1e-9 * o.tolerance_scale;
  const auto ok = nn_chain_check(8, 1.0, times, opt);
  opt.next_nearest = 0.5;
  const auto bad = nn_chain_check(8, 1.0, times, opt);
  r.at_most("max sum_{|n| not in {0,2}} I_n", ok.value("max_support"), opt.support_tol);
  r.at_most("max m2", ok.value("max_m2"), 4.0 + opt.m2_tol);
  r.at_most("max (1 - M) - 2 delta^2", ok.value("max_echo_excess"), opt.m2_tol);
  r.at_least("control: max sum_{|n| not in {0,2}} I_n", bad.value("max_support"), 1e-3);
  return r;
}

/// 6. zz model: pair formulas, FID product, divergent correlation times, t^2 growth.
[[nodiscard]] inline CheckResult check_zz_model(const VerifyOptions& o) {
  using namespace verify_detail;
  CheckResult r{6, "zz-model", "zz model: pair MQ, N=8 FID, divergence flag, growth exponent", {}, {}};
  const double c = std::numbers::sqrt2;
  {
    const double b = 1.0;
    const SpinSystem sys(2);
    const Propagator p(build_hamiltonian(sys, preset("zz", complete_couplings(2, b), c)));
    const Operator sx = total_operator(sys, Axis::X);
    double err = 0.0;
    for (double t : linspace(0.0, 20.0, 41)) {
      const auto sim = mq_spectrum(p.evolve(sx, t), norm_sq(sx), t);
      const auto ref = zz_pair_mq_analytic(b, c, t);
      for (int n = -2; n <= 2; ++n) err = std::max(err, std::abs(sim.at(n) - ref.at(n)));
    }
    r.at_most("pair: max |I_n - analytic|", err, 1e-10 * o.tolerance_scale);
  }
  const CouplingTable b8 = random_couplings(8, o.seed);
  const SpinSystem sys(8);
  const Operator h = build_hamiltonian(sys, preset("zz", b8, c));
  const double w = local_field(h);
  {
    const Propagator p(h);
    const Operator sx = total_operator(sys, Axis::X);
    double err = 0.0;
    for (double t : linspace(0.0, 20.0 / w, 50)) {
      err = std::max(err, std::abs(trace_product(sx, p.evolve(sx, t)).real() / norm_sq(sx) - zz_fid_analytic(b8, c, t)));
    }
    r.at_most("N=8: max |FID - product formula|", err, 1e-10 * o.tolerance_scale);
  }
  {
    const auto wr = weak_irrev_prediction(h, 0.1, 0.1 / w, 2001);
    int divergent = 0, total = 0;
    for (const auto& hc : wr.correlations.harmonics) {
      ++total;
      if (!hc.tau.exists()) ++divergent;
    }
    r.at_least("harmonics with divergent correlation time", divergent, total);
    r.at_most("weak irreversibility applicable", wr.applicable ? 1.0 : 0.0, 0.0);
    r.notes.push_back(wr.reason);
  }
  {
    const auto g = zz_growth_check(b8, c, linspace(0.01 / w, 0.1 / w, 10));
    r.within("growth exponent", g.value("exponent"), 1.9, 2.1);
    r.within("growth coefficient / M2", g.value("coefficient_over_M2"), 1.0, 4.0);
  }
  return r;
}

/// 7. Weak-irreversibility prediction against the measured growth, N=10 dipolar chain.
[[nodiscard]] inline CheckResult check_weak_irrev(const VerifyOptions& o) {
  CheckResult r{7, "weak-irrev", "N=10 dipolar chain, fit over tau in [3, 6] / omega_loc", {}, {}};
  const int n = 10;
  const Operator h = build_hamiltonian(SpinSystem(n), preset("dipolar-secular", dipolar_couplings(line_positions(n), {0, 0, 1})));
  const double w = local_field(h);
  const double delta = 1e-3;
  const auto wr = weak_irrev_prediction(h, delta, 0.05 / w, 1000);
  const EchoEngine eng(h);
  const auto g = measure_growth(eng, linspace(3.0 / w, 6.0 / w, 13), delta, 3.0 / w, 6.0 / w);
  r.at_least("prediction applicable", wr.applicable ? 1.0 : 0.0, 1.0);
  const double ratio = wr.applicable ? g.m2_fit.slope / wr.m2_slope : 0.0;
  r.within("measured / predicted m2 slope", ratio, 0.5, 2.0);
  r.at_most("|echo slope - delta^2/2 m2 slope| / (delta^2/2 m2 slope)", g.identity_relative_error, 1e-3);
  r.notes.push_back("measured m2 slope " + format_double(g.m2_fit.slope / w) + " omega_loc, predicted " +
                    format_double(wr.m2_slope / w) + " omega_loc, rough estimate 1 omega_loc");
  for (const auto& hc : wr.correlations.harmonics) {
    r.notes.push_back("n=" + std::to_string(hc.n) + ": literal " + std::string(to_string(hc.tau.status)) +
                      ", connected " + std::string(to_string(hc.tau_connected.status)) + " tau*omega_loc = " +
                      format_double(hc.tau_connected.tau * w));
  }
  (void)o;
  return r;
}

/// 8. Partial echo, N=6 dipolar chain, |Delta|/|H| = 0.1, tau = 10 T2*.
[[nodiscard]] inline CheckResult check_partial_echo(const VerifyOptions& o) {
  using namespace verify_detail;
  CheckResult r{8, "partial-echo", "Hahn partial echo, N=6 dipolar chain, |Delta|/|H| = 0.1, tau = 10 T2*", {}, {}};
  const Operator h = dipolar_geometry(line_positions(6), Basis::ZProduct);
  const SpinSystem& sys = h.system();
  const double ratio = 0.1;
  const Operator d = offset_operator(sys, scaled_random_offsets(h, ratio, o.seed));
  const double tau = 10.0 / local_field(h);
  const auto pe = partial_echo({h, d, tau, 1.5, 2.5, 801});
  r.at_most("pi_x conjugation error", pe.conjugation_error, 1e-10 * o.tolerance_scale);
  r.at_most("|t_peak - 2 tau| / (2 tau)", std::abs(pe.peak_time - 2.0 * tau) / (2.0 * tau), 0.02);
  r.within("peak amplitude / (|Delta|/|H|)", pe.peak_amplitude / pe.norm_ratio, 1.0 / 3.0, 3.0);
  r.at_least("peak amplitude / no-pulse signal", pe.peak_amplitude / std::max(pe.baseline_at_peak, 1e-300), 5.0);
  r.notes.push_back("peak at t/2tau = " + format_double(pe.peak_time / (2.0 * tau)) + ", amplitude " +
                    format_double(pe.peak_amplitude) + ", no-pulse " + format_double(pe.baseline_at_peak));
  return r;
}

/// 9. m2 <= N^2 on computed spectra; N=6 chain spin diffusion.
[[nodiscard]] inline CheckResult check_bounds_diffusion(const VerifyOptions& o) {
  using namespace verify_detail;
  CheckResult r{9, "bounds-diffusion", "m2 <= N^2 on trajectories and random states; N=6 chain spin diffusion", {}, {}};
  double worst = 0.0;
  for (int n : {4, 6}) {
    for (const std::string& name : {std::string("dipolar-secular"), std::string("double-quantum"), std::string("zz")}) {
      const Operator h = build_hamiltonian(SpinSystem(n), preset(name, random_couplings(n, o.seed + 17)));
      const Propagator p(h);
      const Operator sx = total_operator(h.system(), Axis::X);
      const double w = local_field(h);
      for (double t : linspace(0.0, 50.0 / w, 40)) {
        worst = std::max(worst, second_moment(mq_spectrum(p.evolve(sx, t), norm_sq(sx), t)) / (n * n));
      }
    }
    std::mt19937_64 rng(o.seed + static_cast<std::uint64_t>(n));
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < 10; ++k) {
      const SpinSystem sys(n);
      Matrix m(sys.dim(), sys.dim());
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        for (Eigen::Index q = 0; q < m.rows(); ++q) m(q, c) = cplx(g(rng), g(rng));
      }
      const Operator rho(sys, 0.5 * (m + m.adjoint()), true);
      worst = std::max(worst, second_moment(mq_spectrum(rho, norm_sq(rho))) / (n * n));
    }
  }
  r.at_most("max m2 / N^2", worst, 1.0);

  const Operator h = build_hamiltonian(SpinSystem(6, Basis::ZProduct), preset("dipolar-secular", chain_couplings(6, 1.0, false)));
  const double w = local_field(h);
  const auto sd = spin_diffusion(h, 0, linspace(0.0, 200.0 / w, 2001));
  r.at_most("max |sum_i P_i - 1|", sd.conservation_error, 1e-10 * o.tolerance_scale);
  r.at_least("time-averaged P_source", sd.time_average[0], 1.0 / 6.0 + 1e-12);
  r.at_least("min P_source", sd.minimum[0], 0.0);
  return r;
}

/// 10. Masking, phi-grid Fourier and commutator-trace paths on random states;
/// short-time growth law.
[[nodiscard]] inline CheckResult check_cross_path(const VerifyOptions& o) {
  using namespace verify_detail;
  CheckResult r{10, "cross-path", "three MQ paths on 20 random N=6 states; short-time m2 law", {}, {}};
  const SpinSystem sys(6);
  const Operator sx = total_operator(sys, Axis::X);
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> g(0.0, 1.0);
  double di = 0.0, dm_mf = 0.0, dm_mc = 0.0, dm_fc = 0.0;
  for (int k = 0; k < 20; ++k) {
    Matrix m(sys.dim(), sys.dim());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index q = 0; q < m.rows(); ++q) m(q, c) = cplx(g(rng), g(rng));
    }
    const Operator rho(sys, 0.5 * (m + m.adjoint()), true);
    const double n0 = norm_sq(rho);
    const auto mask = mq_spectrum(rho, n0);
    const auto four = brute_force_intensities(rho, 2 * 6 + 2, n0);
    const double m2m = second_moment(mask), m2f = second_moment(four);
    const double m2c = second_moment_commutator(rho, sx, n0);
    for (int n = -6; n <= 6; ++n) di = std::max(di, std::abs(mask.at(n) - four.at(n)));
    dm_mf = std::max(dm_mf, std::abs(m2m - m2f));
    dm_mc = std::max(dm_mc, std::abs(m2m - m2c));
    dm_fc = std::max(dm_fc, std::abs(m2f - m2c));
  }
  const double tol = 1e-10 * o.tolerance_scale;
  r.at_most("max |I_n masking - I_n Fourier|", di, tol);
  r.at_most("max |m2 masking - m2 Fourier|", dm_mf, tol);
  r.at_most("max |m2 masking - m2 commutator|", dm_mc, tol);
  r.at_most("max |m2 Fourier - m2 commutator|", dm_fc, tol);

  const Operator h = random_dipolar(6, o.seed);
  const auto hd = harmonic_decomposition(h);
  const double n0 = norm_sq(sx);
  double coef = 0.0;
  for (int n = -hd.max_order(); n <= hd.max_order(); ++n) coef += std::pow(n, 4) * hd.pair_trace(n) / n0;
  const Propagator p(h);
  const double w = local_field(h);
  double worst = 0.0;
  for (double f : {0.01, 0.02, 0.03, 0.04, 0.05}) {
    const double t = f / w;
    worst = std::max(worst, std::abs(second_moment(mq_spectrum(p.evolve(sx, t), n0)) / (t * t * coef) - 1.0));
  }
  r.at_most("max |m2 / (t^2 sum n^4 Tr{H_n H_-n}/Tr{S_x^2}) - 1|, t <= 0.05/omega_loc", worst, 0.01);
  return r;
}

struct NamedCheck {
  std::string key;
  std::function<CheckResult(const VerifyOptions&)> run;
};

[[nodiscard]] inline const std::vector<NamedCheck>& all_checks() {
  static const std::vector<NamedCheck> checks = {
      {"sum-rule", check_sum_rule},           {"fourier-identity", check_fourier_identity},
      {"quadratic-decay", check_quadratic_decay}, {"second-order-echo", check_second_order_echo},
      {"nn-chain", check_nn_chain},           {"zz-model", check_zz_model},
      {"weak-irrev", check_weak_irrev},       {"partial-echo", check_partial_echo},
      {"bounds-diffusion", check_bounds_diffusion}, {"cross-path", check_cross_path},
  };
  return checks;
}

}  // namespace mqlab::cli
