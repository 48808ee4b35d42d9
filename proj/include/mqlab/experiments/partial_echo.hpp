// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mqlab/dynamics.hpp>
#include <mqlab/hamiltonians.hpp>
#include <mqlab/numerics.hpp>
#include <mqlab/spinops.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace mqlab {

/// Hahn sequence (pi/2)_y - tau - pi_x - detection, run in the z-quantized
/// convention: rho0 = S_z, transverse magnetization observed. Time is counted
/// from the first pulse; the detection window is [window_lo, window_hi] * tau.
struct PartialEchoSpec {
  Operator hamiltonian;        // main H, must be invariant under pi_x
  Operator offsets;            // Delta = sum_i delta_i S_z,i
  double tau = 0.0;
  double window_lo = 1.5;
  double window_hi = 2.5;
  std::size_t samples = 401;
};

struct PartialEchoReport {
  EvolutionResult echo;        // "Mx", "My" normalized by Tr{S_z^2}
  EvolutionResult baseline;    // same schedule without the pi_x pulse
  double conjugation_error = 0.0;  // max|R (H + Delta) R^dagger - (H - Delta)| / max|H + Delta|
  double invariance_error = 0.0;   // max|R H R^dagger - H| / max|H|
  double norm_ratio = 0.0;         // sqrt(Tr{Delta^2} / Tr{H^2})
  double t2_star = 0.0;            // 1 / omega_loc of H
  double tau = 0.0;
  double peak_time = 0.0;
  double peak_amplitude = 0.0;     // |M_perp| at the peak
  double baseline_at_peak = 0.0;   // |M_perp| without the pi_x pulse at the same time
};

/// Delta = sum_i delta_i S_z,i.
[[nodiscard]] inline Operator offset_operator(const SpinSystem& sys, const std::vector<double>& delta) {
  if (static_cast<int>(delta.size()) != sys.n_spins()) {
    throw std::invalid_argument("offset_operator: need one offset per site");
  }
  Operator d = Operator::zero(sys);
  for (int i = 0; i < sys.n_spins(); ++i) d += delta[static_cast<std::size_t>(i)] * site_operator(sys, Axis::Z, i);
  return Operator(sys, d.matrix(), true);
}

/// Gaussian offsets drawn from the seed and rescaled so that
/// sqrt(Tr{Delta^2} / Tr{H^2}) equals `ratio`.
[[nodiscard]] inline std::vector<double> scaled_random_offsets(const Operator& h, double ratio, std::uint64_t seed) {
  const SpinSystem& sys = h.system();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> d(static_cast<std::size_t>(sys.n_spins()));
  for (double& v : d) v = dist(rng);
  const Operator op = offset_operator(sys, d);
  const double hh = trace_product(h, h).real();
  const double dd = trace_product(op, op).real();
  if (!(hh > 0.0) || !(dd > 0.0)) throw std::invalid_argument("scaled_random_offsets: zero norm");
  const double s = ratio * std::sqrt(hh / dd);
  for (double& v : d) v *= s;
  return d;
}

[[nodiscard]] inline PartialEchoReport partial_echo(const PartialEchoSpec& spec) {
  const Operator& h = spec.hamiltonian;
  const Operator& delta = spec.offsets;
  h.require_same_space(delta);
  if (!h.is_hermitian() || !delta.is_hermitian()) throw std::invalid_argument("partial_echo: H and Delta must be Hermitian");
  if (!(spec.tau > 0.0) || !std::isfinite(spec.tau)) throw std::invalid_argument("partial_echo: tau must be positive");
  if (!(spec.window_lo >= 1.0) || !(spec.window_hi > spec.window_lo) || spec.samples < 2) {
    throw std::invalid_argument("partial_echo: detection window must satisfy 1 <= lo < hi");
  }
  const SpinSystem& sys = h.system();
  constexpr double kPi = std::numbers::pi;

  PartialEchoReport r;
  r.tau = spec.tau;
  const double hmax = std::max(h.max_abs(), 1e-300);
  r.invariance_error = max_abs_diff(rotate(h, Axis::X, kPi), h) / hmax;
  if (r.invariance_error > 1e-10) throw std::invalid_argument("partial_echo: H is not invariant under a pi_x rotation");
  const Operator total = h + delta;
  r.conjugation_error = max_abs_diff(rotate(total, Axis::X, kPi), h - delta) / std::max(total.max_abs(), 1e-300);
  const double hh = trace_product(h, h).real();
  r.norm_ratio = std::sqrt(std::max(trace_product(delta, delta).real(), 0.0) / hh);
  r.t2_star = 1.0 / local_field(h);

  const Operator sz = total_operator(sys, Axis::Z);
  const double n0 = trace_product(sz, sz).real();
  PropagatorTable props;
  props.emplace("H+D", Propagator(total));
  const OperatorTable obs{{"Mx", total_operator(sys, Axis::X)}, {"My", total_operator(sys, Axis::Y)}};
  const auto times = linspace(spec.window_lo * spec.tau, spec.window_hi * spec.tau, spec.samples);
  const double rest = spec.window_hi * spec.tau - spec.tau;

  PulseSequence hahn;
  hahn.pulse(Axis::Y, kPi / 2).evolve("H+D", spec.tau).pulse(Axis::X, kPi).evolve("H+D", rest);
  PulseSequence fid;
  fid.pulse(Axis::Y, kPi / 2).evolve("H+D", spec.tau + rest);
  r.echo = run_sequence(sys, hahn, props, sz, times, obs);
  r.baseline = run_sequence(sys, fid, props, sz, times, obs);
  for (auto* res : {&r.echo, &r.baseline}) {
    for (auto& [name, series] : res->observables) {
      for (auto& v : series) v /= n0;
    }
  }
  auto perp = [](const EvolutionResult& e, std::size_t k) {
    return std::hypot(e.observables.at("Mx")[k].real(), e.observables.at("My")[k].real());
  };
  std::size_t best = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (perp(r.echo, k) > perp(r.echo, best)) best = k;
  }
  r.peak_time = times[best];
  r.peak_amplitude = perp(r.echo, best);
  r.baseline_at_peak = perp(r.baseline, best);
  return r;
}

}  // namespace mqlab
