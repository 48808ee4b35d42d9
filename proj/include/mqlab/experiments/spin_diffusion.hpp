// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mqlab/dynamics.hpp>
#include <mqlab/numerics.hpp>
#include <mqlab/spinops.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mqlab {

struct SpinDiffusionReport {
  int source = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> polarization;  // [site][k] = Tr{S_z,i rho(t_k)} / Tr{S_z,source^2}
  std::vector<double> time_average;               // per site, trapezoid mean over the grid
  std::vector<double> minimum;                    // per site
  double equilibrium = 0.0;                       // 1 / N
  double conservation_error = 0.0;                // max_k |sum_i P_i(t_k) - 1|
  bool conserving = true;                         // [H, S_z] = 0
  std::string warning;
};

/// Polarization transport from rho0 = S_z,source. Hamiltonians that do not
/// conserve S_z are still run, with a warning in the report.
[[nodiscard]] inline SpinDiffusionReport spin_diffusion(const Operator& h, int source, const std::vector<double>& times) {
  if (!h.is_hermitian()) throw std::invalid_argument("spin_diffusion: H is not Hermitian");
  const SpinSystem& sys = h.system();
  const int n = sys.n_spins();
  if (source < 0 || source >= n) throw std::out_of_range("spin_diffusion: source site out of range");
  if (times.size() < 2 || !std::is_sorted(times.begin(), times.end()) || times.front() < 0.0) {
    throw std::invalid_argument("spin_diffusion: need an ascending grid of at least two non-negative times");
  }
  SpinDiffusionReport r;
  r.source = source;
  r.times = times;
  r.equilibrium = 1.0 / n;
  const Operator sz = total_operator(sys, Axis::Z);
  r.conserving = commutator(h, sz).max_abs() <= 1e-10 * std::max(h.max_abs(), 1e-300);
  if (!r.conserving) r.warning = "H does not conserve S_z; site polarizations need not sum to one";

  const Propagator p(h);
  const Operator rho0 = site_operator(sys, Axis::Z, source);
  const double n0 = trace_product(rho0, rho0).real();
  const Matrix re = p.to_eigenbasis(rho0);
  std::vector<Matrix> obs;
  for (int i = 0; i < n; ++i) obs.push_back(p.to_eigenbasis(site_operator(sys, Axis::Z, i)));
  r.polarization.assign(static_cast<std::size_t>(n), std::vector<double>(times.size(), 0.0));
  for (std::size_t k = 0; k < times.size(); ++k) {
    const Matrix rt = p.evolve_eigen(re, times[k]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = trace_product(obs[static_cast<std::size_t>(i)], rt).real() / n0;
      r.polarization[static_cast<std::size_t>(i)][k] = v;
      sum += v;
    }
    r.conservation_error = std::max(r.conservation_error, std::abs(sum - 1.0));
  }
  const double span = times.back() - times.front();
  for (const auto& series : r.polarization) {
    r.time_average.push_back(span > 0.0 ? trapezoid(times, series) / span : series.front());
    r.minimum.push_back(*std::min_element(series.begin(), series.end()));
  }
  return r;
}

}  // namespace mqlab
