// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mqlab/coherence.hpp>
#include <mqlab/dynamics.hpp>
#include <mqlab/experiments/echo.hpp>
#include <mqlab/hamiltonians.hpp>
#include <mqlab/numerics.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mqlab {

/// g(t) = sum_k w_k e^{i f_k t}: a time series with a discrete spectrum.
struct SpectralSeries {
  std::vector<double> freq;
  std::vector<double> weight;

  [[nodiscard]] double total_weight() const {
    double s = 0.0;
    for (double w : weight) s += w;
    return s;
  }

  /// Weight at |f| <= tol: the infinite-time average of g.
  [[nodiscard]] double zero_frequency_weight(double tol) const {
    double s = 0.0;
    for (std::size_t k = 0; k < freq.size(); ++k) {
      if (std::abs(freq[k]) <= tol) s += weight[k];
    }
    return s;
  }

  [[nodiscard]] cplx at(double t) const {
    cplx s{};
    for (std::size_t k = 0; k < freq.size(); ++k) s += weight[k] * std::polar(1.0, freq[k] * t);
    return s;
  }

  /// Values at t_j = j dt, j = 0..n-1, by phasor recurrence with periodic
  /// exact resynchronisation.
  [[nodiscard]] std::vector<cplx> on_uniform_grid(double dt, std::size_t n) const {
    std::vector<cplx> out(n, cplx{});
    const std::size_t m = freq.size();
    std::vector<cplx> z(m, cplx(1.0, 0.0)), step(m);
    for (std::size_t k = 0; k < m; ++k) step[k] = std::polar(1.0, freq[k] * dt);
    for (std::size_t j = 0; j < n; ++j) {
      if (j % 64 == 0) {
        for (std::size_t k = 0; k < m; ++k) z[k] = std::polar(1.0, freq[k] * dt * static_cast<double>(j));
      }
      double re = 0.0, im = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        re += weight[k] * z[k].real();
        im += weight[k] * z[k].imag();
        z[k] *= step[k];
      }
      out[j] = {re, im};
    }
    return out;
  }
};

/// Spectral series of Tr{A~(t) A^dagger} with A~(t) = e^{iHt} A e^{-iHt},
/// from the eigenbasis matrix of A. Frequencies closer than merge_tol are merged.
[[nodiscard]] inline SpectralSeries autocorrelation_spectrum(const Propagator& p, const Matrix& ae,
                                                             double merge_tol) {
  const auto& e = p.eigenvalues();
  const Eigen::Index d = e.size();
  std::vector<std::pair<double, double>> fw;
  fw.reserve(static_cast<std::size_t>(d * d));
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index r = 0; r < d; ++r) {
      const double w = std::norm(ae(r, c));
      if (w > 0.0) fw.emplace_back(e(r) - e(c), w);
    }
  }
  std::sort(fw.begin(), fw.end());
  SpectralSeries s;
  std::size_t k = 0;
  while (k < fw.size()) {
    std::size_t j = k;
    double wsum = 0.0, fsum = 0.0;
    while (j < fw.size() && fw[j].first - fw[k].first <= merge_tol) {
      wsum += fw[j].second;
      fsum += fw[j].second * fw[j].first;
      ++j;
    }
    s.freq.push_back(fsum / wsum);
    s.weight.push_back(wsum);
    k = j;
  }
  return s;
}

enum class CorrelationStatus { Converged, FiniteWindow, Divergent };

[[nodiscard]] inline std::string_view to_string(CorrelationStatus s) noexcept {
  switch (s) {
    case CorrelationStatus::Converged: return "converged";
    case CorrelationStatus::FiniteWindow: return "finite-window";
    case CorrelationStatus::Divergent: return "divergent";
  }
  return "?";
}

struct CorrelationTimeOptions {
  double strict_cutoff = 1e-3;     // |g| / g(0) below this counts as decayed
  double finite_cutoff = 0.1;      // fallback for finite-size fluctuations
  double sustain_fraction = 0.2;   // decayed stretch must cover this much of the grid
  double recurrence_level = 0.1;   // |g| / g(0) above this after decay is a recurrence
};

struct CorrelationTime {
  CorrelationStatus status = CorrelationStatus::Divergent;
  double tau = INFINITY;           // (1/2) int_{-T}^{T} g / g(0) = int_0^T Re g / g(0)
  double window_end = 0.0;         // T
  double cutoff = 0.0;             // cutoff that produced the window
  double plateau = 0.0;            // mean of g / g(0) over the last fifth of the grid
  double recurrence = INFINITY;    // time of the first recurrence, if any

  [[nodiscard]] bool exists() const noexcept { return status != CorrelationStatus::Divergent; }
};

namespace detail {

// First index of a stretch of length >= span on which |r| < cutoff.
// Returns npos when none exists.
inline std::size_t find_decayed_stretch(const std::vector<double>& t, const std::vector<double>& r,
                                        double cutoff, double span, std::size_t& stretch_end) {
  std::size_t k = 0;
  const std::size_t limit = r.size();
  while (k < limit) {
    if (std::abs(r[k]) >= cutoff) {
      ++k;
      continue;
    }
    std::size_t j = k;
    while (j + 1 < limit && std::abs(r[j + 1]) < cutoff) ++j;
    if (t[j] - t[k] >= span) {
      stretch_end = j;
      return k;
    }
    k = j + 1;
  }
  return static_cast<std::size_t>(-1);
}

// Index of the first recurrence, or r.size() when there is none. Zero
// crossings of an oscillating series do not count: a recurrence is either a
// local maximum of |r| at or above `level` after a smaller local maximum
// below it, or |r| climbing back to `level` without changing sign after
// having dropped below it.
inline std::size_t first_recurrence(const std::vector<double>& r, double level) {
  bool low_peak = false;
  bool below = false;
  for (std::size_t k = 1; k < r.size(); ++k) {
    const double a = std::abs(r[k]);
    if (r[k] * r[k - 1] < 0.0) below = false;
    if (a >= level && below) return k;
    if (a < level && std::abs(r[k - 1]) >= level) below = true;
    const bool peak = k + 1 < r.size() && a >= std::abs(r[k - 1]) && a > std::abs(r[k + 1]);
    if (peak) {
      if (a >= level && low_peak) return k;
      if (a < level) low_peak = true;
    }
  }
  return r.size();
}

}  // namespace detail

/// Correlation time of a sampled series g(t_k), t_0 = 0, over a grid that
/// covers [0, t_max], normalized by g(0) (or by `reference` when given).
///
/// The window end T is the start of the first stretch of at least
/// sustain_fraction * t_max on which |g| / g(0) stays below the strict
/// cutoff. tau is the mean of the running integral over that stretch, which
/// averages out residual oscillations. Without such a stretch the finite
/// cutoff is tried (status FiniteWindow); failing both, the series is flagged
/// Divergent. The window must precede the first recurrence of |g| / g(0) to
/// recurrence_level; a stretch that starts later is rejected.
[[nodiscard]] inline CorrelationTime correlation_time(const std::vector<double>& t, const std::vector<double>& g,
                                                      const CorrelationTimeOptions& opt = {},
                                                      std::optional<double> reference = std::nullopt) {
  if (t.size() != g.size() || t.size() < 3) throw std::invalid_argument("correlation_time: need matching series of length >= 3");
  if (t.front() != 0.0) throw std::invalid_argument("correlation_time: grid must start at t = 0");
  const double g0 = reference.value_or(g.front());
  if (!(g0 > 0.0)) throw std::invalid_argument("correlation_time: g(0) must be positive");
  std::vector<double> r(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) r[k] = g[k] / g0;
  CorrelationTime out;
  {
    const std::size_t from = r.size() - std::max<std::size_t>(1, r.size() / 5);
    double s = 0.0;
    for (std::size_t k = from; k < r.size(); ++k) s += r[k];
    out.plateau = s / static_cast<double>(r.size() - from);
  }
  const double span = opt.sustain_fraction * t.back();
  const std::size_t rec = detail::first_recurrence(r, opt.recurrence_level);
  if (rec < r.size()) out.recurrence = t[rec];
  const auto cum = cumulative_trapezoid(t, r);
  for (auto [cutoff, status] : {std::pair{opt.strict_cutoff, CorrelationStatus::Converged},
                                std::pair{opt.finite_cutoff, CorrelationStatus::FiniteWindow}}) {
    std::size_t end = 0;
    const std::size_t start = detail::find_decayed_stretch(t, r, cutoff, span, end);
    if (start == static_cast<std::size_t>(-1) || start > rec) continue;
    double s = 0.0;
    for (std::size_t k = start; k <= end; ++k) s += cum[k];
    out.status = status;
    out.tau = s / static_cast<double>(end - start + 1);
    out.window_end = t[start];
    out.cutoff = cutoff;
    return out;
  }
  return out;
}

// ---- interaction-frame correlation functions ---------------------------------

struct HarmonicCorrelation {
  int n = 0;
  double pair_trace = 0.0;        // Tr{H_n H_-n} / Tr{S_x^2} = g_n(0)
  double infinite_time = 0.0;     // g_n(infinity): projection onto conserved quantities
  std::vector<cplx> g;            // g_n(t_k)
  CorrelationTime tau;            // from g_n itself
  CorrelationTime tau_connected;  // from g_n - g_n(infinity)
};

struct CorrelationSet {
  std::vector<double> times;
  double omega_loc = 0.0;
  std::vector<HarmonicCorrelation> harmonics;  // only n with H_n != 0

  [[nodiscard]] const HarmonicCorrelation* find(int n) const {
    for (const auto& h : harmonics) {
      if (h.n == n) return &h;
    }
    return nullptr;
  }
};

/// g_n(t) = Tr{H~_n(t) H_-n} / Tr{S_x^2} on t_k = k dt, k < steps, for every
/// harmonic present in H.
[[nodiscard]] inline CorrelationSet correlation_functions(const Operator& h, double dt, std::size_t steps,
                                                          const CorrelationTimeOptions& opt = {}) {
  if (!h.is_hermitian()) throw std::invalid_argument("correlation_functions: H is not Hermitian");
  if (!(dt > 0.0) || steps < 3) throw std::invalid_argument("correlation_functions: need dt > 0 and >= 3 steps");
  const SpinSystem& sys = h.system();
  const Operator sx = total_operator(sys, Axis::X);
  const double n0 = trace_product(sx, sx).real();
  const Propagator p(h);
  const auto hd = harmonic_decomposition(h);
  const double width = std::max(p.spectral_width(), 1e-300);
  CorrelationSet set;
  set.omega_loc = local_field(h, sx);
  set.times.resize(steps);
  for (std::size_t k = 0; k < steps; ++k) set.times[k] = dt * static_cast<double>(k);
  const double hscale = h.max_abs();
  for (int n = -hd.max_order(); n <= hd.max_order(); ++n) {
    const Operator hn = hd.at(n);
    if (hn.max_abs() <= 1e-12 * std::max(hscale, 1e-300)) continue;
    HarmonicCorrelation hc;
    hc.n = n;
    hc.pair_trace = hd.pair_trace(n) / n0;
    // Tr{H~_n(t) H_-n} = sum |A_n(r,c)|^2 e^{i (E_r - E_c) t}.
    const SpectralSeries sp = autocorrelation_spectrum(p, p.to_eigenbasis(hn), 1e-12 * width);
    hc.infinite_time = sp.zero_frequency_weight(1e-9 * width) / n0;
    hc.g = sp.on_uniform_grid(dt, steps);
    for (auto& v : hc.g) v /= n0;
    std::vector<double> re(steps), rc(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      re[k] = hc.g[k].real();
      rc[k] = re[k] - hc.infinite_time;
    }
    hc.tau = correlation_time(set.times, re, opt);
    hc.tau_connected = correlation_time(set.times, rc, opt, re.front());
    set.harmonics.push_back(std::move(hc));
  }
  return set;
}

/// Axis alpha for which H commutes with every site operator S_alpha,i, if any.
/// Such local integrals of motion keep correlations from decaying.
[[nodiscard]] inline std::optional<Axis> conserved_site_axis(const Operator& h, double rel_tol = 1e-10) {
  const double scale = std::max(h.frobenius_norm(), 1e-300);
  for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
    bool all = true;
    for (int i = 0; i < h.system().n_spins() && all; ++i) {
      all = commutator(h, site_operator(h.system(), a, i)).max_abs() <= rel_tol * scale;
    }
    if (all) return a;
  }
  return std::nullopt;
}

struct WeakIrrevReport {
  double omega_loc = 0.0;
  double delta = 0.0;
  CorrelationSet correlations;
  bool applicable = false;
  std::string reason;
  double m2_slope = 0.0;           // sum 2 n^2 tau_n Tr{H_n H_-n} / Tr{S_x^2}
  double echo_slope = 0.0;         // delta^2 sum n^2 tau_n Tr{H_n H_-n} / Tr{S_x^2}
  double m2_slope_rough = 0.0;     // omega_loc
  double echo_slope_rough = 0.0;   // delta^2 omega_loc
  double criterion_sum = 0.0;      // sum n^2 tau_n Tr{H_n H_-n} / Tr{S_x^2} (diagnostic)
  bool literal_times_exist = false;
};

/// Weak-irreversibility prediction from interaction-frame correlation times.
///
/// The literal g_n never decays to zero in a finite cluster: energy
/// conservation leaves a plateau g_n(infinity) / g_n(0) >= Tr{H_n H_-n} / Tr{H^2}.
/// The prediction therefore uses the connected functions g_n - g_n(infinity).
/// Hamiltonians that conserve every site spin along some axis (zz) keep
/// local integrals of motion and are reported as not applicable, as are
/// series whose connected correlation time does not exist.
[[nodiscard]] inline WeakIrrevReport weak_irrev_prediction(const Operator& h, double delta, double dt, std::size_t steps,
                                                           const CorrelationTimeOptions& opt = {}) {
  WeakIrrevReport r;
  r.delta = delta;
  r.correlations = correlation_functions(h, dt, steps, opt);
  r.omega_loc = r.correlations.omega_loc;
  r.m2_slope_rough = r.omega_loc;
  r.echo_slope_rough = delta * delta * r.omega_loc;
  r.literal_times_exist = !r.correlations.harmonics.empty();
  for (const auto& hc : r.correlations.harmonics) {
    if (hc.n != 0 && !hc.tau.exists()) r.literal_times_exist = false;
  }
  if (auto ax = conserved_site_axis(h)) {
    r.reason = "H conserves every site S_" + std::string(to_string(*ax)) + ",i (local integrals of motion)";
    return r;
  }
  double sum = 0.0;
  for (const auto& hc : r.correlations.harmonics) {
    if (hc.n == 0) continue;
    if (!hc.tau_connected.exists()) {
      r.reason = "connected correlation time for n = " + std::to_string(hc.n) + " does not exist";
      return r;
    }
    sum += static_cast<double>(hc.n) * hc.n * hc.tau_connected.tau * hc.pair_trace;
  }
  if (sum < 0.0) {
    r.reason = "negative correlation-time sum";
    return r;
  }
  r.applicable = true;
  r.criterion_sum = sum;
  r.m2_slope = 2.0 * sum;
  r.echo_slope = delta * delta * sum;
  return r;
}

// ---- measured growth ----------------------------------------------------------

struct GrowthMeasurement {
  double delta = 0.0;
  std::vector<double> taus;
  std::vector<double> m2;          // m2(tau) from the MQ spectrum
  std::vector<double> echo_decay;  // 1 - M(2 tau) from the direct echo
  LinearFit m2_fit;
  LinearFit echo_fit;
  double identity_relative_error = 0.0;  // |echo slope - delta^2/2 m2 slope| / (delta^2/2 m2 slope)
};

/// Samples m2(tau) and the echo decay at the given taus and fits both over [lo, hi].
[[nodiscard]] inline GrowthMeasurement measure_growth(const EchoEngine& eng, const std::vector<double>& taus,
                                                      double delta, double lo, double hi) {
  GrowthMeasurement g;
  g.delta = delta;
  g.taus = taus;
  for (double tau : taus) {
    const Operator rho = eng.forward(tau);
    g.m2.push_back(second_moment(mq_spectrum(rho, eng.norm(), tau)));
    g.echo_decay.push_back(1.0 - eng.echo_from_state(rho, delta, tau).real());
  }
  g.m2_fit = fit_line(taus, g.m2, lo, hi);
  g.echo_fit = fit_line(taus, g.echo_decay, lo, hi);
  const double expect = 0.5 * delta * delta * g.m2_fit.slope;
  g.identity_relative_error = std::abs(g.echo_fit.slope - expect) / std::max(std::abs(expect), 1e-300);
  return g;
}

}  // namespace mqlab
