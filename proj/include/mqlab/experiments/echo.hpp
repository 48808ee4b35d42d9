// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mqlab/coherence.hpp>
#include <mqlab/dynamics.hpp>
#include <mqlab/hamiltonians.hpp>
#include <mqlab/numerics.hpp>
#include <mqlab/operator.hpp>
#include <mqlab/spinops.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <stdexcept>
#include <vector>

namespace mqlab {

/// Loschmidt echo experiment: rho0 evolves under H for tau, is conjugated by
/// e^{i delta V}, then evolves under -H for tau.
struct LoschmidtSpec {
  Operator hamiltonian;
  std::optional<Operator> rho0;          // default S_x
  std::optional<Operator> perturbation;  // default S_x
  double delta = 0.0;
  double tau = 0.0;
};

/// Caches the eigendecompositions needed to evaluate many echoes for one
/// (H, rho0, V) triple.
class EchoEngine {
 public:
  EchoEngine(const Operator& h, std::optional<Operator> rho0 = std::nullopt,
             std::optional<Operator> v = std::nullopt)
      : sys_(h.system()),
        h_(h),
        hp_(h),
        rho0_(rho0 ? *rho0 : total_operator(h.system(), Axis::X)),
        v_(v ? *v : total_operator(h.system(), Axis::X)),
        vp_(v_) {
    h.require_same_space(rho0_);
    h.require_same_space(v_);
    norm_ = trace_product(rho0_, rho0_).real();
    if (!(norm_ > 0.0)) throw std::invalid_argument("EchoEngine: initial state has zero norm");
    if (!std::isfinite(norm_)) throw std::invalid_argument("EchoEngine: initial state is not finite");
    rho0_e_ = hp_.to_eigenbasis(rho0_);
  }

  [[nodiscard]] const SpinSystem& system() const noexcept { return sys_; }
  [[nodiscard]] const Operator& hamiltonian() const noexcept { return h_; }
  [[nodiscard]] const Propagator& propagator() const noexcept { return hp_; }
  [[nodiscard]] const Operator& rho0() const noexcept { return rho0_; }
  [[nodiscard]] const Operator& perturbation() const noexcept { return v_; }
  [[nodiscard]] double norm() const noexcept { return norm_; }
  [[nodiscard]] double omega_loc() const { return local_field(h_); }

  /// rho(tau) in the storage basis.
  [[nodiscard]] Operator forward(double tau) const {
    return hp_.from_eigenbasis(hp_.evolve_eigen(rho0_e_, tau), rho0_.hermitian_hint());
  }

  /// Echo amplitude from a precomputed rho(tau).
  [[nodiscard]] cplx echo_from_state(const Operator& rho_tau, double delta, double tau) const {
    const Operator perturbed = vp_.evolve(rho_tau, -delta);
    const Matrix back = hp_.evolve_eigen(hp_.to_eigenbasis(perturbed), -tau);
    return trace_product(rho0_e_, back) / norm_;
  }

  [[nodiscard]] cplx echo(double delta, double tau) const { return echo_from_state(forward(tau), delta, tau); }

  /// MQ spectrum of rho(tau) with respect to S_x.
  [[nodiscard]] MQSpectrum spectrum(double tau) const { return mq_spectrum(forward(tau), norm_, tau); }

  /// Generalized spectrum of rho(tau) with respect to V.
  [[nodiscard]] VSpectrum v_spectrum(double tau, double tol = -1.0) const {
    return v_decompose(forward(tau), v_, tol).spectrum(norm_);
  }

 private:
  SpinSystem sys_;
  Operator h_;
  Propagator hp_;
  Operator rho0_;
  Operator v_;
  Propagator vp_;
  double norm_ = 1.0;
  Matrix rho0_e_;
};

/// Real part of the direct echo; the imaginary part vanishes for Hermitian inputs.
[[nodiscard]] inline double loschmidt_echo(const LoschmidtSpec& spec) {
  if (!std::isfinite(spec.delta) || !std::isfinite(spec.tau)) {
    throw std::invalid_argument("loschmidt_echo: delta and tau must be finite");
  }
  const EchoEngine eng(spec.hamiltonian, spec.rho0, spec.perturbation);
  return eng.echo(spec.delta, spec.tau).real();
}

/// sum_n I_n e^{i n delta}.
[[nodiscard]] inline cplx echo_from_spectrum(const MQSpectrum& s, double delta) {
  cplx m{};
  for (const auto& [n, v] : s.intensities) m += v * std::polar(1.0, n * delta);
  return m;
}

/// sum_omega I_omega e^{i omega delta} for a V-spectrum.
[[nodiscard]] inline cplx echo_from_spectrum(const VSpectrum& s, double delta) {
  cplx m{};
  for (const auto& l : s.lines) m += l.intensity * std::polar(1.0, l.omega * delta);
  return m;
}

struct QuadraticCheckReport {
  double tau = 0.0;
  std::vector<double> deltas;
  std::vector<double> decay_over_delta2;  // (1 - M(delta)) / delta^2
  double extrapolated = 0.0;              // delta -> 0 limit
  double half_m2 = 0.0;                   // m2(tau) / 2 from the MQ spectrum
  double relative_discrepancy = 0.0;
  double slope_at_zero = 0.0;             // central difference dM/d delta at 0
};

/// Compares the small-delta echo decay with m2(tau)/2. The grid needs at least
/// three distinct positive values no larger than 0.1 spanning a decade.
[[nodiscard]] inline QuadraticCheckReport echo_quadratic_check(const EchoEngine& eng, double tau,
                                                               std::vector<double> deltas) {
  std::sort(deltas.begin(), deltas.end());
  if (deltas.size() < 3 || std::adjacent_find(deltas.begin(), deltas.end()) != deltas.end()) {
    throw std::invalid_argument("echo_quadratic_check: need at least three distinct delta values");
  }
  if (deltas.front() <= 0.0 || deltas.back() > 0.1) {
    throw std::invalid_argument("echo_quadratic_check: delta values must lie in (0, 0.1]");
  }
  if (deltas.back() / deltas.front() < 10.0 * (1.0 - 1e-12)) {
    throw std::invalid_argument("echo_quadratic_check: delta grid must span a decade");
  }
  QuadraticCheckReport r;
  r.tau = tau;
  r.deltas = deltas;
  const Operator rho_tau = eng.forward(tau);
  std::vector<double> x;
  for (double d : deltas) {
    const double decay = 1.0 - eng.echo_from_state(rho_tau, d, tau).real();
    r.decay_over_delta2.push_back(decay / (d * d));
    x.push_back(d * d);
  }
  r.extrapolated = extrapolate_to_zero(x, r.decay_over_delta2);
  r.half_m2 = 0.5 * second_moment(mq_spectrum(rho_tau, eng.norm(), tau));
  const double scale = std::max(std::abs(r.half_m2), 1e-300);
  r.relative_discrepancy = r.half_m2 == 0.0 && r.extrapolated == 0.0 ? 0.0 : std::abs(r.extrapolated - r.half_m2) / scale;
  const double h = deltas.front();
  r.slope_at_zero = (eng.echo_from_state(rho_tau, h, tau).real() - eng.echo_from_state(rho_tau, -h, tau).real()) / (2 * h);
  return r;
}

/// H' = i delta [S_x, H] = i delta sum_n n H_n.
[[nodiscard]] inline Operator perturbation_hamiltonian(const Operator& h, double delta) {
  if (!h.is_hermitian()) throw std::invalid_argument("perturbation_hamiltonian: H is not Hermitian");
  const Operator sx = total_operator(h.system(), Axis::X);
  Operator hp = hermitian_part((kI * delta) * commutator(sx, h));
  return hp;
}

struct SecondOrderEchoReport {
  double tau = 0.0;
  double delta = 0.0;
  double coefficient = 0.0;            // M ~ 1 - delta^2 coefficient
  double echo = 1.0;                   // 1 - delta^2 coefficient
  double quadrature_error = 0.0;       // |last Romberg correction|
  double literal_coefficient = 0.0;    // sum_n n^2 double integral Tr{H~_n H~_-n} / Tr{S_x^2}
  std::size_t base_steps = 0;
  int levels = 0;
};

namespace detail {

// Iterated trapezoid sums of int_0^tau dt' int_0^t' dt'' Tr{A(t') B(t'')} on
// nested grids, accumulated while A and B are streamed point by point on the
// finest grid. Level k uses every 2^(levels-1-k)-th point.
class SimplexTrapezoid {
 public:
  SimplexTrapezoid(std::size_t fine_steps, int levels, double hfine, Eigen::Index dim)
      : fine_(fine_steps), hfine_(hfine), partial_(static_cast<std::size_t>(levels), Matrix::Zero(dim, dim)),
        sums_(static_cast<std::size_t>(levels), 0.0) {}

  void add(std::size_t j, const Matrix& a) { add(j, a, a); }

  void add(std::size_t j, const Matrix& a, const Matrix& b) {
    const int levels = static_cast<int>(sums_.size());
    for (int lev = 0; lev < levels; ++lev) {
      const std::size_t stride = std::size_t{1} << (levels - 1 - lev);
      if (j % stride != 0) continue;
      const auto L = static_cast<std::size_t>(lev);
      const double h = hfine_ * static_cast<double>(stride);
      if (j == 0) {
        partial_[L] = 0.5 * b;
        continue;
      }
      const double inner = h * (trace_product(a, partial_[L]) + 0.5 * trace_product(a, b)).real();
      sums_[L] += (j == fine_ ? 0.5 : 1.0) * h * inner;
      partial_[L] += b;
    }
  }

  [[nodiscard]] const std::vector<double>& sums() const noexcept { return sums_; }

 private:
  std::size_t fine_;
  double hfine_;
  std::vector<Matrix> partial_;
  std::vector<double> sums_;
};

// Romberg extrapolation of trapezoid values on grids halved at each level.
// Returns the best estimate and the size of the last correction.
inline std::pair<double, double> romberg(const std::vector<double>& trap) {
  std::vector<std::vector<double>> t(trap.size());
  for (std::size_t i = 0; i < trap.size(); ++i) {
    t[i].push_back(trap[i]);
    double four = 4.0;
    for (std::size_t m = 1; m <= i; ++m, four *= 4.0) {
      t[i].push_back(t[i][m - 1] + (t[i][m - 1] - t[i - 1][m - 1]) / (four - 1.0));
    }
  }
  const auto& last = t.back();
  const double err = last.size() > 1 ? std::abs(last.back() - last[last.size() - 2]) : INFINITY;
  return {last.back(), err};
}

}  // namespace detail

/// Second-order echo M ~ 1 - delta^2 c with rho0 = V = S_x, where
///   c = -(1/Tr{S_x^2}) int_0^tau dt' int_0^t' dt'' Tr{C(t') C(t'')},
///   C(t) = [S_x, K~(t)],  K = i[S_x, H],  K~(t) = e^{iHt} K e^{-iHt}.
/// The double integral uses iterated trapezoid sums on nested grids with
/// Romberg refinement. base_steps = 0 picks the coarsest grid with step
/// <= 0.1 / omega_loc. With `literal` set, the harmonic-sum form
/// sum_n n^2 int int Tr{H~_n(t') H~_-n(t'')} / Tr{S_x^2} is also evaluated.
[[nodiscard]] inline SecondOrderEchoReport second_order_echo(const Operator& h, double delta, double tau,
                                                             std::size_t base_steps = 0, int levels = 4,
                                                             bool literal = false) {
  if (!h.is_hermitian()) throw std::invalid_argument("second_order_echo: H is not Hermitian");
  if (levels < 2) throw std::invalid_argument("second_order_echo: need at least one refinement level");
  SecondOrderEchoReport r;
  r.tau = tau;
  r.delta = delta;
  r.levels = levels;
  if (tau == 0.0) return r;
  const SpinSystem sys = h.system();
  const Operator sx = total_operator(sys, Axis::X);
  const double n0 = trace_product(sx, sx).real();
  const double w = local_field(h);
  if (base_steps == 0) {
    base_steps = static_cast<std::size_t>(std::ceil(std::abs(tau) * w / 0.1 - 1e-9));
    base_steps = std::max<std::size_t>(base_steps, 4);
  }
  if (w > 0.0 && std::abs(tau) / static_cast<double>(base_steps) > 0.1 / w * (1.0 + 1e-9)) {
    throw std::invalid_argument("second_order_echo: base grid step exceeds 0.1 / omega_loc");
  }
  r.base_steps = base_steps;
  const std::size_t fine = base_steps << (levels - 1);
  const double hfine = tau / static_cast<double>(fine);

  // Traces are basis independent, so everything stays in the eigenbasis of H.
  const Propagator p(h);
  const Matrix sxe = p.to_eigenbasis(sx);
  const Matrix ke = p.to_eigenbasis(kI * commutator(sx, h));
  detail::SimplexTrapezoid acc(fine, levels, hfine, sys.dim());
  for (std::size_t j = 0; j <= fine; ++j) {
    const Matrix kt = p.evolve_eigen(ke, -hfine * static_cast<double>(j));
    acc.add(j, sxe * kt - kt * sxe);
  }
  const auto [val, err] = detail::romberg(acc.sums());
  r.coefficient = -val / n0;
  r.quadrature_error = err / n0;
  r.echo = 1.0 - delta * delta * r.coefficient;

  if (literal) {
    const auto hd = harmonic_decomposition(h);
    double lit = 0.0;
    for (int n = -hd.max_order(); n <= hd.max_order(); ++n) {
      if (n == 0 || hd.at(n).max_abs() == 0.0) continue;
      const Matrix hne = p.to_eigenbasis(hd.at(n));
      const Matrix hme = p.to_eigenbasis(hd.at(-n));
      detail::SimplexTrapezoid sn(fine, levels, hfine, sys.dim());
      for (std::size_t j = 0; j <= fine; ++j) {
        const double t = -hfine * static_cast<double>(j);
        sn.add(j, p.evolve_eigen(hne, t), p.evolve_eigen(hme, t));
      }
      lit += static_cast<double>(n) * n * detail::romberg(sn.sums()).first;
    }
    r.literal_coefficient = lit / n0;
  }
  return r;
}

}  // namespace mqlab
