// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mqlab/operator.hpp>
#include <mqlab/spinops.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace mqlab {

/// Eigendecomposition H = V diag(E) V^dagger used for exact propagation.
class Propagator {
 public:
  explicit Propagator(const Operator& h) : sys_(h.system()) {
    if (!h.is_hermitian(1e-10)) {
      throw std::invalid_argument("Propagator: Hamiltonian is not Hermitian");
    }
    norm_ = h.frobenius_norm();
    const Eigen::Index d = h.dim();
    if ((h.matrix() - Matrix(h.matrix().diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0) {
      // Already diagonal in the storage basis: keep the basis order.
      e_ = h.matrix().diagonal().real();
      v_ = Matrix::Identity(d, d);
      diagonal_ = true;
      return;
    }
    const Matrix herm = 0.5 * (h.matrix() + h.matrix().adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
    if (es.info() != Eigen::Success) throw std::runtime_error("Propagator: eigensolver failed");
    e_ = es.eigenvalues();
    v_ = es.eigenvectors();
  }

  [[nodiscard]] const SpinSystem& system() const noexcept { return sys_; }
  [[nodiscard]] const Eigen::VectorXd& eigenvalues() const noexcept { return e_; }
  [[nodiscard]] const Matrix& eigenvectors() const noexcept { return v_; }
  [[nodiscard]] double hamiltonian_norm() const noexcept { return norm_; }

  /// Largest |E_r - E_c|.
  [[nodiscard]] double spectral_width() const { return e_.size() ? e_.maxCoeff() - e_.minCoeff() : 0.0; }

  [[nodiscard]] Operator hamiltonian() const {
    return {sys_, v_ * e_.cast<cplx>().asDiagonal() * v_.adjoint(), false};
  }

  /// exp(-i H t).
  [[nodiscard]] Operator unitary(double t) const {
    Eigen::VectorXcd ph(e_.size());
    for (Eigen::Index k = 0; k < e_.size(); ++k) ph(k) = std::polar(1.0, -e_(k) * t);
    return {sys_, v_ * ph.asDiagonal() * v_.adjoint(), false};
  }

  /// True when H was already diagonal and the eigenbasis is the storage basis.
  [[nodiscard]] bool is_diagonal() const noexcept { return diagonal_; }

  [[nodiscard]] Matrix to_eigenbasis(const Operator& a) const {
    sys_check(a);
    if (diagonal_) return a.matrix();
    return v_.adjoint() * a.matrix() * v_;
  }
  [[nodiscard]] Operator from_eigenbasis(const Matrix& ae, bool hermitian = false) const {
    if (diagonal_) return {sys_, ae, hermitian};
    return {sys_, v_ * ae * v_.adjoint(), hermitian};
  }

  /// Phases e^{-i (E_r - E_c) t} applied to an eigenbasis matrix.
  [[nodiscard]] Matrix evolve_eigen(const Matrix& ae, double t) const {
    const Eigen::Index d = e_.size();
    Eigen::VectorXcd ph(d);
    for (Eigen::Index k = 0; k < d; ++k) ph(k) = std::polar(1.0, -e_(k) * t);
    Matrix out(d, d);
    for (Eigen::Index c = 0; c < d; ++c) {
      const cplx pc = std::conj(ph(c));
      for (Eigen::Index r = 0; r < d; ++r) out(r, c) = ph(r) * ae(r, c) * pc;
    }
    return out;
  }

  /// rho(t) = U(t) rho U(t)^dagger under sign*H.
  [[nodiscard]] Operator evolve(const Operator& rho, double t, int sign = +1) const {
    if (t == 0.0) return rho;
    return from_eigenbasis(evolve_eigen(to_eigenbasis(rho), sign * t), rho.hermitian_hint());
  }

  void sys_check(const Operator& a) const {
    if (a.system() != sys_) throw std::invalid_argument("Propagator: operator lives in a different space");
  }

 private:
  SpinSystem sys_;
  Eigen::VectorXd e_;
  Matrix v_;
  double norm_ = 0.0;
  bool diagonal_ = false;
};

[[nodiscard]] inline Propagator make_propagator(const Operator& h) { return Propagator(h); }

[[nodiscard]] inline Operator evolve(const Propagator& p, const Operator& rho, double t) {
  return p.evolve(rho, t);
}

/// Conjugation by rotation(axis, angle).
[[nodiscard]] inline Operator apply_pulse(const Operator& rho, Axis axis, double angle) {
  return rotate(rho, axis, angle);
}

/// e^{iHt} A e^{-iHt}.
[[nodiscard]] inline Operator interaction_frame(const Propagator& p, const Operator& a, double t) {
  return p.evolve(a, -t);
}

[[nodiscard]] inline Operator interaction_frame(const Operator& h, const Operator& a, double t) {
  return interaction_frame(Propagator(h), a, t);
}

/// Tr{A B} for plain matrices.
[[nodiscard]] inline cplx trace_product(const Matrix& a, const Matrix& b) {
  return (a.transpose().array() * b.array()).sum();
}

// ---- pulse sequences ------------------------------------------------------

struct FreeEvolution {
  std::string hamiltonian;
  double duration = 0.0;
  int sign = +1;  // -1 runs the time-reversed Hamiltonian -H
};

struct Pulse {
  Axis axis = Axis::X;
  double angle = 0.0;
};

/// Conjugation by e^{i delta V}, V referenced by name.
struct Perturbation {
  std::string generator;
  double delta = 0.0;
};

using SequenceStep = std::variant<FreeEvolution, Pulse, Perturbation>;

struct PulseSequence {
  std::vector<SequenceStep> steps;

  PulseSequence& evolve(std::string h, double duration, int sign = +1) {
    steps.emplace_back(FreeEvolution{std::move(h), duration, sign});
    return *this;
  }
  PulseSequence& pulse(Axis axis, double angle) {
    steps.emplace_back(Pulse{axis, angle});
    return *this;
  }
  PulseSequence& perturb(std::string v, double delta) {
    steps.emplace_back(Perturbation{std::move(v), delta});
    return *this;
  }

  [[nodiscard]] double total_duration() const {
    double t = 0.0;
    for (const auto& s : steps) {
      if (const auto* f = std::get_if<FreeEvolution>(&s)) t += f->duration;
    }
    return t;
  }
};

struct EvolutionResult {
  std::vector<double> times;
  std::map<std::string, std::vector<cplx>> observables;
  std::vector<Operator> states;  // filled only when requested

  [[nodiscard]] std::vector<double> real_series(const std::string& name) const {
    const auto& s = observables.at(name);
    std::vector<double> out(s.size());
    std::transform(s.begin(), s.end(), out.begin(), [](cplx z) { return z.real(); });
    return out;
  }
};

using PropagatorTable = std::map<std::string, Propagator>;
using OperatorTable = std::map<std::string, Operator>;

/// Runs the steps in order on a clock advanced only by free evolution.
///
/// A sample at time t is recorded the first time the clock equals t inside a
/// free-evolution segment (endpoints included), so an instantaneous step at a
/// segment boundary is seen only by later samples. Samples past the end of the
/// schedule see the final state. Observables are recorded as Tr{O rho(t)}.
[[nodiscard]] inline EvolutionResult run_sequence(const SpinSystem& sys, const PulseSequence& seq,
                                                  const PropagatorTable& props, const Operator& rho0,
                                                  const std::vector<double>& sample_times,
                                                  const OperatorTable& observables = {},
                                                  bool store_states = false) {
  if (rho0.system() != sys) throw std::invalid_argument("run_sequence: initial state in a different space");
  for (const auto& [name, o] : observables) {
    if (o.system() != sys) throw std::invalid_argument("run_sequence: observable '" + name + "' in a different space");
  }
  for (const auto& s : seq.steps) {
    if (const auto* f = std::get_if<FreeEvolution>(&s)) {
      if (!(f->duration >= 0.0)) throw std::invalid_argument("run_sequence: negative duration");
      if (!props.count(f->hamiltonian)) {
        throw std::invalid_argument("run_sequence: undefined Hamiltonian '" + f->hamiltonian + "'");
      }
    } else if (const auto* p = std::get_if<Perturbation>(&s)) {
      if (!props.count(p->generator)) {
        throw std::invalid_argument("run_sequence: undefined perturbation generator '" + p->generator + "'");
      }
    }
  }
  std::vector<std::size_t> order(sample_times.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!(sample_times[k] >= 0.0)) throw std::invalid_argument("run_sequence: negative sample time");
    order[k] = k;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sample_times[x] < sample_times[y]; });

  EvolutionResult res;
  res.times = sample_times;
  for (const auto& [name, o] : observables) res.observables[name].assign(sample_times.size(), cplx{});
  std::vector<std::optional<Operator>> stored(store_states ? sample_times.size() : 0);

  auto record = [&](std::size_t k, const Operator& state) {
    for (const auto& [name, o] : observables) res.observables[name][k] = trace_product(o, state);
    if (store_states) stored[k] = state;
  };

  Operator rho = rho0;
  double clock = 0.0;
  std::size_t next = 0;
  for (const auto& s : seq.steps) {
    if (const auto* f = std::get_if<FreeEvolution>(&s)) {
      const Propagator& p = props.at(f->hamiltonian);
      const double end = clock + f->duration;
      const double slack = 1e-12 * std::max(1.0, std::abs(end));
      if (next < order.size() && sample_times[order[next]] <= end + slack) {
        const Matrix re = p.to_eigenbasis(rho);
        std::map<std::string, Matrix> oe;
        for (const auto& [name, o] : observables) oe.emplace(name, p.to_eigenbasis(o));
        while (next < order.size() && sample_times[order[next]] <= end + slack) {
          const std::size_t k = order[next++];
          const double dt = std::clamp(sample_times[k] - clock, 0.0, f->duration);
          const Matrix rt = p.evolve_eigen(re, f->sign * dt);
          for (const auto& [name, m] : oe) res.observables[name][k] = trace_product(m, rt);
          if (store_states) stored[k] = p.from_eigenbasis(rt, rho.hermitian_hint());
        }
      }
      rho = p.evolve(rho, f->duration, f->sign);
      clock = end;
    } else if (const auto* pl = std::get_if<Pulse>(&s)) {
      rho = apply_pulse(rho, pl->axis, pl->angle);
    } else if (const auto* pt = std::get_if<Perturbation>(&s)) {
      rho = props.at(pt->generator).evolve(rho, -pt->delta);
    }
  }
  while (next < order.size()) record(order[next++], rho);
  if (store_states) {
    res.states.reserve(stored.size());
    for (auto& st : stored) res.states.push_back(std::move(*st));
  }
  return res;
}

}  // namespace mqlab
