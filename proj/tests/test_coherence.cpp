// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <mqlab/coherence.hpp>
#include <mqlab/dynamics.hpp>
#include <mqlab/hamiltonians.hpp>

#include <catch_amalgamated.hpp>

#include <numbers>

#include "test_util.hpp"

using namespace mqlab;

namespace {

constexpr double kPi = std::numbers::pi;

double norm_of(const Operator& a) { return trace_product(a, a).real(); }

}  // namespace

TEST_CASE("S_x has only zero-quantum content", "[coherence]") {
  const SpinSystem sys(4);
  const Operator sx = total_operator(sys, Axis::X);
  const auto parts = mq_decompose(sx);
  for (const auto& [n, p] : parts) {
    if (n == 0) CHECK(max_abs_diff(p, sx) == 0.0);
    else CHECK(p.max_abs() == 0.0);
  }
  const MQSpectrum s = mq_intensities(parts, norm_of(sx));
  CHECK(s.at(0) == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(s.total() == Catch::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("two correlated raising operators form a two-quantum coherence", "[coherence]") {
  const SpinSystem sys(3);
  const Operator rho = ladder_operator(sys, 0, +1) * ladder_operator(sys, 1, +1);
  for (const auto& [n, p] : mq_decompose(rho)) {
    if (n == 2) CHECK(max_abs_diff(p, rho) == 0.0);
    else CHECK(p.max_abs() == 0.0);
  }
}

TEST_CASE("masking reconstructs and obeys the eigen-relation", "[coherence][property]") {
  const SpinSystem sys(4);
  const Operator sx = total_operator(sys, Axis::X);
  const Operator rho = mqtest::random_hermitian(sys, 77);
  const auto parts = mq_decompose(rho);
  Operator sum = Operator::zero(sys);
  for (const auto& [n, p] : parts) {
    sum += p;
    CHECK(max_abs_diff(commutator(sx, p), static_cast<double>(n) * p) <= 1e-12);
    // e^{i phi S_x} rho_n e^{-i phi S_x} = e^{i n phi} rho_n.
    for (double phi : {kPi / 7, std::numbers::e / 3, 1.0}) {
      CHECK(max_abs_diff(rotate(p, Axis::X, -phi), std::polar(1.0, n * phi) * p) <= 1e-12);
    }
  }
  CHECK(max_abs_diff(sum, rho) == 0.0);
}

TEST_CASE("z-basis input gives the same spectrum", "[coherence]") {
  const SpinSystem zs(4, Basis::ZProduct);
  const Operator rho = mqtest::random_hermitian(zs, 31);
  const auto a = mq_spectrum(rho, 1.0);
  const auto b = mq_spectrum(change_basis(rho, Basis::XProduct), 1.0);
  for (int n = -4; n <= 4; ++n) CHECK(std::abs(a.at(n) - b.at(n)) <= 1e-12);
}

TEST_CASE("sum rule and symmetry along a dipolar trajectory", "[coherence][property]") {
  const SpinSystem sys(8);
  const Operator h = build_hamiltonian(sys, preset("dipolar-secular", random_couplings(8, 5)));
  const Propagator p(h);
  const Operator sx = total_operator(sys, Axis::X);
  const double n0 = norm_of(sx);
  const double w = local_field(h);
  for (double t : {0.0, 0.5 / w, 2.0 / w, 10.0 / w}) {
    const MQSpectrum s = mq_spectrum(p.evolve(sx, t), n0, t);
    const SpectrumCheck c = check_spectrum(s, 8);
    CHECK(c.sum_rule_error <= 1e-10);
    CHECK(c.symmetry_error <= 1e-10);
    CHECK(c.min_intensity >= 0.0);
    CHECK(c.m2 <= c.m2_bound);
    for (int n : {-7, -5, -3, -1, 1, 3, 5, 7}) CHECK(s.at(n) <= 1e-12);
  }
}

TEST_CASE("zz pair intensities and second moment", "[coherence]") {
  const double b = 1.1;
  const SpinSystem sys(2);
  const Propagator p(build_hamiltonian(sys, preset("zz", complete_couplings(2, b), 1.0)));
  const Operator sx = total_operator(sys, Axis::X);
  for (double t : {0.0, 0.3, 1.7, 4.0, 11.0}) {
    const MQSpectrum s = mq_intensities(mq_decompose(p.evolve(sx, t)), norm_of(sx), t);
    const double c2 = std::cos(b * t / 2), s2 = std::sin(b * t / 2);
    CHECK(std::abs(s.at(0) - c2 * c2) <= 1e-12);
    CHECK(std::abs(s.at(2) - 0.5 * s2 * s2) <= 1e-12);
    CHECK(std::abs(s.at(-2) - 0.5 * s2 * s2) <= 1e-12);
    CHECK(std::abs(second_moment(s) - 4.0 * s2 * s2) <= 1e-12);
    CHECK(second_moment(s) <= 4.0 + 1e-12);
  }
}

TEST_CASE("commutator second moment agrees with masking", "[coherence][property]") {
  const SpinSystem sys(6);
  const Operator sx = total_operator(sys, Axis::X);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Operator rho = mqtest::random_hermitian(sys, seed);
    const double n0 = norm_of(rho);
    const double a = second_moment(mq_spectrum(rho, n0));
    const double b = second_moment_commutator(rho, sx, n0);
    CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, a));
  }
  CHECK(second_moment_commutator(sx, sx, 1.0) == 0.0);
  CHECK_THROWS_AS(second_moment_commutator(sx, sx, 0.0), std::invalid_argument);
}

TEST_CASE("short-time growth of the second moment", "[coherence]") {
  const SpinSystem sys(6);
  const Operator h = build_hamiltonian(sys, preset("dipolar-secular", random_couplings(6, 19)));
  const auto hd = harmonic_decomposition(h);
  const Operator sx = total_operator(sys, Axis::X);
  const double n0 = norm_of(sx);
  double coef = 0.0;
  for (int n = -2; n <= 2; ++n) coef += std::pow(n, 4) * hd.pair_trace(n) / n0;
  const Propagator p(h);
  const double w = local_field(h);
  for (double f : {0.01, 0.03, 0.05}) {
    const double t = f / w;
    const double ratio = second_moment(mq_spectrum(p.evolve(sx, t), n0)) / (t * t);
    CHECK(std::abs(ratio / coef - 1.0) <= 0.01);
  }
}

TEST_CASE("negative intensities beyond round-off are rejected", "[coherence]") {
  const SpinSystem sys(2);
  const Operator a = ladder_operator(sys, 0, +1);
  std::map<int, Operator> parts;
  parts.emplace(1, a);
  parts.emplace(-1, -1.0 * a.adjoint());
  CHECK_THROWS_AS(mq_intensities(parts, 1.0), InvariantError);
  CHECK_THROWS_AS(mq_intensities(parts, 0.0), std::invalid_argument);
}

TEST_CASE("V-coherences for V = S_x reproduce MQ orders", "[coherence]") {
  const SpinSystem sys(4);
  const Operator sx = total_operator(sys, Axis::X);
  const Operator rho = mqtest::random_hermitian(sys, 8);
  const double n0 = norm_of(rho);
  const VDecomposition vd = v_decompose(rho, sx);
  const VSpectrum vs = vd.spectrum(n0);
  const MQSpectrum mq = mq_spectrum(rho, n0);
  REQUIRE(vs.lines.size() == 9);
  const auto parts = mq_decompose(rho);
  for (std::size_t k = 0; k < vs.lines.size(); ++k) {
    const int n = static_cast<int>(std::lround(vs.lines[k].omega));
    CHECK(vs.lines[k].omega == static_cast<double>(n));
    CHECK(std::abs(vs.lines[k].intensity - mq.at(n)) <= 1e-12);
    CHECK(max_abs_diff(vd.component(k), parts.at(n)) <= 1e-14);
  }
  CHECK(std::abs(second_moment(vs) - second_moment(mq)) <= 1e-12);
}

TEST_CASE("V-coherence edge cases and invariants", "[coherence][property]") {
  const SpinSystem sys(3);
  const Operator rho = mqtest::random_hermitian(sys, 41);
  const double n0 = norm_of(rho);
  const VSpectrum id = v_decompose(rho, Operator::identity(sys)).spectrum(n0);
  REQUIRE(id.lines.size() == 1);
  CHECK(id.lines[0].omega == 0.0);
  CHECK(id.lines[0].intensity == Catch::Approx(1.0).epsilon(1e-12));

  const Operator v = mqtest::random_hermitian(sys, 42);
  const VDecomposition vd = v_decompose(rho, v);
  const VSpectrum vs = vd.spectrum(n0);
  CHECK(std::abs(vs.total() - 1.0) <= 1e-10);
  Operator sum = Operator::zero(sys);
  const double vnorm = v.frobenius_norm();
  for (std::size_t k = 0; k < vd.size(); ++k) {
    const Operator c = vd.component(k);
    sum += c;
    CHECK(max_abs_diff(commutator(v, c), vd.omegas()[k] * c) <= 1e-9 * vnorm);
  }
  CHECK(max_abs_diff(sum, rho) <= 1e-12);
  for (std::size_t k = 0; k < vs.lines.size(); ++k) {
    const auto& mirror = vs.lines[vs.lines.size() - 1 - k];
    CHECK(mirror.omega == -vs.lines[k].omega);
    CHECK(std::abs(mirror.intensity - vs.lines[k].intensity) <= 1e-10);
  }
  CHECK_THROWS_AS(v_decompose(rho, mqtest::random_operator(sys, 1)), std::invalid_argument);
}
