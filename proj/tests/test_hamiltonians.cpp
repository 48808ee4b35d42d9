// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <mqlab/hamiltonians.hpp>

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numbers>
#include <sstream>

#include "test_util.hpp"

using namespace mqlab;
using mqtest::max_abs;

namespace {

constexpr double kPi = std::numbers::pi;

// Direct Kronecker-product oracle in the z basis.
Matrix oracle_hamiltonian(const HamiltonianSpec& s) {
  const int n = s.n_sites();
  const Eigen::Index d = Eigen::Index{1} << n;
  Matrix h = Matrix::Zero(d, d);
  const double coef[3] = {s.a, s.b, s.c};
  const char ax[3] = {'x', 'y', 'z'};
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      for (int k = 0; k < 3; ++k) {
        const auto p = mqtest::pauli_half(ax[k]);
        h += s.couplings(i, j) * coef[k] * mqtest::kron_site(n, i, p) * mqtest::kron_site(n, j, p);
      }
    }
    if (!s.offsets.empty()) {
      const char oa = s.offset_axis == Axis::X ? 'x' : s.offset_axis == Axis::Y ? 'y' : 'z';
      h += s.offsets[static_cast<std::size_t>(i)] * mqtest::kron_site(n, i, mqtest::pauli_half(oa));
    }
  }
  return h;
}

HamiltonianSpec random_spec(int n, std::uint64_t seed, std::string_view name = "dipolar-secular") {
  return preset(name, random_couplings(n, seed));
}

}  // namespace

TEST_CASE("build_hamiltonian matches a Kronecker oracle", "[hamiltonians]") {
  const int n = 4;
  HamiltonianSpec s = random_spec(n, 21);
  s.a = 0.7, s.b = -1.3, s.c = 0.4;
  s.offsets = {0.1, -0.2, 0.35, 0.05};
  for (Axis oa : {Axis::X, Axis::Y, Axis::Z}) {
    s.offset_axis = oa;
    const Matrix oracle = oracle_hamiltonian(s);
    const Operator hz = build_hamiltonian(SpinSystem(n, Basis::ZProduct), s);
    const Operator hx = build_hamiltonian(SpinSystem(n, Basis::XProduct), s);
    CHECK(max_abs(hz.matrix() - oracle) <= 1e-14);
    CHECK(max_abs_diff(change_basis(hz, Basis::XProduct), hx) <= 1e-13);
  }
}

TEST_CASE("Hamiltonians are Hermitian and traceless", "[hamiltonians][property]") {
  for (auto name : kPresetNames) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const Operator h = build_hamiltonian(SpinSystem(5), random_spec(5, seed, name));
      CHECK(h.hermiticity_defect() <= 1e-12 * h.max_abs());
      CHECK(std::abs(trace(h)) <= 1e-12);
    }
  }
}

TEST_CASE("dipolar pair commutes with total S_z", "[hamiltonians]") {
  for (Basis b : {Basis::XProduct, Basis::ZProduct}) {
    const SpinSystem sys(2, b);
    const Operator h = build_hamiltonian(sys, preset("dipolar-secular", complete_couplings(2, 1.0)));
    CHECK(h.is_hermitian());
    CHECK(std::abs(trace(h)) <= 1e-15);
    CHECK(commutator(h, total_operator(sys, Axis::Z)).max_abs() <= 1e-12);
  }
}

TEST_CASE("a = b implies z-rotation invariance", "[hamiltonians][property]") {
  HamiltonianSpec s = random_spec(5, 4);
  s.a = s.b = 0.8;
  s.c = 1.9;
  const SpinSystem sys(5);
  CHECK(commutator(build_hamiltonian(sys, s), total_operator(sys, Axis::Z)).max_abs() <= 1e-12);
}

TEST_CASE("zero couplings give the zero operator", "[hamiltonians]") {
  const Operator h = build_hamiltonian(SpinSystem(3), preset("dipolar-secular", CouplingTable::Zero(3, 3)));
  CHECK(h.max_abs() == 0.0);
}

TEST_CASE("zz pair spectrum", "[hamiltonians]") {
  const double b = 1.7;
  const Operator h = build_hamiltonian(SpinSystem(2), preset("zz", complete_couplings(2, b)));
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix());
  const double e = std::numbers::sqrt2 * b / 4.0;
  CHECK(es.eigenvalues()(0) == Catch::Approx(-e).epsilon(1e-14));
  CHECK(es.eigenvalues()(1) == Catch::Approx(-e).epsilon(1e-14));
  CHECK(es.eigenvalues()(2) == Catch::Approx(e).epsilon(1e-14));
  CHECK(es.eigenvalues()(3) == Catch::Approx(e).epsilon(1e-14));
}

TEST_CASE("π rotations about any axis leave Eq-1 Hamiltonians invariant", "[hamiltonians][property]") {
  for (auto name : kPresetNames) {
    HamiltonianSpec s = random_spec(5, 8, name);
    const Operator h = build_hamiltonian(SpinSystem(5), s);
    for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
      CHECK(max_abs_diff(rotate(h, a, kPi), h) <= 1e-10 * h.frobenius_norm());
    }
  }
}

TEST_CASE("input validation", "[hamiltonians]") {
  CouplingTable b = complete_couplings(3, 1.0);
  b(0, 1) = 2.0;
  CHECK_THROWS_AS(build_hamiltonian(SpinSystem(3), preset("zz", b)), std::invalid_argument);
  CHECK_THROWS_AS(build_hamiltonian(SpinSystem(4), preset("zz", complete_couplings(3, 1.0))),
                  std::invalid_argument);
  CouplingTable diag = complete_couplings(3, 1.0);
  diag(1, 1) = 0.5;
  CHECK_THROWS_AS(validate_couplings(diag), std::invalid_argument);
  CHECK_THROWS_AS(preset("heisenberg", diag), std::invalid_argument);
  HamiltonianSpec s = preset("zz", complete_couplings(3, 1.0));
  s.offsets = {1.0};
  CHECK_THROWS_AS(build_hamiltonian(SpinSystem(3), s), std::invalid_argument);
}

TEST_CASE("presets resolve to their coefficients", "[hamiltonians]") {
  const CouplingTable b = complete_couplings(2, 1.0);
  auto abc = [](const HamiltonianSpec& s) { return std::array<double, 3>{s.a, s.b, s.c}; };
  CHECK(abc(preset("dipolar-secular", b)) == std::array<double, 3>{1, 1, -2});
  CHECK(abc(preset("double-quantum", b)) == std::array<double, 3>{0, 1, -1});
  CHECK(abc(preset("yy-zz", b)) == std::array<double, 3>{0, 1, -1});
  CHECK(abc(preset("zz", b)) == std::array<double, 3>{0, 0, std::numbers::sqrt2});
  CHECK(abc(preset("zz", b, 1.0)) == std::array<double, 3>{0, 0, 1});
  CHECK(abc(preset("xx", b)) == std::array<double, 3>{1, 0, 0});
}

TEST_CASE("dipolar couplings from geometry", "[hamiltonians]") {
  const Vec3 z(0, 0, 1);
  CHECK(dipolar_couplings({Vec3(0, 0, 0), Vec3(0, 0, 1)}, z)(0, 1) == Catch::Approx(2.0));
  const double magic = std::acos(1.0 / std::sqrt(3.0));
  const auto bm = dipolar_couplings({Vec3(0, 0, 0), Vec3(std::sin(magic), 0, std::cos(magic))}, z);
  CHECK(std::abs(bm(0, 1)) <= 1e-12);
  CHECK(dipolar_couplings({Vec3(0, 0, 0), Vec3(2, 0, 0)}, z)(0, 1) == Catch::Approx(-0.125));
  CHECK(dipolar_couplings({Vec3(0, 0, 0), Vec3(2, 0, 0)}, z, 3.0)(1, 0) == Catch::Approx(-0.375));
  CHECK_THROWS_AS(dipolar_couplings({Vec3(1, 1, 1), Vec3(1, 1, 1)}, z), std::invalid_argument);
  const auto ring = dipolar_couplings(ring_positions(6), z);
  CHECK(ring(0, 1) == Catch::Approx(-1.0));
  CHECK(ring(0, 3) == Catch::Approx(-0.125));
  CHECK_NOTHROW(validate_couplings(ring));
}

TEST_CASE("geometry and coupling files", "[hamiltonians]") {
  std::istringstream geo("# site x y z\n0 0 0 0\n1 0 0 1.0\n2 0 0 2  # end\n");
  const auto pos = read_geometry(geo);
  REQUIRE(pos.size() == 3);
  CHECK(pos[2].z() == 2.0);
  std::istringstream bad("0 0 0\n");
  CHECK_THROWS(read_geometry(bad));
  std::istringstream gap("0 0 0 0\n2 0 0 1\n");
  CHECK_THROWS(read_geometry(gap));
  std::istringstream tab("0 1 0.5\n1 2 -0.25\n");
  const auto b = read_coupling_table(tab, 3);
  CHECK(b(1, 0) == 0.5);
  CHECK(b(2, 1) == -0.25);
  CHECK(b(0, 2) == 0.0);
}

TEST_CASE("random couplings are reproducible from the seed", "[hamiltonians]") {
  CHECK(random_couplings(6, 42) == random_couplings(6, 42));
  CHECK(random_couplings(6, 42) != random_couplings(6, 43));
  CHECK_NOTHROW(validate_couplings(random_couplings(6, 42, 2.5)));
}

TEST_CASE("harmonic decomposition invariants", "[hamiltonians][property]") {
  const SpinSystem sys(5);
  const Operator sx = total_operator(sys, Axis::X);
  for (auto name : kPresetNames) {
    HamiltonianSpec s = random_spec(5, 17, name);
    const Operator h = build_hamiltonian(sys, s);
    const auto hd = harmonic_decomposition(h);
    const double nh = h.frobenius_norm();
    CHECK(max_abs_diff(hd.sum(), h) <= 1e-10 * nh);
    for (int n = -2; n <= 2; ++n) {
      const Operator hn = hd.at(n);
      CHECK(max_abs_diff(commutator(sx, hn), static_cast<double>(n) * hn) <= 1e-10 * std::max(hn.frobenius_norm(), 1e-300) + 1e-14);
      CHECK(max_abs_diff(hd.at(-n), hn.adjoint()) <= 1e-12);
      for (int m = -2; m <= 2; ++m) {
        if (m != -n) CHECK(std::abs(trace_product(hn, hd.at(m))) <= 1e-10 * nh * nh);
      }
    }
    // Bilinear Eq-1 terms carry no odd orders.
    CHECK(hd.at(1).max_abs() <= 1e-12);
    CHECK(hd.at(-1).max_abs() <= 1e-12);
  }
}

TEST_CASE("double-quantum preset is pure n = ±2", "[hamiltonians]") {
  const Operator h = build_hamiltonian(SpinSystem(4), random_spec(4, 3, "double-quantum"));
  const auto hd = harmonic_decomposition(h);
  CHECK(hd.at(0).max_abs() <= 1e-12);
  CHECK(hd.at(1).max_abs() <= 1e-12);
  CHECK(max_abs_diff(hd.at(2) + hd.at(-2), h) <= 1e-12);
  CHECK(hd.at(2).max_abs() > 0.1);
}

TEST_CASE("zz harmonic pair trace", "[hamiltonians]") {
  for (int n : {2, 3, 5}) {
    const HamiltonianSpec s = random_spec(n, 99, "zz");
    const auto hd = harmonic_decomposition(build_hamiltonian(SpinSystem(n), s));
    double sum_b2 = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) sum_b2 += s.couplings(i, j) * s.couplings(i, j);
    }
    const double expect = s.c * s.c / 16.0 * std::ldexp(1.0, n - 2) * sum_b2;
    CHECK(hd.pair_trace(2) == Catch::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("general K-angle decomposition", "[hamiltonians]") {
  const SpinSystem sys(3);
  const Operator a = mqtest::random_hermitian(sys, 5);
  const auto hd = harmonic_decomposition(a, 7);
  CHECK(hd.max_order() == 3);
  CHECK(max_abs_diff(hd.sum(), a) <= 1e-12);
  const Operator sx = total_operator(sys, Axis::X);
  for (int n = -3; n <= 3; ++n) {
    CHECK(max_abs_diff(commutator(sx, hd.at(n)), static_cast<double>(n) * hd.at(n)) <= 1e-12);
  }
  CHECK_THROWS_AS(harmonic_decomposition(mqtest::random_operator(sys, 1)), std::invalid_argument);
}

TEST_CASE("second moment of the absorption line", "[hamiltonians]") {
  CHECK(m2_absorption(complete_couplings(2, 3.0), 0) == Catch::Approx(9.0 / 4.0));
  CHECK(m2_absorption(complete_couplings(6, 2.0), 3) == Catch::Approx(5.0 * 4.0 / 4.0));
  CHECK(m2_absorption_mean(complete_couplings(6, 2.0)) == Catch::Approx(5.0));
  CHECK(m2_absorption(CouplingTable::Zero(4, 4), 2) == 0.0);
  CHECK(m2_absorption_mean(chain_couplings(3, 2.0)) == Catch::Approx((1.0 + 2.0 + 1.0) / 3.0));
  CHECK_THROWS(m2_absorption(complete_couplings(2, 1.0), 2));
}

TEST_CASE("local field strength", "[hamiltonians]") {
  const SpinSystem sys(2, Basis::ZProduct);
  const Operator sx = total_operator(sys, Axis::X);
  CHECK(local_field(Operator::zero(sys), sx) == 0.0);
  const double b = 1.3;
  const Operator h = b * (site_operator(sys, Axis::Z, 0) * site_operator(sys, Axis::Z, 1));
  CHECK(local_field(h, sx) == Catch::Approx(std::sqrt(b * b / 8.0)).epsilon(1e-14));
  CHECK(local_field(2.0 * h, sx) == Catch::Approx(2.0 * local_field(h, sx)).epsilon(1e-14));
  CHECK_THROWS_AS(local_field(h, Operator::zero(sys)), std::invalid_argument);
}
