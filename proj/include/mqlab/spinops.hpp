// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mqlab/operator.hpp>
#include <mqlab/spin_system.hpp>

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mqlab {

using Matrix2 = Eigen::Matrix2cd;

/// Single-site spin matrix S_alpha in the given storage basis.
[[nodiscard]] inline Matrix2 local_spin_matrix(Basis basis, Axis axis) {
  Matrix2 sx, sy, sz;
  sx << 0.0, 0.5, 0.5, 0.0;
  sy << 0.0, -0.5 * kI, 0.5 * kI, 0.0;
  sz << 0.5, 0.0, 0.0, -0.5;
  if (basis == Basis::ZProduct) {
    switch (axis) {
      case Axis::X: return sx;
      case Axis::Y: return sy;
      case Axis::Z: return sz;
    }
  }
  // x-product basis: (x, y, z) -> Pauli (z, x, y).
  switch (axis) {
    case Axis::X: return sz;
    case Axis::Y: return sx;
    case Axis::Z: return sy;
  }
  return Matrix2::Zero();
}

/// Whether total S_axis is diagonal in `basis`.
[[nodiscard]] constexpr bool diagonal_axis(Basis basis, Axis axis) noexcept {
  return (basis == Basis::XProduct && axis == Axis::X) ||
         (basis == Basis::ZProduct && axis == Axis::Z);
}

/// Twice the eigenvalue of the diagonal total spin component for a basis
/// state: N - 2*popcount.
[[nodiscard]] inline int twice_magnetization(std::uint64_t state, int n_spins) noexcept {
  return n_spins - 2 * std::popcount(state);
}

/// Coherence order m_r - m_c of matrix element (r, c) for the diagonal axis.
[[nodiscard]] inline int order_of(std::uint64_t r, std::uint64_t c) noexcept {
  return std::popcount(c) - std::popcount(r);
}

namespace detail {

inline void check_site(const SpinSystem& sys, int site) {
  if (site < 0 || site >= sys.n_spins()) {
    throw std::out_of_range("site " + std::to_string(site) + " outside [0, " +
                            std::to_string(sys.n_spins()) + ")");
  }
}

// Embed a 2x2 matrix at one site.
inline Matrix embed(const SpinSystem& sys, const Matrix2& s, int site) {
  const Eigen::Index d = sys.dim();
  const Eigen::Index mask = Eigen::Index{1} << site;
  Matrix out = Matrix::Zero(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    const int bc = (c & mask) ? 1 : 0;
    const Eigen::Index c0 = c & ~mask;
    out(c0, c) = s(0, bc);
    out(c0 | mask, c) = s(1, bc);
  }
  return out;
}

// M <- u_site * M (left action of a one-site matrix).
inline void left_apply(Matrix& m, const Matrix2& u, int site) {
  const Eigen::Index d = m.rows();
  const Eigen::Index mask = Eigen::Index{1} << site;
  for (Eigen::Index r = 0; r < d; ++r) {
    if (r & mask) continue;
    const Eigen::Index r1 = r | mask;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const cplx a = m(r, c);
      const cplx b = m(r1, c);
      m(r, c) = u(0, 0) * a + u(0, 1) * b;
      m(r1, c) = u(1, 0) * a + u(1, 1) * b;
    }
  }
}

// M <- M * v_site (right action of a one-site matrix); column-major friendly.
inline void right_apply(Matrix& m, const Matrix2& v, int site) {
  const Eigen::Index d = m.cols();
  const Eigen::Index mask = Eigen::Index{1} << site;
  for (Eigen::Index c = 0; c < d; ++c) {
    if (c & mask) continue;
    const Eigen::Index c1 = c | mask;
    auto col0 = m.col(c);
    auto col1 = m.col(c1);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const cplx a = col0(r);
      const cplx b = col1(r);
      col0(r) = a * v(0, 0) + b * v(1, 0);
      col1(r) = a * v(0, 1) + b * v(1, 1);
    }
  }
}

// U_site M U_site^dagger for every site in turn with the same u.
inline void conjugate_all_sites(Matrix& m, const Matrix2& u, int n_spins) {
  const Matrix2 ud = u.adjoint();
  for (int s = 0; s < n_spins; ++s) {
    left_apply(m, u, s);
    right_apply(m, ud, s);
  }
}

inline Matrix2 local_rotation(Basis basis, Axis axis, double angle) {
  // exp(-i angle s) = cos(angle/2) I - 2i sin(angle/2) s for a spin-1/2.
  return std::cos(0.5 * angle) * Matrix2::Identity() -
         2.0 * kI * std::sin(0.5 * angle) * local_spin_matrix(basis, axis);
}

// Per-site W with A_x = W^dagger A_z W.
inline Matrix2 basis_change_local() {
  Matrix2 w;
  const double s = 1.0 / std::sqrt(2.0);
  w << s, -kI * s, s, kI * s;
  return w;
}

}  // namespace detail

[[nodiscard]] inline Operator site_operator(const SpinSystem& sys, Axis axis, int site) {
  detail::check_site(sys, site);
  return {sys, detail::embed(sys, local_spin_matrix(sys.basis(), axis), site), true};
}

[[nodiscard]] inline Operator total_operator(const SpinSystem& sys, Axis axis) {
  if (diagonal_axis(sys.basis(), axis)) {
    Matrix m = Matrix::Zero(sys.dim(), sys.dim());
    for (Eigen::Index k = 0; k < sys.dim(); ++k) {
      m(k, k) = 0.5 * twice_magnetization(static_cast<std::uint64_t>(k), sys.n_spins());
    }
    return {sys, std::move(m), true};
  }
  Matrix m = Matrix::Zero(sys.dim(), sys.dim());
  const Matrix2 s = local_spin_matrix(sys.basis(), axis);
  for (int i = 0; i < sys.n_spins(); ++i) m += detail::embed(sys, s, i);
  return {sys, std::move(m), true};
}

/// S_i^{+/-} = S_{y,i} +/- i S_{z,i}: raises (lowers) S_x by one.
[[nodiscard]] inline Operator ladder_operator(const SpinSystem& sys, int site, int sign) {
  detail::check_site(sys, site);
  if (sign != 1 && sign != -1) throw std::invalid_argument("ladder_operator: sign must be +1 or -1");
  const Matrix2 s = local_spin_matrix(sys.basis(), Axis::Y) +
                    static_cast<double>(sign) * kI * local_spin_matrix(sys.basis(), Axis::Z);
  return {sys, detail::embed(sys, s, site), false};
}

/// exp(-i angle S_axis,total) as a dense unitary.
[[nodiscard]] inline Operator rotation(const SpinSystem& sys, Axis axis, double angle) {
  const Matrix2 u = detail::local_rotation(sys.basis(), axis, angle);
  Matrix m = Matrix::Identity(1, 1);
  for (int i = 0; i < sys.n_spins(); ++i) {
    // Site i is bit i, so the new factor goes in front: u ⊗ m.
    const Eigen::Index d = m.rows();
    Matrix next(2 * d, 2 * d);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) next.block(a * d, b * d, d, d) = u(a, b) * m;
    }
    m = std::move(next);
  }
  return {sys, std::move(m), false};
}

/// R A R^dagger for R = rotation(axis, angle), without building R.
[[nodiscard]] inline Operator rotate(const Operator& a, Axis axis, double angle) {
  const SpinSystem& sys = a.system();
  Matrix m = a.matrix();
  if (diagonal_axis(sys.basis(), axis)) {
    const Eigen::Index d = sys.dim();
    std::vector<cplx> ph(static_cast<std::size_t>(2 * sys.n_spins() + 1));
    for (int n = -sys.n_spins(); n <= sys.n_spins(); ++n) {
      ph[static_cast<std::size_t>(n + sys.n_spins())] = std::polar(1.0, -angle * n);
    }
    for (Eigen::Index c = 0; c < d; ++c) {
      for (Eigen::Index r = 0; r < d; ++r) {
        m(r, c) *= ph[static_cast<std::size_t>(
            order_of(static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c)) + sys.n_spins())];
      }
    }
  } else {
    detail::conjugate_all_sites(m, detail::local_rotation(sys.basis(), axis, angle), sys.n_spins());
  }
  return {sys, std::move(m), a.hermitian_hint()};
}

/// U A U^dagger.
[[nodiscard]] inline Operator conjugate(const Operator& a, const Operator& u) {
  a.require_same_space(u);
  return {a.system(), u.matrix() * a.matrix() * u.matrix().adjoint(), false};
}

[[nodiscard]] inline Operator change_basis(const Operator& op, Basis target) {
  if (op.basis() == target) return op;
  Matrix m = op.matrix();
  const Matrix2 w = detail::basis_change_local();
  // z -> x: A_x = W^dagger A_z W.  x -> z: A_z = W A_x W^dagger.
  const Matrix2 u = target == Basis::XProduct ? Matrix2(w.adjoint()) : w;
  detail::conjugate_all_sites(m, u, op.system().n_spins());
  return {op.system().with_basis(target), std::move(m), op.hermitian_hint()};
}

}  // namespace mqlab
