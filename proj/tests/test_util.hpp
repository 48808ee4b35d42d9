// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

// Shared helpers for the test suites: seeded random operators and
// brute-force Kronecker constructions used as independent oracles.

#pragma once

#include <mqlab/operator.hpp>
#include <mqlab/spin_system.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cstdint>
#include <random>

namespace mqtest {

using mqlab::cplx;
using mqlab::Matrix;

inline Matrix random_matrix(Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(d, d);
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index r = 0; r < d; ++r) m(r, c) = cplx(g(rng), g(rng));
  }
  return m;
}

inline mqlab::Operator random_hermitian(const mqlab::SpinSystem& sys, std::uint64_t seed) {
  Matrix m = random_matrix(sys.dim(), seed);
  Matrix h = 0.5 * (m + m.adjoint());
  h -= (h.trace() / static_cast<double>(sys.dim())) * Matrix::Identity(sys.dim(), sys.dim());
  return {sys, h, true};
}

inline mqlab::Operator random_operator(const mqlab::SpinSystem& sys, std::uint64_t seed) {
  return {sys, random_matrix(sys.dim(), seed), false};
}

// Pauli/2 in the z basis, embedded by explicit Kronecker products with
// site 0 as the least significant factor.
inline Eigen::Matrix2cd pauli_half(char axis) {
  Eigen::Matrix2cd s;
  const cplx i(0, 1);
  if (axis == 'x') s << 0, 0.5, 0.5, 0;
  if (axis == 'y') s << 0, -0.5 * i, 0.5 * i, 0;
  if (axis == 'z') s << 0.5, 0, 0, -0.5;
  return s;
}

inline Matrix kron_site(int n, int site, const Eigen::Matrix2cd& s) {
  Matrix out = Matrix::Identity(1, 1);
  for (int k = n - 1; k >= 0; --k) {
    Matrix f = k == site ? Matrix(s) : Matrix(Matrix::Identity(2, 2));
    Matrix next = Eigen::kroneckerProduct(out, f).eval();
    out = next;
  }
  return out;
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace mqtest
