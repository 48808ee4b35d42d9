// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mqlab/spin_system.hpp>

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

namespace mqlab {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Dense operator on the 2^N-dimensional Hilbert space of a SpinSystem.
///
/// The basis tag travels with the matrix; arithmetic between operators with
/// different tags or sizes throws. A set hermitian hint is validated on
/// construction against max|A - A†| <= 1e-12 max|A|.
class Operator {
 public:
  Operator(SpinSystem sys, Matrix m, bool hermitian_hint = false)
      : sys_(sys), m_(std::move(m)), hermitian_(hermitian_hint) {
    if (m_.rows() != sys_.dim() || m_.cols() != sys_.dim()) {
      throw std::invalid_argument("Operator: matrix is " + std::to_string(m_.rows()) + "x" +
                                  std::to_string(m_.cols()) + ", system needs " +
                                  std::to_string(sys_.dim()));
    }
    if (hermitian_ && hermiticity_defect() > 1e-12 * std::max(max_abs(), 1e-300)) {
      throw std::invalid_argument("Operator: hermitian hint set on a non-Hermitian matrix");
    }
  }

  [[nodiscard]] static Operator zero(const SpinSystem& sys) {
    return {sys, Matrix::Zero(sys.dim(), sys.dim()), true};
  }
  [[nodiscard]] static Operator identity(const SpinSystem& sys) {
    return {sys, Matrix::Identity(sys.dim(), sys.dim()), true};
  }

  [[nodiscard]] const SpinSystem& system() const noexcept { return sys_; }
  [[nodiscard]] Basis basis() const noexcept { return sys_.basis(); }
  [[nodiscard]] Eigen::Index dim() const noexcept { return m_.rows(); }
  [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }
  [[nodiscard]] bool hermitian_hint() const noexcept { return hermitian_; }

  [[nodiscard]] double max_abs() const { return m_.size() ? m_.cwiseAbs().maxCoeff() : 0.0; }
  [[nodiscard]] double frobenius_norm() const { return m_.norm(); }
  [[nodiscard]] double hermiticity_defect() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }
  [[nodiscard]] bool is_hermitian(double rel_tol = 1e-12) const {
    return hermiticity_defect() <= rel_tol * std::max(max_abs(), 1e-300);
  }

  [[nodiscard]] Operator adjoint() const { return {sys_, m_.adjoint(), hermitian_}; }

  Operator& operator+=(const Operator& o) {
    require_same_space(o);
    m_ += o.m_;
    hermitian_ = hermitian_ && o.hermitian_;
    return *this;
  }
  Operator& operator-=(const Operator& o) {
    require_same_space(o);
    m_ -= o.m_;
    hermitian_ = hermitian_ && o.hermitian_;
    return *this;
  }
  Operator& operator*=(double s) {
    m_ *= s;
    return *this;
  }
  Operator& operator*=(cplx s) {
    m_ *= s;
    hermitian_ = hermitian_ && s.imag() == 0.0;
    return *this;
  }

  friend Operator operator+(Operator a, const Operator& b) { return a += b; }
  friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
  friend Operator operator-(Operator a) { return a *= -1.0; }
  friend Operator operator*(Operator a, double s) { return a *= s; }
  friend Operator operator*(double s, Operator a) { return a *= s; }
  friend Operator operator*(Operator a, cplx s) { return a *= s; }
  friend Operator operator*(cplx s, Operator a) { return a *= s; }
  friend Operator operator*(const Operator& a, const Operator& b) {
    a.require_same_space(b);
    return {a.sys_, a.m_ * b.m_, false};
  }

  void require_same_space(const Operator& o) const {
    if (sys_ != o.sys_) {
      throw std::invalid_argument("Operator: mismatched spaces (N=" + std::to_string(sys_.n_spins()) +
                                  "/" + std::string(to_string(basis())) +
                                  " vs N=" + std::to_string(o.sys_.n_spins()) + "/" +
                                  std::string(to_string(o.basis())) + ")");
    }
  }

 private:
  SpinSystem sys_;
  Matrix m_;
  bool hermitian_;
};

[[nodiscard]] inline cplx trace(const Operator& a) { return a.matrix().trace(); }

/// Tr{a b} without forming the product.
[[nodiscard]] inline cplx trace_product(const Operator& a, const Operator& b) {
  a.require_same_space(b);
  return (a.matrix().transpose().array() * b.matrix().array()).sum();
}

[[nodiscard]] inline Operator commutator(const Operator& a, const Operator& b) {
  a.require_same_space(b);
  return {a.system(), a.matrix() * b.matrix() - b.matrix() * a.matrix(), false};
}

[[nodiscard]] inline double max_abs_diff(const Operator& a, const Operator& b) {
  a.require_same_space(b);
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

/// Hermitian part (A + A†)/2; used to strip round-off before eigensolves.
[[nodiscard]] inline Operator hermitian_part(const Operator& a) {
  Matrix h = 0.5 * (a.matrix() + a.matrix().adjoint());
  return {a.system(), std::move(h), true};
}

}  // namespace mqlab
