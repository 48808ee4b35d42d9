// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mqlab/operator.hpp>
#include <mqlab/spinops.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mqlab {

inline constexpr double kIntensityClip = 1e-12;

/// Normalized MQ intensities I_n = Tr{rho_n rho_{-n}} / norm.
struct MQSpectrum {
  std::map<int, double> intensities;
  double norm = 1.0;
  double time = 0.0;

  [[nodiscard]] double at(int n) const {
    auto it = intensities.find(n);
    return it == intensities.end() ? 0.0 : it->second;
  }
  [[nodiscard]] double total() const {
    double s = 0.0;
    for (const auto& [n, v] : intensities) s += v;
    return s;
  }
  [[nodiscard]] int max_order() const {
    int m = 0;
    for (const auto& [n, v] : intensities) m = std::max(m, std::abs(n));
    return m;
  }
};

struct VLine {
  double omega = 0.0;
  double intensity = 0.0;
};

struct VSpectrum {
  std::vector<VLine> lines;  // ascending omega
  double tolerance = 0.0;
  double norm = 1.0;

  [[nodiscard]] double total() const {
    double s = 0.0;
    for (const auto& l : lines) s += l.intensity;
    return s;
  }
};

namespace detail {

inline double clip_intensity(double v, int n) {
  if (v < 0.0) {
    if (v < -kIntensityClip) {
      throw InvariantError("negative coherence intensity " + std::to_string(v) + " at order " +
                           std::to_string(n) + " (normalization bug?)");
    }
    return 0.0;
  }
  return v;
}

inline Matrix x_basis_matrix(const Operator& rho) {
  return rho.basis() == Basis::XProduct ? rho.matrix() : change_basis(rho, Basis::XProduct).matrix();
}

}  // namespace detail

/// rho_n for n = -N..N, obtained by masking x-basis elements by order m_r - m_c.
/// Components are returned in the x-product basis.
[[nodiscard]] inline std::map<int, Operator> mq_decompose(const Operator& rho) {
  const SpinSystem sys = rho.system().with_basis(Basis::XProduct);
  const Matrix m = detail::x_basis_matrix(rho);
  const int n = sys.n_spins();
  std::map<int, Matrix> parts;
  for (int k = -n; k <= n; ++k) parts.emplace(k, Matrix::Zero(sys.dim(), sys.dim()));
  for (Eigen::Index c = 0; c < sys.dim(); ++c) {
    for (Eigen::Index r = 0; r < sys.dim(); ++r) {
      const cplx v = m(r, c);
      if (v != 0.0) parts.at(order_of(static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c)))(r, c) = v;
    }
  }
  std::map<int, Operator> out;
  for (auto& [k, p] : parts) out.emplace(k, Operator(sys, std::move(p), false));
  return out;
}

[[nodiscard]] inline MQSpectrum mq_intensities(const std::map<int, Operator>& components, double norm,
                                               double time = 0.0) {
  if (!(norm > 0.0)) throw std::invalid_argument("mq_intensities: normalization must be positive");
  MQSpectrum s;
  s.norm = norm;
  s.time = time;
  for (const auto& [n, rn] : components) {
    auto it = components.find(-n);
    const double v = it == components.end() ? 0.0 : trace_product(rn, it->second).real() / norm;
    s.intensities[n] = detail::clip_intensity(v, n);
  }
  return s;
}

/// Same as mq_intensities(mq_decompose(rho), norm) in one O(D^2) pass.
[[nodiscard]] inline MQSpectrum mq_spectrum(const Operator& rho, double norm, double time = 0.0) {
  if (!(norm > 0.0)) throw std::invalid_argument("mq_spectrum: normalization must be positive");
  const Matrix m = detail::x_basis_matrix(rho);
  const int n = rho.system().n_spins();
  std::vector<double> acc(static_cast<std::size_t>(2 * n + 1), 0.0);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const int k = order_of(static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(c));
      acc[static_cast<std::size_t>(k + n)] += (m(r, c) * m(c, r)).real();
    }
  }
  MQSpectrum s;
  s.norm = norm;
  s.time = time;
  for (int k = -n; k <= n; ++k) s.intensities[k] = detail::clip_intensity(acc[static_cast<std::size_t>(k + n)] / norm, k);
  return s;
}

[[nodiscard]] inline double second_moment(const MQSpectrum& s) {
  double m2 = 0.0;
  for (const auto& [n, v] : s.intensities) m2 += static_cast<double>(n) * n * v;
  return m2;
}

[[nodiscard]] inline double second_moment(const VSpectrum& s) {
  double m2 = 0.0;
  for (const auto& l : s.lines) m2 += l.omega * l.omega * l.intensity;
  return m2;
}

/// -Tr{[V, rho]^2} / norm.
[[nodiscard]] inline double second_moment_commutator(const Operator& rho, const Operator& v, double norm) {
  if (!(norm > 0.0)) throw std::invalid_argument("second_moment_commutator: normalization must be positive");
  const Operator c = commutator(v, rho);
  return -trace_product(c, c).real() / norm;
}

// ---- V-coherences ---------------------------------------------------------

/// Elements of rho in V's eigenbasis labelled by the binned eigenvalue
/// difference omega = lambda_r - lambda_c.
class VDecomposition {
 public:
  VDecomposition(SpinSystem sys, Matrix basis, Matrix rho_e, std::vector<double> omegas,
                 Eigen::MatrixXi labels, double tol)
      : sys_(sys), u_(std::move(basis)), rho_e_(std::move(rho_e)), omegas_(std::move(omegas)),
        labels_(std::move(labels)), tol_(tol) {}

  [[nodiscard]] std::size_t size() const noexcept { return omegas_.size(); }
  [[nodiscard]] const std::vector<double>& omegas() const noexcept { return omegas_; }
  [[nodiscard]] double tolerance() const noexcept { return tol_; }
  [[nodiscard]] const Eigen::MatrixXi& labels() const noexcept { return labels_; }

  /// rho_omega for line k, in the storage basis of the input.
  [[nodiscard]] Operator component(std::size_t k) const {
    Matrix p = Matrix::Zero(rho_e_.rows(), rho_e_.cols());
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      for (Eigen::Index r = 0; r < p.rows(); ++r) {
        if (labels_(r, c) == static_cast<int>(k)) p(r, c) = rho_e_(r, c);
      }
    }
    return {sys_, u_ * p * u_.adjoint(), false};
  }

  [[nodiscard]] VSpectrum spectrum(double norm) const {
    if (!(norm > 0.0)) throw std::invalid_argument("VDecomposition: normalization must be positive");
    std::vector<double> acc(omegas_.size(), 0.0);
    for (Eigen::Index c = 0; c < rho_e_.cols(); ++c) {
      for (Eigen::Index r = 0; r < rho_e_.rows(); ++r) {
        acc[static_cast<std::size_t>(labels_(r, c))] += (rho_e_(r, c) * rho_e_(c, r)).real();
      }
    }
    VSpectrum s;
    s.tolerance = tol_;
    s.norm = norm;
    for (std::size_t k = 0; k < omegas_.size(); ++k) {
      s.lines.push_back({omegas_[k], detail::clip_intensity(acc[k] / norm, static_cast<int>(k))});
    }
    return s;
  }

 private:
  SpinSystem sys_;
  Matrix u_;
  Matrix rho_e_;
  std::vector<double> omegas_;
  Eigen::MatrixXi labels_;
  double tol_;
};

/// Default binning tolerance: 1e-9 times the spectral width of V.
[[nodiscard]] inline double default_v_tolerance(const Eigen::VectorXd& eig) {
  return eig.size() ? 1e-9 * (eig.maxCoeff() - eig.minCoeff()) : 0.0;
}

/// Groups sorted eigenvalue differences into clusters whose consecutive gaps
/// are <= tol; each cluster is represented by its midpoint. A negative tol
/// selects the default.
[[nodiscard]] inline VDecomposition v_decompose(const Operator& rho, const Operator& v, double tol = -1.0) {
  rho.require_same_space(v);
  if (!v.is_hermitian(1e-10)) throw std::invalid_argument("v_decompose: generator is not Hermitian");
  const Eigen::Index d = v.dim();
  Eigen::VectorXd lam;
  Matrix u;
  const Matrix& vm = v.matrix();
  if ((vm - Matrix(vm.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0) {
    lam = vm.diagonal().real();
    u = Matrix::Identity(d, d);
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (vm + vm.adjoint()));
    if (es.info() != Eigen::Success) throw std::runtime_error("v_decompose: eigensolver failed");
    lam = es.eigenvalues();
    u = es.eigenvectors();
  }
  if (tol < 0.0) tol = default_v_tolerance(lam);

  std::vector<std::pair<double, Eigen::Index>> diffs;
  diffs.reserve(static_cast<std::size_t>(d * d));
  for (Eigen::Index c = 0; c < d; ++c) {
    for (Eigen::Index r = 0; r < d; ++r) diffs.emplace_back(lam(r) - lam(c), c * d + r);
  }
  std::sort(diffs.begin(), diffs.end());
  Eigen::MatrixXi labels(d, d);
  std::vector<double> omegas;
  std::size_t start = 0;
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    const bool last = k + 1 == diffs.size() || diffs[k + 1].first - diffs[k].first > tol;
    if (!last) continue;
    const int label = static_cast<int>(omegas.size());
    omegas.push_back(0.5 * (diffs[start].first + diffs[k].first));
    for (std::size_t j = start; j <= k; ++j) {
      const Eigen::Index idx = diffs[j].second;
      labels(idx % d, idx / d) = label;
    }
    start = k + 1;
  }
  Matrix rho_e = u.adjoint() * rho.matrix() * u;
  return {rho.system(), std::move(u), std::move(rho_e), std::move(omegas), std::move(labels), tol};
}

// ---- invariant checks -----------------------------------------------------

struct SpectrumCheck {
  double sum_rule_error = 0.0;   // |sum I_n - 1|
  double symmetry_error = 0.0;   // max |I_n - I_{-n}|
  double support_error = 0.0;    // sum over |n| > N of I_n
  double min_intensity = 0.0;
  double m2 = 0.0;
  double m2_bound = 0.0;         // N^2
};

[[nodiscard]] inline SpectrumCheck check_spectrum(const MQSpectrum& s, int n_spins) {
  SpectrumCheck c;
  c.sum_rule_error = std::abs(s.total() - 1.0);
  c.min_intensity = s.intensities.empty() ? 0.0 : s.intensities.begin()->second;
  for (const auto& [n, v] : s.intensities) {
    c.symmetry_error = std::max(c.symmetry_error, std::abs(v - s.at(-n)));
    if (std::abs(n) > n_spins) c.support_error += v;
    c.min_intensity = std::min(c.min_intensity, v);
  }
  c.m2 = second_moment(s);
  c.m2_bound = static_cast<double>(n_spins) * n_spins;
  return c;
}

}  // namespace mqlab
