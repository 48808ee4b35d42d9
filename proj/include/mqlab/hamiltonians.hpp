// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <mqlab/operator.hpp>
#include <mqlab/spinops.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mqlab {

/// Symmetric N x N table of pair couplings b_ij with zero diagonal.
using CouplingTable = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;

inline void validate_couplings(const CouplingTable& b) {
  if (b.rows() != b.cols()) throw std::invalid_argument("coupling table must be square");
  const double scale = std::max(b.size() ? b.cwiseAbs().maxCoeff() : 0.0, 1e-300);
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    if (b(i, i) != 0.0) throw std::invalid_argument("coupling table must have a zero diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(b(i, j) - b(j, i)) > 1e-12 * scale) {
        throw std::invalid_argument("coupling table is not symmetric at (" + std::to_string(i) +
                                    ", " + std::to_string(j) + ")");
      }
      if (!std::isfinite(b(i, j))) throw std::invalid_argument("coupling table has non-finite entries");
    }
  }
}

// ---- coupling models ------------------------------------------------------

[[nodiscard]] inline CouplingTable chain_couplings(int n, double strength, bool periodic = false) {
  CouplingTable b = CouplingTable::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) b(i, i + 1) = b(i + 1, i) = strength;
  if (periodic && n > 2) b(0, n - 1) = b(n - 1, 0) = strength;
  return b;
}

[[nodiscard]] inline CouplingTable ring_couplings(int n, double strength) {
  return chain_couplings(n, strength, true);
}

[[nodiscard]] inline CouplingTable complete_couplings(int n, double strength) {
  CouplingTable b = CouplingTable::Constant(n, n, strength);
  b.diagonal().setZero();
  return b;
}

/// Gaussian couplings (mean 0, standard deviation `scale`) from a seeded
/// mt19937_64, drawn in (i<j) row-major order.
[[nodiscard]] inline CouplingTable random_couplings(int n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  CouplingTable b = CouplingTable::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) b(i, j) = b(j, i) = scale * dist(rng);
  }
  return b;
}

/// b_ij = kappa (3 cos^2 theta_ij - 1) / r_ij^3.
[[nodiscard]] inline CouplingTable dipolar_couplings(const std::vector<Vec3>& positions,
                                                     const Vec3& field_axis, double kappa = 1.0) {
  const double fn = field_axis.norm();
  if (!(fn > 0.0)) throw std::invalid_argument("dipolar_couplings: field axis must be nonzero");
  const Vec3 f = field_axis / fn;
  const auto n = static_cast<Eigen::Index>(positions.size());
  CouplingTable b = CouplingTable::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Vec3 d = positions[static_cast<std::size_t>(j)] - positions[static_cast<std::size_t>(i)];
      const double r = d.norm();
      if (!(r > 1e-12)) {
        throw std::invalid_argument("dipolar_couplings: sites " + std::to_string(i) + " and " +
                                    std::to_string(j) + " coincide");
      }
      const double ct = d.dot(f) / r;
      b(i, j) = b(j, i) = kappa * (3.0 * ct * ct - 1.0) / (r * r * r);
    }
  }
  return b;
}

/// Sites on a straight line along x with the given spacing.
[[nodiscard]] inline std::vector<Vec3> line_positions(int n, double spacing = 1.0) {
  std::vector<Vec3> p;
  for (int i = 0; i < n; ++i) p.emplace_back(spacing * i, 0.0, 0.0);
  return p;
}

/// Sites on a circle in the xy plane with nearest-neighbour distance `spacing`.
[[nodiscard]] inline std::vector<Vec3> ring_positions(int n, double spacing = 1.0) {
  std::vector<Vec3> p;
  const double radius = n > 1 ? spacing / (2.0 * std::sin(std::numbers::pi / n)) : 0.0;
  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / n;
    p.emplace_back(radius * std::cos(phi), radius * std::sin(phi), 0.0);
  }
  return p;
}

/// Reads "site x y z" rows; '#' starts a comment. Sites must be 0..N-1.
[[nodiscard]] inline std::vector<Vec3> read_geometry(std::istream& in) {
  std::map<int, Vec3> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    int site = 0;
    double x = 0, y = 0, z = 0;
    if (!(ls >> site)) continue;
    if (!(ls >> x >> y >> z)) {
      throw std::invalid_argument("geometry line " + std::to_string(lineno) + ": expected 'site x y z'");
    }
    if (!rows.emplace(site, Vec3(x, y, z)).second) {
      throw std::invalid_argument("geometry line " + std::to_string(lineno) + ": duplicate site");
    }
  }
  std::vector<Vec3> out;
  int expect = 0;
  for (const auto& [site, v] : rows) {
    if (site != expect++) throw std::invalid_argument("geometry: site indices must be 0..N-1");
    out.push_back(v);
  }
  return out;
}

/// Reads "i j b_ij" rows for an N-site table; missing pairs are zero.
[[nodiscard]] inline CouplingTable read_coupling_table(std::istream& in, int n) {
  CouplingTable b = CouplingTable::Zero(n, n);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    int i = 0, j = 0;
    double v = 0;
    if (!(ls >> i)) continue;
    if (!(ls >> j >> v) || i < 0 || j < 0 || i >= n || j >= n || i == j) {
      throw std::invalid_argument("coupling line " + std::to_string(lineno) + ": expected 'i j b' with distinct sites in range");
    }
    b(i, j) = b(j, i) = v;
  }
  return b;
}

// ---- Hamiltonian spec -----------------------------------------------------

struct HamiltonianSpec {
  double a = 1.0;
  double b = 1.0;
  double c = -2.0;
  CouplingTable couplings;
  std::vector<double> offsets;  // empty = none
  Axis offset_axis = Axis::Z;

  [[nodiscard]] int n_sites() const noexcept { return static_cast<int>(couplings.rows()); }
};

inline constexpr std::array<std::string_view, 4> kPresetNames = {"dipolar-secular", "double-quantum",
                                                                 "zz", "xx"};

/// Resolves a named preset. "yy-zz" is accepted for the double-quantum one.
[[nodiscard]] inline HamiltonianSpec preset(std::string_view name, CouplingTable couplings,
                                            std::optional<double> zz_c = std::nullopt) {
  HamiltonianSpec s;
  s.couplings = std::move(couplings);
  if (name == "dipolar-secular") {
    s.a = 1.0, s.b = 1.0, s.c = -2.0;
  } else if (name == "double-quantum" || name == "yy-zz") {
    s.a = 0.0, s.b = 1.0, s.c = -1.0;
  } else if (name == "zz") {
    s.a = 0.0, s.b = 0.0, s.c = zz_c.value_or(std::numbers::sqrt2);
  } else if (name == "xx") {
    s.a = 1.0, s.b = 0.0, s.c = 0.0;
  } else {
    throw std::invalid_argument("unknown Hamiltonian preset '" + std::string(name) +
                                "' (dipolar-secular, double-quantum, zz, xx)");
  }
  return s;
}

namespace detail {

// Local 4x4 block a sx⊗sx + b sy⊗sy + c sz⊗sz; index = bit_i + 2 bit_j.
inline Eigen::Matrix4cd pair_block(Basis basis, double a, double b, double c) {
  Eigen::Matrix4cd p = Eigen::Matrix4cd::Zero();
  const std::array<std::pair<Axis, double>, 3> terms = {{{Axis::X, a}, {Axis::Y, b}, {Axis::Z, c}}};
  for (const auto& [axis, coef] : terms) {
    if (coef == 0.0) continue;
    const Matrix2 s = local_spin_matrix(basis, axis);
    for (int r = 0; r < 4; ++r) {
      for (int q = 0; q < 4; ++q) p(r, q) += coef * s(r >> 1, q >> 1) * s(r & 1, q & 1);
    }
  }
  return p;
}

}  // namespace detail

/// H = sum_{i>j} b_ij (a SxSx + b SySy + c SzSz) + sum_i delta_i S_{axis,i}.
[[nodiscard]] inline Operator build_hamiltonian(const SpinSystem& sys, const HamiltonianSpec& spec) {
  validate_couplings(spec.couplings);
  if (spec.n_sites() != sys.n_spins()) {
    throw std::invalid_argument("build_hamiltonian: coupling table is " + std::to_string(spec.n_sites()) +
                                "x" + std::to_string(spec.n_sites()) + " but the system has " +
                                std::to_string(sys.n_spins()) + " spins");
  }
  if (!spec.offsets.empty() && static_cast<int>(spec.offsets.size()) != sys.n_spins()) {
    throw std::invalid_argument("build_hamiltonian: offsets must list one value per spin");
  }
  const Eigen::Index d = sys.dim();
  Matrix h = Matrix::Zero(d, d);
  const Eigen::Matrix4cd p = detail::pair_block(sys.basis(), spec.a, spec.b, spec.c);
  for (int i = 0; i < sys.n_spins(); ++i) {
    for (int j = i + 1; j < sys.n_spins(); ++j) {
      const double bij = spec.couplings(i, j);
      if (bij == 0.0) continue;
      const Eigen::Index mi = Eigen::Index{1} << i;
      const Eigen::Index mj = Eigen::Index{1} << j;
      for (Eigen::Index c = 0; c < d; ++c) {
        const int lc = ((c & mi) ? 1 : 0) + ((c & mj) ? 2 : 0);
        const Eigen::Index base = c & ~(mi | mj);
        for (int lr = 0; lr < 4; ++lr) {
          const cplx v = p(lr, lc);
          if (v == 0.0) continue;
          const Eigen::Index r = base | ((lr & 1) ? mi : 0) | ((lr & 2) ? mj : 0);
          h(r, c) += bij * v;
        }
      }
    }
  }
  if (!spec.offsets.empty()) {
    const Matrix2 s = local_spin_matrix(sys.basis(), spec.offset_axis);
    for (int i = 0; i < sys.n_spins(); ++i) {
      const double di = spec.offsets[static_cast<std::size_t>(i)];
      if (di != 0.0) h += di * detail::embed(sys, s, i);
    }
  }
  return {sys, std::move(h), true};
}

// ---- harmonics ------------------------------------------------------------

/// Components H_n with [S_x, H_n] = n H_n, indexed by n.
class HarmonicDecomposition {
 public:
  HarmonicDecomposition(SpinSystem sys, std::map<int, Operator> parts)
      : sys_(sys), parts_(std::move(parts)) {}

  [[nodiscard]] const SpinSystem& system() const noexcept { return sys_; }
  [[nodiscard]] int max_order() const noexcept { return parts_.empty() ? 0 : parts_.rbegin()->first; }
  [[nodiscard]] const std::map<int, Operator>& components() const noexcept { return parts_; }

  /// H_n, or the zero operator when n is outside the stored range.
  [[nodiscard]] Operator at(int n) const {
    auto it = parts_.find(n);
    return it == parts_.end() ? Operator::zero(sys_) : it->second;
  }

  [[nodiscard]] Operator sum() const {
    Operator out = Operator::zero(sys_);
    for (const auto& [n, h] : parts_) out += h;
    return out;
  }

  /// Tr{H_n H_{-n}} (real and nonnegative for Hermitian H).
  [[nodiscard]] double pair_trace(int n) const { return trace_product(at(n), at(-n)).real(); }

 private:
  SpinSystem sys_;
  std::map<int, Operator> parts_;
};

/// K-angle discrete Fourier transform over x-rotations:
/// H_n = (1/K) sum_k e^{i n phi_k} R_x(phi_k) H R_x(phi_k)^dagger, phi_k = 2 pi k / K.
/// Exact when every order present satisfies |n| <= (K-1)/2.
[[nodiscard]] inline HarmonicDecomposition harmonic_decomposition(const Operator& h, int k_angles = 5,
                                                                 bool require_hermitian = true) {
  if (require_hermitian && !h.is_hermitian()) {
    throw std::invalid_argument("harmonic_decomposition: input operator is not Hermitian");
  }
  if (k_angles < 1) throw std::invalid_argument("harmonic_decomposition: need at least one angle");
  const SpinSystem& sys = h.system();
  const int nmax = (k_angles - 1) / 2;
  std::vector<Operator> rotated;
  rotated.reserve(static_cast<std::size_t>(k_angles));
  for (int k = 0; k < k_angles; ++k) {
    rotated.push_back(rotate(h, Axis::X, 2.0 * std::numbers::pi * k / k_angles));
  }
  std::map<int, Operator> parts;
  for (int n = -nmax; n <= nmax; ++n) {
    Matrix acc = Matrix::Zero(sys.dim(), sys.dim());
    for (int k = 0; k < k_angles; ++k) {
      acc += std::polar(1.0, 2.0 * std::numbers::pi * n * k / k_angles) * rotated[static_cast<std::size_t>(k)].matrix();
    }
    acc /= static_cast<double>(k_angles);
    parts.emplace(n, Operator(sys, std::move(acc), false));
  }
  return {sys, std::move(parts)};
}

/// Sum_{j != site} b_{site,j}^2 / 4.
[[nodiscard]] inline double m2_absorption(const CouplingTable& b, int site) {
  if (site < 0 || site >= b.rows()) throw std::out_of_range("m2_absorption: site out of range");
  double s = 0.0;
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    if (j != site) s += b(site, j) * b(site, j);
  }
  return 0.25 * s;
}

/// Site-averaged second moment of the absorption line.
[[nodiscard]] inline double m2_absorption_mean(const CouplingTable& b) {
  if (b.rows() == 0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < b.rows(); ++i) s += m2_absorption(b, static_cast<int>(i));
  return s / static_cast<double>(b.rows());
}

/// sqrt(Tr{H^2} / Tr{ref^2}).
[[nodiscard]] inline double local_field(const Operator& h, const Operator& reference) {
  const double rn = trace_product(reference, reference).real();
  if (!(rn > 0.0)) throw std::invalid_argument("local_field: reference operator has zero norm");
  return std::sqrt(std::max(trace_product(h, h).real(), 0.0) / rn);
}

/// Local field relative to total S_x of the operator's system.
[[nodiscard]] inline double local_field(const Operator& h) {
  return local_field(h, total_operator(h.system(), Axis::X));
}

}  // namespace mqlab
