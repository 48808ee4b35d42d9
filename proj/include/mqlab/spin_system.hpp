// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mqlab {

/// Product basis used to store operators.
///
/// In the x-product basis every site's S_x is diagonal (bit 0 = +1/2,
/// bit 1 = -1/2), matching the convention that x is the quantization axis.
/// The z-product basis is the usual Pauli basis with S_z diagonal.
/// Site i always corresponds to bit i of the basis-state index.
enum class Basis { ZProduct, XProduct };

enum class Axis { X, Y, Z };

inline constexpr int kDefaultMaxSpins = 12;

class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SpinSystem {
 public:
  explicit SpinSystem(int n_spins, Basis basis = Basis::XProduct,
                      int max_spins = kDefaultMaxSpins)
      : n_spins_(n_spins), basis_(basis) {
    if (max_spins < 1 || max_spins > 20) {
      throw std::invalid_argument("SpinSystem: spin cap must lie in [1, 20]");
    }
    if (n_spins < 1 || n_spins > max_spins) {
      throw std::invalid_argument("SpinSystem: n_spins = " + std::to_string(n_spins) +
                                  " outside [1, " + std::to_string(max_spins) +
                                  "]; dense storage needs 2^N x 2^N complex entries");
    }
  }

  [[nodiscard]] int n_spins() const noexcept { return n_spins_; }
  [[nodiscard]] Basis basis() const noexcept { return basis_; }
  [[nodiscard]] Eigen::Index dim() const noexcept { return Eigen::Index{1} << n_spins_; }

  [[nodiscard]] SpinSystem with_basis(Basis b) const {
    SpinSystem out = *this;
    out.basis_ = b;
    return out;
  }

  friend bool operator==(const SpinSystem&, const SpinSystem&) = default;

 private:
  int n_spins_;
  Basis basis_;
};

[[nodiscard]] inline std::string_view to_string(Basis b) noexcept {
  return b == Basis::XProduct ? "x" : "z";
}

[[nodiscard]] inline std::string_view to_string(Axis a) noexcept {
  switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
  }
  return "?";
}

[[nodiscard]] inline Basis parse_basis(std::string_view s) {
  if (s == "x" || s == "x-product") return Basis::XProduct;
  if (s == "z" || s == "z-product") return Basis::ZProduct;
  throw std::invalid_argument("unknown basis '" + std::string(s) + "' (expected x or z)");
}

[[nodiscard]] inline Axis parse_axis(std::string_view s) {
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  if (s == "z") return Axis::Z;
  throw std::invalid_argument("unknown axis '" + std::string(s) + "' (expected x, y or z)");
}

// Bit of site `site` in basis index `state`.
[[nodiscard]] constexpr int site_bit(std::uint64_t state, int site) noexcept {
  return static_cast<int>((state >> site) & 1U);
}

}  // namespace mqlab
