// Copyright 2026 The mqlab Authors
// SPDX-License-Identifier: Apache-2.0

// Small numerical helpers shared by the experiment drivers.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mqlab {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = slope x + intercept over x in [lo, hi].
[[nodiscard]] inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                                        double lo = -INFINITY, double hi = INFINITY) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: length mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] < lo || x[k] > hi) continue;
    sx += x[k], sy += y[k], sxx += x[k] * x[k], sxy += x[k] * y[k];
    ++n;
  }
  if (n < 2) throw std::invalid_argument("fit_line: fewer than two points in the fit window");
  const double dn = static_cast<double>(n);
  const double den = dn * sxx - sx * sx;
  if (!(std::abs(den) > 0.0)) throw std::invalid_argument("fit_line: degenerate abscissae");
  LinearFit f;
  f.slope = (dn * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / dn;
  f.points = n;
  return f;
}

/// Least squares y = a x^2 (no intercept, fixed exponent).
[[nodiscard]] inline double fit_quadratic_coefficient(const std::vector<double>& x, const std::vector<double>& y) {
  double num = 0, den = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double x2 = x[k] * x[k];
    num += y[k] * x2;
    den += x2 * x2;
  }
  if (!(den > 0.0)) throw std::invalid_argument("fit_quadratic_coefficient: all abscissae are zero");
  return num / den;
}

/// Trapezoid integral of samples y over abscissae x.
[[nodiscard]] inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("trapezoid: length mismatch");
  double s = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) s += 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
  return s;
}

/// Running trapezoid integral, out[0] = 0.
[[nodiscard]] inline std::vector<double> cumulative_trapezoid(const std::vector<double>& x,
                                                              const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("cumulative_trapezoid: length mismatch");
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t k = 1; k < x.size(); ++k) out[k] = out[k - 1] + 0.5 * (x[k] - x[k - 1]) * (y[k] + y[k - 1]);
  return out;
}

/// Value at x = 0 of the interpolating polynomial through (x_i, y_i) (Neville).
[[nodiscard]] inline double extrapolate_to_zero(std::vector<double> x, std::vector<double> y) {
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n) throw std::invalid_argument("extrapolate_to_zero: bad input");
  for (std::size_t m = 1; m < n; ++m) {
    for (std::size_t i = 0; i + m < n; ++i) {
      const double den = x[i] - x[i + m];
      if (den == 0.0) throw std::invalid_argument("extrapolate_to_zero: repeated abscissa");
      y[i] = (x[i] * y[i + 1] - x[i + m] * y[i]) / den;
    }
  }
  return y[0];
}

/// n points t_k = lo + k (hi - lo) / (n - 1).
[[nodiscard]] inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  for (std::size_t k = 0; k < n; ++k) v[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  return v;
}

}  // namespace mqlab
