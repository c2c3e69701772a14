// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

namespace metacomm::ad {

/// Forward-mode number carrying a value and one directional derivative.
///
/// Running the reverse-mode tape over `Dual` instead of `double` turns the
/// backward pass into forward-over-reverse: the value parts of the parameter
/// adjoints are the gradient, the tangent parts are the Hessian-vector
/// product along the seeded direction.
struct Dual {
  double val = 0.0;
  double tan = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double v) : val(v) {}  // NOLINT: implicit lift of constants
  constexpr Dual(double v, double t) : val(v), tan(t) {}

  constexpr Dual& operator+=(const Dual& o) {
    val += o.val;
    tan += o.tan;
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    val -= o.val;
    tan -= o.tan;
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    tan = tan * o.val + val * o.tan;
    val *= o.val;
    return *this;
  }
  constexpr Dual& operator/=(const Dual& o) {
    tan = (tan * o.val - val * o.tan) / (o.val * o.val);
    val /= o.val;
    return *this;
  }
};

constexpr Dual operator-(const Dual& a) { return {-a.val, -a.tan}; }
constexpr Dual operator+(Dual a, const Dual& b) { return a += b; }
constexpr Dual operator-(Dual a, const Dual& b) { return a -= b; }
constexpr Dual operator*(Dual a, const Dual& b) { return a *= b; }
constexpr Dual operator/(Dual a, const Dual& b) { return a /= b; }

// Comparisons act on the value part only.
constexpr bool operator<(const Dual& a, const Dual& b) { return a.val < b.val; }
constexpr bool operator>(const Dual& a, const Dual& b) { return a.val > b.val; }

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.val);
  return {e, e * a.tan};
}
inline Dual log(const Dual& a) { return {std::log(a.val), a.tan / a.val}; }
inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.val);
  return {s, a.tan / (2.0 * s)};
}
inline Dual tanh(const Dual& a) {
  const double t = std::tanh(a.val);
  return {t, (1.0 - t * t) * a.tan};
}

inline bool isfinite(const Dual& a) { return std::isfinite(a.val) && std::isfinite(a.tan); }

constexpr double value_of(double x) { return x; }
constexpr double value_of(const Dual& x) { return x.val; }

}  // namespace metacomm::ad
