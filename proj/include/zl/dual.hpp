#pragma once

// Forward-mode dual numbers over the complex field.
//
// A value a + a'e with e^2 = 0. Because every supported operation is
// holomorphic, propagating a' through the complex derivative gives the exact
// complex partial derivative of the evaluated expression.

#include <cmath>
#include <complex>

#include "zl/types.hpp"

namespace zl {

template <typename T>
struct Dual {
  T value{};
  T deriv{};

  constexpr Dual() = default;
  constexpr Dual(T v) : value(v) {}  // NOLINT: implicit lift of constants
  constexpr Dual(T v, T d) : value(v), deriv(d) {}

  friend constexpr bool operator==(const Dual&, const Dual&) = default;

  constexpr Dual operator-() const { return {-value, -deriv}; }

  friend constexpr Dual operator+(const Dual& a, const Dual& b) {
    return {a.value + b.value, a.deriv + b.deriv};
  }
  friend constexpr Dual operator-(const Dual& a, const Dual& b) {
    return {a.value - b.value, a.deriv - b.deriv};
  }
  // (a + a'e)(b + b'e) = ab + (ab' + a'b)e
  friend constexpr Dual operator*(const Dual& a, const Dual& b) {
    return {a.value * b.value, a.value * b.deriv + a.deriv * b.value};
  }
  friend constexpr Dual operator/(const Dual& a, const Dual& b) {
    const T q = a.value / b.value;
    return {q, (a.deriv - q * b.deriv) / b.value};
  }
};

using DualComplex = Dual<Complex>;

template <typename T>
Dual<T> exp(const Dual<T>& x) {
  const T e = std::exp(x.value);
  return {e, e * x.deriv};
}

template <typename T>
Dual<T> log(const Dual<T>& x) {
  return {std::log(x.value), x.deriv / x.value};
}

template <typename T>
Dual<T> sin(const Dual<T>& x) {
  return {std::sin(x.value), std::cos(x.value) * x.deriv};
}

template <typename T>
Dual<T> cos(const Dual<T>& x) {
  return {std::cos(x.value), -std::sin(x.value) * x.deriv};
}

template <typename T>
Dual<T> sqrt(const Dual<T>& x) {
  const T r = std::sqrt(x.value);
  return {r, x.deriv / (T(2) * r)};
}

/// Value part of a scalar, for plain complex numbers and duals alike.
inline Complex primal(const Complex& x) { return x; }
template <typename T>
T primal(const Dual<T>& x) {
  return x.value;
}

}  // namespace zl
