#pragma once

// Hermitian length on the target: C^k (Euclidean) or the Riemann sphere.
// Sphere points are finite complex numbers in the standard chart; the point at
// infinity is any value with an infinite component (see sphere_infinity()).

#include <cmath>
#include <limits>
#include <string>

#include "zl/error.hpp"
#include "zl/types.hpp"

namespace zl {

inline Complex sphere_infinity() { return {std::numeric_limits<double>::infinity(), 0.0}; }
inline bool is_infinite(Complex p) { return std::isinf(p.real()) || std::isinf(p.imag()); }

class TargetMetric {
 public:
  enum class Kind { Euclidean, RiemannSphere };

  static TargetMetric euclidean(int k) {
    if (k < 1) throw DimensionMismatch("target dimension must be positive");
    return TargetMetric(Kind::Euclidean, k);
  }
  static TargetMetric sphere() { return TargetMetric(Kind::RiemannSphere, 1); }

  /// "euclidean:k" or "sphere".
  static TargetMetric parse(const std::string& spec) {
    if (spec == "sphere") return sphere();
    const std::string prefix = "euclidean:";
    if (spec.rfind(prefix, 0) == 0) {
      try {
        return euclidean(std::stoi(spec.substr(prefix.size())));
      } catch (const std::logic_error&) {
      }
    }
    throw FormatError("unknown target metric '" + spec + "'");
  }

  Kind kind() const { return kind_; }
  int dim() const { return k_; }
  bool is_sphere() const { return kind_ == Kind::RiemannSphere; }
  std::string str() const { return is_sphere() ? "sphere" : "euclidean:" + std::to_string(k_); }

  friend bool operator==(const TargetMetric&, const TargetMetric&) = default;

  /// E_M(p; v).
  double length(const CVec& p, const CVec& v) const {
    check(p);
    check(v);
    if (!is_sphere()) return v.norm();
    const Complex q = p(0);
    // at infinity v is read in the chart w = 1/p, where the point sits at 0
    if (is_infinite(q)) return std::abs(v(0));
    return std::abs(v(0)) / (1.0 + std::norm(q));
  }

  double distance(const CVec& p, const CVec& q) const {
    check(p);
    check(q);
    if (!is_sphere()) return (p - q).norm();
    const Complex a = p(0);
    const Complex b = q(0);
    const bool ia = is_infinite(a);
    const bool ib = is_infinite(b);
    if (ia && ib) return 0.0;
    if (ia) return 1.0 / std::sqrt(1.0 + std::norm(b));
    if (ib) return 1.0 / std::sqrt(1.0 + std::norm(a));
    return std::abs(a - b) / std::sqrt((1.0 + std::norm(a)) * (1.0 + std::norm(b)));
  }

 private:
  TargetMetric(Kind kind, int k) : kind_(kind), k_(k) {}

  void check(const CVec& v) const {
    if (v.size() != k_)
      throw DimensionMismatch("target vector has " + std::to_string(v.size()) + " entries, metric expects " +
                              std::to_string(k_));
  }

  Kind kind_;
  int k_;
};

/// Overload for scalar targets.
inline double distance(const TargetMetric& m, Complex p, Complex q) {
  CVec a(1), b(1);
  a(0) = p;
  b(0) = q;
  return m.distance(a, b);
}

}  // namespace zl
