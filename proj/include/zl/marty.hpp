#pragma once

// Directional derivative suprema along a family:
//
//   derivative_sup(f_j, p) = sup_{|xi|=1} E_M(f_j(p); J xi)
//   marty_quotient(f_j, p) = sup_{xi != 0} E_M(f_j(p); J xi) / F_K(p, xi)
//
// Normal families keep the quotient bounded on compacts; mu_1 detection
// watches the first quantity, which is defined on non-hyperbolic domains too.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "zl/error.hpp"
#include "zl/family.hpp"
#include "zl/geometry.hpp"
#include "zl/parallel.hpp"
#include "zl/targets.hpp"
#include "zl/types.hpp"

namespace zl {

namespace detail {

inline double largest_singular_value(const CMat& J) {
  if (J.size() == 0) return 0.0;
  if (J.rows() == 1 || J.cols() == 1) return J.norm();
  Eigen::JacobiSVD<CMat> svd(J);
  return svd.singularValues()(0);
}

inline void check_metric(const HolomorphicFamily& family, const TargetMetric& metric) {
  if (metric.dim() != family.target_dim())
    throw DimensionMismatch("target metric dimension " + std::to_string(metric.dim()) + " vs family target " +
                            std::to_string(family.target_dim()));
}

/// Scalar factor s with E_M(f; v) = s |v| (sphere) or |v| (euclidean); nullopt
/// when f sits at the point at infinity after overflow.
inline std::optional<double> sphere_factor(Complex f) {
  if (!std::isfinite(f.real()) || !std::isfinite(f.imag())) return std::nullopt;
  const double a = std::abs(f);
  return a > 1.0 ? (1.0 / a) / (a + 1.0 / a) : 1.0 / (1.0 + a * a);
}

}  // namespace detail

/// sup over Euclidean-unit xi of E_M(f_j(p); J xi).
///
/// Overflowed evaluations are read as the point at infinity: +inf for the
/// Euclidean target, 0 on the sphere (where f_j(p) = infinity is an ordinary
/// point and the spherical derivative of the families we ship decays there).
inline double derivative_sup(const HolomorphicFamily& family, Index j, const CVec& p, const TargetMetric& metric) {
  detail::check_metric(family, metric);
  const auto [f, J] = eval_with_jacobian(family, p, j);
  if (!metric.is_sphere()) {
    if (!J.allFinite()) return std::numeric_limits<double>::infinity();
    return detail::largest_singular_value(J);
  }
  const auto factor = detail::sphere_factor(f(0));
  if (!factor) return 0.0;
  if (!J.allFinite()) return std::numeric_limits<double>::infinity();
  return J.norm() * *factor;
}

struct MartyOptions {
  int starts = 32;
  double start_scale = 1.0;
  int max_iterations = 200;
};

namespace detail {

inline double radical_inverse(unsigned m, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (m > 0) {
    r += f * (m % base);
    m /= base;
    f *= inv;
  }
  return r;
}

/// Identity columns, their rotations by i, then a Halton-driven fill.
inline std::vector<CVec> marty_starts(int n, int count) {
  static constexpr unsigned primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  std::vector<CVec> starts;
  for (int a = 0; a < n && static_cast<int>(starts.size()) < count; ++a) starts.push_back(CVec::Unit(n, a));
  for (int a = 0; a < n && static_cast<int>(starts.size()) < count; ++a)
    starts.push_back(Complex(0.0, 1.0) * CVec::Unit(n, a));
  for (unsigned m = 1; static_cast<int>(starts.size()) < count; ++m) {
    CVec v(n);
    for (int a = 0; a < n; ++a) {
      const double angle = 2.0 * std::numbers::pi * radical_inverse(m, primes[(2 * a) % 16]);
      const double radius = 0.25 + radical_inverse(m, primes[(2 * a + 1) % 16]);
      v(a) = std::polar(radius, angle);
    }
    starts.push_back(v);
  }
  return starts;
}

}  // namespace detail

/// sup over xi of E_M(f_j(p); J xi) / F_K(p, xi), by projected ascent on the
/// F_K-unit sphere from a deterministic start set.
inline double marty_quotient(const HolomorphicFamily& family, Index j, const CVec& p, const Domain& domain,
                             const TargetMetric& metric, const MartyOptions& opts = {}) {
  detail::check_metric(family, metric);
  if (!domain.hyperbolic()) throw NotHyperbolic("Marty quotient needs a hyperbolic domain, got " + domain.name());
  if (!contains(domain, p)) throw OutsideDomain("point is not interior to the domain");
  const auto [f, J] = eval_with_jacobian(family, p, j);

  double factor = 1.0;
  if (metric.is_sphere()) {
    const auto s = detail::sphere_factor(f(0));
    if (!s) return 0.0;
    factor = *s;
  }
  if (!J.allFinite()) return std::numeric_limits<double>::infinity();

  const Polydisc* poly = domain.get_if<Polydisc>();
  const bool disc = domain.get_if<UnitDisc>() != nullptr;
  RVec weight;  // polydisc: F(xi) = max_a weight_a |xi_a|
  if (poly || disc) {
    weight.resize(p.size());
    for (Eigen::Index a = 0; a < p.size(); ++a) {
      const double r = poly ? poly->radii(a) : 1.0;
      const Complex c = poly ? poly->center(a) : Complex(0.0);
      weight(a) = r / (r * r - std::norm(p(a) - c));
    }
  }
  auto metric_of = [&](const CVec& xi) {
    if (weight.size() > 0) return (weight.array() * xi.array().abs()).maxCoeff();
    return kobayashi(domain, p, xi);
  };
  auto project = [&](CVec xi) {
    if (weight.size() > 0)
      for (Eigen::Index a = 0; a < xi.size(); ++a) {
        const double m = weight(a) * std::abs(xi(a));
        if (m > 1.0) xi(a) /= m;
      }
    const double F = metric_of(xi);
    return F > 0.0 ? CVec(xi / F) : xi;
  };
  auto ratio = [&](const CVec& xi) {
    const double F = metric_of(xi);
    return F > 0.0 ? factor * (J * xi).norm() / F : 0.0;
  };

  const CMat gram = J.adjoint() * J;
  double best = 0.0;
  for (CVec xi : detail::marty_starts(static_cast<int>(p.size()), opts.starts)) {
    xi *= opts.start_scale;
    if (metric_of(xi) == 0.0) continue;
    xi = project(xi);
    double value = ratio(xi);
    double step = 1.0;
    for (int it = 0; it < opts.max_iterations && step > 1e-12; ++it) {
      const CVec g = gram * xi;
      const double gn = g.norm();
      if (gn == 0.0) break;
      const CVec candidate = project(xi + (step * xi.norm() / gn) * g);
      const double v = ratio(candidate);
      if (v > value) {
        xi = candidate;
        value = v;
        step = std::min(2.0 * step, 4.0);
      } else {
        step *= 0.5;
      }
    }
    best = std::max(best, value);
  }
  return best;
}

enum class SweepMode { DerivativeSup, MartyQuotient };

inline const char* to_string(SweepMode m) {
  return m == SweepMode::DerivativeSup ? "derivative_sup" : "marty_quotient";
}

struct SweepResult {
  std::vector<CVec> grid;
  Schedule schedule;
  SweepMode mode = SweepMode::DerivativeSup;
  std::vector<std::vector<double>> values;  // values[point][index position]
  std::vector<double> sups;                 // max over the grid, per index
};

inline void require_increasing(const Schedule& schedule) {
  if (schedule.empty()) throw std::invalid_argument("index schedule is empty");
  if (schedule.front() < 1) throw std::invalid_argument("indices must be >= 1");
  for (std::size_t t = 1; t < schedule.size(); ++t)
    if (schedule[t] <= schedule[t - 1]) throw std::invalid_argument("index schedule must be strictly increasing");
}

inline SweepResult marty_sweep(const HolomorphicFamily& family, const Domain& domain, const TargetMetric& metric,
                               const std::vector<CVec>& grid, const Schedule& schedule,
                               SweepMode mode = SweepMode::DerivativeSup) {
  if (grid.empty()) throw std::invalid_argument("sweep grid is empty");
  require_increasing(schedule);
  for (const auto& p : grid)
    if (!contains(domain, p)) throw OutsideDomain("sweep grid point outside the domain");
  if (mode == SweepMode::MartyQuotient && !domain.hyperbolic())
    throw NotHyperbolic("Marty quotient sweep needs a hyperbolic domain");

  SweepResult r{grid, schedule, mode, std::vector<std::vector<double>>(grid.size()), {}};
  parallel_for(grid.size(), [&](std::size_t i) {
    auto& row = r.values[i];
    row.resize(schedule.size());
    for (std::size_t t = 0; t < schedule.size(); ++t)
      row[t] = mode == SweepMode::DerivativeSup ? derivative_sup(family, schedule[t], grid[i], metric)
                                                : marty_quotient(family, schedule[t], grid[i], domain, metric);
  });
  r.sups.assign(schedule.size(), 0.0);
  for (const auto& row : r.values)
    for (std::size_t t = 0; t < row.size(); ++t) r.sups[t] = std::max(r.sups[t], row[t]);
  return r;
}

}  // namespace zl
