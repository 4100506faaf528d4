#pragma once

// Source domains in C^n and the Kobayashi-Royden infinitesimal metric.
//
// Model domains (unit disc, polydisc) have closed forms. Everything else goes
// through the extremal-disc oracle: maximize |phi'(0)| over polynomial discs
// phi(t) = z + c (xi t + sum_{k>=2} b_k t^k) that stay inside the domain.
// Restricting to polynomials can only raise the infimum, so the oracle is an
// upper bound on the true metric.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "zl/detail/minimize.hpp"
#include "zl/error.hpp"
#include "zl/expr.hpp"
#include "zl/types.hpp"

namespace zl {

struct UnitDisc {
  friend bool operator==(const UnitDisc&, const UnitDisc&) = default;
};

struct Polydisc {
  CVec center;
  RVec radii;
  friend bool operator==(const Polydisc& a, const Polydisc& b) {
    return a.center == b.center && a.radii == b.radii;
  }
};

struct Ball {
  CVec center;
  double radius = 1.0;
  friend bool operator==(const Ball& a, const Ball& b) { return a.center == b.center && a.radius == b.radius; }
};

/// C^n; `box` is the half-width of the cube used when sampling grids.
struct FullSpace {
  int dim = 1;
  double box = 2.0;
  friend bool operator==(const FullSpace&, const FullSpace&) = default;
};

/// { z in box : |g(z)| < 1 for every predicate g }.
struct GenericBounded {
  std::vector<Expression> predicates;
  CVec box_center;
  double box_half_width = 1.0;
  friend bool operator==(const GenericBounded& a, const GenericBounded& b) {
    return a.predicates == b.predicates && a.box_center == b.box_center && a.box_half_width == b.box_half_width;
  }
};

class Domain {
 public:
  using Variant = std::variant<UnitDisc, Polydisc, Ball, FullSpace, GenericBounded>;

  static Domain unit_disc() { return Domain(UnitDisc{}, 1); }

  static Domain polydisc(CVec center, RVec radii) {
    if (center.size() != radii.size() || center.size() == 0)
      throw DimensionMismatch("polydisc center and radii differ in length");
    if ((radii.array() <= 0.0).any()) throw std::invalid_argument("polydisc radii must be positive");
    const int n = static_cast<int>(center.size());
    return Domain(Polydisc{std::move(center), std::move(radii)}, n);
  }

  static Domain unit_polydisc(int n) { return polydisc(CVec::Zero(n), RVec::Ones(n)); }

  static Domain ball(CVec center, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
    const int n = static_cast<int>(center.size());
    return Domain(Ball{std::move(center), radius}, n);
  }

  static Domain full_space(int n, double box = 2.0) {
    if (n < 1 || !(box > 0.0)) throw std::invalid_argument("full space needs n >= 1 and a positive sampling box");
    return Domain(FullSpace{n, box}, n);
  }

  static Domain generic_bounded(std::vector<Expression> predicates, CVec box_center, double half_width) {
    if (!(half_width > 0.0)) throw std::invalid_argument("bounding box half-width must be positive");
    const int n = static_cast<int>(box_center.size());
    for (const auto& p : predicates)
      if (p.ambient_dim() > n) throw DimensionError("predicate dimension exceeds domain dimension");
    return Domain(GenericBounded{std::move(predicates), std::move(box_center), half_width}, n);
  }

  int dim() const { return dim_; }
  bool hyperbolic() const { return !std::holds_alternative<FullSpace>(v_); }
  const Variant& variant() const { return v_; }

  template <typename T>
  const T* get_if() const {
    return std::get_if<T>(&v_);
  }

  std::string name() const {
    static constexpr const char* names[] = {"unit-disc", "polydisc", "ball", "full", "generic"};
    return names[v_.index()];
  }

  friend bool operator==(const Domain& a, const Domain& b) { return a.dim_ == b.dim_ && a.v_ == b.v_; }

 private:
  Domain(Variant v, int dim) : v_(std::move(v)), dim_(dim) {}
  Variant v_;
  int dim_;
};

inline void require_dim(const Domain& domain, const CVec& z) {
  if (z.size() != domain.dim())
    throw DimensionMismatch("point has " + std::to_string(z.size()) + " coordinates, domain has " +
                            std::to_string(domain.dim()));
}

inline bool contains(const Domain& domain, const CVec& z) {
  require_dim(domain, z);
  if (!z.allFinite()) return false;
  return std::visit(
      [&](const auto& d) -> bool {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UnitDisc>) {
          return std::abs(z(0)) < 1.0;
        } else if constexpr (std::is_same_v<T, Polydisc>) {
          for (Eigen::Index a = 0; a < z.size(); ++a)
            if (!(std::abs(z(a) - d.center(a)) < d.radii(a))) return false;
          return true;
        } else if constexpr (std::is_same_v<T, Ball>) {
          return (z - d.center).norm() < d.radius;
        } else if constexpr (std::is_same_v<T, FullSpace>) {
          return true;
        } else {
          for (Eigen::Index a = 0; a < z.size(); ++a) {
            const Complex w = z(a) - d.box_center(a);
            if (std::abs(w.real()) > d.box_half_width || std::abs(w.imag()) > d.box_half_width) return false;
          }
          for (const auto& g : d.predicates) {
            Complex v;
            try {
              v = g(z, 1);
            } catch (const EvalError&) {
              return false;
            }
            if (!(std::abs(v) < 1.0)) return false;
          }
          return true;
        }
      },
      domain.variant());
}

/// Lattice with `resolution` points per real axis, shrunk by `margin` toward
/// the domain's center and filtered to the domain. Row-major: Re z1 varies
/// slowest, Im zn fastest. FullSpace ignores margin and uses its sampling box.
inline std::vector<CVec> sample_grid(const Domain& domain, int resolution, double margin) {
  if (resolution < 2) throw std::invalid_argument("grid resolution must be at least 2");
  if (!(margin > 0.0 && margin < 1.0)) throw std::invalid_argument("grid margin must lie in (0, 1)");
  const int n = domain.dim();
  std::vector<double> lo(2 * n), hi(2 * n);
  auto set_axis = [&](int a, Complex center, double half) {
    lo[2 * a] = center.real() - half;
    hi[2 * a] = center.real() + half;
    lo[2 * a + 1] = center.imag() - half;
    hi[2 * a + 1] = center.imag() + half;
  };
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        for (int a = 0; a < n; ++a) {
          if constexpr (std::is_same_v<T, UnitDisc>) {
            set_axis(a, 0.0, 1.0 - margin);
          } else if constexpr (std::is_same_v<T, Polydisc>) {
            set_axis(a, d.center(a), (1.0 - margin) * d.radii(a));
          } else if constexpr (std::is_same_v<T, Ball>) {
            set_axis(a, d.center(a), (1.0 - margin) * d.radius);
          } else if constexpr (std::is_same_v<T, FullSpace>) {
            set_axis(a, 0.0, d.box);
          } else {
            set_axis(a, d.box_center(a), (1.0 - margin) * d.box_half_width);
          }
        }
      },
      domain.variant());

  const int axes = 2 * n;
  std::size_t total = 1;
  for (int a = 0; a < axes; ++a) total *= static_cast<std::size_t>(resolution);
  std::vector<CVec> out;
  std::vector<int> idx(axes, 0);
  CVec z(n);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (int a = axes - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rest % resolution);
      rest /= resolution;
    }
    for (int a = 0; a < n; ++a) {
      auto coord = [&](int axis) { return lo[axis] + (hi[axis] - lo[axis]) * idx[axis] / (resolution - 1); };
      z(a) = Complex(coord(2 * a), coord(2 * a + 1));
    }
    if (contains(domain, z)) out.push_back(z);
  }
  return out;
}

namespace detail {

// Largest c >= 0 with |w + c q| <= r, given |w| < r.
inline double ray_root(double w2, double wq_re, double q2, double r) {
  if (q2 == 0.0) return std::numeric_limits<double>::infinity();
  const double b = 2.0 * wq_re;
  const double c = w2 - r * r;
  return -2.0 * c / (b + std::sqrt(b * b - 4.0 * q2 * c));
}

/// Largest scale c such that z + c q stays in the closed domain (per ray).
inline double max_scale(const Domain& domain, const CVec& z, const CVec& q) {
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UnitDisc>) {
          return ray_root(std::norm(z(0)), (std::conj(z(0)) * q(0)).real(), std::norm(q(0)), 1.0);
        } else if constexpr (std::is_same_v<T, Polydisc>) {
          double c = std::numeric_limits<double>::infinity();
          for (Eigen::Index a = 0; a < z.size(); ++a) {
            const Complex w = z(a) - d.center(a);
            c = std::min(c, ray_root(std::norm(w), (std::conj(w) * q(a)).real(), std::norm(q(a)), d.radii(a)));
          }
          return c;
        } else if constexpr (std::is_same_v<T, Ball>) {
          const CVec w = z - d.center;
          return ray_root(w.squaredNorm(), w.dot(q).real(), q.squaredNorm(), d.radius);
        } else if constexpr (std::is_same_v<T, FullSpace>) {
          return std::numeric_limits<double>::infinity();
        } else {
          const double qn = q.norm();
          if (qn == 0.0) return std::numeric_limits<double>::infinity();
          double lo = 0.0;
          double hi = 4.0 * d.box_half_width * std::sqrt(2.0 * static_cast<double>(z.size())) / qn;
          for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (contains(domain, z + mid * q)) {
              lo = mid;
            } else {
              hi = mid;
            }
          }
          return lo;
        }
      },
      domain.variant());
}

/// Unit direction with its largest-modulus entry rotated onto the positive reals.
inline CVec canonical_direction(const CVec& xi) {
  Eigen::Index best = 0;
  for (Eigen::Index a = 1; a < xi.size(); ++a)
    if (std::abs(xi(a)) > std::abs(xi(best))) best = a;
  const Complex phase = xi(best) / std::abs(xi(best));
  return (xi / xi.norm()) * std::conj(phase);
}

class DiscProblem {
 public:
  DiscProblem(const Domain& domain, CVec z, CVec direction, int degree)
      : domain_(domain), z_(std::move(z)), dir_(std::move(direction)), degree_(degree) {}

  int parameter_count() const { return 2 * static_cast<int>(z_.size()) * (degree_ - 1); }

  /// q(t) = dir t + sum_{k=2}^{d} b_k t^k.
  CVec direction_polynomial(const std::vector<double>& b, Complex t) const {
    CVec q(z_.size());
    fill_direction(b, t, q);
    return q;
  }

  double scale_at(const std::vector<double>& b, double theta) const {
    fill_direction(b, std::polar(1.0, theta), buffer_);
    return max_scale(domain_, z_, buffer_);
  }

  /// Largest feasible scale on `samples` equally spaced boundary points.
  double sampled_scale(const std::vector<double>& b, int samples) const {
    if (static_cast<int>(roots_.size()) != samples) {
      roots_.resize(samples);
      for (int s = 0; s < samples; ++s) roots_[s] = std::polar(1.0, 2.0 * std::numbers::pi * s / samples);
    }
    double c = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
      fill_direction(b, roots_[s], buffer_);
      c = std::min(c, max_scale(domain_, z_, buffer_));
    }
    return c;
  }

  /// Dense scan plus golden-section refinement of the tightest boundary points.
  double certified_scale(const std::vector<double>& b, int samples) const {
    const double h = 2.0 * std::numbers::pi / samples;
    std::vector<std::pair<double, int>> scan(samples);
    for (int s = 0; s < samples; ++s) scan[s] = {scale_at(b, h * s), s};
    const std::size_t keep = std::min<std::size_t>(8, scan.size());
    std::partial_sort(scan.begin(), scan.begin() + keep, scan.end());
    double best = scan.front().first;
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    for (std::size_t r = 0; r < keep; ++r) {
      double a = h * scan[r].second - h;
      double d = h * scan[r].second + h;
      double x1 = d - golden * (d - a);
      double x2 = a + golden * (d - a);
      double f1 = scale_at(b, x1);
      double f2 = scale_at(b, x2);
      for (int it = 0; it < 60; ++it) {
        if (f1 < f2) {
          d = x2;
          x2 = x1;
          f2 = f1;
          x1 = d - golden * (d - a);
          f1 = scale_at(b, x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + golden * (d - a);
          f2 = scale_at(b, x2);
        }
      }
      best = std::min({best, f1, f2});
    }
    return best;
  }

 private:
  void fill_direction(const std::vector<double>& b, Complex t, CVec& q) const {
    const auto n = z_.size();
    q = dir_ * t;
    Complex tk = t;
    for (int k = 2; k <= degree_; ++k) {
      tk *= t;
      for (Eigen::Index a = 0; a < n; ++a) {
        const std::size_t off = 2 * ((k - 2) * n + a);
        q(a) += Complex(b[off], b[off + 1]) * tk;
      }
    }
  }

  const Domain& domain_;
  CVec z_;
  CVec dir_;
  int degree_;
  // scratch for the hot loop; a DiscProblem is used by one thread at a time
  mutable CVec buffer_;
  mutable std::vector<Complex> roots_;
};

}  // namespace detail

/// Polynomial disc phi(t) = sum_k coefficients.col(k) t^k.
struct AnalyticDiscCandidate {
  CMat coefficients;

  CVec operator()(Complex t) const {
    CVec v = CVec::Zero(coefficients.rows());
    Complex tk = 1.0;
    for (Eigen::Index k = 0; k < coefficients.cols(); ++k, tk *= t) v += coefficients.col(k) * tk;
    return v;
  }
  CVec derivative_at_origin() const { return coefficients.col(1); }
};

struct DiscSearchOptions {
  int degree = 3;
  int restarts = 8;
  std::uint64_t seed = 0;
  int boundary_samples = 64;
  int certify_samples = 4096;
};

struct DiscEstimate {
  double value = 0.0;  // upper bound on F_K(z, xi)
  AnalyticDiscCandidate disc;
  int degree = 1;
};

namespace detail {

inline void require_interior(const Domain& domain, const CVec& z) {
  require_dim(domain, z);
  if (!contains(domain, z)) throw OutsideDomain("base point is not interior to the domain");
}

inline DiscEstimate extremal_disc_at_degree(const Domain& domain, const CVec& z, const CVec& xi,
                                            const DiscSearchOptions& opts, int degree) {
  const CVec dir = canonical_direction(xi);
  const DiscProblem problem(domain, z, dir, degree);
  const auto n = z.size();

  auto finish = [&](const std::vector<double>& b) {
    const double c = problem.certified_scale(b, opts.certify_samples);
    DiscEstimate est;
    est.degree = degree;
    est.value = xi.norm() / c;
    est.disc.coefficients = CMat::Zero(n, degree + 1);
    est.disc.coefficients.col(0) = z;
    est.disc.coefficients.col(1) = c * dir;
    for (int k = 2; k <= degree; ++k)
      for (Eigen::Index a = 0; a < n; ++a) {
        const std::size_t off = 2 * ((k - 2) * n + a);
        est.disc.coefficients(a, k) = c * Complex(b[off], b[off + 1]);
      }
    return est;
  };

  if (degree == 1) return finish({});

  const DiscEstimate lower = extremal_disc_at_degree(domain, z, xi, opts, degree - 1);
  std::vector<double> warm(problem.parameter_count(), 0.0);
  {
    const double c = lower.disc.coefficients.col(1).norm();
    for (int k = 2; k < degree; ++k)
      for (Eigen::Index a = 0; a < n; ++a) {
        const std::size_t off = 2 * ((k - 2) * n + a);
        const Complex bk = lower.disc.coefficients(a, k) / c;
        warm[off] = bk.real();
        warm[off + 1] = bk.imag();
      }
  }

  auto objective = [&](const std::vector<double>& b) { return -problem.sampled_scale(b, opts.boundary_samples); };

  std::vector<std::vector<double>> starts{warm};
  for (int r = 0; r < opts.restarts; ++r) {
    std::mt19937_64 rng(opts.seed + static_cast<std::uint64_t>(r));
    std::normal_distribution<double> gauss(0.0, 0.3);
    std::vector<double> s(problem.parameter_count());
    for (double& v : s) v = gauss(rng);
    starts.push_back(std::move(s));
  }

  std::vector<double> best_b = warm;
  double best = -objective(warm);
  for (const auto& s : starts) {
    MinimizeResult res = nelder_mead(objective, s, SimplexOptions{0.1, 1e-7, 1500});
    // polish from the converged point; the simplex often stalls on the kinked max-min surface
    res = nelder_mead(objective, res.x, SimplexOptions{0.01, 1e-9, 1000});
    if (-res.value > best) {
      best = -res.value;
      best_b = res.x;
    }
  }

  DiscEstimate est = finish(best_b);
  if (lower.value <= est.value) return lower;
  return est;
}

}  // namespace detail

/// Best polynomial disc of degree <= opts.degree through z tangent to xi.
inline DiscEstimate extremal_disc(const Domain& domain, const CVec& z, const CVec& xi,
                                  const DiscSearchOptions& opts = {}) {
  if (!domain.hyperbolic()) throw NotHyperbolic("C^n carries no Kobayashi metric bound; " + domain.name());
  detail::require_interior(domain, z);
  if (xi.size() != z.size()) throw DimensionMismatch("direction and base point differ in length");
  if (opts.degree < 1) throw std::invalid_argument("disc degree must be at least 1");
  if (xi.norm() == 0.0) {
    DiscEstimate zero;
    zero.disc.coefficients = CMat::Zero(z.size(), 2);
    zero.disc.coefficients.col(0) = z;
    return zero;
  }
  return detail::extremal_disc_at_degree(domain, z, xi, opts, opts.degree);
}

/// Upper bound on F_K(z, xi) from polynomial discs; non-increasing in degree.
inline double kobayashi_numeric(const Domain& domain, const CVec& z, const CVec& xi, int degree, int restarts,
                                std::uint64_t seed = 0) {
  DiscSearchOptions opts;
  opts.degree = degree;
  opts.restarts = restarts;
  opts.seed = seed;
  return extremal_disc(domain, z, xi, opts).value;
}

namespace detail {

inline double cached_ball_metric(const Ball& ball, const Domain& domain, const CVec& z, const CVec& xi) {
  // Memo key: center, radius, base point, and the canonical direction; the
  // metric is homogeneous so only the norm of xi is reapplied.
  const CVec dir = canonical_direction(xi);
  std::vector<double> key{ball.radius};
  for (const CVec* v : {&ball.center, &z, &dir})
    for (Eigen::Index a = 0; a < v->size(); ++a) {
      key.push_back((*v)(a).real());
      key.push_back((*v)(a).imag());
    }
  static std::mutex mutex;
  static std::map<std::vector<double>, double> memo;
  {
    std::lock_guard lock(mutex);
    if (auto it = memo.find(key); it != memo.end()) return it->second * xi.norm();
  }
  const double unit = kobayashi_numeric(domain, z, dir, 4, 4, 0);
  std::lock_guard lock(mutex);
  memo.emplace(std::move(key), unit);
  return unit * xi.norm();
}

}  // namespace detail

inline double kobayashi_closed_form(const Domain& domain, const CVec& z, const CVec& xi) {
  require_dim(domain, z);
  if (xi.size() != z.size()) throw DimensionMismatch("direction and base point differ in length");
  if (!contains(domain, z)) throw OutsideDomain("base point is not interior to the domain");
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UnitDisc>) {
          return std::abs(xi(0)) / (1.0 - std::norm(z(0)));
        } else if constexpr (std::is_same_v<T, Polydisc>) {
          double m = 0.0;
          for (Eigen::Index a = 0; a < z.size(); ++a) {
            const double r = d.radii(a);
            const double w = std::abs(z(a) - d.center(a)) / r;
            m = std::max(m, std::abs(xi(a)) / (r * (1.0 - w * w)));
          }
          return m;
        } else if constexpr (std::is_same_v<T, Ball>) {
          if (xi.norm() == 0.0) return 0.0;
          return detail::cached_ball_metric(d, domain, z, xi);
        } else if constexpr (std::is_same_v<T, FullSpace>) {
          return 0.0;
        } else {
          throw NotSupported("no closed form for generic bounded domains");
        }
      },
      domain.variant());
}

/// Closed form where available, otherwise the numeric oracle (degree 3).
inline double kobayashi(const Domain& domain, const CVec& z, const CVec& xi) {
  if (std::holds_alternative<GenericBounded>(domain.variant())) return kobayashi_numeric(domain, z, xi, 3, 4);
  return kobayashi_closed_form(domain, z, xi);
}

}  // namespace zl
