#pragma once

// mu_1-point detection and locus classification.
//
// A grid point is flagged when its derivative supremum M_j(p) grows along a
// geometric index schedule. The flagged cloud is then sorted into one of
//   HasInteriorClosure  (q-points)       some 3x..x3 lattice box is >= 90% flagged
//   AnalyticThin        (mu_2-points)    a holomorphic polynomial of degree <= d vanishes on it
//   NonAnalytic         (lambda-points)  neither
// and the family verdict follows from that classification.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "zl/error.hpp"
#include "zl/family.hpp"
#include "zl/marty.hpp"
#include "zl/parallel.hpp"
#include "zl/targets.hpp"
#include "zl/types.hpp"

namespace zl {

/// j = 2^0, 2^1, ..., 2^top.
inline Schedule geometric_schedule(int top) {
  if (top < 1 || top > 60) throw std::invalid_argument("geometric schedule exponent out of range");
  Schedule s;
  for (int t = 0; t <= top; ++t) s.push_back(Index{1} << t);
  return s;
}

struct DetectionOptions {
  double slope_threshold = 0.5;
  double growth_threshold = 1e3;
};

struct PointStatistics {
  double slope = 0.0;  // least-squares slope of log M_j vs log j, last half of schedule
  double first_value = 0.0;
  double final_value = 0.0;
  bool flagged = false;
  bool borderline = false;  // growth criterion met, slope in [threshold/2, threshold)
};

enum class LocusKind { Empty, AnalyticThin, NonAnalytic, HasInteriorClosure };

inline const char* to_string(LocusKind k) {
  switch (k) {
    case LocusKind::Empty: return "Empty";
    case LocusKind::AnalyticThin: return "AnalyticThin";
    case LocusKind::NonAnalytic: return "NonAnalytic";
    case LocusKind::HasInteriorClosure: return "HasInteriorClosure";
  }
  return "?";
}

using Monomial = std::vector<int>;

struct LocusClassification {
  LocusKind kind = LocusKind::Empty;
  int fit_degree = 0;                 // AnalyticThin: lowest degree with a vanishing polynomial
  std::vector<Monomial> monomials;    // basis of `polynomial`
  CVec polynomial;                    // unit-norm coefficients, largest entry real positive
  double residual = 0.0;              // |V c|_inf on the column-scaled Vandermonde
  double least_singular_value = 0.0;  // column-scaled Vandermonde at max degree
  int nullity = 0;                    // vanishing polynomials at max degree
  int codimension = 0;                // 1 for hypersurfaces, 2 when the cloud is smaller
  double fill_fraction = 0.0;         // best lattice-box coverage
};

enum class Verdict {
  Normal,
  NotNormal_QuasiNormal,
  NotNormal_WeaklyNormal,
  NotQuasiNormal,
  NotWeaklyNormal,
  Inconclusive
};

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Normal: return "Normal";
    case Verdict::NotNormal_QuasiNormal: return "NotNormal_QuasiNormal";
    case Verdict::NotNormal_WeaklyNormal: return "NotNormal_WeaklyNormal";
    case Verdict::NotQuasiNormal: return "NotQuasiNormal";
    case Verdict::NotWeaklyNormal: return "NotWeaklyNormal";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "?";
}

inline std::optional<Verdict> verdict_from_string(const std::string& s) {
  for (Verdict v : {Verdict::Normal, Verdict::NotNormal_QuasiNormal, Verdict::NotNormal_WeaklyNormal,
                    Verdict::NotQuasiNormal, Verdict::NotWeaklyNormal, Verdict::Inconclusive})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

struct FamilyVerdict {
  Verdict verdict = Verdict::Inconclusive;
  std::optional<bool> quasi_normal;
  std::optional<bool> weakly_normal;
  std::string reason;
};

struct MuReport {
  std::vector<CVec> grid;
  Schedule schedule;
  DetectionOptions options;
  std::vector<std::vector<double>> values;  // M_j(p) per grid point
  std::vector<PointStatistics> stats;
  std::vector<std::size_t> flagged;  // indices into grid
  std::optional<LocusClassification> locus;
  std::string locus_error;  // set when classification could not run
  FamilyVerdict verdict;

  std::vector<CVec> flagged_points() const {
    std::vector<CVec> out;
    out.reserve(flagged.size());
    for (auto i : flagged) out.push_back(grid[i]);
    return out;
  }
};

namespace detail {

inline double log_value(double m) { return std::log(std::max(m, 1e-300)); }

inline PointStatistics growth_statistics(const Schedule& schedule, const std::vector<double>& values,
                                         const DetectionOptions& opts) {
  PointStatistics s;
  s.first_value = values.front();
  s.final_value = values.back();
  const std::size_t start = schedule.size() / 2;
  bool infinite = false;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double count = static_cast<double>(schedule.size() - start);
  for (std::size_t t = start; t < schedule.size(); ++t) {
    if (std::isinf(values[t]) || std::isnan(values[t])) infinite = true;
    const double x = std::log(static_cast<double>(schedule[t]));
    const double y = log_value(values[t]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = count * sxx - sx * sx;
  s.slope = infinite ? std::numeric_limits<double>::infinity() : (denom > 0 ? (count * sxy - sx * sy) / denom : 0.0);
  const bool grows = !(s.final_value < opts.growth_threshold * (1.0 + s.first_value));
  s.flagged = grows && s.slope >= opts.slope_threshold;
  s.borderline = grows && s.slope >= 0.5 * opts.slope_threshold && s.slope < opts.slope_threshold;
  return s;
}

}  // namespace detail

/// Flags p when (a) the log-log slope over the last half of the schedule is
/// >= slope_threshold and (b) M_{j_max}(p) >= growth_threshold (1 + M_{j_min}(p)).
inline MuReport detect_mu1(const HolomorphicFamily& family, const Domain& domain, const TargetMetric& metric,
                           const std::vector<CVec>& grid, const Schedule& schedule,
                           const DetectionOptions& options = {}) {
  if (schedule.size() < 4) throw std::invalid_argument("mu_1 detection needs at least 4 schedule entries");
  const SweepResult sweep = marty_sweep(family, domain, metric, grid, schedule, SweepMode::DerivativeSup);
  MuReport r;
  r.grid = grid;
  r.schedule = schedule;
  r.options = options;
  r.values = sweep.values;
  r.stats.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    r.stats[i] = detail::growth_statistics(schedule, sweep.values[i], options);
    if (r.stats[i].flagged) r.flagged.push_back(i);
  }
  return r;
}

namespace detail {

/// Exponents with total degree <= d in n variables, ordered by degree.
inline std::vector<Monomial> monomial_basis(int n, int d) {
  std::vector<Monomial> out;
  for (int total = 0; total <= d; ++total) {
    Monomial m(n, 0);
    // enumerate compositions of `total` into n parts, first variable highest
    auto rec = [&](auto&& self, int var, int left) -> void {
      if (var == n - 1) {
        m[var] = left;
        out.push_back(m);
        return;
      }
      for (int k = left; k >= 0; --k) {
        m[var] = k;
        self(self, var + 1, left - k);
      }
    };
    rec(rec, 0, total);
  }
  return out;
}

inline std::size_t binomial(int top, int k) {
  if (k < 0 || k > top) return 0;
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(top - k + i) / static_cast<std::size_t>(i);
  return r;
}

inline CMat vandermonde(const std::vector<CVec>& points, const std::vector<Monomial>& basis) {
  CMat V(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t c = 0; c < basis.size(); ++c) {
      Complex v = 1.0;
      for (std::size_t a = 0; a < basis[c].size(); ++a)
        for (int e = 0; e < basis[c][a]; ++e) v *= points[i](static_cast<Eigen::Index>(a));
      V(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
    }
  return V;
}

/// Largest fraction of a 3^(2n) lattice box (centered on a flagged point)
/// that is flagged. The lattice is inferred from the points' coordinates.
inline double best_box_fill(const std::vector<CVec>& points, int n) {
  const int axes = 2 * n;
  auto coord = [](const CVec& p, int axis) { return axis % 2 == 0 ? p(axis / 2).real() : p(axis / 2).imag(); };
  std::vector<double> origin(axes), spacing(axes);
  for (int axis = 0; axis < axes; ++axis) {
    std::vector<double> vals;
    for (const auto& p : points) vals.push_back(coord(p, axis));
    std::sort(vals.begin(), vals.end());
    const double range = vals.back() - vals.front();
    const double tol = 1e-9 * (1.0 + std::max(std::abs(vals.front()), std::abs(vals.back())));
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < vals.size(); ++i)
      if (vals[i] - vals[i - 1] > tol) h = std::min(h, vals[i] - vals[i - 1]);
    if (!std::isfinite(h) || h < 1e-12 * (1.0 + range)) h = std::max(range, 1.0);
    origin[axis] = vals.front();
    spacing[axis] = h;
  }
  std::set<std::vector<std::int64_t>> cells;
  std::vector<std::vector<std::int64_t>> keys;
  for (const auto& p : points) {
    std::vector<std::int64_t> key(axes);
    for (int axis = 0; axis < axes; ++axis) key[axis] = std::llround((coord(p, axis) - origin[axis]) / spacing[axis]);
    cells.insert(key);
    keys.push_back(std::move(key));
  }
  std::size_t box = 1;
  for (int axis = 0; axis < axes; ++axis) box *= 3;
  double best = 0.0;
  std::vector<std::int64_t> probe(axes);
  for (const auto& key : keys) {
    std::size_t hits = 0;
    for (std::size_t off = 0; off < box; ++off) {
      std::size_t rest = off;
      for (int axis = 0; axis < axes; ++axis) {
        probe[axis] = key[axis] + static_cast<std::int64_t>(rest % 3) - 1;
        rest /= 3;
      }
      hits += cells.count(probe);
    }
    best = std::max(best, static_cast<double>(hits) / static_cast<double>(box));
    if (best >= 1.0) break;
  }
  return best;
}

struct NullspaceProbe {
  CVec scaled_vector;
  RVec scale;
  double residual = 0.0;
  RVec singular_values;
  CMat right_vectors;
  CMat scaled_matrix;
};

inline NullspaceProbe probe_nullspace(const std::vector<CVec>& points, const std::vector<Monomial>& basis) {
  NullspaceProbe out;
  CMat V = vandermonde(points, basis);
  out.scale = RVec::Ones(V.cols());
  for (Eigen::Index c = 0; c < V.cols(); ++c) {
    const double s = V.col(c).norm();
    if (s > 0.0) {
      out.scale(c) = s;
      V.col(c) /= s;
    }
  }
  Eigen::JacobiSVD<CMat> svd(V, Eigen::ComputeFullV);
  out.singular_values = svd.singularValues();
  out.right_vectors = svd.matrixV();
  out.scaled_vector = out.right_vectors.col(V.cols() - 1);
  out.residual = (V * out.scaled_vector).cwiseAbs().maxCoeff();
  out.scaled_matrix = std::move(V);
  return out;
}

}  // namespace detail

inline constexpr double kNullspaceTolerance = 1e-6;
inline constexpr double kInteriorFill = 0.9;

/// Sorts a flagged point cloud into HasInteriorClosure / AnalyticThin / NonAnalytic.
inline LocusClassification classify_locus(const std::vector<CVec>& flagged, int ambient_dim, int max_degree = 4) {
  if (max_degree < 1) throw std::invalid_argument("max_degree must be >= 1");
  LocusClassification out;
  if (flagged.empty()) return out;
  for (const auto& p : flagged)
    if (p.size() != ambient_dim) throw DimensionMismatch("flagged point has the wrong dimension");
  const auto full_basis = detail::monomial_basis(ambient_dim, max_degree);
  if (flagged.size() < full_basis.size())
    throw TooFewPoints(std::to_string(flagged.size()) + " flagged points, need " + std::to_string(full_basis.size()));

  out.fill_fraction = detail::best_box_fill(flagged, ambient_dim);
  if (out.fill_fraction >= kInteriorFill) {
    out.kind = LocusKind::HasInteriorClosure;
    return out;
  }

  for (int d = 1; d <= max_degree; ++d) {
    const auto basis = detail::monomial_basis(ambient_dim, d);
    const auto probe = detail::probe_nullspace(flagged, basis);
    if (d == max_degree) {
      out.least_singular_value = probe.singular_values(probe.singular_values.size() - 1);
      int nullity = 0;
      for (Eigen::Index c = probe.right_vectors.cols() - 1; c >= 0; --c) {
        const double r = (probe.scaled_matrix * probe.right_vectors.col(c)).cwiseAbs().maxCoeff();
        if (r >= kNullspaceTolerance) break;
        ++nullity;
      }
      out.nullity = nullity;
    }
    if (out.kind == LocusKind::Empty && probe.residual < kNullspaceTolerance) {
      out.kind = LocusKind::AnalyticThin;
      out.fit_degree = d;
      out.residual = probe.residual;
      out.monomials = basis;
      CVec c = probe.scaled_vector.array() / probe.scale.cast<Complex>().array();
      c /= c.norm();
      Eigen::Index big = 0;
      c.cwiseAbs().maxCoeff(&big);
      c *= std::conj(c(big)) / std::abs(c(big));
      out.polynomial = c;
    }
  }
  if (out.kind == LocusKind::Empty) {
    out.kind = LocusKind::NonAnalytic;
    return out;
  }
  const std::size_t multiples = detail::binomial(max_degree - out.fit_degree + ambient_dim, ambient_dim);
  out.codimension = (ambient_dim >= 2 && static_cast<std::size_t>(out.nullity) > multiples) ? 2 : 1;
  return out;
}

/// Decision table from the locus classification to the family verdict.
inline FamilyVerdict classify_family(const MuReport& report) {
  FamilyVerdict v;
  for (std::size_t i = 0; i < report.stats.size(); ++i)
    if (report.stats[i].borderline) {
      v.reason = "growth statistics straddle the slope threshold";
      return v;
    }
  if (report.flagged.empty()) {
    v.verdict = Verdict::Normal;
    v.quasi_normal = v.weakly_normal = true;
    v.reason = "no mu_1-points";
    return v;
  }
  if (!report.locus) {
    v.reason = report.locus_error.empty() ? "locus not classified" : report.locus_error;
    return v;
  }
  switch (report.locus->kind) {
    case LocusKind::Empty:
      v.reason = "flagged points without a classified locus";
      return v;
    case LocusKind::AnalyticThin:
      v.quasi_normal = true;
      if (report.locus->codimension >= 2) {
        v.verdict = Verdict::NotNormal_WeaklyNormal;
        v.weakly_normal = true;
        v.reason = "mu_1-points lie on an analytic set of codimension >= 2";
      } else {
        v.verdict = Verdict::NotNormal_QuasiNormal;
        v.weakly_normal = false;
        v.reason = "mu_2-points: analytic hypersurface of mu_1-points";
      }
      return v;
    case LocusKind::NonAnalytic:
      v.verdict = Verdict::NotQuasiNormal;
      v.quasi_normal = v.weakly_normal = false;
      v.reason = "lambda-points: non-analytic set of mu_1-points";
      return v;
    case LocusKind::HasInteriorClosure:
      v.verdict = Verdict::NotQuasiNormal;
      v.quasi_normal = v.weakly_normal = false;
      v.reason = "q-points: mu_1-points with interior";
      return v;
  }
  return v;
}

/// detect -> classify locus -> verdict.
inline MuReport mu_scan(const HolomorphicFamily& family, const Domain& domain, const TargetMetric& metric,
                        const std::vector<CVec>& grid, const Schedule& schedule,
                        const DetectionOptions& options = {}, int max_degree = 4) {
  MuReport r = detect_mu1(family, domain, metric, grid, schedule, options);
  if (r.flagged.empty()) {
    r.locus = LocusClassification{};
  } else {
    try {
      r.locus = classify_locus(r.flagged_points(), family.ambient_dim, max_degree);
    } catch (const TooFewPoints& e) {
      r.locus_error = e.what();
    }
  }
  r.verdict = classify_family(r);
  return r;
}

}  // namespace zl
