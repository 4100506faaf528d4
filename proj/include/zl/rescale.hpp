#pragma once

// Zalcman rescaling g_j(xi) = f_j(w_j + rho_j xi) at a mu_1-point, and the
// tail tests that tell uniform convergence from compact divergence.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "zl/error.hpp"
#include "zl/expr.hpp"
#include "zl/family.hpp"
#include "zl/geometry.hpp"
#include "zl/marty.hpp"
#include "zl/mu.hpp"
#include "zl/parallel.hpp"
#include "zl/targets.hpp"
#include "zl/types.hpp"

namespace zl {

enum class RescaleStrategy { Lemma, Derivative, Explicit };

inline const char* to_string(RescaleStrategy s) {
  switch (s) {
    case RescaleStrategy::Lemma: return "lemma";
    case RescaleStrategy::Derivative: return "derivative";
    case RescaleStrategy::Explicit: return "explicit";
  }
  return "?";
}

inline RescaleStrategy parse_strategy(const std::string& s) {
  if (s == "lemma") return RescaleStrategy::Lemma;
  if (s == "derivative") return RescaleStrategy::Derivative;
  if (s == "explicit") return RescaleStrategy::Explicit;
  throw FormatError("unknown rescaling strategy '" + s + "'");
}

/// Closed-form w_j and rho_j as expressions in the index `n`.
struct ExplicitRescaling {
  std::vector<std::string> center;  // one entry per coordinate
  std::string scale;
};

struct RescaleOptions {
  double c = 1.0;                 // normalization constant for rho_j
  bool override_mu_check = false;
  double check_radius = 0.05;     // neighborhood used by the mu_1 check
  int check_top = 16;             // check schedule 2^0..2^check_top
  DetectionOptions detection;
};

struct RescalingSequence {
  CVec base;
  Schedule indices;
  std::vector<CVec> centers;
  std::vector<double> scales;
  RescaleStrategy strategy = RescaleStrategy::Explicit;
};

namespace detail {

/// 0, then the points of a 5-per-axis lattice on [-1,1]^(2n) inside the closed unit ball.
inline std::vector<CVec> unit_ball_sample(int n) {
  std::vector<CVec> out{CVec::Zero(n)};
  const int axes = 2 * n;
  std::size_t total = 1;
  for (int a = 0; a < axes; ++a) total *= 5;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    CVec u(n);
    std::vector<double> c(axes);
    for (int a = axes - 1; a >= 0; --a) {
      c[a] = -1.0 + 0.5 * static_cast<double>(rest % 5);
      rest /= 5;
    }
    for (int a = 0; a < n; ++a) u(a) = Complex(c[2 * a], c[2 * a + 1]);
    if (u.norm() <= 1.0 && u.norm() > 0.0) out.push_back(u);
  }
  return out;
}

}  // namespace detail

/// Growth statistics of sup over a small ball around p0 of derivative_sup.
inline PointStatistics mu_point_statistics(const HolomorphicFamily& family, const Domain& domain,
                                           const TargetMetric& metric, const CVec& p0,
                                           const RescaleOptions& opts = {}) {
  const Schedule schedule = geometric_schedule(opts.check_top);
  std::vector<CVec> sample;
  for (const auto& u : detail::unit_ball_sample(family.ambient_dim)) {
    CVec p = p0 + opts.check_radius * u;
    if (contains(domain, p)) sample.push_back(p);
  }
  if (sample.empty()) throw OutsideDomain("base point is not interior to the domain");
  std::vector<double> sups(schedule.size(), 0.0);
  std::vector<std::vector<double>> rows(sample.size());
  parallel_for(sample.size(), [&](std::size_t i) {
    rows[i].resize(schedule.size());
    for (std::size_t t = 0; t < schedule.size(); ++t) rows[i][t] = derivative_sup(family, schedule[t], sample[i], metric);
  });
  for (const auto& row : rows)
    for (std::size_t t = 0; t < row.size(); ++t) sups[t] = std::max(sups[t], row[t]);
  return detail::growth_statistics(schedule, sups, opts.detection);
}

/// Builds (w_j, rho_j) along `schedule`. Scales are forced non-increasing by a
/// running minimum for the lemma and derivative strategies.
inline RescalingSequence propose_rescaling(const HolomorphicFamily& family, const Domain& domain,
                                           const TargetMetric& metric, const CVec& p0, RescaleStrategy strategy,
                                           const Schedule& schedule, const ExplicitRescaling& closed_form = {},
                                           const RescaleOptions& opts = {}) {
  require_increasing(schedule);
  detail::check_metric(family, metric);
  if (p0.size() != family.ambient_dim) throw DimensionMismatch("base point has the wrong dimension");
  if (!(opts.c > 0.0)) throw std::invalid_argument("rescaling constant must be positive");
  if (!contains(domain, p0)) throw OutsideDomain("base point is not interior to the domain");
  if (!opts.override_mu_check && !mu_point_statistics(family, domain, metric, p0, opts).flagged)
    throw NotMuPoint("no derivative blow-up near the base point");

  RescalingSequence seq{p0, schedule, {}, {}, strategy};
  const int n = family.ambient_dim;

  if (strategy == RescaleStrategy::Explicit) {
    if (static_cast<int>(closed_form.center.size()) != n)
      throw DimensionMismatch("explicit center needs " + std::to_string(n) + " coordinates");
    std::vector<Expression> center;
    for (const auto& s : closed_form.center) center.push_back(Expression::parse(s, 0, family.constants));
    const Expression scale = Expression::parse(closed_form.scale, 0, family.constants);
    for (Index j : schedule) {
      CVec w(n);
      for (int a = 0; a < n; ++a) w(a) = center[a].constant_value(j);
      const Complex r = scale.constant_value(j);
      if (!(r.real() > 0.0) || std::abs(r.imag()) > 1e-12 * r.real())
        throw std::invalid_argument("explicit scale must be a positive real at n = " + std::to_string(j));
      if (!seq.scales.empty() && r.real() > seq.scales.back())
        throw std::invalid_argument("explicit scales must be non-increasing");
      seq.centers.push_back(w);
      seq.scales.push_back(r.real());
    }
    return seq;
  }

  const auto ball = detail::unit_ball_sample(n);
  double running = std::numeric_limits<double>::infinity();
  for (Index j : schedule) {
    CVec w = p0;
    double D = 0.0;
    if (strategy == RescaleStrategy::Lemma) {
      const double radius = 0.5 / std::sqrt(static_cast<double>(j));
      D = -1.0;
      for (const auto& u : ball) {
        const CVec p = p0 + radius * u;
        if (!contains(domain, p)) continue;
        const double v = derivative_sup(family, j, p, metric);
        if (v > D) {
          D = v;
          w = p;
        }
      }
    } else {
      D = derivative_sup(family, j, p0, metric);
    }
    if (!std::isfinite(D)) throw EvalError("derivative overflow at the rescaling center, j = " + std::to_string(j));
    double rho = D > 0.0 ? opts.c / D : std::numeric_limits<double>::infinity();
    if (strategy == RescaleStrategy::Lemma) rho = std::min(rho, 1.0 / std::sqrt(static_cast<double>(j)));
    if (!std::isfinite(rho)) throw EvalError("derivative vanishes at the rescaling center, j = " + std::to_string(j));
    running = std::min(running, rho);
    seq.centers.push_back(w);
    seq.scales.push_back(running);
  }
  return seq;
}

struct RescaledSamples {
  std::vector<CVec> grid;                  // xi points
  Schedule indices;
  std::vector<std::vector<CVec>> values;   // values[t][i] = g_{j_t}(xi_i); NaN where invalid
  std::vector<std::vector<bool>> valid;    // source point inside the domain

  bool all_valid(std::size_t t) const { return std::all_of(valid[t].begin(), valid[t].end(), [](bool v) { return v; }); }
};

/// Lattice with `resolution` points per real axis on [-R, R]^(2n), kept where every |xi_a| <= R.
inline std::vector<CVec> polydisc_lattice(int n, double radius, int resolution) {
  if (!(radius > 0.0)) throw std::invalid_argument("grid radius must be positive");
  if (resolution < 2) throw std::invalid_argument("grid resolution must be at least 2");
  const int axes = 2 * n;
  std::size_t total = 1;
  for (int a = 0; a < axes; ++a) total *= static_cast<std::size_t>(resolution);
  std::vector<CVec> out;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    std::vector<double> c(axes);
    for (int a = axes - 1; a >= 0; --a) {
      c[a] = -radius + 2.0 * radius * static_cast<double>(rest % resolution) / (resolution - 1);
      rest /= resolution;
    }
    CVec xi(n);
    bool inside = true;
    for (int a = 0; a < n; ++a) {
      xi(a) = Complex(c[2 * a], c[2 * a + 1]);
      if (std::abs(xi(a)) > radius * (1.0 + 1e-12)) inside = false;
    }
    if (inside) out.push_back(xi);
  }
  return out;
}

inline RescaledSamples evaluate_rescaled(const HolomorphicFamily& family, const RescalingSequence& seq,
                                         double grid_radius, int grid_resolution) {
  RescaledSamples s;
  s.grid = polydisc_lattice(family.ambient_dim, grid_radius, grid_resolution);
  s.indices = seq.indices;
  const std::size_t T = seq.indices.size();
  const std::size_t N = s.grid.size();
  s.values.assign(T, std::vector<CVec>(N));
  s.valid.assign(T, std::vector<bool>(N, false));
  std::vector<char> ok(T * N, 0);
  parallel_for(T * N, [&](std::size_t k) {
    const std::size_t t = k / N, i = k % N;
    const CVec src = seq.centers[t] + seq.scales[t] * s.grid[i];
    if (!contains(family.domain, src)) {
      s.values[t][i] = CVec::Constant(family.target_dim(), Complex(std::nan(""), std::nan("")));
      return;
    }
    s.values[t][i] = eval(family, src, seq.indices[t]);
    ok[k] = 1;
  });
  for (std::size_t k = 0; k < T * N; ++k) s.valid[k / N][k % N] = ok[k] != 0;
  return s;
}

enum class ConvergenceOutcome { ConvergesUniformly, CompactlyDivergent, Inconclusive };

inline const char* to_string(ConvergenceOutcome o) {
  switch (o) {
    case ConvergenceOutcome::ConvergesUniformly: return "ConvergesUniformly";
    case ConvergenceOutcome::CompactlyDivergent: return "CompactlyDivergent";
    case ConvergenceOutcome::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct ConvergenceVerdict {
  ConvergenceOutcome outcome = ConvergenceOutcome::Inconclusive;
  std::vector<CVec> limit;  // last tail sample
  bool nonconstant = false;
  double cauchy_defect = 0.0;
  double spread = 0.0;
  double min_modulus = 0.0;  // min |g_{j_max}| over the grid
  double escape_radius = 0.0;
  double tol = 0.0;
  Schedule tail;
};

/// Largest target distance between two grid samples.
inline double grid_spread(const std::vector<CVec>& values, const TargetMetric& metric) {
  double best = 0.0;
  for (std::size_t a = 0; a < values.size(); ++a)
    for (std::size_t b = a + 1; b < values.size(); ++b) best = std::max(best, metric.distance(values[a], values[b]));
  return best;
}

inline ConvergenceVerdict test_convergence(const RescaledSamples& samples, const TargetMetric& metric,
                                           double tol = 0.05, double escape_radius = 1e3) {
  if (!(tol > 0.0) || !(escape_radius > 0.0)) throw std::invalid_argument("tol and escape_radius must be positive");
  std::size_t first_valid = samples.indices.size();
  while (first_valid > 0 && samples.all_valid(first_valid - 1)) --first_valid;
  const std::size_t valid_tail = samples.indices.size() - first_valid;
  if (valid_tail < 4) throw InsufficientTail(std::to_string(valid_tail) + " all-valid indices in the tail, need 4");

  ConvergenceVerdict v;
  v.tol = tol;
  v.escape_radius = escape_radius;
  const std::size_t last = samples.indices.size() - 1;
  const std::size_t start = last - 3;
  for (std::size_t t = start; t <= last; ++t) v.tail.push_back(samples.indices[t]);

  for (std::size_t t = start + 1; t <= last; ++t)
    for (std::size_t i = 0; i < samples.grid.size(); ++i) {
      const double d = metric.distance(samples.values[t][i], samples.values[t - 1][i]);
      v.cauchy_defect = std::max(v.cauchy_defect, std::isnan(d) ? std::numeric_limits<double>::infinity() : d);
    }
  v.limit = samples.values[last];
  v.spread = grid_spread(v.limit, metric);

  std::vector<double> mins;
  for (std::size_t t = start; t <= last; ++t) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& g : samples.values[t]) m = std::min(m, std::isnan(g.norm()) ? 0.0 : g.norm());
    mins.push_back(m);
  }
  v.min_modulus = mins.back();

  if (v.cauchy_defect < tol) {
    v.outcome = ConvergenceOutcome::ConvergesUniformly;
    v.nonconstant = v.spread > 10.0 * tol;
    return v;
  }
  if (!metric.is_sphere()) {
    bool escapes = true;
    for (std::size_t k = 0; k < mins.size(); ++k) {
      if (!(mins[k] > escape_radius)) escapes = false;
      if (k > 0 && !(mins[k] > mins[k - 1])) escapes = false;
    }
    if (escapes) v.outcome = ConvergenceOutcome::CompactlyDivergent;
  }
  return v;
}

/// Sup over the grid of the distance between the limit and `reference`
/// evaluated at xi.
inline double compare_limit(const RescaledSamples& samples, const ConvergenceVerdict& verdict,
                            const std::vector<Expression>& reference, const TargetMetric& metric) {
  if (verdict.outcome != ConvergenceOutcome::ConvergesUniformly)
    throw NotConverged(std::string("rescaled sequence did not converge: ") + to_string(verdict.outcome));
  if (static_cast<int>(reference.size()) != metric.dim()) throw DimensionMismatch("reference has the wrong target dimension");
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.grid.size(); ++i) {
    CVec r(static_cast<Eigen::Index>(reference.size()));
    for (std::size_t a = 0; a < reference.size(); ++a) r(static_cast<Eigen::Index>(a)) = reference[a](samples.grid[i], 1);
    worst = std::max(worst, metric.distance(verdict.limit[i], r));
  }
  return worst;
}

/// Same deviation against an arbitrary per-index sample set.
inline double deviation_at(const RescaledSamples& samples, std::size_t t, const std::vector<Expression>& reference,
                           const TargetMetric& metric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < samples.grid.size(); ++i) {
    if (!samples.valid[t][i]) continue;
    CVec r(static_cast<Eigen::Index>(reference.size()));
    for (std::size_t a = 0; a < reference.size(); ++a) r(static_cast<Eigen::Index>(a)) = reference[a](samples.grid[i], 1);
    worst = std::max(worst, metric.distance(samples.values[t][i], r));
  }
  return worst;
}

}  // namespace zl
