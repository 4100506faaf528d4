#pragma once

// Reference families with their expected outcomes.

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "zl/error.hpp"
#include "zl/family.hpp"
#include "zl/geometry.hpp"
#include "zl/mu.hpp"
#include "zl/rescale.hpp"
#include "zl/targets.hpp"

namespace zl {

struct CatalogRescaling {
  RescaleStrategy strategy = RescaleStrategy::Explicit;
  std::vector<std::string> base;  // expressions in the family constants
  ExplicitRescaling sequence;     // explicit strategy only
  Schedule schedule;
  TargetMetric metric = TargetMetric::euclidean(1);
  double grid_radius = 1.0;
  int grid_resolution = 9;
  double tol = 0.05;
  std::vector<std::string> expected_limit;  // components in xi = (z1, ..., zn)
  double limit_tolerance = 0.01;
  bool expect_nonconstant = true;
};

struct CatalogEntry {
  std::string name;
  HolomorphicFamily family;
  TargetMetric metric = TargetMetric::euclidean(1);  // detection metric
  int grid_resolution = 9;
  double grid_margin = 0.125;
  int schedule_top = 16;
  std::optional<Verdict> expected_verdict;
  std::optional<bool> expected_quasi_normal;
  std::optional<bool> expected_weakly_normal;
  std::optional<LocusKind> expected_locus_kind;
  std::string expected_locus;
  std::optional<CatalogRescaling> rescaling;
  bool dispute = false;  // rescaling limit is recorded, never asserted

  std::vector<CVec> grid() const { return sample_grid(family.domain, grid_resolution, grid_margin); }
  Schedule schedule() const { return geometric_schedule(schedule_top); }

  CVec rescaling_base() const {
    CVec p(family.ambient_dim);
    for (int a = 0; a < family.ambient_dim; ++a)
      p(a) = Expression::parse(rescaling->base.at(a), 0, family.constants).constant_value();
    return p;
  }
};

namespace detail {

inline Schedule doubling(Index from, Index to) {
  Schedule s;
  for (Index j = from; j <= to; j *= 2) s.push_back(j);
  return s;
}

inline HolomorphicFamily catalog_family(std::vector<std::string> components, Domain domain, std::string description,
                                        Bindings constants = {}) {
  return HolomorphicFamily::make(components, std::move(domain), std::move(description), std::move(constants));
}

}  // namespace detail

inline std::vector<CatalogEntry> catalog_entries() {
  std::vector<CatalogEntry> out;
  const Domain bidisc = Domain::unit_polydisc(2);

  {
    CatalogEntry e;
    e.name = "z1_pow_n";
    e.family = detail::catalog_family({"z1^n"}, Domain::full_space(2, 2.0), "z1^n on the box [-2,2]^4 in C^2",
                                      {{"theta", 0.0}});
    e.metric = TargetMetric::euclidean(1);
    e.expected_verdict = Verdict::NotQuasiNormal;
    e.expected_quasi_normal = false;
    e.expected_weakly_normal = false;
    e.expected_locus_kind = LocusKind::HasInteriorClosure;
    e.expected_locus = "|z1| >= 1";
    CatalogRescaling r;
    r.base = {"exp(i*theta)", "0"};
    r.sequence = {{"exp(i*theta/n)", "0"}, "1/n"};
    r.schedule = {125, 250, 500, 1000};
    r.metric = TargetMetric::euclidean(1);
    r.expected_limit = {"exp(z1 + i*theta)"};
    r.limit_tolerance = 0.01;
    e.rescaling = r;
    out.push_back(e);
  }
  {
    CatalogEntry e;
    e.name = "n_z";
    e.family = detail::catalog_family({"n*z1", "n*z2"}, Domain::full_space(2, 2.0), "n z from C^2 to itself");
    e.metric = TargetMetric::euclidean(2);
    e.expected_verdict = Verdict::NotQuasiNormal;
    e.expected_quasi_normal = false;
    e.expected_weakly_normal = false;
    e.expected_locus_kind = LocusKind::HasInteriorClosure;
    e.expected_locus = "all of C^2";
    CatalogRescaling r;
    r.strategy = RescaleStrategy::Derivative;
    r.base = {"0", "0"};
    r.schedule = detail::doubling(16, 1024);
    r.metric = TargetMetric::euclidean(2);
    r.expected_limit = {"z1", "z2"};
    r.limit_tolerance = 1e-12;
    e.rescaling = r;
    out.push_back(e);
  }
  {
    CatalogEntry e;
    e.name = "n_z1z2";
    e.family = detail::catalog_family({"n*z1*z2"}, bidisc, "n z1 z2 on the unit bidisc", {{"b", 0.5}});
    e.metric = TargetMetric::sphere();
    e.expected_verdict = Verdict::NotNormal_QuasiNormal;
    e.expected_quasi_normal = true;
    e.expected_weakly_normal = false;
    e.expected_locus_kind = LocusKind::AnalyticThin;
    e.expected_locus = "z1*z2 = 0";
    CatalogRescaling r;
    r.base = {"0", "b"};
    r.sequence = {{"0", "b + 1/sqrt(n)"}, "1/sqrt(n)"};
    r.schedule = detail::doubling(64, 8192);
    r.metric = TargetMetric::sphere();
    r.grid_radius = 0.25;
    r.expected_limit = {"b*z1*z2"};
    e.rescaling = r;
    e.dispute = true;
    out.push_back(e);
  }
  {
    CatalogEntry e;
    e.name = "exp_n_z1";
    e.family = detail::catalog_family({"exp(n*z1)"}, Domain::full_space(2, 2.0), "exp(n z1) on the box [-2,2]^4 in C^2");
    e.metric = TargetMetric::sphere();
    e.expected_verdict = Verdict::NotQuasiNormal;
    e.expected_quasi_normal = false;
    e.expected_weakly_normal = false;
    e.expected_locus_kind = LocusKind::NonAnalytic;
    e.expected_locus = "Re z1 = 0";
    out.push_back(e);
  }
  {
    CatalogEntry e;
    e.name = "exp_n_z1z2";
    e.family = detail::catalog_family({"exp(n*z1*z2)"}, bidisc, "exp(n z1 z2) on the unit bidisc",
                                      {{"a", Complex(0.3, 0.2)}, {"b", Complex(-0.4, 0.1)}});
    e.metric = TargetMetric::sphere();
    e.expected_verdict = Verdict::NotQuasiNormal;
    e.expected_quasi_normal = false;
    e.expected_weakly_normal = false;
    e.expected_locus_kind = LocusKind::NonAnalytic;
    e.expected_locus = "Re(z1*z2) = 0";
    CatalogRescaling r;
    r.base = {"0", "0"};
    r.sequence = {{"a/sqrt(n)", "b/sqrt(n)"}, "1/sqrt(n)"};
    r.schedule = detail::doubling(1, 1024);
    r.metric = TargetMetric::euclidean(1);
    r.expected_limit = {"exp((a+z1)*(b+z2))"};
    r.limit_tolerance = 1e-12;
    e.rescaling = r;
    out.push_back(e);
  }
  {
    CatalogEntry e;
    e.name = "cos_n_z1z2";
    e.family = detail::catalog_family({"cos(n*z1*z2)"}, bidisc, "cos(n z1 z2) on the unit bidisc", {{"a", 0.5}});
    e.metric = TargetMetric::sphere();
    e.expected_locus = "z1*z2 = 0";
    CatalogRescaling r;
    r.base = {"a", "0"};
    r.sequence = {{"a + 1/sqrt(n)", "0"}, "1/sqrt(n)"};
    r.schedule = detail::doubling(64, 8192);
    r.metric = TargetMetric::sphere();
    r.grid_radius = 0.25;
    r.expected_limit = {"cos(a*z1*z2)"};
    e.rescaling = r;
    e.dispute = true;
    out.push_back(e);
  }
  {
    CatalogEntry e;
    e.name = "exp_n_z";
    e.family = detail::catalog_family({"exp(n*z)"}, Domain::unit_disc(), "exp(n z) on the unit disc");
    e.metric = TargetMetric::sphere();
    e.grid_resolution = 15;
    e.expected_verdict = Verdict::NotQuasiNormal;
    e.expected_quasi_normal = false;
    e.expected_weakly_normal = false;
    e.expected_locus_kind = LocusKind::NonAnalytic;
    e.expected_locus = "Re z = 0";
    out.push_back(e);
  }
  {
    CatalogEntry e;
    e.name = "z_over_n";
    e.family = detail::catalog_family({"z/n"}, Domain::unit_disc(), "z/n on the unit disc");
    e.metric = TargetMetric::euclidean(1);
    e.grid_resolution = 15;
    e.expected_verdict = Verdict::Normal;
    e.expected_quasi_normal = true;
    e.expected_weakly_normal = true;
    e.expected_locus_kind = LocusKind::Empty;
    e.expected_locus = "empty";
    out.push_back(e);
  }
  return out;
}

inline const CatalogEntry& catalog_entry(const std::string& name) {
  static const std::vector<CatalogEntry> entries = catalog_entries();
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw FormatError("no catalog entry named '" + name + "'");
}

/// Family definition text with the expected outcomes as leading comments.
inline std::string catalog_file_text(const CatalogEntry& e) {
  std::ostringstream out;
  out << "# " << e.name << '\n';
  out << "# metric: " << e.metric.str() << '\n';
  out << "# expected verdict: " << (e.expected_verdict ? to_string(*e.expected_verdict) : "none (measured only)") << '\n';
  out << "# expected locus: " << e.expected_locus << '\n';
  if (e.rescaling) {
    const auto& r = *e.rescaling;
    out << "# rescaling: " << to_string(r.strategy);
    if (r.strategy == RescaleStrategy::Explicit) {
      out << " w_n = (";
      for (std::size_t a = 0; a < r.sequence.center.size(); ++a) out << (a ? ", " : "") << r.sequence.center[a];
      out << "), rho_n = " << r.sequence.scale;
    }
    out << '\n';
    out << "# expected limit: ";
    for (std::size_t a = 0; a < r.expected_limit.size(); ++a) out << (a ? "; " : "") << r.expected_limit[a];
    out << (e.dispute ? " (disputed)" : "") << '\n';
  }
  out << to_definition_text(e.family);
  return out.str();
}

}  // namespace zl
