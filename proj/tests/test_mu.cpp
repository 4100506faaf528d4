#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "support.hpp"
#include "zl/catalog.hpp"
#include "zl/mu.hpp"

using namespace zl;
using zl::test::vec;

namespace {

MuReport scan_entry(const CatalogEntry& e, int resolution, int top) {
  const auto grid = sample_grid(e.family.domain, resolution, e.grid_margin);
  return mu_scan(e.family, e.family.domain, e.metric, grid, geometric_schedule(top));
}

double cosine(const CVec& a, const CVec& b) { return std::abs(a.dot(b)) / (a.norm() * b.norm()); }

CVec coefficients_of(const LocusClassification& l, const std::vector<std::pair<Monomial, Complex>>& terms) {
  CVec c = CVec::Zero(static_cast<Eigen::Index>(l.monomials.size()));
  for (const auto& [m, v] : terms)
    for (std::size_t k = 0; k < l.monomials.size(); ++k)
      if (l.monomials[k] == m) c(static_cast<Eigen::Index>(k)) = v;
  return c;
}

}  // namespace

// ---- detect_mu1 ------------------------------------------------------------

TEST(DetectMu1, LinearFamilyFlagsEverything) {
  const Domain d = Domain::unit_polydisc(2);
  const auto f = HolomorphicFamily::make({"n*z1", "n*z2"}, d);
  const auto r = detect_mu1(f, d, TargetMetric::euclidean(2), sample_grid(d, 5, 0.125), geometric_schedule(12));
  EXPECT_EQ(r.flagged.size(), r.grid.size());
}

TEST(DetectMu1, ShrinkingFamilyFlagsNothing) {
  const Domain d = Domain::unit_disc();
  const auto f = HolomorphicFamily::make({"z/n"}, d);
  const auto r = detect_mu1(f, d, TargetMetric::euclidean(1), sample_grid(d, 15, 0.125), geometric_schedule(16));
  EXPECT_TRUE(r.flagged.empty());
}

TEST(DetectMu1, PowerFamilyFlagsOutsideTheUnitCircle) {
  const Domain d = Domain::polydisc(CVec::Zero(2), RVec::Constant(2, 1.5));
  const auto f = HolomorphicFamily::make({"z1^n"}, d);
  const auto grid = sample_grid(d, 9, 0.125);
  const double spacing = 2.0 * 1.5 * 0.875 / 8.0;
  const auto r = detect_mu1(f, d, TargetMetric::euclidean(1), grid, geometric_schedule(16));
  std::size_t checked = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double m = std::abs(grid[i](0));
    if (std::abs(m - 1.0) <= spacing) continue;
    EXPECT_EQ(r.stats[i].flagged, m >= 1.0) << "|z1| = " << m;
    ++checked;
  }
  EXPECT_GT(checked, grid.size() / 3);
}

TEST(DetectMu1, GrowthStatistics) {
  const Schedule s = geometric_schedule(8);
  std::vector<double> linear, flat, overflow;
  for (Index j : s) {
    linear.push_back(static_cast<double>(j));
    flat.push_back(1.0);
    overflow.push_back(j >= 64 ? std::numeric_limits<double>::infinity() : 1.0);
  }
  const auto a = detail::growth_statistics(s, linear, {});
  EXPECT_NEAR(a.slope, 1.0, 1e-12);
  EXPECT_FALSE(a.flagged);  // 256 < 1e3 * 2
  EXPECT_TRUE(detail::growth_statistics(s, linear, {0.5, 100.0}).flagged);
  EXPECT_FALSE(detail::growth_statistics(s, flat, {}).flagged);
  const auto c = detail::growth_statistics(s, overflow, {});
  EXPECT_TRUE(std::isinf(c.slope));
  EXPECT_TRUE(c.flagged);
}

TEST(DetectMu1, BorderlineSlopesAreMarked) {
  const Schedule s = geometric_schedule(30);
  std::vector<double> v;
  for (Index j : s) v.push_back(std::pow(static_cast<double>(j), 0.4));
  const auto st = detail::growth_statistics(s, v, {});
  EXPECT_FALSE(st.flagged);
  EXPECT_TRUE(st.borderline);
}

TEST(DetectMu1, NeedsAGeometricSchedule) {
  const Domain d = Domain::unit_disc();
  const auto f = HolomorphicFamily::make({"z"}, d);
  EXPECT_THROW(detect_mu1(f, d, TargetMetric::euclidean(1), {vec({0.0})}, {1, 2, 4}), std::invalid_argument);
}

// ---- classify_locus --------------------------------------------------------

TEST(ClassifyLocus, CoordinateCrossIsAnalytic) {
  std::mt19937_64 rng(31);
  std::vector<CVec> pts;
  for (int k = 0; k < 40; ++k) {
    const Complex w = test::random_annulus_point(rng, 1, 0.05, 0.95)(0);
    pts.push_back(k % 2 ? vec({0.0, w}) : vec({w, 0.0}));
  }
  const auto l = classify_locus(pts, 2, 4);
  ASSERT_EQ(l.kind, LocusKind::AnalyticThin);
  EXPECT_EQ(l.fit_degree, 2);
  EXPECT_GT(cosine(l.polynomial, coefficients_of(l, {{{1, 1}, 1.0}})), 0.999);
  EXPECT_EQ(l.codimension, 1);
}

TEST(ClassifyLocus, RealHypersurfaceIsNonAnalytic) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  std::vector<CVec> pts;
  for (int k = 0; k < 60; ++k) pts.push_back(vec({Complex(0.0, u(rng)), Complex(u(rng), u(rng))}));
  const auto l = classify_locus(pts, 2, 4);
  EXPECT_EQ(l.kind, LocusKind::NonAnalytic);
  EXPECT_GT(l.least_singular_value, 1e-3);
}

TEST(ClassifyLocus, FullSubBoxHasInteriorClosure) {
  std::vector<CVec> pts;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) pts.push_back(vec({Complex(0.1 * a, 0.1 * b), Complex(0.1 * c, 0.1 * d)}));
  const auto l = classify_locus(pts, 2, 4);
  EXPECT_EQ(l.kind, LocusKind::HasInteriorClosure);
  EXPECT_GE(l.fill_fraction, 0.9);
}

TEST(ClassifyLocus, LineInC2HasCodimensionTwo) {
  std::vector<CVec> pts;
  for (int k = 0; k < 30; ++k) pts.push_back(vec({std::polar(0.03 * (k + 1), 0.7 * k), 0.0}));
  // {z2 = 0} is a hypersurface; a point set on {z1 = z2 = 0} style curve needs two equations
  std::vector<CVec> curve;
  for (int k = 0; k < 40; ++k) {
    const Complex t = std::polar(0.02 * (k + 1), 1.3 * k);
    curve.push_back(vec({t, t * t, t - 1.0}));
  }
  const auto hyper = classify_locus(pts, 2, 4);
  ASSERT_EQ(hyper.kind, LocusKind::AnalyticThin);
  EXPECT_EQ(hyper.codimension, 1);
  const auto cod2 = classify_locus(curve, 3, 3);
  ASSERT_EQ(cod2.kind, LocusKind::AnalyticThin);
  EXPECT_EQ(cod2.codimension, 2);
}

TEST(ClassifyLocus, TooFewPoints) {
  std::vector<CVec> pts(10, vec({0.1, 0.2}));
  EXPECT_THROW(classify_locus(pts, 2, 4), TooFewPoints);
}

TEST(ClassifyLocus, EmptyInputIsEmpty) { EXPECT_EQ(classify_locus({}, 2).kind, LocusKind::Empty); }

TEST(ClassifyLocus, MonomialBasisSize) {
  for (int n = 1; n <= 3; ++n)
    for (int d = 1; d <= 4; ++d) EXPECT_EQ(detail::monomial_basis(n, d).size(), detail::binomial(n + d, n));
}

// ---- classify_family -------------------------------------------------------

TEST(ClassifyFamily, ProductFamilyIsQuasiNormalOnly) {
  const auto& e = catalog_entry("n_z1z2");
  const auto r = scan_entry(e, e.grid_resolution, e.schedule_top);
  EXPECT_EQ(r.verdict.verdict, Verdict::NotNormal_QuasiNormal);
  EXPECT_EQ(r.verdict.quasi_normal, true);
  EXPECT_EQ(r.verdict.weakly_normal, false);
}

TEST(ClassifyFamily, ExponentialOnC2IsNotQuasiNormal) {
  const auto& e = catalog_entry("exp_n_z1");
  const auto r = scan_entry(e, e.grid_resolution, e.schedule_top);
  ASSERT_TRUE(r.locus);
  EXPECT_EQ(r.locus->kind, LocusKind::NonAnalytic);
  EXPECT_EQ(r.verdict.verdict, Verdict::NotQuasiNormal);
}

TEST(ClassifyFamily, ShrinkingFamilyIsNormal) {
  const auto& e = catalog_entry("z_over_n");
  EXPECT_EQ(scan_entry(e, e.grid_resolution, e.schedule_top).verdict.verdict, Verdict::Normal);
}

TEST(ClassifyFamily, DecisionTableIsTotal) {
  MuReport base;
  base.grid = {vec({0.0})};
  base.stats.resize(1);
  std::set<Verdict> seen;
  for (bool borderline : {false, true})
    for (bool flagged : {false, true})
      for (int kind = 0; kind < 4; ++kind)
        for (int codim : {1, 2})
          for (bool missing : {false, true}) {
            MuReport r = base;
            r.stats[0].borderline = borderline;
            r.stats[0].flagged = flagged;
            if (flagged) r.flagged = {0};
            if (!missing) {
              LocusClassification l;
              l.kind = static_cast<LocusKind>(kind);
              l.codimension = codim;
              r.locus = l;
            }
            const auto v = classify_family(r);
            seen.insert(v.verdict);
            if (borderline) {
              EXPECT_EQ(v.verdict, Verdict::Inconclusive);
            } else if (!flagged) {
              EXPECT_EQ(v.verdict, Verdict::Normal);
            }
            EXPECT_FALSE(v.reason.empty());
          }
  EXPECT_TRUE(seen.count(Verdict::NotNormal_WeaklyNormal));
  EXPECT_TRUE(seen.count(Verdict::NotNormal_QuasiNormal));
  EXPECT_TRUE(seen.count(Verdict::NotQuasiNormal));
}

TEST(ClassifyFamily, VerdictNamesRoundTrip) {
  for (auto v : {Verdict::Normal, Verdict::NotNormal_QuasiNormal, Verdict::NotNormal_WeaklyNormal, Verdict::NotQuasiNormal,
                 Verdict::NotWeaklyNormal, Verdict::Inconclusive})
    EXPECT_EQ(verdict_from_string(to_string(v)), v);
  EXPECT_FALSE(verdict_from_string("Maybe"));
}

// ---- properties ------------------------------------------------------------

TEST(MuProperty, ExactZeroSetsFitToMachinePrecision) {
  std::mt19937_64 rng(33);
  const std::vector<std::function<CVec(Complex)>> curves{
      [](Complex t) { return vec({t, t * t - 0.3}); },
      [](Complex t) { return vec({t * t * t, t}); },
      [](Complex t) { return vec({t, Complex(0.25, 0.1) * t + 0.5}); },
      [](Complex t) { return vec({t, t * t * t * t - t}); },
  };
  for (const auto& curve : curves) {
    std::vector<CVec> pts;
    for (int k = 0; k < 40; ++k) pts.push_back(curve(test::random_annulus_point(rng, 1, 0.1, 0.9)(0)));
    const auto l = classify_locus(pts, 2, 4);
    ASSERT_EQ(l.kind, LocusKind::AnalyticThin);
    EXPECT_LT(l.residual, 1e-10);
  }
}

TEST(MuProperty, LongerSchedulesNeverUnflag) {
  for (const auto& e : catalog_entries()) {
    const auto grid = e.grid();
    const auto short_run = detect_mu1(e.family, e.family.domain, e.metric, grid, geometric_schedule(e.schedule_top - 2));
    const auto long_run = detect_mu1(e.family, e.family.domain, e.metric, grid, geometric_schedule(e.schedule_top));
    const std::set<std::size_t> kept(long_run.flagged.begin(), long_run.flagged.end());
    for (auto i : short_run.flagged) EXPECT_TRUE(kept.count(i)) << e.name << " point " << i;
  }
}

TEST(MuProperty, GridRefinementKeepsTheVerdict) {
  for (const auto& e : catalog_entries()) {
    const auto coarse = scan_entry(e, e.grid_resolution, e.schedule_top);
    const auto fine = scan_entry(e, 2 * e.grid_resolution - 1, e.schedule_top);
    EXPECT_EQ(to_string(coarse.verdict.verdict), std::string(to_string(fine.verdict.verdict))) << e.name;
  }
}
