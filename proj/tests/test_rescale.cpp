#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "zl/catalog.hpp"
#include "zl/rescale.hpp"

using namespace zl;
using zl::test::vec;

namespace {

RescaleOptions overridden() {
  RescaleOptions o;
  o.override_mu_check = true;
  return o;
}

std::vector<Expression> parse_all(const std::vector<std::string>& src, int dim, const Bindings& constants = {}) {
  std::vector<Expression> out;
  for (const auto& s : src) out.push_back(Expression::parse(s, dim, constants));
  return out;
}

struct Run {
  RescalingSequence seq;
  RescaledSamples samples;
};

Run catalog_run(const std::string& name) {
  const auto& e = catalog_entry(name);
  const auto& r = *e.rescaling;
  Run out;
  out.seq = propose_rescaling(e.family, e.family.domain, r.metric, e.rescaling_base(), r.strategy, r.schedule, r.sequence);
  out.samples = evaluate_rescaled(e.family, out.seq, r.grid_radius, r.grid_resolution);
  return out;
}

// Synthetic samples on a fixed one-point-per-row grid.
RescaledSamples synthetic(const std::vector<std::vector<Complex>>& rows) {
  RescaledSamples s;
  for (std::size_t i = 0; i < rows.front().size(); ++i) s.grid.push_back(vec({Complex(0.1 * i, 0.0)}));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    s.indices.push_back(static_cast<Index>(t + 1));
    std::vector<CVec> vals;
    for (Complex z : rows[t]) vals.push_back(vec({z}));
    s.values.push_back(vals);
    s.valid.emplace_back(rows[t].size(), true);
  }
  return s;
}

}  // namespace

// ---- propose_rescaling -----------------------------------------------------

TEST(ProposeRescaling, PowerFamilyExplicitSequence) {
  const auto& e = catalog_entry("z1_pow_n");
  const auto seq = catalog_run("z1_pow_n").seq;
  ASSERT_EQ(seq.indices, (Schedule{125, 250, 500, 1000}));
  for (std::size_t t = 0; t < seq.indices.size(); ++t) {
    const double j = static_cast<double>(seq.indices[t]);
    EXPECT_NEAR(std::abs(seq.centers[t](0) - std::polar(1.0, 0.0 / j)), 0.0, 1e-15);
    EXPECT_EQ(seq.centers[t](1), Complex(0.0));
    EXPECT_NEAR(seq.scales[t], 1.0 / j, 1e-18);
  }
  EXPECT_EQ(e.rescaling->strategy, RescaleStrategy::Explicit);
}

TEST(ProposeRescaling, PowerFamilyWithPhase) {
  const auto f = HolomorphicFamily::make({"z1^n"}, Domain::full_space(2), "", {{"theta", 0.7}});
  const auto seq = propose_rescaling(f, f.domain, TargetMetric::euclidean(1), vec({std::polar(1.0, 0.7), 0.0}),
                                     RescaleStrategy::Explicit, {10, 20}, {{"exp(i*theta/n)", "0"}, "1/n"});
  EXPECT_NEAR(std::abs(seq.centers[1](0) - std::polar(1.0, 0.035)), 0.0, 1e-15);
  EXPECT_NEAR(seq.scales[1], 0.05, 1e-17);
}

TEST(ProposeRescaling, ExponentialProductExplicitSequence) {
  const auto seq = catalog_run("exp_n_z1z2").seq;
  const Complex a(0.3, 0.2), b(-0.4, 0.1);
  for (std::size_t t = 0; t < seq.indices.size(); ++t) {
    const double s = std::sqrt(static_cast<double>(seq.indices[t]));
    EXPECT_NEAR(std::abs(seq.centers[t](0) - a / s), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(seq.centers[t](1) - b / s), 0.0, 1e-15);
    EXPECT_NEAR(seq.scales[t], 1.0 / s, 1e-15);
  }
}

TEST(ProposeRescaling, DerivativeStrategyOnLinearFamily) {
  const auto f = HolomorphicFamily::make({"n*z1", "n*z2"}, Domain::full_space(2));
  const Schedule s = detail::doubling(1, 256);
  const auto seq = propose_rescaling(f, f.domain, TargetMetric::euclidean(2), vec({0.0, 0.0}), RescaleStrategy::Derivative, s);
  for (std::size_t t = 0; t < s.size(); ++t) {
    EXPECT_EQ(seq.centers[t], vec({0.0, 0.0}));
    EXPECT_NEAR(seq.scales[t], 1.0 / static_cast<double>(s[t]), 1e-15);
  }
}

TEST(ProposeRescaling, RejectsNonMuPoints) {
  const auto f = HolomorphicFamily::make({"z/n"}, Domain::unit_disc());
  EXPECT_THROW(propose_rescaling(f, f.domain, TargetMetric::euclidean(1), vec({0.0}), RescaleStrategy::Derivative, {1, 2}),
               NotMuPoint);
}

TEST(ProposeRescaling, ArgumentChecks) {
  const auto f = HolomorphicFamily::make({"n*z"}, Domain::unit_disc());
  const auto m = TargetMetric::euclidean(1);
  EXPECT_THROW(propose_rescaling(f, f.domain, m, vec({2.0}), RescaleStrategy::Lemma, {1, 2}, {}, overridden()), OutsideDomain);
  EXPECT_THROW(propose_rescaling(f, f.domain, m, vec({0.0}), RescaleStrategy::Lemma, {2, 1}, {}, overridden()),
               std::invalid_argument);
  EXPECT_THROW(propose_rescaling(f, f.domain, m, vec({0.0}), RescaleStrategy::Explicit, {1, 2}, {{"0"}, "n"}, overridden()),
               std::invalid_argument);
  EXPECT_THROW(propose_rescaling(f, f.domain, m, vec({0.0}), RescaleStrategy::Explicit, {1, 2}, {{"0"}, "-1"}, overridden()),
               std::invalid_argument);
  EXPECT_THROW(propose_rescaling(f, f.domain, m, vec({0.0}), RescaleStrategy::Explicit, {1, 2}, {{"0", "0"}, "1/n"},
                                 overridden()),
               DimensionMismatch);
  EXPECT_THROW(parse_strategy("zoom"), FormatError);
  EXPECT_EQ(parse_strategy("lemma"), RescaleStrategy::Lemma);
}

TEST(ProposeRescaling, LemmaCentersStayInTheShrinkingBall) {
  const Domain d = Domain::unit_polydisc(2);
  const auto f = HolomorphicFamily::make({"exp(n*z1*z2)"}, d);
  const CVec p0 = vec({0.0, 0.5});
  const Schedule s = detail::doubling(1, 4096);
  const auto seq = propose_rescaling(f, d, TargetMetric::sphere(), p0, RescaleStrategy::Lemma, s);
  for (std::size_t t = 0; t < s.size(); ++t) {
    EXPECT_LE((seq.centers[t] - p0).norm(), 0.5 / std::sqrt(static_cast<double>(s[t])) + 1e-15);
    EXPECT_GT(seq.scales[t], 0.0);
    if (t) EXPECT_LE(seq.scales[t], seq.scales[t - 1]);
  }
}

// ---- evaluate_rescaled -----------------------------------------------------

TEST(EvaluateRescaled, ExponentialProductIsExactForEveryIndex) {
  const auto& e = catalog_entry("exp_n_z1z2");
  const auto run = catalog_run("exp_n_z1z2");
  const auto ref = parse_all(e.rescaling->expected_limit, 2, e.family.constants);
  // the source polydisc only fits inside the bidisc from n = 2 on; n = 1 is checked on its valid points
  for (std::size_t t = 0; t < run.samples.indices.size(); ++t) {
    if (run.samples.indices[t] >= 2) EXPECT_TRUE(run.samples.all_valid(t)) << "index " << run.samples.indices[t];
    EXPECT_LT(deviation_at(run.samples, t, ref, TargetMetric::euclidean(1)), 1e-12);
  }
}

TEST(EvaluateRescaled, PowerFamilyNearE) {
  const auto run = catalog_run("z1_pow_n");
  const auto& s = run.samples;
  std::size_t hit = s.grid.size();
  for (std::size_t i = 0; i < s.grid.size(); ++i)
    if (s.grid[i] == vec({1.0, 0.0})) hit = i;
  ASSERT_LT(hit, s.grid.size());
  ASSERT_EQ(s.indices.back(), 1000);
  EXPECT_LT(std::abs(s.values.back()[hit](0) - std::exp(1.0)), 0.002);
}

TEST(EvaluateRescaled, ConstantFamily) {
  const auto f = HolomorphicFamily::make({"2 - i"}, Domain::unit_polydisc(2));
  RescalingSequence seq{vec({0.0, 0.0}), {1, 2}, {vec({0.0, 0.0}), vec({0.1, 0.0})}, {0.5, 0.25}, RescaleStrategy::Explicit};
  const auto s = evaluate_rescaled(f, seq, 1.0, 5);
  for (const auto& row : s.values)
    for (const auto& v : row) EXPECT_EQ(v(0), Complex(2.0, -1.0));
}

TEST(EvaluateRescaled, MasksPointsOutsideTheDomain) {
  const auto f = HolomorphicFamily::make({"z"}, Domain::unit_disc());
  RescalingSequence seq{vec({0.0}), {1, 2}, {vec({0.0}), vec({0.0})}, {2.0, 0.5}, RescaleStrategy::Explicit};
  const auto s = evaluate_rescaled(f, seq, 1.0, 9);
  EXPECT_FALSE(s.all_valid(0));
  EXPECT_TRUE(s.all_valid(1));
  for (std::size_t i = 0; i < s.grid.size(); ++i)
    if (!s.valid[0][i]) EXPECT_TRUE(std::isnan(s.values[0][i](0).real()));
}

TEST(EvaluateRescaled, LatticeStaysInThePolydisc) {
  for (const auto& xi : polydisc_lattice(2, 0.25, 9)) EXPECT_LE(xi.cwiseAbs().maxCoeff(), 0.25 * (1.0 + 1e-12));
  EXPECT_THROW(polydisc_lattice(1, 0.0, 9), std::invalid_argument);
}

// ---- test_convergence ------------------------------------------------------

TEST(TestConvergence, ExponentialProductConvergesToANonConstantLimit) {
  const auto run = catalog_run("exp_n_z1z2");
  const auto v = test_convergence(run.samples, TargetMetric::euclidean(1));
  EXPECT_EQ(v.outcome, ConvergenceOutcome::ConvergesUniformly);
  EXPECT_TRUE(v.nonconstant);
}

TEST(TestConvergence, ConstantsMarchingToInfinityDiverge) {
  std::vector<std::vector<Complex>> rows;
  for (int j = 1; j <= 8; ++j) rows.push_back(std::vector<Complex>(5, Complex(std::pow(10.0, j))));
  const auto v = test_convergence(synthetic(rows), TargetMetric::euclidean(1));
  EXPECT_EQ(v.outcome, ConvergenceOutcome::CompactlyDivergent);
}

TEST(TestConvergence, SphereTargetsNeverDiverge) {
  std::vector<std::vector<Complex>> rows;
  for (int j = 1; j <= 8; ++j) rows.push_back(std::vector<Complex>(5, Complex(std::pow(10.0, j))));
  EXPECT_NE(test_convergence(synthetic(rows), TargetMetric::sphere()).outcome, ConvergenceOutcome::CompactlyDivergent);
}

TEST(TestConvergence, PowerFamilyLimit) {
  const auto& e = catalog_entry("z1_pow_n");
  const auto run = catalog_run("z1_pow_n");
  const auto v = test_convergence(run.samples, TargetMetric::euclidean(1), 0.05);
  ASSERT_EQ(v.outcome, ConvergenceOutcome::ConvergesUniformly);
  EXPECT_TRUE(v.nonconstant);
  EXPECT_LT(compare_limit(run.samples, v, parse_all(e.rescaling->expected_limit, 2, e.family.constants),
                          TargetMetric::euclidean(1)),
            0.01);
}

TEST(TestConvergence, InsufficientTail) {
  const auto s = synthetic({{1.0}, {1.0}, {1.0}});
  EXPECT_THROW(test_convergence(s, TargetMetric::euclidean(1)), InsufficientTail);
  auto masked = synthetic({{1.0}, {1.0}, {1.0}, {1.0}, {1.0}});
  masked.valid[1][0] = false;
  EXPECT_THROW(test_convergence(masked, TargetMetric::euclidean(1)), InsufficientTail);
}

TEST(TestConvergence, OscillationIsInconclusive) {
  std::vector<std::vector<Complex>> rows;
  for (int j = 0; j < 6; ++j) rows.push_back({j % 2 ? 1.0 : -1.0, 0.0});
  EXPECT_EQ(test_convergence(synthetic(rows), TargetMetric::euclidean(1)).outcome, ConvergenceOutcome::Inconclusive);
}

// ---- compare_limit ---------------------------------------------------------

TEST(CompareLimit, ExponentialProductReference) {
  const auto run = catalog_run("exp_n_z1z2");
  const auto v = test_convergence(run.samples, TargetMetric::euclidean(1));
  const Bindings c{{"a", Complex(0.3, 0.2)}, {"b", Complex(-0.4, 0.1)}};
  EXPECT_LT(compare_limit(run.samples, v, parse_all({"exp((a+z1)*(b+z2))"}, 2, c), TargetMetric::euclidean(1)), 1e-12);
}

TEST(CompareLimit, LimitAgainstItself) {
  const auto run = catalog_run("n_z");
  const auto v = test_convergence(run.samples, TargetMetric::euclidean(2));
  ASSERT_EQ(v.outcome, ConvergenceOutcome::ConvergesUniformly);
  EXPECT_EQ(compare_limit(run.samples, v, parse_all({"z1", "z2"}, 2), TargetMetric::euclidean(2)), 0.0);
}

TEST(CompareLimit, RequiresConvergence) {
  std::vector<std::vector<Complex>> rows;
  for (int j = 0; j < 6; ++j) rows.push_back({j % 2 ? 1.0 : -1.0});
  const auto s = synthetic(rows);
  const auto v = test_convergence(s, TargetMetric::euclidean(1));
  EXPECT_THROW(compare_limit(s, v, parse_all({"z"}, 1), TargetMetric::euclidean(1)), NotConverged);
}

// ---- properties ------------------------------------------------------------

TEST(RescaleProperty, MartyBoundForcesConstantLimits) {
  const Domain d = Domain::unit_disc();
  const auto f = HolomorphicFamily::make({"z/n"}, d);
  const double R = 1.0;
  const Schedule s = detail::doubling(1, 1024);
  const auto seq = propose_rescaling(f, d, TargetMetric::euclidean(1), vec({0.0}), RescaleStrategy::Explicit, s,
                                     {{"0"}, "1/(2*n)"}, overridden());
  // bound N on a neighborhood of 0 containing every source point
  double N = 0.0;
  for (const auto& p : sample_grid(d, 9, 0.5))
    for (Index j : s) N = std::max(N, marty_quotient(f, j, p, d, TargetMetric::euclidean(1)));
  const auto samples = evaluate_rescaled(f, seq, R, 9);
  const double spread = grid_spread(samples.values.back(), TargetMetric::euclidean(1));
  EXPECT_LT(spread, seq.scales.back() * N * 2.0 * std::sqrt(2.0) * R + 1e-9);
  for (std::size_t t = 1; t < s.size(); ++t)
    EXPECT_LE(grid_spread(samples.values[t], TargetMetric::euclidean(1)),
              grid_spread(samples.values[t - 1], TargetMetric::euclidean(1)));
}

TEST(RescaleProperty, NonConstantCatalogLimits) {
  for (const auto& e : catalog_entries()) {
    if (!e.rescaling || e.dispute || !e.rescaling->expect_nonconstant) continue;
    const auto run = catalog_run(e.name);
    const auto v = test_convergence(run.samples, e.rescaling->metric, e.rescaling->tol);
    ASSERT_EQ(v.outcome, ConvergenceOutcome::ConvergesUniformly) << e.name;
    EXPECT_TRUE(v.nonconstant) << e.name;
  }
}

TEST(RescaleProperty, OutcomesAreExclusive) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    // drifting values near or beyond the escape radius, sometimes with tiny steps
    const double base = u(rng) < 0.5 ? 2e3 : 10.0;
    const double step = std::pow(10.0, -3.0 + 5.0 * u(rng));
    std::vector<std::vector<Complex>> rows;
    for (int t = 0; t < 6; ++t) {
      std::vector<Complex> row;
      for (int i = 0; i < 4; ++i) row.push_back(base + step * t + test::random_complex(rng, 1e-3 * u(rng)));
      rows.push_back(row);
    }
    const auto v = test_convergence(synthetic(rows), TargetMetric::euclidean(1));
    const bool converges = v.outcome == ConvergenceOutcome::ConvergesUniformly;
    const bool diverges = v.outcome == ConvergenceOutcome::CompactlyDivergent;
    EXPECT_FALSE(converges && diverges);
    if (converges) EXPECT_LT(v.cauchy_defect, v.tol);
    if (diverges) {
      EXPECT_GE(v.cauchy_defect, v.tol);
      EXPECT_GT(v.min_modulus, v.escape_radius);
    }
  }
}
