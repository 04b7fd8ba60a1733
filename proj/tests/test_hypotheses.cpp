#include "plap/hypotheses.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace plap;

namespace {

const char* kBenchF = "2*u/(1+u^2) - 4*u/(1+u^2)^2";
const char* kBenchFF = "ln(1+u^2) - 2*u^2/(1+u^2)";

Expression nl(const char* s) { return parse(s, kNonlinearityVars); }
Expression sp(const char* s) { return parse(s, kSpatialVars); }

struct Fixture {
  Mesh mesh = build_interval_mesh(0, 1, 32);
  EigenPair dirichlet = compute_first_eigenpair(mesh, 2.0, Boundary::dirichlet);
  EigenPair neumann = compute_first_eigenpair(mesh, 2.0, Boundary::neumann);

  ProblemSpec bench() const {
    ProblemSpec s;
    s.mesh = mesh;
    s.lambda1 = dirichlet.lambda1;
    s.f = nl(kBenchF);
    s.F = Antiderivative(s.f, nl(kBenchFF));
    s.theta = sp("-2");
    s.mu = sp("4");
    s.h = parse("ln(t)", kGrowthVars);
    s.growth_a = sp("3");
    s.c1 = 0.0;
    return s;
  }

  ProblemSpec with_f(const char* f, const char* F) const {
    ProblemSpec s = bench();
    s.f = nl(f);
    s.F = F ? Antiderivative(s.f, nl(F)) : Antiderivative(s.f);
    return s;
  }

  ProblemSpec shifted_log(double c) const {
    const std::string f = "1/(u+1) + " + std::to_string(c) + "*u";
    const std::string F = "ln(u+1) + " + std::to_string(c / 2) + "*u^2";
    ProblemSpec s = bench();
    s.f = parse(f, kNonlinearityVars);
    s.F = Antiderivative(s.f, parse(F, kNonlinearityVars));
    s.mu = sp("2");
    return s;
  }

  ProblemSpec bench_neumann() const {
    ProblemSpec s = bench();
    s.bc = Boundary::neumann;
    s.lambda1 = 0.0;
    s.g = nl("0");
    s.G = Antiderivative(*s.g, nl("0"));
    s.h_boundary = sp("0");
    return s;
  }
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

SamplePlan positive_plan() {
  SamplePlan plan;
  for (SampleRange* r : {&plan.growth, &plan.theta, &plan.vanishing, &plan.landesman_lazer}) r->signs = Signs::positive;
  return plan;
}

}  // namespace

TEST(Growth, BenchPassesWithBoundThree) {
  const ClauseResult r = check_growth(fx().bench());
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_LT(r.evidence.at("max_excess"), 0.0);
}

TEST(Growth, BenchBoundByCalculus) {
  // Oracle: |f_bench| is maximised where f' = 0; a dense scan bounds it well below 3.
  double worst = 0.0;
  for (double u = -50; u <= 50; u += 1e-4) {
    const double s = 1 + u * u;
    worst = std::max(worst, std::abs(2 * u / s - 4 * u / (s * s)));
  }
  EXPECT_LT(worst, 3.0);
}

TEST(Growth, SquareFailsWithWitnessAtThree) {
  ProblemSpec s = fx().with_f("u^2", nullptr);
  s.growth_a = sp("1");
  s.c1 = 1.0;
  SamplePlan plan;
  plan.growth = {3.0, 3e6, 1, Signs::positive, 0.0};
  const ClauseResult r = check_growth(s, plan);
  ASSERT_EQ(r.verdict, Verdict::fail);
  ASSERT_TRUE(r.witness);
  EXPECT_EQ(r.witness->point.at("u"), 3.0);
  EXPECT_EQ(r.witness->value, 9.0);
  EXPECT_EQ(r.witness->bound, 4.0);

  // default grid: the witness still violates the inequality when re-evaluated
  const ClauseResult d = check_growth(s);
  ASSERT_EQ(d.verdict, Verdict::fail);
  const double u = d.witness->point.at("u");
  EXPECT_GT(u * u, 1.0 + std::abs(u) + 1e-9);
}

TEST(Growth, ZeroNonlinearityPasses) {
  ProblemSpec s = fx().with_f("0", "0");
  s.growth_a = sp("0");
  EXPECT_EQ(check_growth(s).verdict, Verdict::pass);
}

TEST(Growth, DomainViolationIsInconclusive) {
  ProblemSpec s = fx().with_f("1/(u+1)", "ln(u+1)");
  s.growth_a = sp("1");
  SamplePlan plan;
  plan.growth = {1.0, 10.0, 1, Signs::both, 0.0};  // samples u = -1
  const ClauseResult r = check_growth(s, plan);
  EXPECT_EQ(r.verdict, Verdict::inconclusive);
  EXPECT_FALSE(r.notes.empty());
}

TEST(Growth, NeedsBoundFunction) {
  ProblemSpec s = fx().bench();
  s.growth_a.reset();
  EXPECT_THROW(check_growth(s), std::invalid_argument);
}

TEST(ThetaLimsup, BenchPasses) {
  const ClauseResult r = check_theta_limsup(fx().bench(), fx().dirichlet);
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_NEAR(r.evidence.at("limit_estimate_max"), -2.0, 0.05);
  EXPECT_NEAR(r.evidence.at("theta_weighted_integral"), -2.0, 1e-9);
}

TEST(ThetaLimsup, TaylorOracleForBench) {
  // F = -u^2 + (3/2) u^4 + O(u^6), so 2F/u^2 = -2 + 3u^2 + ...
  const Expression F = nl(kBenchFF);
  for (double u : {1e-2, 1e-3}) {
    const double ratio = 2 * F(Bindings{}.set(Var::u, u)) / (u * u);
    EXPECT_NEAR(ratio, -2.0 + 3 * u * u, 10 * std::pow(u, 4));
  }
}

TEST(ThetaLimsup, QuadraticFailsWithEstimateTwo) {
  ProblemSpec s = fx().with_f("2*u", "u^2");
  s.theta = sp("0");
  const ClauseResult r = check_theta_limsup(s, fx().dirichlet);
  ASSERT_EQ(r.verdict, Verdict::fail);
  EXPECT_NEAR(r.evidence.at("limit_estimate_max"), 2.0, 1e-9);
  const double u = r.witness->point.at("u");
  EXPECT_GT(2 * u * u / (u * u), r.witness->bound);
}

TEST(ThetaLimsup, ThetaSignIsEnforced) {
  ProblemSpec s = fx().with_f("4*u", "2*u^2");
  s.theta = sp("4");
  EXPECT_EQ(check_theta_limsup(s, fx().dirichlet).verdict, Verdict::fail);
  // The Neumann bound is lambda1 rather than zero.
  ProblemSpec n = fx().bench_neumann();
  n.f = nl("4*u");
  n.F = Antiderivative(n.f, nl("2*u^2"));
  n.theta = sp("4");
  EXPECT_EQ(check_theta_limsup(n, fx().neumann).verdict, Verdict::pass);
  n.theta = sp("20");
  EXPECT_EQ(check_theta_limsup(n, fx().neumann).verdict, Verdict::fail);
}

TEST(ThetaLimsup, NeumannZeroBoundaryTermPasses) {
  const ClauseResult r = check_theta_limsup(fx().bench_neumann(), fx().neumann);
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_EQ(r.evidence.at("boundary_ratio_max"), 0.0);
  EXPECT_GT(r.evidence.at("gap_weighted_integral"), 1e-6);
}

TEST(ThetaLimsup, NeumannQuadraticBoundaryTermFails) {
  ProblemSpec s = fx().bench_neumann();
  s.g = nl("2*u");
  s.G = Antiderivative(*s.g, nl("u^2"));
  EXPECT_EQ(check_theta_limsup(s, fx().neumann).verdict, Verdict::fail);
}

TEST(ThetaLimsup, OscillationIsInconclusive) {
  // 2F/u^2 = 2 sin(ln|u|) never settles as u -> 0; theta sits above its range.
  ProblemSpec s = fx().bench_neumann();
  s.f = nl("2*u*sin(ln(abs(u))) + u*cos(ln(abs(u)))");
  s.F = Antiderivative(s.f, nl("u^2*sin(ln(abs(u)))"));
  s.theta = sp("2.1");
  const ClauseResult r = check_theta_limsup(s, fx().neumann);
  EXPECT_EQ(r.verdict, Verdict::inconclusive);
}

TEST(Vanishing, BenchPasses) {
  const ClauseResult r = check_subcritical_vanishing(fx().bench());
  EXPECT_EQ(r.verdict, Verdict::pass);
  // oracle: F ~ 2 ln u - 2 at infinity
  EXPECT_NEAR(r.evidence.at("final_ratio_max"), (2 * std::log(1e6) - 2) / 1e12, 1e-15);
}

TEST(Vanishing, ShiftedLogWithNonzeroCFails) {
  const ClauseResult r = check_subcritical_vanishing(fx().shifted_log(0.5), positive_plan());
  ASSERT_EQ(r.verdict, Verdict::fail);
  EXPECT_NEAR(r.evidence.at("final_ratio_max"), 0.25, 1e-4);
  const double u = r.witness->point.at("u");
  EXPECT_GE((std::log(u + 1) + 0.25 * u * u) / (u * u), 0.01);
  EXPECT_EQ(check_subcritical_vanishing(fx().shifted_log(0.0), positive_plan()).verdict, Verdict::pass);
}

TEST(Vanishing, ZeroPasses) { EXPECT_EQ(check_subcritical_vanishing(fx().with_f("0", "0")).verdict, Verdict::pass); }

TEST(Vanishing, NeumannBoundaryTermChecked) {
  ProblemSpec s = fx().bench_neumann();
  s.g = nl("2*u");
  s.G = Antiderivative(*s.g, nl("u^2"));
  EXPECT_EQ(check_subcritical_vanishing(s).verdict, Verdict::fail);
}

TEST(HRegularity, LogPasses) {
  const ClauseResult r = check_h_regularity(parse("ln(t)", kGrowthVars));
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_NEAR(r.evidence.at("h_first"), std::log(1e2), 1e-12);
  EXPECT_NEAR(r.evidence.at("h_last"), std::log(1e6), 1e-12);
  for (const char* a : {"0.1", "0.5", "1", "2", "10"})
    EXPECT_NEAR(r.evidence.at(std::string("liminf_estimate_a=") + a), 1.0, 1e-9);
}

TEST(HRegularity, LinearFailsAtHalf) {
  const ClauseResult r = check_h_regularity(parse("t", kGrowthVars));
  ASSERT_EQ(r.verdict, Verdict::fail);
  EXPECT_NEAR(r.evidence.at("liminf_estimate_a=0.5"), 0.5, 1e-12);
  EXPECT_LT(r.evidence.at("liminf_estimate_a=0.5"), 0.95);
  EXPECT_GE(r.evidence.at("liminf_estimate_a=2"), 0.95);
  const double a = r.witness->point.at("a"), b = r.witness->point.at("b");
  EXPECT_LT(a * b / b, 0.95);
}

TEST(HRegularity, NonPositiveIsInconclusive) {
  EXPECT_EQ(check_h_regularity(parse("ln(t) - 10", kGrowthVars)).verdict, Verdict::inconclusive);
}

TEST(HRegularity, BoundedFails) {
  EXPECT_EQ(check_h_regularity(parse("2 - 1/t", kGrowthVars)).verdict, Verdict::fail);
}

TEST(LandesmanLazer, ShiftedLogLimitIsTwo) {
  const ClauseResult r = check_landesman_lazer(fx().shifted_log(0.0), positive_plan());
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_NEAR(r.evidence.at("limit_estimate_min"), 2.0, 0.05);
}

TEST(LandesmanLazer, ShiftedLogIdentity) {
  const ProblemSpec s = fx().shifted_log(0.0);
  const Expression identity = nl("ln((u+1)^2) - u/(u+1)");
  for (double u : {0.0, 0.5, 3.0, 10.0, 1e3, 1e6}) {
    const Bindings b = Bindings{}.set(Var::u, u);
    const double lhs = 2 * s.F({0, 0}, u) - s.f(b) * u;
    EXPECT_NEAR(lhs, identity(b), 1e-9 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(LandesmanLazer, BenchLimitIsFour) {
  const ClauseResult r = check_landesman_lazer(fx().bench());
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_NEAR(r.evidence.at("limit_estimate_min"), 4.0, 0.05);
  EXPECT_NEAR(r.evidence.at("mu_integral"), 4.0, 1e-12);
  // symbolic expansion oracle: 2F - fu = 2 ln(1+u^2) - 6u^2/(1+u^2) + 4u^2/(1+u^2)^2
  const ProblemSpec s = fx().bench();
  for (double u : {-7.0, 0.2, 30.0}) {
    const double q = 1 + u * u;
    EXPECT_NEAR(2 * s.F({0, 0}, u) - s.f(Bindings{}.set(Var::u, u)) * u,
                2 * std::log(q) - 6 * u * u / q + 4 * u * u / (q * q), 1e-12);
  }
}

TEST(LandesmanLazer, MuTooLargeFails) {
  ProblemSpec s = fx().bench();
  s.mu = sp("4.5");
  const ClauseResult r = check_landesman_lazer(s);
  ASSERT_EQ(r.verdict, Verdict::fail);
  EXPECT_LT(r.witness->value, r.witness->bound);
  s.mu = sp("-1");
  EXPECT_EQ(check_landesman_lazer(s).verdict, Verdict::fail);  // integral condition
}

TEST(LandesmanLazer, DomainViolationIsInconclusiveWithRange) {
  const ClauseResult r = check_landesman_lazer(fx().shifted_log(0.0));  // both signs: ln(u+1) undefined for u <= -1
  EXPECT_EQ(r.verdict, Verdict::inconclusive);
  ASSERT_FALSE(r.notes.empty());
  EXPECT_NE(r.notes.front().find("|u| in [10, 1e+06]"), std::string::npos);
}

TEST(LandesmanLazer, NeumannZeroBoundary) {
  const ClauseResult r = check_landesman_lazer(fx().bench_neumann());
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_EQ(r.evidence.at("boundary_density_integral"), 0.0);
  ProblemSpec s = fx().bench_neumann();
  s.h_boundary = sp("3");  // 3 + 3 = 6 > int mu = 4
  EXPECT_EQ(check_landesman_lazer(s).verdict, Verdict::fail);
}

TEST(LandesmanLazer, NeumannBoundaryLiminf) {
  // 2G - gu = ln(1+u^2)/2 - u^2/(2(1+u^2)) ~ ln|u|, so -(2G - gu)/ln|u| -> -1.
  ProblemSpec s = fx().bench_neumann();
  s.g = nl("u/(2*(1+u^2))");
  s.G = Antiderivative(*s.g, nl("ln(1+u^2)/4"));
  EXPECT_EQ(check_landesman_lazer(s).verdict, Verdict::fail);
  s.h_boundary = sp("0.5");
  const ClauseResult low = check_landesman_lazer(s);
  EXPECT_EQ(low.verdict, Verdict::fail);
  EXPECT_NEAR(low.evidence.at("boundary_limit_estimate_min"), -1.0, 0.05);
  s.h_boundary = sp("1.5");  // -1 >= -1.5 and 3 < 4
  EXPECT_EQ(check_landesman_lazer(s).verdict, Verdict::pass);
}

TEST(Refinement, FailNeverTurnsIntoPass) {
  ProblemSpec s = fx().bench();
  s.mu = sp("4.1");
  SamplePlan coarse, fine;
  fine.landesman_lazer.per_decade = 4;
  const ClauseResult a = check_landesman_lazer(s, coarse);
  const ClauseResult b = check_landesman_lazer(s, fine);
  EXPECT_LE(b.evidence.at("limit_estimate_min"), a.evidence.at("limit_estimate_min"));
  ASSERT_EQ(a.verdict, Verdict::fail);
  EXPECT_EQ(b.verdict, Verdict::fail);

  ProblemSpec r = fx().shifted_log(0.0);
  r.mu = sp("2.1");
  SamplePlan c2 = positive_plan(), f2 = positive_plan();
  f2.landesman_lazer.per_decade = 3;
  f2.landesman_lazer.hi = 1e7;
  ASSERT_EQ(check_landesman_lazer(r, c2).verdict, Verdict::fail);
  EXPECT_EQ(check_landesman_lazer(r, f2).verdict, Verdict::fail);
}

TEST(Report, BenchPassesEverything) {
  const HypothesisReport rep = check_all(fx().bench(), fx().dirichlet);
  EXPECT_EQ(rep.overall, Verdict::pass);
  ASSERT_EQ(rep.clauses.size(), 5u);
  for (const auto& c : rep.clauses) EXPECT_EQ(c.verdict, Verdict::pass) << c.clause;
}

TEST(Report, Deterministic) {
  const HypothesisReport a = check_all(fx().shifted_log(0.5), fx().dirichlet, positive_plan());
  const HypothesisReport b = check_all(fx().shifted_log(0.5), fx().dirichlet, positive_plan());
  ASSERT_EQ(a.clauses.size(), b.clauses.size());
  for (std::size_t i = 0; i < a.clauses.size(); ++i) {
    EXPECT_EQ(a.clauses[i].verdict, b.clauses[i].verdict);
    EXPECT_EQ(a.clauses[i].evidence, b.clauses[i].evidence);
    EXPECT_EQ(a.clauses[i].witness.has_value(), b.clauses[i].witness.has_value());
  }
  EXPECT_EQ(a.overall, Verdict::fail);
}

TEST(Report, CombineRules) {
  EXPECT_EQ(combine(Verdict::pass, Verdict::pass), Verdict::pass);
  EXPECT_EQ(combine(Verdict::pass, Verdict::inconclusive), Verdict::inconclusive);
  EXPECT_EQ(combine(Verdict::inconclusive, Verdict::fail), Verdict::fail);
}

TEST(SampleRange, Magnitudes) {
  const SampleRange r{1e-8, 1e-1, 1, Signs::both, 0.0};
  const auto m = r.magnitudes();
  ASSERT_EQ(m.size(), 8u);
  EXPECT_DOUBLE_EQ(m.front(), 1e-8);
  EXPECT_DOUBLE_EQ(m.back(), 1e-1);
  EXPECT_EQ(SampleRange({10, 1e6, 1, Signs::both, 0}).magnitudes().size(), 6u);
  EXPECT_THROW(SampleRange({0, 1, 1, Signs::both, 0}).magnitudes(), std::invalid_argument);
}
