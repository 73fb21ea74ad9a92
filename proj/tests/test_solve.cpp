#include "ddksp/solve.hpp"
#include "oracles/csrp_oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace ddksp;
using namespace ddksp::solve;

namespace {

CsrpInstance toy() {
  CsrpInstance inst;
  inst.location_ids = {1, 2};
  inst.revenue = {100, 80};
  inst.holding = {10, 15};
  inst.transfer = {{0, 5}, {7, 0}};
  inst.capacity = 6;
  return inst;
}

double tol_of(double v) { return 1e-6 * (1.0 + std::abs(v)); }

void expect_monotone(const benders::State &st) {
  double lb = -kInf, ub = kInf;
  for (const auto &r : st.trace) {
    EXPECT_GE(r.lower, lb - 1e-9);
    EXPECT_LE(r.upper, ub + 1e-9);
    EXPECT_GE(r.upper, r.lower - 1e-9);
    lb = r.lower;
    ub = r.upper;
  }
}

density::DemandDistributionSet point_mass(std::vector<int> ids, std::vector<double> values) {
  density::DemandDistributionSet d;
  d.location_ids = std::move(ids);
  for (double v : values)
    d.models.push_back(density::Gaussian{v, 0.0});
  return d;
}

} // namespace

TEST(Benders, SingleScenarioToyEqualsExtensive) {
  auto sc = scenario::single({1, 2}, {4, 1});
  auto ext = solve_extensive(toy(), sc, RecourseVariant::FlowBalance);
  auto bd = solve_benders(toy(), sc, RecourseVariant::FlowBalance);
  EXPECT_TRUE(bd.converged());
  EXPECT_NEAR(bd.objective, ext.objective, tol_of(ext.objective));
  EXPECT_NEAR(bd.objective, 100 * 4 + 80 * 1 - 10 * 4 - 15 * 1, 1e-9);
}

TEST(Benders, NoFleetConvergesInTwoIterations) {
  auto inst = toy();
  inst.capacity = 0;
  std::mt19937_64 rng(1);
  auto sc = oracle::random_scenarios(rng, 2, 5, 9);
  auto bd = solve_benders(inst, sc, RecourseVariant::FlowBalance);
  EXPECT_TRUE(bd.converged());
  EXPECT_LE(bd.state.iterations, 2u);
  EXPECT_NEAR(bd.objective, 0.0, 1e-9);
}

TEST(Benders, MatchesExtensiveOnRandomInstances) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> Rv(2, 4), Nv(1, 6), Cv(0, 12);
  for (int k = 0; k < 15; ++k) {
    const std::size_t R = Rv(rng), N = Nv(rng);
    auto inst = oracle::random_instance(rng, R, Cv(rng));
    auto sc = oracle::random_scenarios(rng, R, N, 6);
    auto ext = solve_extensive(inst, sc, RecourseVariant::FlowBalance);
    for (auto mode : {benders::CutMode::Single, benders::CutMode::Multi}) {
      BendersOptions o;
      o.cut_mode = mode;
      auto bd = solve_benders(inst, sc, RecourseVariant::FlowBalance, o);
      ASSERT_TRUE(bd.converged());
      EXPECT_NEAR(bd.objective, ext.objective, tol_of(ext.objective)) << k << " " << benders::to_string(mode);
      expect_monotone(bd.state);
      const auto &last = bd.state.trace.back();
      EXPECT_LE(last.gap(), o.xi * (1.0 + std::abs(last.upper)));
    }
  }
}

TEST(Benders, PaperSplitUsesFeasibilityCutsAndAgrees) {
  std::mt19937_64 rng(32);
  std::size_t feas = 0;
  for (int k = 0; k < 8; ++k) {
    auto inst = oracle::random_instance(rng, 3, 8);
    auto sc = oracle::random_scenarios(rng, 3, 3, 6);
    auto ext = solve_extensive(inst, sc, RecourseVariant::FlowBalance);
    BendersOptions o;
    o.paper_split = true;
    auto bd = solve_benders(inst, sc, RecourseVariant::FlowBalance, o);
    ASSERT_TRUE(bd.converged());
    EXPECT_NEAR(bd.objective, ext.objective, tol_of(ext.objective));
    expect_monotone(bd.state);
    for (const auto &c : bd.state.cuts)
      feas += c.kind == benders::Cut::Kind::Feasibility;
  }
  EXPECT_GT(feas, 0u);
}

TEST(Benders, OptimalityCutsNeverExcludeTrueRecourse) {
  std::mt19937_64 rng(33);
  auto inst = oracle::random_instance(rng, 3, 5);
  auto sc = oracle::random_scenarios(rng, 3, 3, 4);
  auto bd = solve_benders(inst, sc, RecourseVariant::FlowBalance);
  ASSERT_FALSE(bd.state.cuts.empty());
  // Enumerate every feasible x; theta = expected recourse must satisfy each cut.
  for (std::int64_t a = 0; a <= 5; ++a)
    for (std::int64_t b = 0; a + b <= 5; ++b)
      for (std::int64_t c = 0; a + b + c <= 5; ++c) {
        std::vector<std::int64_t> x{a, b, c};
        double q = 0.0;
        for (std::size_t s = 0; s < sc.size(); ++s)
          q += sc.probabilities[s] * oracle::brute_recourse(inst, x, sc.demands[s], RecourseVariant::FlowBalance);
        for (const auto &cut : bd.state.cuts) {
          double lhs = 0.0;
          for (auto [j, v] : cut.coef)
            lhs += v * (j < 3 ? static_cast<double>(x[j]) : q);
          EXPECT_LE(lhs, cut.rhs + 1e-7);
        }
      }
}

TEST(Benders, PaperLiteralWarnsAndRuns) {
  auto sc = scenario::single({1, 2}, {4, 1});
  auto bd = solve_benders(toy(), sc, RecourseVariant::PaperLiteral);
  EXPECT_FALSE(bd.warnings.empty());
  EXPECT_TRUE(bd.converged());
  EXPECT_NEAR(bd.objective, solve_extensive(toy(), sc, RecourseVariant::PaperLiteral).objective, 1e-6);
}

TEST(Benders, XiOutsideRangeRejected) {
  auto sc = scenario::single({1, 2}, {4, 1});
  BendersOptions o;
  o.xi = 1e-3;
  EXPECT_THROW(solve_benders(toy(), sc, RecourseVariant::FlowBalance, o), ArgumentError);
  o.xi = 1e-8;
  EXPECT_THROW(solve_benders(toy(), sc, RecourseVariant::FlowBalance, o), ArgumentError);
}

TEST(Benders, IterationCapReportsNonConverged) {
  std::mt19937_64 rng(34);
  auto inst = oracle::random_instance(rng, 4, 20);
  auto sc = oracle::random_scenarios(rng, 4, 6, 9);
  BendersOptions o;
  o.max_iterations = 1;
  auto bd = solve_benders(inst, sc, RecourseVariant::FlowBalance, o);
  EXPECT_FALSE(bd.converged());
  EXPECT_EQ(bd.state.iterations, 1u);
  EXPECT_FALSE(bd.warnings.empty());
}

TEST(Benders, TraceHasOneLinePerIteration) {
  std::mt19937_64 rng(35);
  auto inst = oracle::random_instance(rng, 3, 6);
  auto sc = oracle::random_scenarios(rng, 3, 3, 5);
  auto bd = solve_benders(inst, sc, RecourseVariant::FlowBalance);
  std::ostringstream os;
  benders::write_trace(os, bd.state);
  const auto text = os.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), bd.state.iterations + 1);
  EXPECT_EQ(text.rfind("iteration,lower_bound,upper_bound,gap,cut_type,subproblem_seconds\n", 0), 0u);
}

TEST(Extensive, SizeGuardPointsToBenders) {
  auto sc = scenario::single({1, 2}, {4, 1});
  ExtensiveOptions o;
  o.size_limit = 3;
  try {
    solve_extensive(toy(), sc, RecourseVariant::FlowBalance, o);
    FAIL();
  } catch (const ArgumentError &e) {
    EXPECT_NE(std::string(e.what()).find("benders"), std::string::npos);
  }
}

TEST(Extensive, MatchesBruteForce) {
  std::mt19937_64 rng(36);
  for (int k = 0; k < 3; ++k) {
    auto inst = oracle::random_instance(rng, 3, 4);
    auto sc = oracle::random_scenarios(rng, 3, 4, 4);
    for (auto v : {RecourseVariant::FlowBalance, RecourseVariant::PaperLiteral})
      EXPECT_NEAR(solve_extensive(inst, sc, v).objective, oracle::brute_extensive(inst, sc, v).objective, 1e-9);
  }
}

TEST(Extensive, ValueOfStochasticSolutionNonnegative) {
  std::mt19937_64 rng(37);
  for (int k = 0; k < 6; ++k) {
    auto inst = oracle::random_instance(rng, 3, 10);
    auto sc = oracle::random_scenarios(rng, 3, 5, 8);
    auto sp = solve_extensive(inst, sc, RecourseVariant::FlowBalance);
    auto mean = sc.mean_demand();
    auto det = csrp::build_deterministic(inst, mean, RecourseVariant::FlowBalance);
    auto ds = lp::solve_mip(det.problem);
    auto dplan = csrp::decode_plan(det.layout, ds.x);
    auto expected = [&](const FirstStagePlan &p) {
      double v = 0.0;
      for (std::size_t s = 0; s < sc.size(); ++s)
        v += sc.probabilities[s] * csrp::solve_recourse(inst, p, sc.demands[s], RecourseVariant::FlowBalance).profit();
      return v;
    };
    EXPECT_NEAR(expected(sp.plan), sp.objective, 1e-6);
    EXPECT_GE(expected(sp.plan) + 1e-9, expected(dplan));
  }
}

TEST(Saa, DegenerateZeroDemand) {
  auto inst = toy();
  auto r = solve_saa(inst, point_mass({1, 2}, {0, 0}), 1, 1, 5);
  ASSERT_EQ(r.replications.size(), 1u);
  EXPECT_TRUE(r.replications[0].ok);
  EXPECT_NEAR(r.mean, 0.0, 1e-9);
}

TEST(Saa, PointMassReplicationsAgree) {
  auto r = solve_saa(toy(), point_mass({1, 2}, {3, 2}), 3, 1, 5);
  ASSERT_EQ(r.objectives().size(), 3u);
  for (double v : r.objectives())
    EXPECT_NEAR(v, r.objectives()[0], 1e-9);
  EXPECT_NEAR(r.mean, r.objectives()[0], 1e-9);
  EXPECT_EQ(r.replications[2].seed, 7u);
}

TEST(Saa, MethodsAgree) {
  density::DemandDistributionSet d;
  d.location_ids = {1, 2};
  d.models = {density::Poisson{4.0}, density::Poisson{2.0}};
  SaaOptions ext;
  ext.method = Method::Extensive;
  auto a = solve_saa(toy(), d, 3, 5, 11);
  auto b = solve_saa(toy(), d, 3, 5, 11, ext);
  ASSERT_EQ(a.failed + b.failed, 0u);
  for (std::size_t m = 0; m < 3; ++m)
    EXPECT_NEAR(a.replications[m].objective, b.replications[m].objective, 1e-6);
  EXPECT_NEAR(a.mean, b.mean, 1e-6);
}

TEST(Saa, FailedReplicationsExcluded) {
  SaaOptions o;
  o.method = Method::Extensive;
  o.extensive.size_limit = 1; // every replication refuses
  auto r = solve_saa(toy(), point_mass({1, 2}, {3, 2}), 2, 1, 5, o);
  EXPECT_EQ(r.failed, 2u);
  EXPECT_FALSE(r.replications[0].error.empty());
  EXPECT_EQ(r.mean, 0.0);
  EXPECT_THROW(solve_saa(toy(), point_mass({1, 2}, {3, 2}), 0, 1, 5), ArgumentError);
}
