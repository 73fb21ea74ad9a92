#include "ddksp/evaluate.hpp"
#include "oracles/csrp_oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace ddksp;
using namespace ddksp::evaluate;

namespace {

CsrpInstance three_site() {
  CsrpInstance inst;
  inst.location_ids = {4, 7, 9};
  inst.revenue = {100, 100, 90};
  inst.holding = {20, 18, 22};
  inst.transfer = {{0, 10, 30}, {10, 0, 15}, {30, 15, 0}};
  inst.capacity = 40;
  return inst;
}

ingest::DemandPanel panel(std::vector<int> ids, std::vector<std::vector<std::int64_t>> rows) {
  ingest::DemandPanel p;
  p.location_ids = std::move(ids);
  Date d = *parse_date("2019-01-01");
  for (auto &r : rows) {
    p.dates.push_back(d);
    p.counts.push_back(r);
    d += std::chrono::days{1};
  }
  return p;
}

ingest::DemandPanel random_panel(std::mt19937_64 &rng, std::size_t days) {
  std::uniform_int_distribution<std::int64_t> dv(0, 12);
  std::vector<std::vector<std::int64_t>> rows;
  for (std::size_t d = 0; d < days; ++d)
    rows.push_back({dv(rng), dv(rng), dv(rng)});
  return panel({4, 7, 9}, rows);
}

} // namespace

TEST(EvaluatePlan, ExactPlanEarnsFullRevenue) {
  auto test = panel({4, 7, 9}, {{5, 3, 2}});
  auto r = evaluate_plan(three_site(), {{5, 3, 2}}, test, RecourseVariant::FlowBalance, true);
  EXPECT_NEAR(r.profits[0], 100 * 5 + 100 * 3 + 90 * 2 - (20 * 5 + 18 * 3 + 22 * 2), 1e-9);
  for (const auto &row : r.moves[0])
    for (double m : row)
      EXPECT_EQ(m, 0.0);
}

TEST(EvaluatePlan, EmptyPlanEarnsNothing) {
  std::mt19937_64 rng(1);
  auto r = evaluate_plan(three_site(), {{0, 0, 0}}, random_panel(rng, 10), RecourseVariant::FlowBalance);
  for (double p : r.profits)
    EXPECT_NEAR(p, 0.0, 1e-12);
  EXPECT_NEAR(r.mean_profit, 0.0, 1e-12);
}

TEST(EvaluatePlan, ProfitFloorAndMean) {
  std::mt19937_64 rng(2);
  auto test = random_panel(rng, 30);
  FirstStagePlan plan{{9, 4, 6}};
  for (auto v : {RecourseVariant::FlowBalance, RecourseVariant::PaperLiteral}) {
    auto r = evaluate_plan(three_site(), plan, test, v);
    const double floor = -(20 * 9 + 18 * 4 + 22 * 6);
    double sum = 0.0;
    for (double p : r.profits) {
      EXPECT_GE(p, floor - 1e-9);
      sum += p;
    }
    EXPECT_DOUBLE_EQ(r.mean_profit, sum / 30.0);
  }
}

TEST(EvaluatePlan, DeterministicAndMatchesBruteForce) {
  std::mt19937_64 rng(3);
  auto test = random_panel(rng, 8);
  auto inst = three_site();
  inst.capacity = 6;
  FirstStagePlan plan{{3, 1, 2}};
  auto a = evaluate_plan(inst, plan, test, RecourseVariant::FlowBalance);
  auto b = evaluate_plan(inst, plan, test, RecourseVariant::FlowBalance);
  EXPECT_EQ(a.profits, b.profits);
  for (std::size_t d = 0; d < test.num_days(); ++d)
    EXPECT_NEAR(a.profits[d],
                oracle::brute_recourse(inst, plan.x, test.counts[d], RecourseVariant::FlowBalance) -
                    (20 * 3 + 18 * 1 + 22 * 2),
                1e-9);
}

TEST(EvaluatePlan, ColumnMismatch) {
  auto test = panel({4, 9, 7}, {{1, 1, 1}});
  EXPECT_THROW(evaluate_plan(three_site(), {{1, 1, 1}}, test, RecourseVariant::FlowBalance), ArgumentError);
}

TEST(MeanPlan, RoundsHalfUpAndRepairs) {
  EXPECT_EQ(mean_plan({{{1, 2, 3}}, {{2, 2, 4}}}, 100).x, (std::vector<std::int64_t>{2, 2, 4}));
  // Means (5, 5, 1) exceed C = 9: the first largest entry gives way first.
  EXPECT_EQ(mean_plan({{{5, 5, 1}}}, 9).x, (std::vector<std::int64_t>{4, 4, 1}));
  EXPECT_EQ(mean_plan({{{5, 5, 1}}}, 10).x, (std::vector<std::int64_t>{4, 5, 1}));
  EXPECT_THROW(mean_plan({}, 3), ArgumentError);
}

TEST(Compare, RepeatedDayGivesIdenticalPlans) {
  std::vector<std::vector<std::int64_t>> rows(12, {6, 2, 5});
  auto train = panel({4, 7, 9}, rows);
  auto test = panel({4, 7, 9}, {{6, 2, 5}, {6, 2, 5}});
  auto res = compare_approaches(three_site(), train, test,
                                {Approach::Kde, Approach::Gaussian, Approach::Laplace, Approach::DeterministicMean}, 5,
                                2, 7);
  ASSERT_EQ(res.size(), 4u);
  for (const auto &r : res) {
    EXPECT_EQ(r.plan.x, (std::vector<std::int64_t>{6, 2, 5})) << r.report.label;
    EXPECT_NEAR(r.report.mean_profit, res[0].report.mean_profit, 1e-9);
  }
}

TEST(Compare, LabelsAndMetadata) {
  std::mt19937_64 rng(4);
  auto train = random_panel(rng, 40), test = random_panel(rng, 10);
  auto res = compare_approaches(three_site(), train, test, {Approach::Poisson, Approach::DeterministicMean}, 4, 2, 9);
  EXPECT_EQ(res[0].report.label, "poisson");
  EXPECT_EQ(res[1].report.label, "deterministic");
  EXPECT_TRUE(res[0].saa.has_value());
  EXPECT_FALSE(res[1].saa.has_value());
  EXPECT_EQ(res[0].report.metadata.at("seed"), "9");
  EXPECT_EQ(res[0].report.profits.size(), 10u);
}

TEST(Sweep, PointMassEqualsDeterministicOptimum) {
  density::DemandDistributionSet d;
  d.location_ids = {4, 7, 9};
  d.models = {density::Gaussian{6, 0}, density::Gaussian{2, 0}, density::Gaussian{5, 0}};
  auto rows = scenario_sweep(three_site(), d, {1}, 1, 3);
  const std::vector<double> avg{6, 2, 5};
  auto det = lp::solve_mip(csrp::build_deterministic(three_site(), avg, RecourseVariant::FlowBalance).problem);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].mean_objective, det.objective, 1e-6);
}

TEST(Sweep, MoreScenariosTakeLonger) {
  // Extensive form on five sites: solve work grows with N well above timer
  // noise, unlike Benders whose iteration count varies between samples.
  std::mt19937_64 rng(8);
  const auto inst = oracle::random_instance(rng, 5, 200);
  density::DemandDistributionSet d;
  d.location_ids = inst.location_ids;
  for (double mean : {30.0, 12.0, 25.0, 18.0, 40.0})
    d.models.push_back(density::Poisson{mean});
  solve::SaaOptions opt;
  opt.method = solve::Method::Extensive;
  auto rows = scenario_sweep(inst, d, {20, 50}, 3, 3, opt);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[1].scenarios, 50u);
  EXPECT_GT(rows[1].mean_seconds, rows[0].mean_seconds);
  EXPECT_THROW(scenario_sweep(inst, d, {}, 1, 3), ArgumentError);
}

TEST(Reports, CsvAndSvgLayout) {
  auto test = panel({4, 7, 9}, {{5, 3, 2}, {1, 1, 1}});
  auto r = evaluate_plan(three_site(), {{5, 3, 2}}, test, RecourseVariant::FlowBalance, true);
  r.label = "kde";
  std::ostringstream csv;
  write_report_csv(csv, r);
  EXPECT_EQ(csv.str().rfind("date,profit\n2019-01-01,782\n", 0), 0u);
  std::ostringstream moves;
  write_moves_csv(moves, {4, 7, 9}, r.moves[1]);
  EXPECT_EQ(moves.str().substr(0, 13), "to\\from,4,7,9");
  std::ostringstream svg;
  write_line_chart_svg(svg, "January", r.dates, {{"kde", r.profits}, {"poisson", {1.0, 2.0}}});
  const auto text = svg.str();
  EXPECT_EQ(text.rfind("<svg", 0), 0u);
  std::size_t lines = 0;
  for (auto pos = text.find("<polyline"); pos != std::string::npos; pos = text.find("<polyline", pos + 1))
    ++lines;
  EXPECT_EQ(lines, 2u);
  auto months = by_month(test.dates);
  EXPECT_EQ(months.size(), 1u);
}
