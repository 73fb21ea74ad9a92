#include "ddksp/pipeline.hpp"
#include "ddksp/synth.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace ddksp;
namespace fs = std::filesystem;

namespace {

//! A small trip file, coordinates, and config in a fresh directory.
struct Fixture {
  fs::path dir;

  explicit Fixture(const std::string &tag, const std::string &extra = "") {
    dir = fs::temp_directory_path() / ("ddksp_pipe_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    synth::BimodalOptions o;
    o.start = *parse_date("2018-11-01");
    o.days = 75;
    o.zones = {11, 22, 33, 44};
    o.quiet_mean = 3;
    o.busy_mean = 12;
    o.seed = 9;
    const auto panel = synth::bimodal_panel(o);
    std::ofstream trips(dir / "trips.csv");
    synth::write_trips(trips, panel, 4, 97);
    std::ofstream coords(dir / "coords.csv");
    synth::write_coords(coords, o.zones, 4);
    std::ofstream(dir / "config.json") << R"j({
  "run_id": "t",
  "output_dir": "out",
  "trip_files": ["trips.csv"],
  "top_k": 3,
  "split_cutoff": "2018-12-31",
  "scenario_counts": [4, 6],
  "replications": 2,
  "seed": 17,
  "method": "extensive",
  "instance": {"transfer": "distance(coords.csv)", "capacity": 30}
  )j" + extra + "}\n";
  }
  ~Fixture() { fs::remove_all(dir); }
  config::RunConfig config() const { return config::load_config(dir / "config.json"); }
};

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

//! Relative path -> contents for every artifact outside logs/.
std::map<std::string, std::string> artifacts(const fs::path &run) {
  std::map<std::string, std::string> m;
  for (const auto &e : fs::recursive_directory_iterator(run)) {
    const auto rel = fs::relative(e.path(), run);
    if (e.is_regular_file() && *rel.begin() != "logs")
      m[rel.string()] = slurp(e.path());
  }
  return m;
}

template <class F> std::string dependency_stage(F &&f) {
  try {
    f();
  } catch (const DependencyError &e) {
    return e.stage();
  }
  return "";
}

} // namespace

TEST(Pipeline, ProducesEveryArtifact) {
  Fixture fx("all");
  const auto c = fx.config();
  pipeline::cmd_pipeline(c);
  const auto run = fx.dir / "out" / "t";
  for (const char *f : {"panel.csv", "train.csv", "test.csv", "ingest_summary.json", "distributions_kde.json",
                        "distributions_gaussian.json", "distributions_laplace.json", "distributions_poisson.json",
                        "instance.json", "plan_kde.json", "plan_gaussian.json", "plan_laplace.json",
                        "plan_poisson.json", "plan_deterministic.json", "objective.csv", "report_kde.csv",
                        "report_deterministic.csv", "comparison.csv", "plans.csv", "summary.json",
                        "demand_2019-01-01.csv", "moves_kde_2019-01-01.csv", "profit_2019-01.svg"})
    EXPECT_TRUE(fs::exists(run / f)) << f;
  EXPECT_TRUE(fs::exists(run / "logs" / "solve_timing.csv"));

  // Three busiest zones, train through the cutoff, test after it.
  auto train = pipeline::detail::read_panel(run / "train.csv");
  auto test = pipeline::detail::read_panel(run / "test.csv");
  EXPECT_EQ(train.num_locations(), 3u);
  EXPECT_EQ(train.num_days(), 61u);
  EXPECT_EQ(format_date(test.dates.front()), "2019-01-01");

  // Plans honor capacity; report means match the per-day series.
  auto summary = pipeline::detail::read_json(run / "summary.json");
  ASSERT_EQ(summary.at("approaches").size(), 5u);
  for (const auto &a : summary.at("approaches")) {
    std::int64_t total = 0;
    for (auto v : a.at("plan"))
      total += v.get<std::int64_t>();
    EXPECT_LE(total, 30);
  }
  auto plan = pipeline::detail::read_json(run / "plan_kde.json");
  EXPECT_EQ(plan.at("scenarios").get<int>(), 6);
  EXPECT_EQ(plan.at("saa_replications").size(), 2u);
  const auto comparison = slurp(run / "comparison.csv");
  EXPECT_EQ(comparison.rfind("approach,daily_average_profit,days\nkde,", 0), 0u);
}

TEST(Pipeline, FitWritesOneFilePerFamily) {
  Fixture fx("fit");
  const auto c = fx.config();
  pipeline::cmd_ingest(c);
  const auto files = pipeline::cmd_fit(c);
  ASSERT_EQ(files.size(), 4u);
  for (const auto &f : files) {
    auto set = density::distributions_from_json(pipeline::detail::read_json(f));
    EXPECT_EQ(set.size(), 3u);
  }
}

TEST(Pipeline, MissingArtifactsNameTheProducingStage) {
  Fixture fx("dep");
  const auto c = fx.config();
  EXPECT_EQ(dependency_stage([&] { pipeline::cmd_fit(c); }), "ingest");
  pipeline::cmd_ingest(c);
  EXPECT_EQ(dependency_stage([&] { pipeline::cmd_solve(c); }), "fit");
  EXPECT_EQ(dependency_stage([&] { pipeline::cmd_evaluate(c); }), "solve");
  pipeline::cmd_fit(c);
  fs::remove(fx.dir / "out" / "t" / "distributions_laplace.json");
  try {
    pipeline::cmd_solve(c);
    FAIL() << "expected a dependency error";
  } catch (const DependencyError &e) {
    EXPECT_EQ(e.stage(), "fit");
    EXPECT_NE(std::string(e.what()).find("distributions_laplace.json"), std::string::npos);
  }
}

TEST(Pipeline, StageFailuresAreTagged) {
  Fixture fx("stage", R"(, "top_k": 9)");
  const auto c = fx.config();
  try {
    pipeline::cmd_ingest(c);
    FAIL() << "expected a stage error";
  } catch (const pipeline::StageError &e) {
    EXPECT_EQ(e.stage(), "ingest");
  }
}

TEST(Pipeline, RerunIsByteIdentical) {
  Fixture fx("det");
  const auto c = fx.config();
  pipeline::cmd_pipeline(c);
  const auto first = artifacts(fx.dir / "out" / "t");
  fs::remove_all(fx.dir / "out");
  pipeline::cmd_pipeline(c);
  const auto second = artifacts(fx.dir / "out" / "t");
  ASSERT_EQ(first.size(), second.size());
  for (const auto &[name, body] : first)
    EXPECT_EQ(body, second.at(name)) << name;
}

TEST(Pipeline, BendersAndExtensiveAgreeOnPlans) {
  Fixture fx("methods");
  auto c = fx.config();
  pipeline::cmd_pipeline(c);
  const auto ext = slurp(fx.dir / "out" / "t" / "plans.csv");
  c.method = solve::Method::Benders;
  c.run_id = "b";
  pipeline::cmd_pipeline(c);
  EXPECT_EQ(slurp(fx.dir / "out" / "b" / "plans.csv"), ext);
}
