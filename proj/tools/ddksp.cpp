// ddksp: command-line front end for the relocation pipeline.

#include "ddksp/config.hpp"
#include "ddksp/pipeline.hpp"
#include "ddksp/synth.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace ddksp;

namespace {

enum Exit { Ok = 0, Usage = 1, Config = 2, Dependency = 3, Stage = 4 };

struct Overrides {
  std::string config;
  std::optional<std::size_t> n_scenarios;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::string> method;
  std::optional<double> xi;
};

void add_common(CLI::App *cmd, Overrides &o) {
  cmd->add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--n-scenarios", o.n_scenarios, "Use this single scenario count")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Override the run seed");
  cmd->add_option("--variant", o.variant, "Recourse variant: flow-balance or paper-literal");
  cmd->add_option("--method", o.method, "Solve method: benders or extensive");
  cmd->add_option("--xi", o.xi, "Benders relative gap tolerance in [1e-7, 1e-4]");
}

config::RunConfig load(const Overrides &o) {
  auto c = config::load_config(o.config);
  try {
    if (o.n_scenarios) {
      c.scenario_counts = {*o.n_scenarios};
      c.evaluation_scenarios = *o.n_scenarios;
    }
    if (o.seed)
      c.seed = *o.seed;
    if (o.variant)
      c.variant = csrp::parse_variant(*o.variant);
    if (o.method)
      c.method = solve::parse_method(*o.method);
  } catch (const ArgumentError &e) {
    throw ConfigError(std::string("command-line override: ") + e.what());
  }
  if (o.xi) {
    if (!(*o.xi >= 1e-7 && *o.xi <= 1e-4))
      throw ConfigError("command-line override '--xi': must lie in [1e-7, 1e-4]");
    c.xi = *o.xi;
  }
  return c;
}

int run(const std::string &name, const Overrides &o,
        std::vector<fs::path> (*cmd)(const config::RunConfig &)) {
  try {
    const auto c = load(o);
    for (const auto &p : cmd(c))
      std::cout << "wrote " << p.string() << '\n';
    return Ok;
  } catch (const ConfigError &e) {
    std::cerr << "ddksp " << name << ": config error: " << e.what() << '\n';
    return Config;
  } catch (const DependencyError &e) {
    std::cerr << "ddksp " << name << ": missing input from stage '" << e.stage() << "': " << e.what() << '\n';
    return Dependency;
  } catch (const pipeline::StageError &e) {
    std::cerr << "ddksp " << name << ": stage '" << e.stage() << "' failed: " << e.what() << '\n';
    return Stage;
  } catch (const std::exception &e) {
    std::cerr << "ddksp " << name << ": " << e.what() << '\n';
    return Stage;
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Data-driven car-sharing relocation: ingest trips, fit demand, solve, evaluate"};
  app.require_subcommand(1);

  Overrides o;
  struct Stage {
    const char *name;
    const char *help;
    std::vector<fs::path> (*fn)(const config::RunConfig &);
  };
  const Stage stages[] = {
      {"ingest", "Aggregate trip files into daily demand panels", pipeline::cmd_ingest},
      {"fit", "Fit one demand distribution file per family", pipeline::cmd_fit},
      {"solve", "Solve the stochastic and deterministic models", pipeline::cmd_solve},
      {"evaluate", "Replay plans on the test days and write reports", pipeline::cmd_evaluate},
      {"pipeline", "Run every stage in order", pipeline::cmd_pipeline},
  };
  std::vector<std::pair<CLI::App *, const Stage *>> subs;
  for (const auto &s : stages) {
    auto *sub = app.add_subcommand(s.name, s.help);
    add_common(sub, o);
    subs.emplace_back(sub, &s);
  }

  synth::BimodalOptions so;
  std::string start = "2017-01-01", out_dir = ".";
  std::size_t zones = 6, malformed_every = 0;
  std::uint64_t trip_seed = 1;
  auto *syn = app.add_subcommand("synth", "Write a synthetic trip file with bimodal daily demand");
  syn->add_option("--out-dir", out_dir, "Directory for trips.csv and coords.csv");
  syn->add_option("--days", so.days, "Number of days")->check(CLI::PositiveNumber);
  syn->add_option("--zones", zones, "Number of zones")->check(CLI::PositiveNumber);
  syn->add_option("--start", start, "First date (YYYY-MM-DD)");
  syn->add_option("--quiet-mean", so.quiet_mean, "Mean pickups on a quiet day");
  syn->add_option("--busy-mean", so.busy_mean, "Mean pickups on a busy day");
  syn->add_option("--busy-weight", so.busy_weight, "Probability of a busy day");
  syn->add_option("--seed", so.seed, "Seed for the demand panel");
  syn->add_flag("--shared-regime", so.shared_regime, "Draw quiet/busy once per day for all zones");
  syn->add_option("--trip-seed", trip_seed, "Seed for trip times and coordinates");
  syn->add_option("--malformed-every", malformed_every, "Insert a rejected row every this many trips (0: none)");

  CLI11_PARSE(app, argc, argv);

  for (auto [sub, s] : subs)
    if (sub->parsed())
      return run(s->name, o, s->fn);

  try {
    auto d = parse_date(start);
    if (!d)
      throw ArgumentError("--start must be a YYYY-MM-DD date");
    so.start = *d;
    so.zones.clear();
    for (std::size_t z = 1; z <= zones; ++z)
      so.zones.push_back(static_cast<int>(10 * z + z));
    const auto panel = synth::bimodal_panel(so);
    fs::create_directories(out_dir);
    std::ofstream trips(fs::path(out_dir) / "trips.csv", std::ios::binary);
    synth::write_trips(trips, panel, trip_seed, malformed_every);
    std::ofstream coords(fs::path(out_dir) / "coords.csv", std::ios::binary);
    synth::write_coords(coords, so.zones, trip_seed);
    if (!trips || !coords)
      throw Error("cannot write to '" + out_dir + "'");
    std::cout << "wrote " << (fs::path(out_dir) / "trips.csv").string() << " (" << panel.total() << " trips, "
              << panel.num_days() << " days)\n";
    return Ok;
  } catch (const std::exception &e) {
    std::cerr << "ddksp synth: " << e.what() << '\n';
    return Usage;
  }
}
