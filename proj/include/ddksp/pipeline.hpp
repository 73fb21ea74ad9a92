#pragma once

// Pipeline stages over plain artifact files under <output_dir>/<run_id>/.
// Each stage reads its predecessor's files and writes its own; timings and
// solver traces go to logs/ and are the only nondeterministic output.

#include "ddksp/config.hpp"
#include "ddksp/csrp_models.hpp"
#include "ddksp/density.hpp"
#include "ddksp/evaluate.hpp"
#include "ddksp/ingest.hpp"
#include "ddksp/solve.hpp"

#include "json.hpp"

#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace ddksp::pipeline {

namespace fs = std::filesystem;
using config::RunConfig;
using nlohmann::json;

//! A stage failed for a reason other than configuration or a missing input.
class StageError : public Error {
public:
  StageError(std::string stage, const std::string &what) : Error(what), stage_(std::move(stage)) {}
  const std::string &stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

//! Artifact locations inside a run directory.
struct Layout {
  fs::path dir;

  explicit Layout(const RunConfig &c) : dir(c.run_dir()) {}
  fs::path panel() const { return dir / "panel.csv"; }
  fs::path train() const { return dir / "train.csv"; }
  fs::path test() const { return dir / "test.csv"; }
  fs::path ingest_summary() const { return dir / "ingest_summary.json"; }
  fs::path distributions(density::Family f) const {
    return dir / ("distributions_" + std::string(density::to_string(f)) + ".json");
  }
  fs::path instance() const { return dir / "instance.json"; }
  fs::path plan(evaluate::Approach a) const { return dir / ("plan_" + std::string(evaluate::to_string(a)) + ".json"); }
  fs::path objective() const { return dir / "objective.csv"; }
  fs::path report(evaluate::Approach a) const {
    return dir / ("report_" + std::string(evaluate::to_string(a)) + ".csv");
  }
  fs::path comparison() const { return dir / "comparison.csv"; }
  fs::path plans() const { return dir / "plans.csv"; }
  fs::path summary() const { return dir / "summary.json"; }
  fs::path logs() const { return dir / "logs"; }
};

inline evaluate::Approach approach_of(density::Family f) {
  return evaluate::parse_approach(density::to_string(f));
}

//! Stochastic approaches from the configured families, then the baseline.
inline std::vector<evaluate::Approach> approaches(const RunConfig &c) {
  std::vector<evaluate::Approach> out;
  for (auto f : c.families)
    out.push_back(approach_of(f));
  out.push_back(evaluate::Approach::DeterministicMean);
  return out;
}

namespace detail {

inline void write_file(const fs::path &p, const std::function<void(std::ostream &)> &body) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os)
    throw Error("cannot write '" + p.string() + "'");
  body(os);
  if (!os)
    throw Error("write failed for '" + p.string() + "'");
}

inline void write_json(const fs::path &p, const json &j) {
  write_file(p, [&](std::ostream &os) { os << j.dump(2) << '\n'; });
}

//! Throws a dependency error naming `producer` when `p` is absent.
inline void require(const fs::path &p, const std::string &producer, const std::string &consumer) {
  if (!fs::exists(p))
    throw DependencyError(producer, consumer + ": missing artifact '" + p.filename().string() + "' in " +
                                        p.parent_path().string() + "; run the " + producer + " stage first");
}

inline ingest::DemandPanel read_panel(const fs::path &p) {
  std::ifstream in(p);
  if (!in)
    throw Error("cannot read '" + p.string() + "'");
  return ingest::read_panel_csv(in);
}

inline json read_json(const fs::path &p) {
  std::ifstream in(p);
  if (!in)
    throw Error("cannot read '" + p.string() + "'");
  return json::parse(in);
}

inline json instance_to_json(const csrp::CsrpInstance &inst) {
  return {{"location_ids", inst.location_ids},
          {"revenue", inst.revenue},
          {"holding", inst.holding},
          {"transfer", inst.transfer},
          {"capacity", inst.capacity}};
}

inline csrp::CsrpInstance instance_from_json(const json &j) {
  csrp::CsrpInstance inst;
  inst.location_ids = j.at("location_ids").get<std::vector<int>>();
  inst.revenue = j.at("revenue").get<std::vector<double>>();
  inst.holding = j.at("holding").get<std::vector<double>>();
  inst.transfer = j.at("transfer").get<std::vector<std::vector<double>>>();
  inst.capacity = j.at("capacity").get<std::int64_t>();
  inst.validate();
  return inst;
}

inline void write_trace(std::ostream &os, const std::vector<benders::IterationRecord> &trace) {
  benders::State st;
  st.trace = trace;
  benders::write_trace(os, st);
}

//! Runs one stage, tagging unexpected failures with the stage name.
template <class F> auto run_stage(const std::string &stage, F &&body) {
  try {
    return body();
  } catch (const DependencyError &) {
    throw;
  } catch (const ConfigError &) {
    throw;
  } catch (const StageError &) {
    throw;
  } catch (const std::exception &e) {
    throw StageError(stage, stage + ": " + e.what());
  }
}

} // namespace detail

// --- ingest ----------------------------------------------------------------

//! Trip files -> panel.csv (top-k zones, busiest first), train.csv, test.csv.
inline std::vector<fs::path> cmd_ingest(const RunConfig &c) {
  return detail::run_stage("ingest", [&] {
    if (c.trip_files.empty())
      throw ConfigError("config field 'trip_files': no trip files given");
    Layout L(c);
    std::vector<ingest::TripRecord> records;
    std::size_t rows = 0, rejected = 0, suspicious = 0;
    json files = json::array();
    for (const auto &f : c.trip_files) {
      std::ifstream in(f);
      if (!in)
        throw Error("cannot read trip file '" + f.string() + "'");
      auto r = ingest::parse_trips(in, c.columns, c.delimiter);
      files.push_back({{"file", f.filename().string()},
                       {"rows", r.rows},
                       {"rejected", r.rejected},
                       {"suspicious", r.suspicious}});
      rows += r.rows;
      rejected += r.rejected;
      suspicious += r.suspicious;
      records.insert(records.end(), r.records.begin(), r.records.end());
    }
    std::size_t out_of_range = 0;
    if (c.first_date || c.last_date)
      out_of_range = ingest::filter_dates(records, c.first_date.value_or(Date::min()),
                                          c.last_date.value_or(Date::max()));
    if (records.empty())
      throw EmptyInputError("no valid trip records in the configured files");
    const auto all = ingest::aggregate_daily(records);
    const auto panel = ingest::top_k_locations(all, c.top_k);
    const auto [train, test] = ingest::split_by_date(panel, c.split_cutoff);

    detail::write_file(L.panel(), [&](std::ostream &os) { ingest::write_panel_csv(os, panel); });
    detail::write_file(L.train(), [&](std::ostream &os) { ingest::write_panel_csv(os, train); });
    detail::write_file(L.test(), [&](std::ostream &os) { ingest::write_panel_csv(os, test); });
    json summary{{"files", files},
                 {"rows", rows},
                 {"rejected", rejected},
                 {"suspicious", suspicious},
                 {"outside_date_range", out_of_range},
                 {"records", records.size()},
                 {"zones_seen", all.num_locations()},
                 {"first_date", format_date(panel.dates.front())},
                 {"last_date", format_date(panel.dates.back())},
                 {"split_cutoff", format_date(c.split_cutoff)},
                 {"train_days", train.num_days()},
                 {"test_days", test.num_days()},
                 {"locations", panel.location_ids},
                 {"mean_daily_demand", panel.mean_demand()}};
    detail::write_json(L.ingest_summary(), summary);
    return std::vector<fs::path>{L.panel(), L.train(), L.test(), L.ingest_summary()};
  });
}

// --- fit -------------------------------------------------------------------

//! train.csv -> one distributions_<family>.json per configured family.
inline std::vector<fs::path> cmd_fit(const RunConfig &c) {
  return detail::run_stage("fit", [&] {
    Layout L(c);
    detail::require(L.train(), "ingest", "fit");
    const auto train = detail::read_panel(L.train());
    std::vector<fs::path> out;
    for (auto f : c.families) {
      const auto set = evaluate::fit_panel(f, train);
      detail::write_json(L.distributions(f), density::to_json(set));
      out.push_back(L.distributions(f));
    }
    return out;
  });
}

// --- solve -----------------------------------------------------------------

//! Distributions -> SAA over every scenario count, a plan per family at the
//! evaluation count, and the deterministic-mean plan.
inline std::vector<fs::path> cmd_solve(const RunConfig &c) {
  return detail::run_stage("solve", [&] {
    Layout L(c);
    detail::require(L.train(), "ingest", "solve");
    for (auto f : c.families)
      detail::require(L.distributions(f), "fit", "solve");
    const auto train = detail::read_panel(L.train());
    const auto inst = config::build_instance(c.instance, train.location_ids);
    detail::write_json(L.instance(), detail::instance_to_json(inst));
    std::vector<fs::path> out{L.instance()};

    const auto opt = c.saa_options();
    const std::size_t eval_n = c.eval_scenarios();
    std::ostringstream objective, timing;
    objective << "approach,scenarios,replication,objective\n";
    timing << "approach,scenarios,replication,seconds,iterations,status\n";
    fs::create_directories(L.logs());

    for (auto f : c.families) {
      const auto a = approach_of(f);
      const std::string label(evaluate::to_string(a));
      const auto dist = density::distributions_from_json(detail::read_json(L.distributions(f)));
      if (dist.location_ids != inst.location_ids)
        throw DependencyError("fit", "solve: " + L.distributions(f).filename().string() +
                                         " does not match train.csv locations; rerun the fit stage");
      json plan_doc;
      for (auto n : c.scenario_counts) {
        const auto saa = solve::solve_saa(inst, dist, c.replications, n, c.seed, opt);
        for (const auto &rep : saa.replications) {
          objective << label << ',' << n << ',' << rep.index + 1 << ','
                    << (rep.ok ? evaluate::fixed(rep.objective) : "failed") << '\n';
          timing << label << ',' << n << ',' << rep.index + 1 << ',' << evaluate::fixed(rep.seconds, 4) << ','
                 << rep.iterations << ',' << (rep.ok ? "ok" : "failed") << '\n';
          if (!rep.trace.empty())
            detail::write_file(L.logs() / ("benders_" + label + "_n" + std::to_string(n) + "_r" +
                                           std::to_string(rep.index + 1) + ".csv"),
                               [&](std::ostream &os) { detail::write_trace(os, rep.trace); });
        }
        objective << label << ',' << n << ",mean," << evaluate::fixed(saa.mean) << '\n';
        if (n != eval_n || !plan_doc.is_null())
          continue;
        std::vector<csrp::FirstStagePlan> plans;
        json reps = json::array();
        for (const auto &rep : saa.replications) {
          json r{{"replication", rep.index + 1}, {"seed", rep.seed}, {"ok", rep.ok}};
          if (rep.ok) {
            r["objective"] = rep.objective;
            r["plan"] = rep.plan.x;
            plans.push_back(rep.plan);
          } else {
            r["error"] = rep.error;
          }
          reps.push_back(std::move(r));
        }
        if (plans.empty())
          throw StateError("every SAA replication failed for " + label + " at " + std::to_string(n) + " scenarios");
        const auto plan = evaluate::mean_plan(plans, inst.capacity);
        json warnings = json::array();
        if (c.variant == csrp::RecourseVariant::PaperLiteral && c.method == solve::Method::Benders)
          warnings.push_back("paper-literal recourse is not concave in the allocation; Benders cuts may cut off "
                             "the true optimum");
        plan_doc = {{"approach", label},
                    {"location_ids", inst.location_ids},
                    {"x", plan.x},
                    {"scenarios", n},
                    {"replications", c.replications},
                    {"seed", c.seed},
                    {"method", std::string(solve::to_string(c.method))},
                    {"variant", std::string(csrp::to_string(c.variant))},
                    {"cut_mode", benders::to_string(c.cut_mode)},
                    {"saa_mean_objective", saa.mean},
                    {"saa_failed", saa.failed},
                    {"saa_replications", std::move(reps)},
                    {"warnings", std::move(warnings)}};
      }
      detail::write_json(L.plan(a), plan_doc);
      out.push_back(L.plan(a));
    }

    const auto det = evaluate::deterministic_plan(inst, train, c.variant);
    detail::write_json(L.plan(evaluate::Approach::DeterministicMean),
                       {{"approach", "deterministic"},
                        {"location_ids", inst.location_ids},
                        {"x", det.x},
                        {"mean_train_demand", train.mean_demand()},
                        {"variant", std::string(csrp::to_string(c.variant))}});
    out.push_back(L.plan(evaluate::Approach::DeterministicMean));
    detail::write_file(L.objective(), [&](std::ostream &os) { os << objective.str(); });
    detail::write_file(L.logs() / "solve_timing.csv", [&](std::ostream &os) { os << timing.str(); });
    out.push_back(L.objective());
    return out;
  });
}

// --- evaluate --------------------------------------------------------------

//! Plans replayed on test.csv: per-day reports, comparison, summary, the
//! first test day's demand and moves, and one profit chart per month.
inline std::vector<fs::path> cmd_evaluate(const RunConfig &c) {
  return detail::run_stage("evaluate", [&] {
    Layout L(c);
    detail::require(L.test(), "ingest", "evaluate");
    detail::require(L.instance(), "solve", "evaluate");
    const auto list = approaches(c);
    for (auto a : list)
      detail::require(L.plan(a), "solve", "evaluate");
    const auto test = detail::read_panel(L.test());
    const auto inst = detail::instance_from_json(detail::read_json(L.instance()));
    if (test.location_ids != inst.location_ids)
      throw DependencyError("solve", "evaluate: instance.json does not match test.csv locations; rerun the solve stage");

    std::vector<fs::path> out;
    std::vector<evaluate::ApproachResult> results;
    const std::string day0 = format_date(test.dates.front());
    for (auto a : list) {
      const auto doc = detail::read_json(L.plan(a));
      if (doc.at("location_ids").get<std::vector<int>>() != inst.location_ids)
        throw DependencyError("solve", "evaluate: " + L.plan(a).filename().string() +
                                           " does not match instance locations; rerun the solve stage");
      evaluate::ApproachResult r;
      r.approach = a;
      r.plan.x = doc.at("x").get<std::vector<std::int64_t>>();
      r.report = evaluate::evaluate_plan(inst, r.plan, test, c.variant);
      r.report.label = std::string(evaluate::to_string(a));
      r.report.metadata["seed"] = std::to_string(c.seed);
      r.report.metadata["variant"] = std::string(csrp::to_string(c.variant));
      if (doc.contains("scenarios")) {
        r.report.metadata["scenarios"] = std::to_string(doc.at("scenarios").get<std::size_t>());
        r.report.metadata["replications"] = std::to_string(doc.at("replications").get<std::size_t>());
        r.report.metadata["method"] = doc.at("method").get<std::string>();
      }
      detail::write_file(L.report(a), [&](std::ostream &os) { evaluate::write_report_csv(os, r.report); });
      out.push_back(L.report(a));

      const auto first = csrp::solve_recourse(inst, r.plan, test.counts.front(), c.variant);
      const auto moves_path = L.dir / ("moves_" + r.report.label + "_" + day0 + ".csv");
      detail::write_file(moves_path,
                         [&](std::ostream &os) { evaluate::write_moves_csv(os, inst.location_ids, first.moves); });
      out.push_back(moves_path);
      results.push_back(std::move(r));
    }

    const auto demand_path = L.dir / ("demand_" + day0 + ".csv");
    detail::write_file(demand_path, [&](std::ostream &os) {
      os << "location_id,demand\n";
      for (std::size_t i = 0; i < inst.size(); ++i)
        os << inst.location_ids[i] << ',' << test.counts.front()[i] << '\n';
    });
    detail::write_file(L.comparison(), [&](std::ostream &os) { evaluate::write_comparison_csv(os, results); });
    detail::write_file(L.plans(), [&](std::ostream &os) { evaluate::write_plans_csv(os, inst.location_ids, results); });
    detail::write_json(L.summary(), {{"run_id", c.run_id},
                                     {"variant", std::string(csrp::to_string(c.variant))},
                                     {"test_first_date", day0},
                                     {"test_days", test.num_days()},
                                     {"approaches", evaluate::summary_json(results)}});
    out.insert(out.end(), {demand_path, L.comparison(), L.plans(), L.summary()});

    for (const auto &[month, idx] : evaluate::by_month(test.dates)) {
      std::vector<Date> dates;
      for (auto k : idx)
        dates.push_back(test.dates[k]);
      std::vector<evaluate::Series> series;
      for (const auto &r : results) {
        evaluate::Series s{r.report.label, {}};
        for (auto k : idx)
          s.values.push_back(r.report.profits[k]);
        series.push_back(std::move(s));
      }
      const auto svg = L.dir / ("profit_" + month + ".svg");
      detail::write_file(svg, [&](std::ostream &os) {
        evaluate::write_line_chart_svg(os, "Daily profit " + month, dates, series);
      });
      out.push_back(svg);
    }
    return out;
  });
}

//! All stages in order.
inline std::vector<fs::path> cmd_pipeline(const RunConfig &c) {
  std::vector<fs::path> out;
  for (const auto &stage : {cmd_ingest, cmd_fit, cmd_solve, cmd_evaluate}) {
    auto files = stage(c);
    out.insert(out.end(), files.begin(), files.end());
  }
  return out;
}

} // namespace ddksp::pipeline
