#pragma once

// Out-of-sample evaluation: fix a first-stage plan, replay each held-out day
// as realized demand, solve the recourse, and report daily profit.

#include "ddksp/csrp_models.hpp"
#include "ddksp/density.hpp"
#include "ddksp/ingest.hpp"
#include "ddksp/solve.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace ddksp::evaluate {

using csrp::CsrpInstance;
using csrp::FirstStagePlan;
using csrp::RecourseVariant;

struct EvaluationReport {
  std::string label;
  std::vector<Date> dates;
  std::vector<double> profits;
  double mean_profit = 0.0;
  //! moves[d][i][j], kept only when requested.
  std::vector<std::vector<std::vector<double>>> moves;
  std::map<std::string, std::string> metadata;
};

inline EvaluationReport evaluate_plan(const CsrpInstance &inst, const FirstStagePlan &plan,
                                      const ingest::DemandPanel &test, RecourseVariant variant,
                                      bool keep_moves = false) {
  if (test.location_ids != inst.location_ids)
    throw ArgumentError("evaluate_plan: panel columns do not match instance locations");
  if (test.empty())
    throw EmptyInputError("evaluate_plan: test panel has no days");
  csrp::check_plan(inst, plan);
  EvaluationReport rep;
  rep.dates = test.dates;
  double sum = 0.0;
  for (const auto &day : test.counts) {
    auto r = csrp::solve_recourse(inst, plan, day, variant);
    rep.profits.push_back(r.profit());
    sum += r.profit();
    if (keep_moves)
      rep.moves.push_back(std::move(r.moves));
  }
  rep.mean_profit = sum / static_cast<double>(rep.profits.size());
  rep.metadata["variant"] = std::string(csrp::to_string(variant));
  return rep;
}

//! Elementwise mean of plans rounded half-up, then brought within capacity
//! by taking one car at a time from the largest entry (lowest index on ties).
inline FirstStagePlan mean_plan(const std::vector<FirstStagePlan> &plans, std::int64_t capacity) {
  if (plans.empty())
    throw ArgumentError("mean_plan: no plans");
  const std::size_t R = plans.front().x.size();
  std::vector<double> avg(R, 0.0);
  for (const auto &p : plans) {
    if (p.x.size() != R)
      throw ArgumentError("mean_plan: plans differ in length");
    for (std::size_t i = 0; i < R; ++i)
      avg[i] += static_cast<double>(p.x[i]);
  }
  FirstStagePlan out;
  for (double v : avg)
    out.x.push_back(static_cast<std::int64_t>(round_half_up(v / static_cast<double>(plans.size()))));
  while (out.total() > capacity) {
    auto it = std::max_element(out.x.begin(), out.x.end());
    --*it;
  }
  return out;
}

enum class Approach { Kde, Gaussian, Laplace, Poisson, DeterministicMean };

inline std::string_view to_string(Approach a) {
  switch (a) {
  case Approach::Kde:
    return "kde";
  case Approach::Gaussian:
    return "gaussian";
  case Approach::Laplace:
    return "laplace";
  case Approach::Poisson:
    return "poisson";
  case Approach::DeterministicMean:
    return "deterministic";
  }
  return "?";
}

inline Approach parse_approach(std::string_view s) {
  if (s == "deterministic")
    return Approach::DeterministicMean;
  switch (density::parse_family(s)) {
  case density::Family::Kde:
    return Approach::Kde;
  case density::Family::Gaussian:
    return Approach::Gaussian;
  case density::Family::Laplace:
    return Approach::Laplace;
  case density::Family::Poisson:
    return Approach::Poisson;
  }
  throw ArgumentError("unknown approach");
}

inline density::Family family_of(Approach a) {
  switch (a) {
  case Approach::Kde:
    return density::Family::Kde;
  case Approach::Gaussian:
    return density::Family::Gaussian;
  case Approach::Laplace:
    return density::Family::Laplace;
  case Approach::Poisson:
    return density::Family::Poisson;
  default:
    throw ArgumentError("deterministic approach has no distribution family");
  }
}

//! Fits one model per panel column. A constant column cannot carry a
//! Silverman bandwidth; its KDE gets a vanishing one, which keeps the point
//! mass after rounding.
inline density::DemandDistributionSet fit_panel(density::Family family, const ingest::DemandPanel &train) {
  density::DemandDistributionSet set;
  set.location_ids = train.location_ids;
  for (std::size_t i = 0; i < train.num_locations(); ++i) {
    const auto col = train.column(i);
    if (family == density::Family::Kde && std::all_of(col.begin(), col.end(), [&](double v) { return v == col[0]; }))
      set.models.push_back(density::fit_kde(col, 1e-9));
    else
      set.models.push_back(density::fit(family, col));
  }
  return set;
}

//! Plan from the rounded mean training demand.
inline FirstStagePlan deterministic_plan(const CsrpInstance &inst, const ingest::DemandPanel &train,
                                         RecourseVariant variant, const lp::MipOptions &mip = {}) {
  const auto avg = train.mean_demand();
  auto m = csrp::build_deterministic(inst, avg, variant);
  auto sol = lp::solve_mip(m.problem, mip);
  if (!sol.optimal())
    throw StateError(std::string("deterministic model: solver returned ") + lp::to_string(sol.status));
  return csrp::decode_plan(m.layout, sol.x);
}

struct ApproachResult {
  Approach approach = Approach::Kde;
  FirstStagePlan plan;
  std::optional<solve::SaaResult> saa;
  EvaluationReport report;
};

//! Fit, solve SAA, average the replication plans, and replay the test days.
inline std::vector<ApproachResult> compare_approaches(const CsrpInstance &inst, const ingest::DemandPanel &train,
                                                      const ingest::DemandPanel &test,
                                                      const std::vector<Approach> &approaches, std::size_t N,
                                                      std::size_t M, std::uint64_t seed,
                                                      const solve::SaaOptions &opt = {}) {
  if (train.empty())
    throw EmptyInputError("compare_approaches: training panel has no days");
  if (train.location_ids != inst.location_ids)
    throw ArgumentError("compare_approaches: training columns do not match instance locations");
  std::vector<ApproachResult> out;
  for (auto a : approaches) {
    ApproachResult r;
    r.approach = a;
    if (a == Approach::DeterministicMean) {
      r.plan = deterministic_plan(inst, train, opt.variant, opt.extensive.mip);
    } else {
      auto dist = fit_panel(family_of(a), train);
      auto saa = solve::solve_saa(inst, dist, M, N, seed, opt);
      std::vector<FirstStagePlan> plans;
      for (const auto &rep : saa.replications)
        if (rep.ok)
          plans.push_back(rep.plan);
      if (plans.empty())
        throw StateError("compare_approaches: every SAA replication failed for " + std::string(to_string(a)));
      r.plan = mean_plan(plans, inst.capacity);
      r.saa = std::move(saa);
    }
    r.report = evaluate_plan(inst, r.plan, test, opt.variant);
    r.report.label = std::string(to_string(a));
    r.report.metadata["seed"] = std::to_string(seed);
    r.report.metadata["scenarios"] = std::to_string(N);
    r.report.metadata["replications"] = std::to_string(M);
    r.report.metadata["method"] = std::string(solve::to_string(opt.method));
    out.push_back(std::move(r));
  }
  return out;
}

struct SweepRow {
  std::size_t scenarios = 0;
  double mean_objective = 0.0;
  double mean_seconds = 0.0;
  std::size_t failed = 0;
};

inline std::vector<SweepRow> scenario_sweep(const CsrpInstance &inst, const density::DemandDistributionSet &dist,
                                            const std::vector<std::size_t> &counts, std::size_t M,
                                            std::uint64_t seed, const solve::SaaOptions &opt = {}) {
  if (counts.empty())
    throw ArgumentError("scenario_sweep: no scenario counts given");
  std::vector<SweepRow> rows;
  for (auto n : counts) {
    auto r = solve::solve_saa(inst, dist, M, n, seed, opt);
    rows.push_back({n, r.mean, r.mean_seconds(), r.failed});
  }
  return rows;
}

// --- reports ---------------------------------------------------------------

inline std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

//! Per-day series: date,profit.
inline void write_report_csv(std::ostream &os, const EvaluationReport &r) {
  os << "date,profit\n";
  for (std::size_t d = 0; d < r.dates.size(); ++d)
    os << format_date(r.dates[d]) << ',' << csv::format_double(r.profits[d]) << '\n';
}

//! Daily average profit per approach.
inline void write_comparison_csv(std::ostream &os, const std::vector<ApproachResult> &results) {
  os << "approach,daily_average_profit,days\n";
  for (const auto &r : results)
    os << r.report.label << ',' << fixed(r.report.mean_profit) << ',' << r.report.profits.size() << '\n';
}

//! SAA objective per approach: one column per replication plus the mean.
inline void write_objective_csv(std::ostream &os, const std::vector<ApproachResult> &results) {
  os << "approach,replication,objective\n";
  for (const auto &r : results) {
    if (!r.saa)
      continue;
    for (const auto &rep : r.saa->replications)
      os << r.report.label << ',' << rep.index + 1 << ',' << (rep.ok ? fixed(rep.objective) : "failed") << '\n';
    os << r.report.label << ",mean," << fixed(r.saa->mean) << '\n';
  }
}

//! First-stage plans: one row per approach, one column per location.
inline void write_plans_csv(std::ostream &os, const std::vector<int> &ids, const std::vector<ApproachResult> &results) {
  os << "approach";
  for (int id : ids)
    os << ',' << id;
  os << '\n';
  for (const auto &r : results) {
    os << r.report.label;
    for (auto v : r.plan.x)
      os << ',' << v;
    os << '\n';
  }
}

//! Moves of one day: rows are destinations, columns origins.
inline void write_moves_csv(std::ostream &os, const std::vector<int> &ids,
                            const std::vector<std::vector<double>> &moves) {
  os << "to\\from";
  for (int id : ids)
    os << ',' << id;
  os << '\n';
  for (std::size_t j = 0; j < ids.size(); ++j) {
    os << ids[j];
    for (std::size_t i = 0; i < ids.size(); ++i)
      os << ',' << csv::format_double(moves[i][j]);
    os << '\n';
  }
}

inline void write_sweep_csv(std::ostream &os, const std::vector<SweepRow> &rows) {
  os << "scenarios,mean_objective,mean_seconds,failed\n";
  for (const auto &r : rows)
    os << r.scenarios << ',' << fixed(r.mean_objective) << ',' << fixed(r.mean_seconds, 4) << ',' << r.failed << '\n';
}

inline nlohmann::json summary_json(const std::vector<ApproachResult> &results) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto &r : results) {
    nlohmann::json e{{"approach", r.report.label},
                     {"daily_average_profit", r.report.mean_profit},
                     {"days", r.report.profits.size()},
                     {"plan", r.plan.x},
                     {"metadata", r.report.metadata}};
    if (r.saa) {
      e["saa_mean_objective"] = r.saa->mean;
      e["saa_objectives"] = r.saa->objectives();
      e["saa_failed"] = r.saa->failed;
    }
    j.push_back(std::move(e));
  }
  return j;
}

// --- plots -----------------------------------------------------------------

struct Series {
  std::string label;
  std::vector<double> values;
};

//! Static SVG line chart of daily profit, one line per series.
inline void write_line_chart_svg(std::ostream &os, const std::string &title, const std::vector<Date> &dates,
                                 const std::vector<Series> &series) {
  constexpr double W = 800, H = 420, L = 90, Rm = 150, T = 40, B = 50;
  const char *colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  double lo = kInf, hi = -kInf;
  for (const auto &s : series)
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(lo <= hi)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi == lo) {
    hi += 1.0;
    lo -= 1.0;
  }
  const double pw = W - L - Rm, ph = H - T - B;
  const std::size_t n = dates.size();
  auto px = [&](std::size_t k) { return L + (n > 1 ? pw * static_cast<double>(k) / static_cast<double>(n - 1) : pw / 2); };
  auto py = [&](double v) { return T + ph * (1.0 - (v - lo) / (hi - lo)); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw << "\" y2=\"" << T + ph << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << fixed(py(v), 1) << "\" text-anchor=\"end\">" << fixed(v, 0) << "</text>\n";
  }
  for (std::size_t k = 0; k < n; k += std::max<std::size_t>(1, n / 6))
    os << "<text x=\"" << fixed(px(k), 1) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">"
       << format_date(dates[k]).substr(5) << "</text>\n";
  os << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">date</text>\n";
  os << "<text x=\"18\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << T + ph / 2
     << ")\">daily profit</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char *c = colors[s % 6];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < std::min(n, series[s].values.size()); ++k)
      os << (k ? " " : "") << fixed(px(k), 1) << ',' << fixed(py(series[s].values[k]), 1);
    os << "\"/>\n";
    const double ly = T + 16.0 * static_cast<double>(s);
    os << "<line x1=\"" << L + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << L + pw + 32 << "\" y2=\"" << ly
       << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << L + pw + 36 << "\" y=\"" << ly + 4 << "\">" << series[s].label << "</text>\n";
  }
  os << "</svg>\n";
}

//! Groups a report's dates by calendar month: "YYYY-MM" -> day indices.
inline std::map<std::string, std::vector<std::size_t>> by_month(const std::vector<Date> &dates) {
  std::map<std::string, std::vector<std::size_t>> m;
  for (std::size_t k = 0; k < dates.size(); ++k)
    m[format_date(dates[k]).substr(0, 7)].push_back(k);
  return m;
}

} // namespace ddksp::evaluate
