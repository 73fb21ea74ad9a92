#pragma once

// Solution drivers: direct extensive-form MIP, Benders decomposition, and
// sample average approximation over replications.

#include "ddksp/benders.hpp"
#include "ddksp/csrp_models.hpp"
#include "ddksp/density.hpp"
#include "ddksp/scenario.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace ddksp::solve {

using csrp::CsrpInstance;
using csrp::FirstStagePlan;
using csrp::RecourseDecision;
using csrp::RecourseVariant;
using scenario::ScenarioSet;

enum class Method { Benders, Extensive };

inline std::string_view to_string(Method m) { return m == Method::Benders ? "benders" : "extensive"; }

inline Method parse_method(std::string_view s) {
  if (s == "benders")
    return Method::Benders;
  if (s == "extensive")
    return Method::Extensive;
  throw ArgumentError("unknown solve method '" + std::string(s) + "'");
}

struct ExtensiveOptions {
  //! Refuse when scenarios * R^2 exceeds this many columns.
  double size_limit = 2e6;
  lp::MipOptions mip{};
};

struct ExtensiveResult {
  double objective = 0.0;
  FirstStagePlan plan;
  RecourseDecision recourse;
  std::size_t nodes = 0;
};

inline ExtensiveResult solve_extensive(const CsrpInstance &inst, const ScenarioSet &sc, RecourseVariant variant,
                                       const ExtensiveOptions &opt = {}) {
  const double R = static_cast<double>(inst.size());
  const double size = static_cast<double>(sc.size()) * R * R;
  if (size > opt.size_limit)
    throw ArgumentError("solve_extensive: " + std::to_string(sc.size()) + " scenarios x " +
                        std::to_string(inst.size()) + "^2 locations exceeds the extensive-form limit of " +
                        std::to_string(static_cast<long long>(opt.size_limit)) + "; use the benders method");
  auto m = csrp::build_extensive(inst, sc, variant);
  auto sol = lp::solve_mip(m.problem, opt.mip);
  if (sol.status != lp::Status::Optimal)
    throw StateError(std::string("solve_extensive: solver returned ") + lp::to_string(sol.status));
  ExtensiveResult r;
  r.objective = sol.objective;
  r.plan = csrp::decode_plan(m.layout, sol.x);
  r.recourse = csrp::decode_recourse(m.layout, sol.x);
  r.nodes = sol.nodes;
  return r;
}

struct BendersOptions {
  double xi = 1e-6;
  std::size_t max_iterations = 500;
  benders::CutMode cut_mode = benders::CutMode::Single;
  //! Keep every served-demand column in the master and only moves in the
  //! subproblem. Produces feasibility cuts; mainly for comparison.
  bool paper_split = false;
  lp::MipOptions mip{};
};

struct BendersResult {
  double objective = -kInf;
  FirstStagePlan plan;
  benders::State state;
  std::vector<std::string> warnings;

  bool converged() const { return state.status == benders::Status::Converged; }
};

namespace detail {

inline std::size_t arc_index(std::size_t R, std::size_t i, std::size_t j) { return i * (R - 1) + (j < i ? j : j - 1); }

//! Outflow cap max(0, x - d) around x_bar: the piece active at x_bar.
inline void set_outflow_cap(benders::Subproblem &sp, std::size_t row, std::size_t x_col, double d, double x_bar) {
  sp.T[row].clear();
  if (x_bar >= d) {
    sp.h[row] = -d;
    sp.T[row].emplace_back(x_col, 1.0);
  } else {
    sp.h[row] = 0.0;
  }
}

//! The two-stage decomposition of the extensive form.
inline benders::TwoStageProblem decompose(const CsrpInstance &inst, const ScenarioSet &sc, RecourseVariant variant,
                                          bool paper_split) {
  inst.validate();
  sc.validate();
  if (sc.num_locations() != inst.size())
    throw ArgumentError("decompose: scenario set and instance differ in location count");
  const std::size_t R = inst.size();
  const std::size_t N = sc.size();
  const std::size_t A = R * (R - 1);
  const bool literal = variant == RecourseVariant::PaperLiteral;
  const double C = static_cast<double>(inst.capacity);

  benders::TwoStageProblem tp;
  auto &m = tp.master;
  m.sense = lp::Sense::Maximize;
  for (std::size_t i = 0; i < R; ++i)
    m.add_variable(-inst.holding[i], 0.0, C, true, "x_" + std::to_string(inst.location_ids[i]));
  // Served demand f^s_i lives in the master when paper_split is set.
  auto f_col = [&](std::size_t s, std::size_t i) { return R + s * R + i; };
  if (paper_split)
    for (std::size_t s = 0; s < N; ++s)
      for (std::size_t i = 0; i < R; ++i)
        m.add_variable(sc.probabilities[s] * inst.revenue[i], 0.0, static_cast<double>(sc.demands[s][i]), false,
                       "f_" + std::to_string(s + 1) + "_" + std::to_string(inst.location_ids[i]));
  {
    std::vector<std::pair<std::size_t, double>> cap;
    for (std::size_t i = 0; i < R; ++i)
      cap.emplace_back(i, 1.0);
    m.add_row(cap, lp::RowSense::LessEqual, C);
  }

  const auto dmax = sc.max_demand();
  double theta_ub = 0.0;
  for (std::size_t i = 0; i < R; ++i)
    theta_ub += inst.revenue[i] * static_cast<double>(dmax[i]);

  for (std::size_t s = 0; s < N; ++s) {
    benders::Subproblem sp;
    sp.probability = sc.probabilities[s];
    sp.theta_upper = theta_ub;
    // Recourse columns: [f (default split only)] then y over i != j.
    const std::size_t yoff = paper_split ? 0 : R;
    const std::size_t cols = yoff + A;
    if (!paper_split)
      for (std::size_t i = 0; i < R; ++i)
        sp.q.push_back(inst.revenue[i]);
    for (std::size_t i = 0; i < R; ++i)
      for (std::size_t j = 0; j < R; ++j)
        if (i != j)
          sp.q.push_back(-inst.transfer[i][j]);
    auto new_row = [&](double h, benders::SparseRow t) {
      sp.W.emplace_back(cols, 0.0);
      sp.h.push_back(h);
      sp.T.push_back(std::move(t));
      return sp.W.size() - 1;
    };
    // Availability: [f_i] (+ out_i) - in_i <= x_i [- f_i with paper_split].
    for (std::size_t i = 0; i < R; ++i) {
      benders::SparseRow t{{i, 1.0}};
      if (paper_split)
        t.emplace_back(f_col(s, i), -1.0);
      const auto k = new_row(0.0, std::move(t));
      if (!paper_split)
        sp.W[k][i] = 1.0;
      for (std::size_t j = 0; j < R; ++j) {
        if (j == i)
          continue;
        sp.W[k][yoff + arc_index(R, j, i)] -= 1.0;
        if (!literal)
          sp.W[k][yoff + arc_index(R, i, j)] += 1.0;
      }
    }
    if (literal) {
      for (std::size_t i = 0; i < R; ++i) {
        const auto k = new_row(0.0, {});
        for (std::size_t j = 0; j < R; ++j)
          if (j != i)
            sp.W[k][yoff + arc_index(R, i, j)] = 1.0;
        set_outflow_cap(sp, k, i, static_cast<double>(sc.demands[s][i]), 0.0);
      }
    }
    if (!paper_split)
      for (std::size_t i = 0; i < R; ++i) {
        const auto k = new_row(static_cast<double>(sc.demands[s][i]), {});
        sp.W[k][i] = 1.0;
      }
    tp.scenarios.push_back(std::move(sp));
  }

  if (literal) {
    std::vector<std::vector<std::int64_t>> demands = sc.demands;
    tp.relinearize = [R, demands](std::span<const double> z, std::size_t s, benders::Subproblem &sp) {
      for (std::size_t i = 0; i < R; ++i)
        set_outflow_cap(sp, R + i, i, static_cast<double>(demands[s][i]), z[i]);
    };
  }
  return tp;
}

} // namespace detail

//! Benders on the extensive form. The objective is the best lower bound,
//! i.e. the exact value of the returned plan.
inline BendersResult solve_benders(const CsrpInstance &inst, const ScenarioSet &sc, RecourseVariant variant,
                                   const BendersOptions &opt = {}) {
  if (opt.xi < 1e-7 || opt.xi > 1e-4)
    throw ArgumentError("solve_benders: xi must lie in [1e-7, 1e-4]");
  BendersResult r;
  if (variant == RecourseVariant::PaperLiteral)
    r.warnings.push_back("paper-literal recourse is not concave in the allocation; Benders cuts are built "
                         "around each master point and may cut off the true optimum");
  auto tp = detail::decompose(inst, sc, variant, opt.paper_split);
  benders::Options bo;
  bo.xi = opt.xi;
  bo.max_iterations = opt.max_iterations;
  bo.cut_mode = opt.cut_mode;
  bo.mip = opt.mip;
  r.state = benders::solve(std::move(tp), bo);
  r.objective = r.state.lower;
  if (!r.state.incumbent.empty()) {
    for (std::size_t i = 0; i < inst.size(); ++i)
      r.plan.x.push_back(static_cast<std::int64_t>(std::llround(r.state.incumbent[i])));
  }
  if (!r.converged())
    r.warnings.push_back("Benders stopped at the iteration cap of " + std::to_string(opt.max_iterations));
  return r;
}

struct SaaOptions {
  Method method = Method::Benders;
  RecourseVariant variant = RecourseVariant::FlowBalance;
  BendersOptions benders{};
  ExtensiveOptions extensive{};
};

struct SaaReplication {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double objective = 0.0;
  FirstStagePlan plan;
  double seconds = 0.0;
  std::size_t iterations = 0; // Benders iterations or B&B nodes
  std::vector<benders::IterationRecord> trace; // Benders only
};

struct SaaResult {
  std::vector<SaaReplication> replications;
  double mean = 0.0; // over successful replications
  std::size_t failed = 0;

  std::vector<double> objectives() const {
    std::vector<double> v;
    for (const auto &r : replications)
      if (r.ok)
        v.push_back(r.objective);
    return v;
  }
  double mean_seconds() const {
    double s = 0.0;
    for (const auto &r : replications)
      s += r.seconds;
    return replications.empty() ? 0.0 : s / static_cast<double>(replications.size());
  }
};

//! M replications of N scenarios each; replication m uses seed + m.
inline SaaResult solve_saa(const CsrpInstance &inst, const density::DemandDistributionSet &dist, std::size_t M,
                           std::size_t N, std::uint64_t seed, const SaaOptions &opt = {}) {
  if (M == 0 || N == 0)
    throw ArgumentError("solve_saa: M and N must be positive");
  if (dist.location_ids != inst.location_ids)
    throw ArgumentError("solve_saa: distribution and instance locations differ");
  SaaResult res;
  double total = 0.0;
  for (std::size_t m = 0; m < M; ++m) {
    SaaReplication rep;
    rep.index = m;
    rep.seed = seed + m;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      auto sc = scenario::generate(dist, N, rep.seed);
      if (opt.method == Method::Extensive) {
        auto r = solve_extensive(inst, sc, opt.variant, opt.extensive);
        rep.objective = r.objective;
        rep.plan = std::move(r.plan);
        rep.iterations = r.nodes;
        rep.ok = true;
      } else {
        auto r = solve_benders(inst, sc, opt.variant, opt.benders);
        rep.iterations = r.state.iterations;
        rep.trace = r.state.trace;
        if (r.converged()) {
          rep.objective = r.objective;
          rep.plan = std::move(r.plan);
          rep.ok = true;
        } else {
          rep.error = "Benders did not converge";
        }
      }
    } catch (const Error &e) {
      rep.error = e.what();
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (rep.ok)
      total += rep.objective;
    else
      ++res.failed;
    res.replications.push_back(std::move(rep));
  }
  const std::size_t ok = M - res.failed;
  res.mean = ok ? total / static_cast<double>(ok) : 0.0;
  return res;
}

} // namespace ddksp::solve
