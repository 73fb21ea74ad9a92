#pragma once

// L-shaped (Benders) decomposition for two-stage problems of the form
//
//     max  c.z + sum_s p_s Q_s(z)        z: master variables and rows
//     Q_s(z) = max { q_s.w : W_s w <= h_s + T_s z, w >= 0 }
//
// Each subproblem is solved in its dual form
//
//     min (h_s + T_s z).pi   s.t.  W_s' pi >= q_s,  pi >= 0
//
// An optimal pi gives the optimality cut theta_s <= pi.h_s + (T_s' pi).z.
// An unbounded dual (infeasible recourse) gives a ray rho, and the
// feasibility cut (h_s + T_s z).rho >= 0 removes the current z.

#include "ddksp/common.hpp"
#include "ddksp/lp.hpp"
#include "ddksp/mip.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ddksp::benders {

using SparseRow = std::vector<std::pair<std::size_t, double>>;

struct Subproblem {
  double probability = 0.0;
  std::vector<std::vector<double>> W; // rows x recourse columns
  std::vector<double> q;
  std::vector<double> h;
  std::vector<SparseRow> T; // one sparse row over master columns per W row
  double theta_upper = 0.0; // valid upper bound on Q_s
};

struct TwoStageProblem {
  //! First stage only (maximize); theta columns are added by the driver.
  lp::LpProblem master;
  std::vector<Subproblem> scenarios;
  //! Optional hook to rewrite h_s/T_s around the current master point
  //! (used for recourse rules that are not linear in z).
  std::function<void(std::span<const double> z, std::size_t s, Subproblem &)> relinearize;
};

enum class CutMode { Single, Multi };
enum class Status { Converged, NonConverged };

inline const char *to_string(CutMode m) { return m == CutMode::Single ? "single" : "multi"; }
inline const char *to_string(Status s) { return s == Status::Converged ? "converged" : "non-converged"; }

struct Options {
  double xi = 1e-6;
  std::size_t max_iterations = 500;
  CutMode cut_mode = CutMode::Single;
  lp::MipOptions mip{};
};

//! A cut as a master row: coef.z + theta_coef.theta (<= or >=) rhs.
struct Cut {
  enum class Kind { Optimality, Feasibility };
  Kind kind = Kind::Optimality;
  long scenario = -1; // -1 for an aggregated single cut
  SparseRow coef;     // over master columns
  double rhs = 0.0;
};

struct IterationRecord {
  std::size_t iteration = 0;
  double lower = -kInf;
  double upper = kInf;
  double master_objective = kInf;
  std::size_t optimality_cuts = 0;
  std::size_t feasibility_cuts = 0;
  double subproblem_seconds = 0.0;

  double gap() const { return upper - lower; }
  std::string cut_type() const {
    if (feasibility_cuts && optimality_cuts)
      return "optimality+feasibility";
    if (feasibility_cuts)
      return "feasibility";
    if (optimality_cuts)
      return "optimality";
    return "none";
  }
};

struct State {
  double upper = kInf;
  double lower = -kInf;
  double xi = 0.0;
  std::size_t iterations = 0;
  Status status = Status::NonConverged;
  std::vector<Cut> cuts;
  std::vector<double> incumbent; // master values at the best lower bound
  std::vector<IterationRecord> trace;
};

namespace detail {

struct SubResult {
  bool feasible = true;
  double value = 0.0;     // Q_s(z)
  std::vector<double> pi; // dual point or ray
};

inline SubResult solve_dual(const Subproblem &sp, std::span<const double> z) {
  const std::size_t rows = sp.h.size();
  const std::size_t cols = sp.q.size();
  lp::LpProblem d;
  d.sense = lp::Sense::Minimize;
  for (std::size_t k = 0; k < rows; ++k) {
    double c = sp.h[k];
    for (auto [j, a] : sp.T[k])
      c += a * z[j];
    d.add_variable(c);
  }
  d.matrix.assign(cols, std::vector<double>(rows, 0.0));
  d.row_sense.assign(cols, lp::RowSense::GreaterEqual);
  d.rhs = sp.q;
  for (std::size_t k = 0; k < rows; ++k)
    for (std::size_t j = 0; j < cols; ++j)
      d.matrix[j][k] = sp.W[k][j];
  auto sol = lp::solve_lp(d);
  SubResult r;
  switch (sol.status) {
  case lp::Status::Optimal:
    r.value = sol.objective;
    r.pi = std::move(sol.x);
    break;
  case lp::Status::Unbounded:
    r.feasible = false;
    r.pi = lp::extract_ray(sol);
    break;
  case lp::Status::Infeasible:
    throw StateError("benders: recourse dual infeasible (recourse unbounded)");
  case lp::Status::IterationLimit:
    throw StateError("benders: subproblem hit the iteration limit");
  }
  return r;
}

//! pi.h and T' pi accumulated into (constant, sparse coefficients).
inline void accumulate(const Subproblem &sp, std::span<const double> pi, double weight, double &constant,
                       std::vector<double> &coef) {
  for (std::size_t k = 0; k < pi.size(); ++k) {
    if (pi[k] == 0.0)
      continue;
    constant += weight * pi[k] * sp.h[k];
    for (auto [j, a] : sp.T[k])
      coef[j] += weight * pi[k] * a;
  }
}

inline SparseRow sparsify(const std::vector<double> &dense) {
  SparseRow r;
  for (std::size_t j = 0; j < dense.size(); ++j)
    if (dense[j] != 0.0)
      r.emplace_back(j, dense[j]);
  return r;
}

} // namespace detail

//! Runs the L-shaped loop. Returns the final state; state.lower is the
//! objective of state.incumbent.
inline State solve(TwoStageProblem problem, const Options &opt = {}) {
  if (!(opt.xi > 0.0))
    throw ArgumentError("benders: xi must be positive");
  if (problem.scenarios.empty())
    throw ArgumentError("benders: at least one scenario is required");
  auto &master = problem.master;
  master.validate();
  if (master.sense != lp::Sense::Maximize)
    throw ArgumentError("benders: master must maximize");
  const std::size_t nz = master.num_vars();
  const std::size_t S = problem.scenarios.size();
  for (const auto &sp : problem.scenarios) {
    if (sp.W.size() != sp.h.size() || sp.T.size() != sp.h.size())
      throw ArgumentError("benders: W, h and T must have one row each per recourse constraint");
    for (const auto &row : sp.W)
      if (row.size() != sp.q.size())
        throw ArgumentError("benders: W rows must match the recourse column count");
  }

  // theta columns
  const bool multi = opt.cut_mode == CutMode::Multi;
  std::vector<std::size_t> theta;
  if (multi) {
    for (std::size_t s = 0; s < S; ++s)
      theta.push_back(master.add_variable(problem.scenarios[s].probability, -kInf,
                                          problem.scenarios[s].theta_upper, false,
                                          "theta_" + std::to_string(s + 1)));
  } else {
    double ub = 0.0;
    for (const auto &sp : problem.scenarios)
      ub += sp.probability * sp.theta_upper;
    theta.push_back(master.add_variable(1.0, -kInf, ub, false, "theta"));
  }

  State st;
  st.xi = opt.xi;
  std::vector<double> c1(master.cost.begin(), master.cost.begin() + static_cast<std::ptrdiff_t>(nz));

  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    auto ms = lp::solve_mip(master, opt.mip);
    if (ms.status == lp::Status::Infeasible)
      throw StateError("benders: master problem infeasible");
    if (ms.status != lp::Status::Optimal)
      throw StateError(std::string("benders: master problem returned ") + lp::to_string(ms.status));
    std::span<const double> z(ms.x.data(), nz);

    IterationRecord rec;
    rec.iteration = it;
    rec.master_objective = ms.objective;
    st.upper = std::min(st.upper, ms.objective);

    const auto t0 = std::chrono::steady_clock::now();
    bool all_feasible = true;
    double first = 0.0;
    for (std::size_t j = 0; j < nz; ++j)
      first += c1[j] * z[j];
    double expected = 0.0;
    double agg_const = 0.0;
    std::vector<double> agg_coef(nz, 0.0);
    std::vector<Cut> new_cuts;
    for (std::size_t s = 0; s < S; ++s) {
      auto &sp = problem.scenarios[s];
      if (problem.relinearize)
        problem.relinearize(z, s, sp);
      auto r = detail::solve_dual(sp, z);
      if (!r.feasible) {
        all_feasible = false;
        // (h + T z).rho >= 0  <=>  -(T' rho).z <= rho.h
        double k = 0.0;
        std::vector<double> coef(nz, 0.0);
        detail::accumulate(sp, r.pi, 1.0, k, coef);
        for (auto &v : coef)
          v = -v;
        new_cuts.push_back({Cut::Kind::Feasibility, static_cast<long>(s), detail::sparsify(coef), k});
        ++rec.feasibility_cuts;
        continue;
      }
      expected += sp.probability * r.value;
      if (multi) {
        // theta_s - (T' pi).z <= pi.h
        double k = 0.0;
        std::vector<double> coef(nz, 0.0);
        detail::accumulate(sp, r.pi, 1.0, k, coef);
        for (auto &v : coef)
          v = -v;
        auto row = detail::sparsify(coef);
        row.emplace_back(theta[s], 1.0);
        new_cuts.push_back({Cut::Kind::Optimality, static_cast<long>(s), std::move(row), k});
        ++rec.optimality_cuts;
      } else {
        detail::accumulate(sp, r.pi, sp.probability, agg_const, agg_coef);
      }
    }
    rec.subproblem_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (all_feasible) {
      const double value = first + expected;
      if (value > st.lower) {
        st.lower = value;
        st.incumbent.assign(z.begin(), z.end());
      }
      if (!multi) {
        for (auto &v : agg_coef)
          v = -v;
        auto row = detail::sparsify(agg_coef);
        row.emplace_back(theta[0], 1.0);
        new_cuts.push_back({Cut::Kind::Optimality, -1, std::move(row), agg_const});
        ++rec.optimality_cuts;
      }
    }
    rec.lower = st.lower;
    rec.upper = st.upper;
    st.trace.push_back(rec);
    st.iterations = it;

    if (st.upper - st.lower <= opt.xi * (1.0 + std::abs(st.upper))) {
      st.status = Status::Converged;
      break;
    }
    for (auto &c : new_cuts) {
      master.add_row(c.coef, lp::RowSense::LessEqual, c.rhs);
      st.cuts.push_back(std::move(c));
    }
  }
  return st;
}

//! Line-oriented trace: one row per iteration.
inline void write_trace(std::ostream &os, const State &st) {
  os << "iteration,lower_bound,upper_bound,gap,cut_type,subproblem_seconds\n";
  for (const auto &r : st.trace) {
    os << r.iteration << ',' << r.lower << ',' << r.upper << ',' << r.gap() << ',' << r.cut_type() << ','
       << r.subproblem_seconds << '\n';
  }
}

} // namespace ddksp::benders
