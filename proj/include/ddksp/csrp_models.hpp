#pragma once

// Car-sharing relocation models as LpProblem instances.
//
// First stage: x_i cars placed at location i, sum x <= C.
// Second stage, per demand scenario s: y_ij cars moved from i to j (i != j)
// and f_i demand served at i, f_i <= d_i. Two availability rules:
//   FlowBalance   f_i + out_i <= x_i + in_i
//   PaperLiteral  f_i <= x_i + in_i  and  out_i <= max(0, x_i - d_i)
// where out_i = sum_j y_ij and in_i = sum_j y_ji. Self-moves have no column.

#include "ddksp/common.hpp"
#include "ddksp/lp.hpp"
#include "ddksp/mip.hpp"
#include "ddksp/scenario.hpp"

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ddksp::csrp {

enum class RecourseVariant { FlowBalance, PaperLiteral };

inline std::string_view to_string(RecourseVariant v) {
  return v == RecourseVariant::FlowBalance ? "flow-balance" : "paper-literal";
}

inline RecourseVariant parse_variant(std::string_view s) {
  if (s == "flow-balance" || s == "flowbalance" || s == "FlowBalance")
    return RecourseVariant::FlowBalance;
  if (s == "paper-literal" || s == "paperliteral" || s == "PaperLiteral")
    return RecourseVariant::PaperLiteral;
  throw ArgumentError("unknown recourse variant '" + std::string(s) + "'");
}

struct CsrpInstance {
  std::vector<int> location_ids;
  std::vector<double> revenue;               // r_i
  std::vector<double> holding;               // h_i
  std::vector<std::vector<double>> transfer; // t_ij, zero diagonal
  std::int64_t capacity = 0;                 // C

  std::size_t size() const { return location_ids.size(); }

  void validate() const {
    const auto R = size();
    if (revenue.size() != R || holding.size() != R || transfer.size() != R)
      throw ArgumentError("CsrpInstance: r, h and t must have one entry per location");
    for (std::size_t i = 0; i < R; ++i) {
      if (!(revenue[i] > 0.0))
        throw ArgumentError("CsrpInstance: revenue must be positive");
      if (!(holding[i] >= 0.0))
        throw ArgumentError("CsrpInstance: holding cost must be nonnegative");
      if (transfer[i].size() != R)
        throw ArgumentError("CsrpInstance: transfer matrix must be R x R");
      for (std::size_t j = 0; j < R; ++j)
        if (!(transfer[i][j] >= 0.0))
          throw ArgumentError("CsrpInstance: transfer costs must be nonnegative");
      if (transfer[i][i] != 0.0)
        throw ArgumentError("CsrpInstance: transfer cost to self must be 0");
    }
    if (capacity < 0)
      throw ArgumentError("CsrpInstance: capacity must be nonnegative");
  }
};

struct FirstStagePlan {
  std::vector<std::int64_t> x;

  std::int64_t total() const { return std::accumulate(x.begin(), x.end(), std::int64_t{0}); }
};

//! Per-scenario second-stage values. moves[s][i][j] is y_ij (diagonal 0).
struct RecourseDecision {
  std::vector<std::vector<double>> served;
  std::vector<std::vector<std::vector<double>>> moves;
};

inline void check_plan(const CsrpInstance &inst, const FirstStagePlan &plan) {
  if (plan.x.size() != inst.size())
    throw ArgumentError("plan: one entry per location required");
  for (auto v : plan.x)
    if (v < 0)
      throw ArgumentError("plan: negative allocation");
  if (plan.total() > inst.capacity)
    throw ArgumentError("plan: total allocation " + std::to_string(plan.total()) + " exceeds capacity " +
                        std::to_string(inst.capacity));
}

//! Column positions in an extensive-form problem.
struct ExtensiveLayout {
  std::size_t R = 0;
  std::size_t N = 0;
  bool binaries = false;

  std::size_t arcs() const { return R * (R - 1); }
  std::size_t block() const { return R + arcs() + (binaries ? R : 0); }
  std::size_t arc(std::size_t i, std::size_t j) const { return i * (R - 1) + (j < i ? j : j - 1); }

  std::size_t x(std::size_t i) const { return i; }
  std::size_t f(std::size_t s, std::size_t i) const { return R + s * block() + i; }
  std::size_t y(std::size_t s, std::size_t i, std::size_t j) const { return R + s * block() + R + arc(i, j); }
  std::size_t b(std::size_t s, std::size_t i) const { return R + s * block() + R + arcs() + i; }
  std::size_t num_vars() const { return R + N * block(); }
};

struct ExtensiveModel {
  lp::LpProblem problem;
  ExtensiveLayout layout;
};

namespace detail {

inline void check_demand(const CsrpInstance &inst, std::span<const std::int64_t> d) {
  if (d.size() != inst.size())
    throw ArgumentError("demand: one entry per location required");
  for (auto v : d)
    if (v < 0)
      throw ArgumentError("demand: negative entry");
}

} // namespace detail

//! SAA extensive form: max sum_s p_s (r.f_s - t.y_s) - h.x.
inline ExtensiveModel build_extensive(const CsrpInstance &inst, const scenario::ScenarioSet &sc,
                                      RecourseVariant variant) {
  inst.validate();
  sc.validate();
  if (sc.num_locations() != inst.size())
    throw ArgumentError("build_extensive: scenario set and instance differ in location count");
  const std::size_t R = inst.size();
  const std::size_t N = sc.size();
  const double C = static_cast<double>(inst.capacity);
  const bool literal = variant == RecourseVariant::PaperLiteral;
  ExtensiveModel m;
  m.layout = {R, N, literal};
  auto &p = m.problem;
  p.sense = lp::Sense::Maximize;

  for (std::size_t i = 0; i < R; ++i)
    p.add_variable(-inst.holding[i], 0.0, C, true, "x_" + std::to_string(inst.location_ids[i]));
  for (std::size_t s = 0; s < N; ++s) {
    const auto tag = std::to_string(s + 1) + "_";
    for (std::size_t i = 0; i < R; ++i)
      p.add_variable(sc.probabilities[s] * inst.revenue[i], 0.0, static_cast<double>(sc.demands[s][i]), false,
                     "f_" + tag + std::to_string(inst.location_ids[i]));
    for (std::size_t i = 0; i < R; ++i)
      for (std::size_t j = 0; j < R; ++j)
        if (i != j)
          p.add_variable(-sc.probabilities[s] * inst.transfer[i][j], 0.0, kInf, true,
                         "y_" + tag + std::to_string(inst.location_ids[i]) + "_" +
                             std::to_string(inst.location_ids[j]));
    if (literal)
      for (std::size_t i = 0; i < R; ++i)
        p.add_variable(0.0, 0.0, 1.0, true, "b_" + tag + std::to_string(inst.location_ids[i]));
  }
  const auto &L = m.layout;

  std::vector<std::pair<std::size_t, double>> terms;
  for (std::size_t i = 0; i < R; ++i)
    terms.emplace_back(L.x(i), 1.0);
  p.add_row(terms, lp::RowSense::LessEqual, C);

  for (std::size_t s = 0; s < N; ++s) {
    for (std::size_t i = 0; i < R; ++i) {
      const double d = static_cast<double>(sc.demands[s][i]);
      // Availability: f_i (+ out_i) - in_i - x_i <= 0.
      terms.assign({{L.f(s, i), 1.0}, {L.x(i), -1.0}});
      for (std::size_t j = 0; j < R; ++j) {
        if (j == i)
          continue;
        terms.emplace_back(L.y(s, j, i), -1.0);
        if (!literal)
          terms.emplace_back(L.y(s, i, j), 1.0);
      }
      p.add_row(terms, lp::RowSense::LessEqual, 0.0);
      if (!literal)
        continue;
      // out_i <= max(0, x_i - d_i) with b = 1 meaning x_i >= d_i:
      //   out_i <= x_i - d_i + d_i (1 - b),  out_i <= C b,  x_i >= d_i b.
      std::vector<std::pair<std::size_t, double>> out;
      for (std::size_t j = 0; j < R; ++j)
        if (j != i)
          out.emplace_back(L.y(s, i, j), 1.0);
      terms = out;
      terms.emplace_back(L.x(i), -1.0);
      terms.emplace_back(L.b(s, i), d);
      p.add_row(terms, lp::RowSense::LessEqual, 0.0);
      terms = out;
      terms.emplace_back(L.b(s, i), -C);
      p.add_row(terms, lp::RowSense::LessEqual, 0.0);
      p.add_row({{L.x(i), 1.0}, {L.b(s, i), -d}}, lp::RowSense::GreaterEqual, 0.0);
    }
  }
  return m;
}

//! Mean demand rounded half-up to integers.
inline std::vector<std::int64_t> round_demand(std::span<const double> avg) {
  std::vector<std::int64_t> d;
  d.reserve(avg.size());
  for (double v : avg) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ArgumentError("average demand must be finite and nonnegative");
    d.push_back(static_cast<std::int64_t>(round_half_up(v)));
  }
  return d;
}

//! The deterministic model: the extensive form over one scenario holding the
//! rounded average demand.
inline ExtensiveModel build_deterministic(const CsrpInstance &inst, std::span<const double> avg_demand,
                                          RecourseVariant variant) {
  if (avg_demand.size() != inst.size())
    throw ArgumentError("build_deterministic: one average demand per location required");
  return build_extensive(inst, scenario::single(inst.location_ids, round_demand(avg_demand)), variant);
}

inline FirstStagePlan decode_plan(const ExtensiveLayout &L, std::span<const double> values) {
  FirstStagePlan plan;
  for (std::size_t i = 0; i < L.R; ++i)
    plan.x.push_back(static_cast<std::int64_t>(std::llround(values[L.x(i)])));
  return plan;
}

inline RecourseDecision decode_recourse(const ExtensiveLayout &L, std::span<const double> values) {
  RecourseDecision r;
  for (std::size_t s = 0; s < L.N; ++s) {
    std::vector<double> f(L.R);
    std::vector<std::vector<double>> y(L.R, std::vector<double>(L.R, 0.0));
    for (std::size_t i = 0; i < L.R; ++i) {
      f[i] = values[L.f(s, i)];
      for (std::size_t j = 0; j < L.R; ++j)
        if (i != j)
          y[i][j] = values[L.y(s, i, j)];
    }
    r.served.push_back(std::move(f));
    r.moves.push_back(std::move(y));
  }
  return r;
}

//! Second stage for a fixed plan and one realized demand: variables f (R)
//! then y over i != j, objective r.f - t.y. Under PaperLiteral the outflow
//! cap max(0, x_i - d_i) is a constant.
inline ExtensiveModel build_recourse(const CsrpInstance &inst, const FirstStagePlan &plan,
                                     std::span<const std::int64_t> demand, RecourseVariant variant) {
  inst.validate();
  check_plan(inst, plan);
  detail::check_demand(inst, demand);
  const std::size_t R = inst.size();
  ExtensiveModel m;
  m.layout = {R, 1, false};
  auto &p = m.problem;
  p.sense = lp::Sense::Maximize;
  // Reuse the extensive layout with the x columns absent: shift by R.
  for (std::size_t i = 0; i < R; ++i)
    p.add_variable(inst.revenue[i], 0.0, static_cast<double>(demand[i]), false,
                   "f_" + std::to_string(inst.location_ids[i]));
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < R; ++j)
      if (i != j)
        p.add_variable(-inst.transfer[i][j], 0.0, kInf, true,
                       "y_" + std::to_string(inst.location_ids[i]) + "_" + std::to_string(inst.location_ids[j]));
  const auto &L = m.layout;
  auto f = [&](std::size_t i) { return L.f(0, i) - R; };
  auto y = [&](std::size_t i, std::size_t j) { return L.y(0, i, j) - R; };
  const bool literal = variant == RecourseVariant::PaperLiteral;
  std::vector<std::pair<std::size_t, double>> terms;
  for (std::size_t i = 0; i < R; ++i) {
    terms.assign({{f(i), 1.0}});
    for (std::size_t j = 0; j < R; ++j) {
      if (j == i)
        continue;
      terms.emplace_back(y(j, i), -1.0);
      if (!literal)
        terms.emplace_back(y(i, j), 1.0);
    }
    p.add_row(terms, lp::RowSense::LessEqual, static_cast<double>(plan.x[i]));
  }
  if (literal) {
    for (std::size_t i = 0; i < R; ++i) {
      terms.clear();
      for (std::size_t j = 0; j < R; ++j)
        if (j != i)
          terms.emplace_back(y(i, j), 1.0);
      p.add_row(terms, lp::RowSense::LessEqual, static_cast<double>(std::max<std::int64_t>(0, plan.x[i] - demand[i])));
    }
  }
  return m;
}

struct RecourseResult {
  double value = 0.0;   // r.f - t.y
  double holding = 0.0; // h.x
  std::vector<double> served;
  std::vector<std::vector<double>> moves;

  double profit() const { return value - holding; }
};

//! Solves the single-day recourse exactly.
inline RecourseResult solve_recourse(const CsrpInstance &inst, const FirstStagePlan &plan,
                                     std::span<const std::int64_t> demand, RecourseVariant variant) {
  auto m = build_recourse(inst, plan, demand, variant);
  auto sol = lp::solve_mip(m.problem);
  if (!sol.optimal())
    throw StateError(std::string("solve_recourse: solver returned ") + lp::to_string(sol.status));
  const std::size_t R = inst.size();
  RecourseResult r;
  r.value = sol.objective;
  for (std::size_t i = 0; i < R; ++i)
    r.holding += inst.holding[i] * static_cast<double>(plan.x[i]);
  // Prepend zero x columns so the extensive decoder applies.
  std::vector<double> padded(R, 0.0);
  padded.insert(padded.end(), sol.x.begin(), sol.x.end());
  auto dec = decode_recourse(m.layout, padded);
  r.served = std::move(dec.served[0]);
  r.moves = std::move(dec.moves[0]);
  return r;
}

} // namespace ddksp::csrp
