#pragma once

#include "ddksp/csrp_models.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

namespace oracle {

using ddksp::csrp::CsrpInstance;
using ddksp::csrp::RecourseVariant;

//! Value r.f - t.y of fixed moves y (R x R, zero diagonal), or nullopt when y
//! violates the variant's availability rules. f is the largest feasible
//! service, min(d, available).
inline std::optional<double> recourse_value_of(const CsrpInstance &inst, const std::vector<std::int64_t> &x,
                                               const std::vector<std::int64_t> &d,
                                               const std::vector<std::vector<std::int64_t>> &y,
                                               RecourseVariant v) {
  const std::size_t R = inst.size();
  double val = 0.0;
  for (std::size_t i = 0; i < R; ++i) {
    std::int64_t in = 0, out = 0;
    for (std::size_t j = 0; j < R; ++j) {
      in += y[j][i];
      out += y[i][j];
      val -= inst.transfer[i][j] * static_cast<double>(y[i][j]);
    }
    std::int64_t avail;
    if (v == RecourseVariant::FlowBalance) {
      avail = x[i] + in - out;
      if (avail < 0)
        return std::nullopt;
    } else {
      if (out > std::max<std::int64_t>(0, x[i] - d[i]))
        return std::nullopt;
      avail = x[i] + in;
    }
    val += inst.revenue[i] * static_cast<double>(std::min(d[i], avail));
  }
  return val;
}

//! Exact recourse optimum by enumerating integer moves. Any optimum
//! decomposes into at most sum(x) paths of at most R-1 arcs once zero-gain
//! cycles are dropped, so arcs carry at most sum(x) and all arcs together at
//! most (R-1) sum(x).
inline double brute_recourse(const CsrpInstance &inst, const std::vector<std::int64_t> &x,
                             const std::vector<std::int64_t> &d, RecourseVariant v) {
  const std::size_t R = inst.size();
  std::int64_t fleet = 0;
  for (auto xi : x)
    fleet += xi;
  const std::int64_t total_cap = static_cast<std::int64_t>(R - 1) * fleet;
  std::vector<std::pair<std::size_t, std::size_t>> arcs;
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < R; ++j)
      if (i != j)
        arcs.emplace_back(i, j);
  std::vector<std::vector<std::int64_t>> y(R, std::vector<std::int64_t>(R, 0));
  double best = -ddksp::kInf;
  std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t a, std::int64_t left) {
    if (a == arcs.size()) {
      if (auto val = recourse_value_of(inst, x, d, y, v))
        best = std::max(best, *val);
      return;
    }
    auto [i, j] = arcs[a];
    for (std::int64_t k = 0; k <= std::min(fleet, left); ++k) {
      y[i][j] = k;
      rec(a + 1, left - k);
    }
    y[i][j] = 0;
  };
  rec(0, total_cap);
  return best;
}

//! Extensive-form optimum by enumerating every x with sum(x) <= C.
struct BruteResult {
  double objective = -ddksp::kInf;
  std::vector<std::int64_t> x;
};

inline BruteResult brute_extensive(const CsrpInstance &inst, const ddksp::scenario::ScenarioSet &sc,
                                   RecourseVariant v) {
  const std::size_t R = inst.size();
  BruteResult best;
  std::vector<std::int64_t> x(R, 0);
  std::map<std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>, double> memo;
  std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t i, std::int64_t left) {
    if (i == R) {
      double obj = 0.0;
      for (std::size_t k = 0; k < R; ++k)
        obj -= inst.holding[k] * static_cast<double>(x[k]);
      for (std::size_t s = 0; s < sc.size(); ++s) {
        auto key = std::make_pair(x, sc.demands[s]);
        auto it = memo.find(key);
        if (it == memo.end())
          it = memo.emplace(key, brute_recourse(inst, x, sc.demands[s], v)).first;
        obj += sc.probabilities[s] * it->second;
      }
      if (obj > best.objective) {
        best.objective = obj;
        best.x = x;
      }
      return;
    }
    for (std::int64_t k = 0; k <= left; ++k) {
      x[i] = k;
      rec(i + 1, left - k);
    }
    x[i] = 0;
  };
  rec(0, inst.capacity);
  return best;
}

//! Random instance with integer economics: r in [60,120], h in [0,30],
//! t in [1,40].
inline CsrpInstance random_instance(std::mt19937_64 &rng, std::size_t R, std::int64_t C) {
  std::uniform_int_distribution<int> rv(60, 120), hv(0, 30), tv(1, 40);
  CsrpInstance inst;
  inst.capacity = C;
  for (std::size_t i = 0; i < R; ++i) {
    inst.location_ids.push_back(static_cast<int>(i) + 1);
    inst.revenue.push_back(rv(rng));
    inst.holding.push_back(hv(rng));
  }
  inst.transfer.assign(R, std::vector<double>(R, 0.0));
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < R; ++j)
      if (i != j)
        inst.transfer[i][j] = tv(rng);
  return inst;
}

//! N equiprobable scenarios with demands uniform on [0, dmax].
inline ddksp::scenario::ScenarioSet random_scenarios(std::mt19937_64 &rng, std::size_t R, std::size_t N,
                                                     std::int64_t dmax) {
  std::uniform_int_distribution<std::int64_t> dv(0, dmax);
  ddksp::scenario::ScenarioSet sc;
  for (std::size_t i = 0; i < R; ++i)
    sc.location_ids.push_back(static_cast<int>(i) + 1);
  for (std::size_t s = 0; s < N; ++s) {
    std::vector<std::int64_t> row;
    for (std::size_t i = 0; i < R; ++i)
      row.push_back(dv(rng));
    sc.demands.push_back(std::move(row));
  }
  sc.probabilities = ddksp::scenario::uniform_probabilities(N);
  return sc;
}

} // namespace oracle
