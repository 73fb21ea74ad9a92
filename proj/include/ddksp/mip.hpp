#pragma once

// Best-first branch-and-bound over LP relaxations solved by lp::solve_lp.

#include "ddksp/lp.hpp"

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <memory>
#include <vector>

namespace ddksp::lp {

struct MipOptions {
  std::size_t node_limit = 1'000'000;
  double absolute_gap = 1e-6;
  SimplexOptions lp;
};

namespace detail {

struct BbNode {
  double bound; // relaxation objective, maximization orientation
  std::size_t seq;
  std::vector<double> lower, upper;
  LpSolution relax;
};

struct BbOrder {
  bool operator()(const std::unique_ptr<BbNode> &a, const std::unique_ptr<BbNode> &b) const {
    if (a->bound != b->bound)
      return a->bound < b->bound;
    return a->seq > b->seq;
  }
};

//! Index of the most fractional integer variable, or n when all are integral.
inline std::size_t most_fractional(const LpProblem &p, const std::vector<double> &x) {
  std::size_t pick = x.size();
  double worst = tol::integrality;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (!p.integer[j])
      continue;
    const double frac = x[j] - std::floor(x[j]);
    const double dist = std::min(frac, 1.0 - frac);
    if (dist > worst) {
      worst = dist;
      pick = j;
    }
  }
  return pick;
}

} // namespace detail

//! Solves a mixed-integer program. Branches on the most fractional variable,
//! floor child first; nodes are explored best-bound first with creation order
//! breaking ties. On hitting the node limit the status is IterationLimit and
//! x holds the incumbent, if one was found.
inline LpSolution solve_mip(const LpProblem &problem, const MipOptions &options = {}) {
  problem.validate();
  const double osign = problem.sense == Sense::Maximize ? 1.0 : -1.0;
  const std::size_t n = problem.num_vars();

  LpProblem work = problem;
  for (std::size_t j = 0; j < n; ++j) {
    if (!work.integer[j])
      continue;
    if (work.lower[j] > -kInf)
      work.lower[j] = std::ceil(work.lower[j] - tol::integrality);
    if (work.upper[j] < kInf)
      work.upper[j] = std::floor(work.upper[j] + tol::integrality);
    if (work.lower[j] > work.upper[j]) {
      LpSolution inf;
      inf.status = Status::Infeasible;
      return inf;
    }
  }

  std::vector<std::unique_ptr<detail::BbNode>> open; // heap, best bound on top
  const detail::BbOrder order;
  auto push = [&](std::unique_ptr<detail::BbNode> node) {
    open.push_back(std::move(node));
    std::push_heap(open.begin(), open.end(), order);
  };
  std::size_t seq = 0;
  std::size_t total_iters = 0;

  auto make_node = [&](std::vector<double> lo, std::vector<double> hi) {
    work.lower = lo;
    work.upper = hi;
    auto node = std::make_unique<detail::BbNode>();
    node->relax = solve_lp(work, options.lp);
    total_iters += node->relax.iterations;
    node->lower = std::move(lo);
    node->upper = std::move(hi);
    node->seq = seq++;
    node->bound = osign * node->relax.objective;
    return node;
  };

  LpSolution best;
  best.status = Status::Infeasible;
  bool have_incumbent = false;
  double incumbent = -kInf;

  auto root = make_node(work.lower, work.upper);
  if (root->relax.status != Status::Optimal) {
    LpSolution out = root->relax;
    out.nodes = 1;
    return out;
  }
  push(std::move(root));

  std::size_t processed = 0;
  bool limit_hit = false;
  while (!open.empty()) {
    std::pop_heap(open.begin(), open.end(), order);
    auto node = std::move(open.back());
    open.pop_back();
    if (have_incumbent && node->bound <= incumbent + options.absolute_gap)
      continue;
    if (processed >= options.node_limit) {
      limit_hit = true;
      break;
    }
    ++processed;

    const auto &x = node->relax.x;
    const std::size_t j = detail::most_fractional(problem, x);
    if (j == x.size()) {
      LpSolution cand = node->relax;
      for (std::size_t k = 0; k < n; ++k)
        if (problem.integer[k])
          cand.x[k] = std::round(cand.x[k]);
      double obj = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        obj += problem.cost[k] * cand.x[k];
      cand.objective = obj;
      if (!have_incumbent || osign * obj > incumbent) {
        incumbent = osign * obj;
        best = std::move(cand);
        have_incumbent = true;
      }
      continue;
    }

    const double v = x[j];
    {
      auto hi = node->upper;
      hi[j] = std::floor(v);
      if (hi[j] >= node->lower[j]) {
        auto child = make_node(node->lower, std::move(hi));
        if (child->relax.status == Status::Optimal)
          push(std::move(child));
        else if (child->relax.status == Status::IterationLimit)
          limit_hit = true;
      }
    }
    {
      auto lo = node->lower;
      lo[j] = std::ceil(v);
      if (lo[j] <= node->upper[j]) {
        auto child = make_node(std::move(lo), node->upper);
        if (child->relax.status == Status::Optimal)
          push(std::move(child));
        else if (child->relax.status == Status::IterationLimit)
          limit_hit = true;
      }
    }
  }

  best.nodes = processed;
  best.iterations = total_iters;
  if (limit_hit) {
    best.status = Status::IterationLimit;
    return best;
  }
  if (!have_incumbent) {
    best.status = Status::Infeasible;
    return best;
  }
  best.status = Status::Optimal;
  return best;
}

} // namespace ddksp::lp
