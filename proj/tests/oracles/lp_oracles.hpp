#pragma once

// Independent checks for the LP/MIP engine. Nothing here calls the simplex.

#include "ddksp/lp.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace oracle {

using ddksp::kInf;
using ddksp::lp::LpProblem;
using ddksp::lp::RowSense;
using ddksp::lp::Sense;

//! Solves the k x k system M z = r by Gaussian elimination with partial
//! pivoting. Returns nullopt when M is (numerically) singular.
inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> M,
                                                       std::vector<double> r) {
  const std::size_t k = r.size();
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t i = c + 1; i < k; ++i)
      if (std::abs(M[i][c]) > std::abs(M[piv][c]))
        piv = i;
    if (std::abs(M[piv][c]) < 1e-10)
      return std::nullopt;
    std::swap(M[piv], M[c]);
    std::swap(r[piv], r[c]);
    for (std::size_t i = 0; i < k; ++i) {
      if (i == c)
        continue;
      const double f = M[i][c] / M[c][c];
      if (f == 0.0)
        continue;
      for (std::size_t j = c; j < k; ++j)
        M[i][j] -= f * M[c][j];
      r[i] -= f * r[c];
    }
  }
  for (std::size_t c = 0; c < k; ++c)
    r[c] /= M[c][c];
  return r;
}

inline bool primal_feasible(const LpProblem &p, const std::vector<double> &x, double eps) {
  for (std::size_t j = 0; j < p.num_vars(); ++j)
    if (x[j] < p.lower[j] - eps || x[j] > p.upper[j] + eps)
      return false;
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    double a = 0.0;
    for (std::size_t j = 0; j < p.num_vars(); ++j)
      a += p.matrix[i][j] * x[j];
    const double b = p.rhs[i];
    const double e = eps * (1.0 + std::abs(b));
    if (p.row_sense[i] == RowSense::LessEqual && a > b + e)
      return false;
    if (p.row_sense[i] == RowSense::GreaterEqual && a < b - e)
      return false;
    if (p.row_sense[i] == RowSense::Equal && std::abs(a - b) > e)
      return false;
  }
  return true;
}

inline double objective(const LpProblem &p, const std::vector<double> &x) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j)
    s += p.cost[j] * x[j];
  return s;
}

//! Best objective over all basic feasible solutions. Requires finite bounds
//! on every variable. Each variable is either at its lower bound, at its
//! upper bound, or free; the free ones are pinned by an equal number of
//! active rows (equality rows always active).
inline std::optional<double> vertex_enumeration(const LpProblem &p) {
  const std::size_t n = p.num_vars(), m = p.num_rows();
  std::optional<double> best;
  const double sgn = p.sense == Sense::Maximize ? 1.0 : -1.0;

  std::vector<std::size_t> eq_rows, ineq_rows;
  for (std::size_t i = 0; i < m; ++i)
    (p.row_sense[i] == RowSense::Equal ? eq_rows : ineq_rows).push_back(i);

  std::vector<int> state(n, 0); // 0 lower, 1 upper, 2 free
  std::uint64_t total = 1;
  for (std::size_t j = 0; j < n; ++j)
    total *= 3;
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t c = code;
    std::vector<std::size_t> freev;
    std::vector<double> x(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      state[j] = static_cast<int>(c % 3);
      c /= 3;
      if (state[j] == 2)
        freev.push_back(j);
      else
        x[j] = state[j] == 0 ? p.lower[j] : p.upper[j];
    }
    const std::size_t k = freev.size();
    if (k < eq_rows.size() || k > m)
      continue;
    const std::size_t extra = k - eq_rows.size();
    if (extra > ineq_rows.size())
      continue;
    // Enumerate subsets of inequality rows of size `extra`.
    std::vector<std::size_t> pick(extra);
    for (std::size_t t = 0; t < extra; ++t)
      pick[t] = t;
    while (true) {
      std::vector<std::size_t> rows = eq_rows;
      for (auto t : pick)
        rows.push_back(ineq_rows[t]);
      std::vector<std::vector<double>> M(k, std::vector<double>(k));
      std::vector<double> r(k);
      for (std::size_t a = 0; a < k; ++a) {
        const auto &row = p.matrix[rows[a]];
        double rhs = p.rhs[rows[a]];
        for (std::size_t j = 0; j < n; ++j)
          if (state[j] != 2)
            rhs -= row[j] * x[j];
        for (std::size_t b = 0; b < k; ++b)
          M[a][b] = row[freev[b]];
        r[a] = rhs;
      }
      bool ok = true;
      std::vector<double> cand = x;
      if (k > 0) {
        auto z = solve_square(M, r);
        if (!z)
          ok = false;
        else
          for (std::size_t b = 0; b < k; ++b)
            cand[freev[b]] = (*z)[b];
      }
      if (ok && primal_feasible(p, cand, 1e-9)) {
        const double v = objective(p, cand);
        if (!best || sgn * v > sgn * *best)
          best = v;
      }
      // next combination
      if (extra == 0)
        break;
      std::size_t t = extra;
      while (t > 0 && pick[t - 1] == ineq_rows.size() - extra + t - 1)
        --t;
      if (t == 0)
        break;
      ++pick[t - 1];
      for (std::size_t u = t; u < extra; ++u)
        pick[u] = pick[u - 1] + 1;
    }
  }
  return best;
}

//! Lagrangian dual objective for duals y given as d objective / d rhs.
//! Returns +/-inf when y is not dual feasible for the stated bounds.
//! Also checks the sign convention of y against the row senses.
inline double dual_objective(const LpProblem &p, const std::vector<double> &y, double eps = 1e-7) {
  const bool maximize = p.sense == Sense::Maximize;
  const double bad = maximize ? kInf : -kInf;
  double val = 0.0;
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    // Max with <= : y >= 0. Max with >= : y <= 0. Min flips.
    double s = 0.0;
    if (p.row_sense[i] == RowSense::LessEqual)
      s = maximize ? 1.0 : -1.0;
    else if (p.row_sense[i] == RowSense::GreaterEqual)
      s = maximize ? -1.0 : 1.0;
    if (s * y[i] < -eps)
      return bad;
    val += y[i] * p.rhs[i];
  }
  for (std::size_t j = 0; j < p.num_vars(); ++j) {
    double d = p.cost[j];
    for (std::size_t i = 0; i < p.num_rows(); ++i)
      d -= y[i] * p.matrix[i][j];
    if (std::abs(d) <= eps)
      continue;
    // The Lagrangian sup (max) / inf (min) over the box picks a bound.
    const bool want_upper = maximize ? d > 0 : d < 0;
    const double bound = want_upper ? p.upper[j] : p.lower[j];
    if (std::isinf(bound))
      return bad;
    val += d * bound;
  }
  return val;
}

//! Checks that r is a recession direction that improves the objective.
inline bool verify_ray(const LpProblem &p, const std::vector<double> &r, double eps = 1e-7) {
  double gain = objective(p, r);
  if (p.sense == Sense::Minimize)
    gain = -gain;
  if (gain <= eps)
    return false;
  for (std::size_t j = 0; j < p.num_vars(); ++j) {
    if (p.lower[j] > -kInf && r[j] < -eps)
      return false;
    if (p.upper[j] < kInf && r[j] > eps)
      return false;
  }
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    double a = 0.0;
    for (std::size_t j = 0; j < p.num_vars(); ++j)
      a += p.matrix[i][j] * r[j];
    if (p.row_sense[i] == RowSense::LessEqual && a > eps)
      return false;
    if (p.row_sense[i] == RowSense::GreaterEqual && a < -eps)
      return false;
    if (p.row_sense[i] == RowSense::Equal && std::abs(a) > eps)
      return false;
  }
  return true;
}

//! Random LP with m rows and n variables. Bounded variant boxes every
//! variable in [lo, hi]; otherwise variables are [0, inf).
inline LpProblem random_lp(std::mt19937_64 &rng, std::size_t m, std::size_t n, bool boxed) {
  std::uniform_int_distribution<int> coef(-6, 6);
  std::uniform_int_distribution<int> rhs(-4, 12);
  std::uniform_int_distribution<int> sense(0, 5);
  std::uniform_int_distribution<int> bound(1, 6);
  LpProblem p;
  p.sense = (rng() & 1) ? Sense::Maximize : Sense::Minimize;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = boxed ? -static_cast<double>(bound(rng) % 3) : 0.0;
    const double hi = boxed ? static_cast<double>(bound(rng)) : kInf;
    p.add_variable(coef(rng), lo, hi);
  }
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t j = 0; j < n; ++j)
      terms.emplace_back(j, static_cast<double>(coef(rng)) * 0.5);
    const int s = sense(rng);
    const RowSense rs = s < 4 ? RowSense::LessEqual : s == 4 ? RowSense::GreaterEqual : RowSense::Equal;
    p.add_row(terms, rs, rhs(rng));
  }
  return p;
}

} // namespace oracle
