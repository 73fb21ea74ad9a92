#pragma once

// Dense two-phase primal simplex with native variable bounds.
//
// The engine works on an internal standard form
//     min c'z  s.t.  T z = b (b >= 0),  0 <= z <= u
// obtained from an LpProblem by shifting/negating/splitting variables and
// adding one slack per inequality row. Every row starts with a unit basic
// column (a slack or an artificial), which makes row duals readable straight
// from the reduced-cost row at optimality. Pivoting follows Bland's rule:
// smallest-index entering column, smallest-index leaving variable on ratio
// ties. Phase 1 minimizes the sum of artificials; no big-M is involved.

#include "ddksp/common.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ddksp::lp {

enum class Sense { Maximize, Minimize };
enum class RowSense { LessEqual, Equal, GreaterEqual };
enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

inline const char *to_string(Status s) {
  switch (s) {
  case Status::Optimal:
    return "Optimal";
  case Status::Infeasible:
    return "Infeasible";
  case Status::Unbounded:
    return "Unbounded";
  case Status::IterationLimit:
    return "IterationLimit";
  }
  return "?";
}

//! Linear (or mixed-integer) program with a dense constraint matrix.
//! Variables default to [0, +inf) and continuous.
struct LpProblem {
  Sense sense = Sense::Maximize;
  std::vector<double> cost;
  std::vector<std::vector<double>> matrix; // m rows, each of length n
  std::vector<RowSense> row_sense;
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<char> integer;
  std::vector<std::string> names; // optional, used by write_lp

  std::size_t num_vars() const { return cost.size(); }
  std::size_t num_rows() const { return rhs.size(); }

  //! Appends a variable; existing rows get a zero coefficient.
  std::size_t add_variable(double c, double lb = 0.0, double ub = kInf,
                           bool is_integer = false, std::string name = {}) {
    cost.push_back(c);
    lower.push_back(lb);
    upper.push_back(ub);
    integer.push_back(is_integer ? 1 : 0);
    names.push_back(std::move(name));
    for (auto &row : matrix)
      row.push_back(0.0);
    return cost.size() - 1;
  }

  //! Appends a row given as (column, coefficient) pairs. Repeated columns add.
  std::size_t add_row(std::span<const std::pair<std::size_t, double>> terms,
                      RowSense s, double b) {
    std::vector<double> row(num_vars(), 0.0);
    for (auto [j, a] : terms) {
      if (j >= row.size())
        throw ArgumentError("add_row: column index out of range");
      row[j] += a;
    }
    matrix.push_back(std::move(row));
    row_sense.push_back(s);
    rhs.push_back(b);
    return rhs.size() - 1;
  }

  std::size_t add_row(std::initializer_list<std::pair<std::size_t, double>> terms,
                      RowSense s, double b) {
    return add_row(std::span<const std::pair<std::size_t, double>>(terms.begin(), terms.size()),
                   s, b);
  }

  void validate() const {
    const auto n = num_vars();
    const auto m = num_rows();
    if (lower.size() != n || upper.size() != n || integer.size() != n)
      throw ArgumentError("LpProblem: bound/integrality vectors must match cost size");
    if (matrix.size() != m || row_sense.size() != m)
      throw ArgumentError("LpProblem: matrix/row_sense must have one entry per rhs");
    for (const auto &row : matrix)
      if (row.size() != n)
        throw ArgumentError("LpProblem: every matrix row must have num_vars entries");
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] ||
          lower[j] == kInf || upper[j] == -kInf)
        throw ArgumentError("LpProblem: invalid bounds on variable " + std::to_string(j));
    }
  }
};

struct LpSolution {
  Status status = Status::IterationLimit;
  std::vector<double> x;
  double objective = 0.0;
  //! d objective / d rhs_i in the problem's own sense; set when Optimal.
  std::vector<double> duals;
  //! c_j - a_j' y; set when Optimal.
  std::vector<double> reduced_costs;
  //! Improving direction of unboundedness; set when Unbounded.
  std::vector<double> ray;
  std::size_t iterations = 0;
  std::size_t nodes = 0; // branch-and-bound nodes (MIP only)

  bool optimal() const { return status == Status::Optimal; }
};

struct SimplexOptions {
  //! 0 selects 50 * (rows + columns) of the internal form, at least 1000.
  std::size_t max_iterations = 0;
};

inline std::vector<double> extract_duals(const LpSolution &s) {
  if (s.status != Status::Optimal)
    throw StateError(std::string("extract_duals: solution status is ") + to_string(s.status));
  return s.duals;
}

inline std::vector<double> extract_ray(const LpSolution &s) {
  if (s.status != Status::Unbounded)
    throw StateError(std::string("extract_ray: solution status is ") + to_string(s.status));
  return s.ray;
}

namespace detail {

class Simplex {
public:
  Simplex(const LpProblem &p, const SimplexOptions &opt) : p_(p) {
    build();
    const std::size_t cap = 50 * (m_ + ncols_);
    max_iter_ = opt.max_iterations ? opt.max_iterations : std::max<std::size_t>(cap, 1000);
  }

  LpSolution run() {
    LpSolution sol;
    // Phase 1
    if (n_art_ > 0) {
      std::vector<double> c1(ncols_, 0.0);
      for (std::size_t k = art_begin_; k < ncols_; ++k)
        c1[k] = 1.0;
      set_costs(c1);
      auto st = iterate();
      if (st == Status::IterationLimit)
        return finish_limit(sol);
      double infeas = 0.0;
      for (std::size_t k = art_begin_; k < ncols_; ++k)
        infeas += value_of(k);
      if (infeas > tol::feasibility * (1.0 + rhs_scale_)) {
        sol.status = Status::Infeasible;
        sol.iterations = iters_;
        return sol;
      }
      // Artificials are pinned to zero for phase 2.
      for (std::size_t k = art_begin_; k < ncols_; ++k) {
        ub_[k] = 0.0;
        if (pos_[k] < 0)
          at_upper_[k] = 0;
      }
      for (std::size_t i = 0; i < m_; ++i)
        if (basis_[i] >= art_begin_)
          xb_[i] = 0.0;
    }
    set_costs(c2_);
    auto st = iterate();
    sol.iterations = iters_;
    if (st == Status::IterationLimit)
      return finish_limit(sol);
    sol.x = original_values();
    sol.objective = dot(p_.cost, sol.x);
    if (st == Status::Unbounded) {
      sol.status = Status::Unbounded;
      sol.ray = ray_;
      return sol;
    }
    sol.status = Status::Optimal;
    sol.duals.assign(m_, 0.0);
    const double osign = p_.sense == Sense::Maximize ? -1.0 : 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double yint = c2_[unit_col_[i]] - d_[unit_col_[i]];
      sol.duals[i] = osign * row_flip_[i] * yint;
    }
    sol.reduced_costs.assign(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      double s = p_.cost[j];
      for (std::size_t i = 0; i < m_; ++i)
        s -= sol.duals[i] * p_.matrix[i][j];
      sol.reduced_costs[j] = s;
    }
    return sol;
  }

private:
  enum class Map { Shift, Negate, SplitPos, SplitNeg };
  struct ColMap {
    std::size_t var;
    Map kind;
  };

  static double dot(const std::vector<double> &a, const std::vector<double> &b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      s += a[i] * b[i];
    return s;
  }

  double &at(std::size_t i, std::size_t j) { return tab_[i * ncols_ + j]; }

  void build() {
    p_.validate();
    n_ = p_.num_vars();
    m_ = p_.num_rows();

    // Structural columns.
    std::vector<double> shift(n_, 0.0); // original value at internal zero
    for (std::size_t j = 0; j < n_; ++j) {
      const double l = p_.lower[j], u = p_.upper[j];
      if (l > -kInf) {
        cols_.push_back({j, Map::Shift});
        ub_.push_back(u - l);
        shift[j] = l;
      } else if (u < kInf) {
        cols_.push_back({j, Map::Negate});
        ub_.push_back(kInf);
        shift[j] = u;
      } else {
        cols_.push_back({j, Map::SplitPos});
        ub_.push_back(kInf);
        cols_.push_back({j, Map::SplitNeg});
        ub_.push_back(kInf);
      }
    }
    shift_ = shift;
    const std::size_t nstruct = cols_.size();

    // Row right-hand sides after substitution, and normalization sign.
    std::vector<double> b(m_);
    row_flip_.assign(m_, 1.0);
    std::size_t n_slack = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      double bi = p_.rhs[i];
      for (std::size_t j = 0; j < n_; ++j)
        bi -= p_.matrix[i][j] * shift[j];
      b[i] = bi;
      if (p_.row_sense[i] != RowSense::Equal)
        ++n_slack;
    }
    for (std::size_t i = 0; i < m_; ++i)
      if (b[i] < 0.0)
        row_flip_[i] = -1.0;

    // Which rows need an artificial: those whose normalized slack is not +1.
    std::vector<char> needs_art(m_, 0);
    for (std::size_t i = 0; i < m_; ++i) {
      const auto s = p_.row_sense[i];
      double slack_coef = s == RowSense::LessEqual ? 1.0 : s == RowSense::GreaterEqual ? -1.0 : 0.0;
      slack_coef *= row_flip_[i];
      needs_art[i] = slack_coef > 0.0 ? 0 : 1;
      n_art_ += needs_art[i];
    }

    slack_begin_ = nstruct;
    art_begin_ = nstruct + n_slack;
    ncols_ = art_begin_ + n_art_;
    for (std::size_t k = 0; k < n_slack + n_art_; ++k)
      ub_.push_back(kInf);

    tab_.assign(m_ * ncols_, 0.0);
    xb_.assign(m_, 0.0);
    basis_.assign(m_, 0);
    unit_col_.assign(m_, 0);
    pos_.assign(ncols_, -1);
    at_upper_.assign(ncols_, 0);

    std::size_t slack = slack_begin_, art = art_begin_;
    for (std::size_t i = 0; i < m_; ++i) {
      const double f = row_flip_[i];
      for (std::size_t k = 0; k < nstruct; ++k) {
        const auto [j, kind] = cols_[k];
        double a = p_.matrix[i][j];
        if (kind == Map::Negate || kind == Map::SplitNeg)
          a = -a;
        at(i, k) = f * a;
      }
      const auto s = p_.row_sense[i];
      if (s != RowSense::Equal) {
        const double coef = f * (s == RowSense::LessEqual ? 1.0 : -1.0);
        at(i, slack) = coef;
        if (!needs_art[i]) {
          basis_[i] = slack;
          unit_col_[i] = slack;
        }
        ++slack;
      }
      if (needs_art[i]) {
        at(i, art) = 1.0;
        basis_[i] = art;
        unit_col_[i] = art;
        ++art;
      }
      xb_[i] = f * b[i];
      rhs_scale_ = std::max(rhs_scale_, std::abs(b[i]));
    }
    for (std::size_t i = 0; i < m_; ++i)
      pos_[basis_[i]] = static_cast<long>(i);

    // Phase-2 costs in minimization form.
    const double osign = p_.sense == Sense::Maximize ? -1.0 : 1.0;
    c2_.assign(ncols_, 0.0);
    for (std::size_t k = 0; k < nstruct; ++k) {
      const auto [j, kind] = cols_[k];
      double c = osign * p_.cost[j];
      if (kind == Map::Negate || kind == Map::SplitNeg)
        c = -c;
      c2_[k] = c;
    }
  }

  void set_costs(const std::vector<double> &c) {
    cur_cost_ = c;
    d_ = c;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = c[basis_[i]];
      if (cb == 0.0)
        continue;
      const double *row = &tab_[i * ncols_];
      for (std::size_t j = 0; j < ncols_; ++j)
        d_[j] -= cb * row[j];
    }
  }

  double value_of(std::size_t k) const {
    if (pos_[k] >= 0)
      return xb_[static_cast<std::size_t>(pos_[k])];
    return at_upper_[k] ? ub_[k] : 0.0;
  }

  Status iterate() {
    std::vector<std::size_t> nz;
    nz.reserve(ncols_);
    while (true) {
      // Bland: first eligible column.
      std::size_t q = ncols_;
      double dir = 0.0;
      for (std::size_t j = 0; j < ncols_; ++j) {
        if (pos_[j] >= 0 || ub_[j] <= 0.0)
          continue;
        if (!at_upper_[j] && d_[j] < -tol::optimality) {
          q = j;
          dir = 1.0;
          break;
        }
        if (at_upper_[j] && d_[j] > tol::optimality) {
          q = j;
          dir = -1.0;
          break;
        }
      }
      if (q == ncols_)
        return Status::Optimal;
      if (iters_ >= max_iter_)
        return Status::IterationLimit;
      ++iters_;

      // Ratio test. Entering moves by dir * theta; basic i moves by
      // -dir * theta * alpha_i.
      double best = ub_[q]; // bound flip
      std::size_t leave_row = m_;
      std::size_t leave_var = q;
      bool leave_to_upper = false;
      for (std::size_t i = 0; i < m_; ++i) {
        const double alpha = dir * at(i, q);
        if (std::abs(alpha) <= tol::pivot)
          continue;
        const std::size_t bv = basis_[i];
        double ratio;
        bool to_upper;
        if (alpha > 0.0) {
          ratio = std::max(0.0, xb_[i]) / alpha;
          to_upper = false;
        } else {
          if (ub_[bv] == kInf)
            continue;
          ratio = std::max(0.0, ub_[bv] - xb_[i]) / (-alpha);
          to_upper = true;
        }
        const double slackness = 1e-12 * (1.0 + std::abs(best == kInf ? ratio : best));
        if (ratio < best - slackness ||
            (ratio <= best + slackness && bv < leave_var)) {
          best = ratio;
          leave_row = i;
          leave_var = bv;
          leave_to_upper = to_upper;
        }
      }

      if (best == kInf) {
        record_ray(q, dir);
        return Status::Unbounded;
      }

      // Move values.
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = at(i, q);
        if (a != 0.0)
          xb_[i] -= dir * best * a;
      }
      const double entering_value = (at_upper_[q] ? ub_[q] : 0.0) + dir * best;

      if (leave_row == m_) {
        at_upper_[q] = dir > 0.0 ? 1 : 0;
        continue;
      }

      // Basis change.
      const std::size_t r = leave_row;
      const std::size_t out = basis_[r];
      pivot(r, q, nz);
      pos_[out] = -1;
      at_upper_[out] = leave_to_upper ? 1 : 0;
      basis_[r] = q;
      pos_[q] = static_cast<long>(r);
      at_upper_[q] = 0;
      xb_[r] = entering_value;
    }
  }

  void pivot(std::size_t r, std::size_t q, std::vector<std::size_t> &nz) {
    double *prow = &tab_[r * ncols_];
    const double inv = 1.0 / prow[q];
    nz.clear();
    for (std::size_t j = 0; j < ncols_; ++j) {
      if (prow[j] != 0.0) {
        prow[j] *= inv;
        nz.push_back(j);
      }
    }
    prow[q] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r)
        continue;
      double *row = &tab_[i * ncols_];
      const double f = row[q];
      if (f == 0.0)
        continue;
      for (auto j : nz)
        row[j] -= f * prow[j];
      row[q] = 0.0;
    }
    const double fd = d_[q];
    if (fd != 0.0) {
      for (auto j : nz)
        d_[j] -= fd * prow[j];
      d_[q] = 0.0;
    }
  }

  void record_ray(std::size_t q, double dir) {
    std::vector<double> dz(ncols_, 0.0);
    dz[q] = dir;
    for (std::size_t i = 0; i < m_; ++i)
      dz[basis_[i]] = -dir * at(i, q);
    ray_.assign(n_, 0.0);
    for (std::size_t k = 0; k < cols_.size(); ++k) {
      const auto [j, kind] = cols_[k];
      const double v = (kind == Map::Negate || kind == Map::SplitNeg) ? -dz[k] : dz[k];
      ray_[j] += v;
    }
    double scale = 0.0;
    for (double v : ray_)
      scale = std::max(scale, std::abs(v));
    if (scale > 0.0)
      for (double &v : ray_)
        v /= scale;
  }

  std::vector<double> original_values() const {
    std::vector<double> x(shift_);
    for (std::size_t k = 0; k < cols_.size(); ++k) {
      const auto [j, kind] = cols_[k];
      double v = value_of(k);
      if (kind == Map::Negate || kind == Map::SplitNeg)
        v = -v;
      x[j] += v;
    }
    // Clamp round-off against the declared bounds.
    for (std::size_t j = 0; j < n_; ++j)
      x[j] = std::clamp(x[j], p_.lower[j], p_.upper[j]);
    return x;
  }

  LpSolution &finish_limit(LpSolution &sol) {
    sol.status = Status::IterationLimit;
    sol.iterations = iters_;
    sol.x = original_values();
    sol.objective = dot(p_.cost, sol.x);
    return sol;
  }

  const LpProblem &p_;
  std::size_t n_ = 0, m_ = 0, ncols_ = 0, n_art_ = 0;
  std::size_t slack_begin_ = 0, art_begin_ = 0;
  std::size_t iters_ = 0, max_iter_ = 0;
  double rhs_scale_ = 0.0;
  std::vector<ColMap> cols_;
  std::vector<double> shift_;
  std::vector<double> ub_;
  std::vector<double> row_flip_;
  std::vector<double> tab_;
  std::vector<double> xb_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> unit_col_;
  std::vector<long> pos_;
  std::vector<char> at_upper_;
  std::vector<double> c2_, cur_cost_, d_;
  std::vector<double> ray_;
};

} // namespace detail

//! Solves the continuous relaxation (integrality flags are ignored).
inline LpSolution solve_lp(const LpProblem &problem, const SimplexOptions &options = {}) {
  detail::Simplex s(problem, options);
  return s.run();
}

//! Human-readable dump, one constraint per line. Debugging aid only.
inline void write_lp(std::ostream &os, const LpProblem &p) {
  auto name = [&](std::size_t j) {
    return (j < p.names.size() && !p.names[j].empty()) ? p.names[j] : "x" + std::to_string(j);
  };
  auto terms = [&](const std::vector<double> &coef) {
    bool first = true;
    for (std::size_t j = 0; j < coef.size(); ++j) {
      if (coef[j] == 0.0)
        continue;
      os << (coef[j] < 0 ? (first ? "-" : " - ") : (first ? "" : " + "));
      const double a = std::abs(coef[j]);
      if (a != 1.0)
        os << std::setprecision(17) << a << ' ';
      os << name(j);
      first = false;
    }
    if (first)
      os << '0';
  };
  os << (p.sense == Sense::Maximize ? "Maximize\n obj: " : "Minimize\n obj: ");
  terms(p.cost);
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < p.num_rows(); ++i) {
    os << " r" << i << ": ";
    terms(p.matrix[i]);
    const char *op = p.row_sense[i] == RowSense::LessEqual   ? " <= "
                     : p.row_sense[i] == RowSense::Equal ? " = "
                                                         : " >= ";
    os << op << std::setprecision(17) << p.rhs[i] << '\n';
  }
  os << "Bounds\n";
  for (std::size_t j = 0; j < p.num_vars(); ++j) {
    os << ' ';
    if (p.lower[j] == -kInf)
      os << "-inf";
    else
      os << p.lower[j];
    os << " <= " << name(j) << " <= ";
    if (p.upper[j] == kInf)
      os << "+inf";
    else
      os << p.upper[j];
    os << '\n';
  }
  bool any = false;
  for (std::size_t j = 0; j < p.num_vars(); ++j) {
    if (p.integer[j]) {
      if (!any)
        os << "General\n";
      os << ' ' << name(j) << '\n';
      any = true;
    }
  }
  os << "End\n";
}

} // namespace ddksp::lp
