#pragma once

// Per-location demand distributions: Gaussian-kernel KDE and three
// parametric families fitted by maximum likelihood.

#include "ddksp/common.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ddksp::density {

enum class Family { Kde, Gaussian, Laplace, Poisson };

inline std::string_view to_string(Family f) {
  switch (f) {
  case Family::Kde:
    return "kde";
  case Family::Gaussian:
    return "gaussian";
  case Family::Laplace:
    return "laplace";
  case Family::Poisson:
    return "poisson";
  }
  return "?";
}

inline Family parse_family(std::string_view s) {
  if (s == "kde")
    return Family::Kde;
  if (s == "gaussian")
    return Family::Gaussian;
  if (s == "laplace")
    return Family::Laplace;
  if (s == "poisson")
    return Family::Poisson;
  throw ArgumentError("unknown distribution family '" + std::string(s) + "'");
}

struct Kde {
  std::vector<double> samples;
  double bandwidth = 0.0;
};
struct Gaussian {
  double mu = 0.0;
  double variance = 0.0;
};
struct Laplace {
  double mu = 0.0;
  double b = 0.0;
};
struct Poisson {
  double lambda = 0.0;
};

//! A fitted one-dimensional demand distribution. Immutable once built.
class DensityModel {
public:
  using Params = std::variant<Kde, Gaussian, Laplace, Poisson>;

  DensityModel(Kde p) : params_(std::move(p)) {}
  DensityModel(Gaussian p) : params_(p) {}
  DensityModel(Laplace p) : params_(p) {}
  DensityModel(Poisson p) : params_(p) {}

  Family kind() const { return static_cast<Family>(params_.index()); }
  const Params &params() const { return params_; }
  template <class T> const T &as() const { return std::get<T>(params_); }

  bool operator==(const DensityModel &o) const {
    return std::visit(
        [&](const auto &a) {
          using T = std::decay_t<decltype(a)>;
          const T *b = std::get_if<T>(&o.params_);
          if (!b)
            return false;
          if constexpr (std::is_same_v<T, Kde>)
            return a.samples == b->samples && a.bandwidth == b->bandwidth;
          else if constexpr (std::is_same_v<T, Gaussian>)
            return a.mu == b->mu && a.variance == b->variance;
          else if constexpr (std::is_same_v<T, Laplace>)
            return a.mu == b->mu && a.b == b->b;
          else
            return a.lambda == b->lambda;
        },
        params_);
  }

private:
  Params params_;
};

namespace detail {

inline void require_samples(std::span<const double> xs, const char *who) {
  if (xs.empty())
    throw ArgumentError(std::string(who) + ": at least one sample is required");
  for (double x : xs)
    if (!std::isfinite(x))
      throw ArgumentError(std::string(who) + ": samples must be finite");
}

inline double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs)
    s += x;
  return s / static_cast<double>(xs.size());
}

//! Linear-interpolation quantile (the common "type 7" definition).
inline double quantile(std::vector<double> sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

} // namespace detail

//! Silverman's rule of thumb, h = 0.9 min(sd, IQR/1.34) n^(-1/5), with the
//! sample standard deviation (n-1 divisor). Falls back to sd alone when the
//! IQR is zero; throws when the sample has no spread at all.
inline double silverman_bandwidth(std::span<const double> xs) {
  detail::require_samples(xs, "silverman_bandwidth");
  const double n = static_cast<double>(xs.size());
  double sd = 0.0;
  if (xs.size() > 1) {
    const double m = detail::mean(xs);
    double ss = 0.0;
    for (double x : xs)
      ss += (x - m) * (x - m);
    sd = std::sqrt(ss / (n - 1.0));
  }
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = detail::quantile(sorted, 0.75) - detail::quantile(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0))
    spread = sd;
  if (!(spread > 0.0))
    throw DegenerateDataError("silverman_bandwidth: all samples are identical");
  return 0.9 * spread * std::pow(n, -0.2);
}

inline DensityModel fit_kde(std::span<const double> xs, std::optional<double> bandwidth = std::nullopt) {
  detail::require_samples(xs, "fit_kde");
  double h;
  if (bandwidth) {
    if (!(*bandwidth > 0.0) || !std::isfinite(*bandwidth))
      throw ArgumentError("fit_kde: bandwidth must be positive and finite");
    h = *bandwidth;
  } else {
    h = silverman_bandwidth(xs);
  }
  return Kde{std::vector<double>(xs.begin(), xs.end()), h};
}

//! mu = mean, sigma^2 = mean squared deviation (divisor N).
inline DensityModel fit_gaussian(std::span<const double> xs) {
  detail::require_samples(xs, "fit_gaussian");
  const double m = detail::mean(xs);
  double ss = 0.0;
  for (double x : xs)
    ss += (x - m) * (x - m);
  return Gaussian{m, ss / static_cast<double>(xs.size())};
}

//! Location is the sample mean and b the mean absolute deviation about it.
inline DensityModel fit_laplace(std::span<const double> xs) {
  detail::require_samples(xs, "fit_laplace");
  const double m = detail::mean(xs);
  double sa = 0.0;
  for (double x : xs)
    sa += std::abs(x - m);
  return Laplace{m, sa / static_cast<double>(xs.size())};
}

inline DensityModel fit_poisson(std::span<const double> xs) {
  detail::require_samples(xs, "fit_poisson");
  for (double x : xs)
    if (x < 0.0)
      throw ArgumentError("fit_poisson: samples must be nonnegative");
  return Poisson{detail::mean(xs)};
}

inline DensityModel fit(Family f, std::span<const double> xs, std::optional<double> bandwidth = std::nullopt) {
  switch (f) {
  case Family::Kde:
    return fit_kde(xs, bandwidth);
  case Family::Gaussian:
    return fit_gaussian(xs);
  case Family::Laplace:
    return fit_laplace(xs);
  case Family::Poisson:
    return fit_poisson(xs);
  }
  throw ArgumentError("fit: unknown family");
}

//! Density at x (probability mass for Poisson, which is zero off the
//! nonnegative integers). Degenerate continuous fits (zero spread) have no
//! density and report 0.
inline double pdf(const DensityModel &model, double x) {
  constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  return std::visit(
      [x](const auto &m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Kde>) {
          const double h = m.bandwidth;
          double s = 0.0;
          for (double xn : m.samples) {
            const double z = (x - xn) / h;
            s += std::exp(-0.5 * z * z);
          }
          return s * inv_sqrt_2pi / (h * static_cast<double>(m.samples.size()));
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          if (!(m.variance > 0.0))
            return 0.0;
          const double sd = std::sqrt(m.variance);
          const double z = (x - m.mu) / sd;
          return inv_sqrt_2pi / sd * std::exp(-0.5 * z * z);
        } else if constexpr (std::is_same_v<T, Laplace>) {
          if (!(m.b > 0.0))
            return 0.0;
          return std::exp(-std::abs(x - m.mu) / m.b) / (2.0 * m.b);
        } else {
          if (x < 0.0 || x != std::floor(x))
            return 0.0;
          if (m.lambda == 0.0)
            return x == 0.0 ? 1.0 : 0.0;
          return std::exp(x * std::log(m.lambda) - m.lambda - std::lgamma(x + 1.0));
        }
      },
      model.params());
}

//! Sum of log densities; -inf as soon as any point has zero density.
inline double log_likelihood(const DensityModel &model, std::span<const double> holdout) {
  if (holdout.empty())
    throw ArgumentError("log_likelihood: holdout must be nonempty");
  double s = 0.0;
  for (double x : holdout) {
    const double p = pdf(model, x);
    if (!(p > 0.0))
      return -kInf;
    s += std::log(p);
  }
  return s;
}

//! One continuous draw (Poisson draws are already integral).
template <class Rng> double draw(const DensityModel &model, Rng &rng) {
  return std::visit(
      [&rng](const auto &m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Kde>) {
          std::uniform_int_distribution<std::size_t> pick(0, m.samples.size() - 1);
          std::normal_distribution<double> noise(0.0, m.bandwidth);
          const double centre = m.samples[pick(rng)];
          return centre + noise(rng);
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          if (!(m.variance > 0.0))
            return m.mu;
          std::normal_distribution<double> nd(m.mu, std::sqrt(m.variance));
          return nd(rng);
        } else if constexpr (std::is_same_v<T, Laplace>) {
          if (!(m.b > 0.0))
            return m.mu;
          std::uniform_real_distribution<double> u(-0.5, 0.5);
          const double v = u(rng);
          return m.mu - m.b * std::copysign(1.0, v) * std::log1p(-2.0 * std::abs(v));
        } else {
          if (!(m.lambda > 0.0))
            return 0.0;
          std::poisson_distribution<std::int64_t> pd(m.lambda);
          return static_cast<double>(pd(rng));
        }
      },
      model.params());
}

//! Integer demand from a continuous draw: truncated at 0, rounded half-up.
inline std::int64_t to_demand(double v) { return static_cast<std::int64_t>(std::max(0.0, round_half_up(v))); }

template <class Rng> std::int64_t draw_demand(const DensityModel &model, Rng &rng) {
  return to_demand(draw(model, rng));
}

//! n integer demand draws, reproducible from the seed.
inline std::vector<std::int64_t> sample(const DensityModel &model, std::size_t n, std::uint64_t seed) {
  if (n == 0)
    throw ArgumentError("sample: n must be positive");
  std::mt19937_64 rng(seed);
  std::vector<std::int64_t> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    out.push_back(draw_demand(model, rng));
  return out;
}

//! One fitted model per location, aligned with location_ids.
struct DemandDistributionSet {
  std::vector<int> location_ids;
  std::vector<DensityModel> models;

  std::size_t size() const { return models.size(); }
  void validate() const {
    if (models.size() != location_ids.size())
      throw ArgumentError("DemandDistributionSet: one model per location required");
  }
};

//! Fits `family` independently to each column of a days x locations history.
inline DemandDistributionSet fit_columns(Family family, std::span<const int> location_ids,
                                         const std::vector<std::vector<double>> &columns,
                                         std::optional<double> bandwidth = std::nullopt) {
  if (columns.size() != location_ids.size())
    throw ArgumentError("fit_columns: one column per location required");
  DemandDistributionSet set;
  set.location_ids.assign(location_ids.begin(), location_ids.end());
  for (const auto &c : columns)
    set.models.push_back(fit(family, c, bandwidth));
  return set;
}

// --- serialization --------------------------------------------------------

inline nlohmann::json to_json(const DensityModel &m) {
  return std::visit(
      [](const auto &p) -> nlohmann::json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Kde>)
          return {{"kind", "kde"}, {"bandwidth", p.bandwidth}, {"samples", p.samples}};
        else if constexpr (std::is_same_v<T, Gaussian>)
          return {{"kind", "gaussian"}, {"mu", p.mu}, {"variance", p.variance}};
        else if constexpr (std::is_same_v<T, Laplace>)
          return {{"kind", "laplace"}, {"mu", p.mu}, {"b", p.b}};
        else
          return {{"kind", "poisson"}, {"lambda", p.lambda}};
      },
      m.params());
}

inline DensityModel model_from_json(const nlohmann::json &j) {
  const Family f = parse_family(j.at("kind").get<std::string>());
  switch (f) {
  case Family::Kde:
    return Kde{j.at("samples").get<std::vector<double>>(), j.at("bandwidth").get<double>()};
  case Family::Gaussian:
    return Gaussian{j.at("mu").get<double>(), j.at("variance").get<double>()};
  case Family::Laplace:
    return Laplace{j.at("mu").get<double>(), j.at("b").get<double>()};
  case Family::Poisson:
    return Poisson{j.at("lambda").get<double>()};
  }
  throw ArgumentError("model_from_json: unknown kind");
}

inline nlohmann::json to_json(const DemandDistributionSet &set) {
  set.validate();
  nlohmann::json locs = nlohmann::json::array();
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto j = to_json(set.models[i]);
    j["location_id"] = set.location_ids[i];
    locs.push_back(std::move(j));
  }
  return {{"format", "ddksp-distributions"}, {"version", 1}, {"locations", std::move(locs)}};
}

inline DemandDistributionSet distributions_from_json(const nlohmann::json &j) {
  if (j.value("format", "") != "ddksp-distributions")
    throw ArgumentError("distributions_from_json: not a distribution file");
  DemandDistributionSet set;
  for (const auto &loc : j.at("locations")) {
    set.location_ids.push_back(loc.at("location_id").get<int>());
    set.models.push_back(model_from_json(loc));
  }
  return set;
}

} // namespace ddksp::density
