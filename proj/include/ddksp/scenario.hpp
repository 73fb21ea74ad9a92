#pragma once

// Demand scenario sets for sample average approximation.

#include "ddksp/common.hpp"
#include "ddksp/csv.hpp"
#include "ddksp/density.hpp"
#include "ddksp/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace ddksp::scenario {

struct ScenarioSet {
  std::vector<int> location_ids;
  std::vector<std::vector<std::int64_t>> demands; // [scenario][location]
  std::vector<double> probabilities;

  std::size_t size() const { return demands.size(); }
  std::size_t num_locations() const { return location_ids.size(); }

  //! Per-location maximum demand over scenarios.
  std::vector<std::int64_t> max_demand() const {
    std::vector<std::int64_t> m(num_locations(), 0);
    for (const auto &row : demands)
      for (std::size_t i = 0; i < row.size(); ++i)
        m[i] = std::max(m[i], row[i]);
    return m;
  }

  //! Probability-weighted mean demand per location.
  std::vector<double> mean_demand() const {
    std::vector<double> m(num_locations(), 0.0);
    for (std::size_t s = 0; s < size(); ++s)
      for (std::size_t i = 0; i < num_locations(); ++i)
        m[i] += probabilities[s] * static_cast<double>(demands[s][i]);
    return m;
  }

  void validate() const {
    if (demands.empty())
      throw ArgumentError("ScenarioSet: at least one scenario is required");
    if (probabilities.size() != demands.size())
      throw ArgumentError("ScenarioSet: one probability per scenario required");
    double total = 0.0;
    for (std::size_t s = 0; s < demands.size(); ++s) {
      if (demands[s].size() != location_ids.size())
        throw ArgumentError("ScenarioSet: one demand per location required");
      for (auto d : demands[s])
        if (d < 0)
          throw ArgumentError("ScenarioSet: negative demand");
      if (!(probabilities[s] >= 0.0))
        throw ArgumentError("ScenarioSet: negative probability");
      total += probabilities[s];
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw ArgumentError("ScenarioSet: probabilities must sum to 1");
  }
};

inline std::vector<double> uniform_probabilities(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

//! n equiprobable scenarios; location i of each row is drawn from
//! dist.models[i]. One generator walks rows then locations.
inline ScenarioSet generate(const density::DemandDistributionSet &dist, std::size_t n, std::uint64_t seed) {
  if (n == 0)
    throw ArgumentError("generate: n_scenarios must be positive");
  dist.validate();
  std::mt19937_64 rng(seed);
  ScenarioSet s;
  s.location_ids = dist.location_ids;
  s.demands.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::int64_t> row;
    row.reserve(dist.size());
    for (const auto &m : dist.models)
      row.push_back(density::draw_demand(m, rng));
    s.demands.push_back(std::move(row));
  }
  s.probabilities = uniform_probabilities(n);
  return s;
}

//! Each panel day becomes one equiprobable scenario.
inline ScenarioSet from_panel(const ingest::DemandPanel &panel) {
  if (panel.empty())
    throw EmptyInputError("from_panel: panel has no days");
  ScenarioSet s;
  s.location_ids = panel.location_ids;
  s.demands = panel.counts;
  s.probabilities = uniform_probabilities(panel.num_days());
  return s;
}

//! One scenario holding the given demand with probability 1.
inline ScenarioSet single(std::vector<int> location_ids, std::vector<std::int64_t> demand) {
  ScenarioSet s;
  s.location_ids = std::move(location_ids);
  s.demands.push_back(std::move(demand));
  s.probabilities = {1.0};
  s.validate();
  return s;
}

//! CSV: header "scenario,<id>,...,probability", one row per scenario.
inline void write_csv(std::ostream &os, const ScenarioSet &s) {
  os << "scenario";
  for (int id : s.location_ids)
    os << ',' << id;
  os << ",probability\n";
  for (std::size_t k = 0; k < s.size(); ++k) {
    os << k + 1;
    for (auto d : s.demands[k])
      os << ',' << d;
    os << ',' << csv::format_double(s.probabilities[k]) << '\n';
  }
}

inline ScenarioSet read_csv(std::istream &is) {
  std::string line;
  if (!std::getline(is, line))
    throw EmptyInputError("read_csv: empty input");
  const auto head = csv::split(line);
  if (head.size() < 3 || head.front() != "scenario" || head.back() != "probability")
    throw SchemaError("read_csv: header must be scenario,<ids>,probability");
  ScenarioSet s;
  for (std::size_t i = 1; i + 1 < head.size(); ++i) {
    auto id = csv::to_int(head[i]);
    if (!id)
      throw SchemaError("read_csv: bad location id '" + head[i] + "'");
    s.location_ids.push_back(static_cast<int>(*id));
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (csv::trim(line).empty())
      continue;
    const auto f = csv::split(line);
    if (f.size() != head.size())
      throw SchemaError("read_csv: wrong field count at line " + std::to_string(lineno));
    std::vector<std::int64_t> row;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
      auto v = csv::to_int(f[i]);
      if (!v)
        throw SchemaError("read_csv: bad demand at line " + std::to_string(lineno));
      row.push_back(*v);
    }
    auto p = csv::to_double(f.back());
    if (!p)
      throw SchemaError("read_csv: bad probability at line " + std::to_string(lineno));
    s.demands.push_back(std::move(row));
    s.probabilities.push_back(*p);
  }
  s.validate();
  return s;
}

} // namespace ddksp::scenario
