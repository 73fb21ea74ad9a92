#pragma once

// Run configuration (JSON) and instance construction from it.

#include "ddksp/benders.hpp"
#include "ddksp/calendar.hpp"
#include "ddksp/common.hpp"
#include "ddksp/csrp_models.hpp"
#include "ddksp/csv.hpp"
#include "ddksp/density.hpp"
#include "ddksp/ingest.hpp"
#include "ddksp/solve.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace ddksp::config {

namespace fs = std::filesystem;

//! Holding costs: explicit values or draws from N(mean, variance).
struct HoldingSpec {
  std::vector<double> values;
  double mean = 20.0;
  double variance = 9.0;
  bool random = true;
};

//! Transfer costs: explicit matrix or an affine map of planar distances.
struct TransferSpec {
  std::vector<std::vector<double>> matrix;
  fs::path coords_file;
  double min = 10.0;
  double max = 100.0;
  bool from_distance = false;
};

struct InstanceSpec {
  std::vector<double> revenue{100.0}; // one value applies to every location
  HoldingSpec holding;
  std::uint64_t holding_seed = 2019;
  TransferSpec transfer;
  std::int64_t capacity = 16000;
};

struct RunConfig {
  fs::path base_dir; // directory of the config file; relative paths resolve here
  std::string run_id = "run";
  fs::path output_dir = "runs";
  std::vector<fs::path> trip_files;
  ingest::ColumnMap columns;
  char delimiter = ',';
  std::optional<Date> first_date;
  std::optional<Date> last_date;
  std::size_t top_k = 20;
  Date split_cutoff = *parse_date("2018-12-31");
  std::vector<density::Family> families{density::Family::Kde, density::Family::Gaussian, density::Family::Laplace,
                                        density::Family::Poisson};
  std::vector<std::size_t> scenario_counts{20, 50, 100, 200, 500};
  std::optional<std::size_t> evaluation_scenarios; // default: largest count
  std::size_t replications = 5;
  double xi = 1e-6;
  std::uint64_t seed = 0;
  csrp::RecourseVariant variant = csrp::RecourseVariant::FlowBalance;
  solve::Method method = solve::Method::Benders;
  benders::CutMode cut_mode = benders::CutMode::Single;
  bool paper_split = false;
  std::size_t max_iterations = 500;
  double extensive_limit = 2e6;
  InstanceSpec instance;

  fs::path run_dir() const { return output_dir / run_id; }
  std::size_t eval_scenarios() const {
    return evaluation_scenarios ? *evaluation_scenarios
                                : *std::max_element(scenario_counts.begin(), scenario_counts.end());
  }
  solve::SaaOptions saa_options() const {
    solve::SaaOptions o;
    o.method = method;
    o.variant = variant;
    o.benders.xi = xi;
    o.benders.max_iterations = max_iterations;
    o.benders.cut_mode = cut_mode;
    o.benders.paper_split = paper_split;
    o.extensive.size_limit = extensive_limit;
    return o;
  }
};

namespace detail {

[[noreturn]] inline void field_error(const std::string &field, const std::string &what) {
  throw ConfigError("config field '" + field + "': " + what);
}

inline std::size_t line_of(const std::string &text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

template <class T> T get(const nlohmann::json &j, const std::string &field) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception &) {
    field_error(field, "has the wrong type");
  }
}

inline std::uint64_t get_uint(const nlohmann::json &j, const std::string &field) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    field_error(field, "must be a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline std::size_t get_positive(const nlohmann::json &j, const std::string &field) {
  const auto v = get_uint(j, field);
  if (v == 0)
    field_error(field, "must be positive");
  return static_cast<std::size_t>(v);
}

inline Date get_date(const nlohmann::json &j, const std::string &field) {
  auto d = parse_date(get<std::string>(j, field));
  if (!d)
    field_error(field, "must be a YYYY-MM-DD date");
  return *d;
}

//! "name(a, b, key=value)" -> name and argument list.
inline std::optional<std::pair<std::string, std::vector<std::string>>> call_form(const std::string &s) {
  static const std::regex re(R"(^\s*([A-Za-z_]+)\s*\((.*)\)\s*$)");
  std::smatch m;
  if (!std::regex_match(s, m, re))
    return std::nullopt;
  std::vector<std::string> args;
  for (auto &a : csv::split(m[2].str(), ','))
    if (!a.empty())
      args.push_back(a);
  return std::make_pair(m[1].str(), args);
}

inline double number_arg(const std::string &s, const std::string &field) {
  auto v = csv::to_double(s);
  if (!v)
    field_error(field, "'" + s + "' is not a number");
  return *v;
}

inline InstanceSpec parse_instance(const nlohmann::json &j, const fs::path &base) {
  InstanceSpec spec;
  if (!j.is_object())
    field_error("instance", "must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = it.key();
    const std::string field = "instance." + key;
    const auto &v = it.value();
    if (key == "revenue") {
      if (v.is_number())
        spec.revenue = {v.get<double>()};
      else
        spec.revenue = get<std::vector<double>>(v, field);
      if (spec.revenue.empty())
        field_error(field, "must not be empty");
    } else if (key == "holding") {
      if (v.is_string()) {
        auto c = call_form(v.get<std::string>());
        if (!c || c->first != "gaussian" || c->second.size() != 2)
          field_error(field, "expected gaussian(mean, variance) or a list of values");
        spec.holding.random = true;
        spec.holding.mean = number_arg(c->second[0], field);
        spec.holding.variance = number_arg(c->second[1], field);
        if (spec.holding.variance < 0)
          field_error(field, "variance must be nonnegative");
      } else {
        spec.holding.random = false;
        spec.holding.values = get<std::vector<double>>(v, field);
      }
    } else if (key == "holding_seed") {
      spec.holding_seed = get_uint(v, field);
    } else if (key == "transfer") {
      if (v.is_string()) {
        auto c = call_form(v.get<std::string>());
        if (!c || c->first != "distance" || c->second.empty())
          field_error(field, "expected distance(coords_file, min=10, max=100) or a matrix");
        spec.transfer.from_distance = true;
        spec.transfer.coords_file = (base / c->second[0]).lexically_normal();
        for (std::size_t a = 1; a < c->second.size(); ++a) {
          const auto &arg = c->second[a];
          const auto eq = arg.find('=');
          if (eq == std::string::npos)
            field_error(field, "argument '" + arg + "' must be min=<v> or max=<v>");
          const auto name = std::string(csv::trim(arg.substr(0, eq)));
          const double val = number_arg(arg.substr(eq + 1), field);
          if (name == "min")
            spec.transfer.min = val;
          else if (name == "max")
            spec.transfer.max = val;
          else
            field_error(field, "unknown argument '" + name + "'");
        }
        if (!(spec.transfer.min >= 0 && spec.transfer.min <= spec.transfer.max))
          field_error(field, "need 0 <= min <= max");
        if (!fs::exists(spec.transfer.coords_file))
          field_error(field, "coordinates file '" + spec.transfer.coords_file.string() + "' does not exist");
      } else {
        spec.transfer.from_distance = false;
        spec.transfer.matrix = get<std::vector<std::vector<double>>>(v, field);
      }
    } else if (key == "capacity") {
      spec.capacity = static_cast<std::int64_t>(get_uint(v, field));
    } else {
      field_error(field, "unknown field");
    }
  }
  return spec;
}

} // namespace detail

//! Parses a config document. Relative paths resolve against base_dir.
inline RunConfig parse_config(const std::string &text, const fs::path &base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError("config parse error at line " + std::to_string(detail::line_of(text, e.byte)) + ": " +
                      e.what());
  }
  if (!j.is_object())
    throw ConfigError("config: top level must be an object");
  RunConfig c;
  c.base_dir = base_dir;
  c.output_dir = (base_dir / "runs").lexically_normal();
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = it.key();
    const auto &v = it.value();
    using namespace detail;
    if (key == "run_id") {
      c.run_id = get<std::string>(v, key);
      if (c.run_id.empty() || c.run_id.find('/') != std::string::npos)
        field_error(key, "must be a nonempty name without '/'");
    } else if (key == "output_dir") {
      c.output_dir = (base_dir / get<std::string>(v, key)).lexically_normal();
    } else if (key == "trip_files") {
      c.trip_files.clear();
      for (const auto &f : get<std::vector<std::string>>(v, key))
        c.trip_files.push_back((base_dir / f).lexically_normal());
    } else if (key == "columns") {
      auto m = get<std::map<std::string, std::string>>(v, key);
      for (const auto &[k, name] : m) {
        if (k == "pickup_datetime")
          c.columns.pickup_datetime = name;
        else if (k == "dropoff_datetime")
          c.columns.dropoff_datetime = name;
        else if (k == "pickup_location_id")
          c.columns.pickup_location_id = name;
        else if (k == "dropoff_location_id")
          c.columns.dropoff_location_id = name;
        else if (k == "trip_distance")
          c.columns.trip_distance = name;
        else if (k == "fare_amount")
          c.columns.fare_amount = name;
        else
          field_error("columns." + k, "unknown column role");
      }
    } else if (key == "delimiter") {
      auto s = get<std::string>(v, key);
      if (s.size() != 1)
        field_error(key, "must be a single character");
      c.delimiter = s[0];
    } else if (key == "first_date") {
      c.first_date = get_date(v, key);
    } else if (key == "last_date") {
      c.last_date = get_date(v, key);
    } else if (key == "top_k") {
      c.top_k = get_positive(v, key);
    } else if (key == "split_cutoff") {
      c.split_cutoff = get_date(v, key);
    } else if (key == "families") {
      c.families.clear();
      for (const auto &f : get<std::vector<std::string>>(v, key)) {
        try {
          c.families.push_back(density::parse_family(f));
        } catch (const ArgumentError &e) {
          field_error(key, e.what());
        }
      }
      if (c.families.empty())
        field_error(key, "must not be empty");
    } else if (key == "scenario_counts") {
      c.scenario_counts.clear();
      if (!v.is_array() || v.empty())
        field_error(key, "must be a nonempty list of positive integers");
      for (const auto &n : v)
        c.scenario_counts.push_back(get_positive(n, key));
    } else if (key == "evaluation_scenarios") {
      c.evaluation_scenarios = get_positive(v, key);
    } else if (key == "replications") {
      c.replications = get_positive(v, key);
    } else if (key == "xi") {
      c.xi = get<double>(v, key);
    } else if (key == "seed") {
      c.seed = get_uint(v, key);
    } else if (key == "variant") {
      try {
        c.variant = csrp::parse_variant(get<std::string>(v, key));
      } catch (const ArgumentError &e) {
        field_error(key, e.what());
      }
    } else if (key == "method") {
      try {
        c.method = solve::parse_method(get<std::string>(v, key));
      } catch (const ArgumentError &e) {
        field_error(key, e.what());
      }
    } else if (key == "cut_mode") {
      const auto s = get<std::string>(v, key);
      if (s == "single")
        c.cut_mode = benders::CutMode::Single;
      else if (s == "multi")
        c.cut_mode = benders::CutMode::Multi;
      else
        field_error(key, "must be 'single' or 'multi'");
    } else if (key == "paper_split") {
      c.paper_split = get<bool>(v, key);
    } else if (key == "max_iterations") {
      c.max_iterations = get_positive(v, key);
    } else if (key == "extensive_limit") {
      c.extensive_limit = get<double>(v, key);
    } else if (key == "instance") {
      c.instance = parse_instance(v, base_dir);
    } else {
      field_error(key, "unknown field");
    }
  }
  if (!j.contains("seed"))
    detail::field_error("seed", "is required (runs are seeded explicitly)");
  if (!(c.xi >= 1e-7 && c.xi <= 1e-4))
    detail::field_error("xi", "must lie in [1e-7, 1e-4]");
  if (c.evaluation_scenarios &&
      std::find(c.scenario_counts.begin(), c.scenario_counts.end(), *c.evaluation_scenarios) == c.scenario_counts.end())
    detail::field_error("evaluation_scenarios", "must be one of scenario_counts");
  for (const auto &f : c.trip_files)
    if (!fs::exists(f))
      detail::field_error("trip_files", "file '" + f.string() + "' does not exist");
  return c;
}

inline RunConfig load_config(const fs::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

//! Reads "location_id,x,y" rows.
inline std::map<int, std::pair<double, double>> read_coords(const fs::path &file) {
  std::ifstream in(file);
  if (!in)
    throw ConfigError("cannot open coordinates file '" + file.string() + "'");
  std::string line;
  std::getline(in, line);
  std::map<int, std::pair<double, double>> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty())
      continue;
    auto f = csv::split(line);
    std::optional<long long> id;
    std::optional<double> x, y;
    if (f.size() >= 3) {
      id = csv::to_int(f[0]);
      x = csv::to_double(f[1]);
      y = csv::to_double(f[2]);
    }
    if (!id || !x || !y)
      throw ConfigError("coordinates file '" + file.string() + "': malformed line " + std::to_string(lineno));
    out[static_cast<int>(*id)] = {*x, *y};
  }
  return out;
}

//! Instance for the given locations (in order).
inline csrp::CsrpInstance build_instance(const InstanceSpec &spec, const std::vector<int> &ids) {
  const std::size_t R = ids.size();
  csrp::CsrpInstance inst;
  inst.location_ids = ids;
  inst.capacity = spec.capacity;
  if (spec.revenue.size() == 1)
    inst.revenue.assign(R, spec.revenue[0]);
  else if (spec.revenue.size() == R)
    inst.revenue = spec.revenue;
  else
    detail::field_error("instance.revenue", "needs 1 or " + std::to_string(R) + " values");

  if (spec.holding.random) {
    std::mt19937_64 rng(spec.holding_seed);
    std::normal_distribution<double> nd(spec.holding.mean, std::sqrt(spec.holding.variance));
    for (std::size_t i = 0; i < R; ++i)
      inst.holding.push_back(std::max(0.0, nd(rng)));
  } else if (spec.holding.values.size() == R) {
    inst.holding = spec.holding.values;
  } else {
    detail::field_error("instance.holding", "needs " + std::to_string(R) + " values");
  }

  if (spec.transfer.from_distance) {
    const auto coords = read_coords(spec.transfer.coords_file);
    std::vector<std::pair<double, double>> pts;
    for (int id : ids) {
      auto it = coords.find(id);
      if (it == coords.end())
        detail::field_error("instance.transfer", "no coordinates for location " + std::to_string(id));
      pts.push_back(it->second);
    }
    std::vector<std::vector<double>> dist(R, std::vector<double>(R, 0.0));
    double lo = kInf, hi = 0.0;
    for (std::size_t i = 0; i < R; ++i)
      for (std::size_t j = 0; j < R; ++j)
        if (i != j) {
          dist[i][j] = std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second);
          lo = std::min(lo, dist[i][j]);
          hi = std::max(hi, dist[i][j]);
        }
    inst.transfer.assign(R, std::vector<double>(R, 0.0));
    for (std::size_t i = 0; i < R; ++i)
      for (std::size_t j = 0; j < R; ++j)
        if (i != j)
          inst.transfer[i][j] = hi > lo ? spec.transfer.min + (spec.transfer.max - spec.transfer.min) *
                                                                  (dist[i][j] - lo) / (hi - lo)
                                        : spec.transfer.min;
  } else {
    if (spec.transfer.matrix.size() != R)
      detail::field_error("instance.transfer", "needs an " + std::to_string(R) + " x " + std::to_string(R) + " matrix");
    inst.transfer = spec.transfer.matrix;
  }
  try {
    inst.validate();
  } catch (const ArgumentError &e) {
    throw ConfigError(std::string("instance: ") + e.what());
  }
  return inst;
}

} // namespace ddksp::config
