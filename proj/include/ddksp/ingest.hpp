#pragma once

// Trip-record ingestion: parse delimiter-separated trip files, count pickups
// per zone per day, keep the busiest zones and split by date.

#include "ddksp/calendar.hpp"
#include "ddksp/common.hpp"
#include "ddksp/csv.hpp"

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ddksp::ingest {

struct TripRecord {
  Timestamp pickup_datetime;
  Timestamp dropoff_datetime;
  int pickup_location_id = 0;
  int dropoff_location_id = 0;
  double trip_distance = 0.0;
  double fare_amount = 0.0;
};

//! Header names of the six columns read from a trip file. Defaults follow the
//! NYC TLC green-taxi schema.
struct ColumnMap {
  std::string pickup_datetime = "lpep_pickup_datetime";
  std::string dropoff_datetime = "lpep_dropoff_datetime";
  std::string pickup_location_id = "PULocationID";
  std::string dropoff_location_id = "DOLocationID";
  std::string trip_distance = "trip_distance";
  std::string fare_amount = "fare_amount";
};

struct ParseResult {
  std::vector<TripRecord> records;
  std::size_t rows = 0;     // data rows read (header excluded, blank lines skipped)
  std::size_t rejected = 0; // rows dropped by the validity filters
  //! Kept rows with zero distance, negative fare, or an unreadable
  //! distance/fare field (stored as 0).
  std::size_t suspicious = 0;
};

inline ParseResult parse_trips(std::istream &in, const ColumnMap &schema = {}, char delim = ',') {
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!csv::trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header)
    throw EmptyInputError("parse_trips: input is empty");

  auto header = csv::split(line, delim);
  if (!header.empty() && header[0].size() >= 3 && header[0].compare(0, 3, "\xEF\xBB\xBF") == 0)
    header[0].erase(0, 3);
  auto column = [&](const std::string &name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw SchemaError("parse_trips: missing required column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_pu = column(schema.pickup_datetime);
  const std::size_t c_do = column(schema.dropoff_datetime);
  const std::size_t c_pl = column(schema.pickup_location_id);
  const std::size_t c_dl = column(schema.dropoff_location_id);
  const std::size_t c_dist = column(schema.trip_distance);
  const std::size_t c_fare = column(schema.fare_amount);
  const std::size_t needed = std::max({c_pu, c_do, c_pl, c_dl, c_dist, c_fare}) + 1;

  ParseResult out;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty())
      continue;
    ++out.rows;
    const auto f = csv::split(line, delim);
    if (f.size() < needed) {
      ++out.rejected;
      continue;
    }
    auto pu = parse_timestamp(f[c_pu]);
    auto dt = parse_timestamp(f[c_do]);
    auto pl = csv::to_int(f[c_pl]);
    auto dl = csv::to_int(f[c_dl]);
    if (!pu || !dt || !pl || !dl || *pl < 1 || *pu > *dt) {
      ++out.rejected;
      continue;
    }
    TripRecord r;
    r.pickup_datetime = *pu;
    r.dropoff_datetime = *dt;
    r.pickup_location_id = static_cast<int>(*pl);
    r.dropoff_location_id = static_cast<int>(*dl);
    auto dist = csv::to_double(f[c_dist]);
    auto fare = csv::to_double(f[c_fare]);
    r.trip_distance = dist.value_or(0.0);
    r.fare_amount = fare.value_or(0.0);
    if (!dist || !fare || r.trip_distance == 0.0 || r.fare_amount < 0.0)
      ++out.suspicious;
    out.records.push_back(r);
  }
  return out;
}

//! Drops records whose pickup date falls outside [first, last]; returns how
//! many were dropped. Raw extracts carry a handful of stray timestamps years
//! away from the file's month.
inline std::size_t filter_dates(std::vector<TripRecord> &records, Date first, Date last) {
  const auto before = records.size();
  std::erase_if(records, [&](const TripRecord &r) {
    const Date d = std::chrono::floor<std::chrono::days>(r.pickup_datetime);
    return d < first || d > last;
  });
  return before - records.size();
}

//! Daily pickup counts: one row per calendar date, one column per zone.
struct DemandPanel {
  std::vector<Date> dates;
  std::vector<int> location_ids;
  std::vector<std::vector<std::int64_t>> counts; // [date][location]

  std::size_t num_days() const { return dates.size(); }
  std::size_t num_locations() const { return location_ids.size(); }
  bool empty() const { return dates.empty(); }

  std::vector<double> mean_demand() const {
    std::vector<double> m(num_locations(), 0.0);
    if (dates.empty())
      return m;
    for (const auto &row : counts)
      for (std::size_t i = 0; i < row.size(); ++i)
        m[i] += static_cast<double>(row[i]);
    for (auto &v : m)
      v /= static_cast<double>(dates.size());
    return m;
  }

  //! Column i as decimals (the per-location history fed to density fits).
  std::vector<double> column(std::size_t i) const {
    std::vector<double> c;
    c.reserve(counts.size());
    for (const auto &row : counts)
      c.push_back(static_cast<double>(row.at(i)));
    return c;
  }

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto &row : counts)
      t += std::accumulate(row.begin(), row.end(), std::int64_t{0});
    return t;
  }

  void validate() const {
    if (counts.size() != dates.size())
      throw ArgumentError("DemandPanel: one count row per date required");
    for (const auto &row : counts) {
      if (row.size() != location_ids.size())
        throw ArgumentError("DemandPanel: one count column per location required");
      for (auto v : row)
        if (v < 0)
          throw ArgumentError("DemandPanel: negative count");
    }
    for (std::size_t d = 1; d < dates.size(); ++d)
      if (!(dates[d - 1] < dates[d]))
        throw ArgumentError("DemandPanel: dates must be strictly increasing");
    std::set<int> ids(location_ids.begin(), location_ids.end());
    if (ids.size() != location_ids.size())
      throw ArgumentError("DemandPanel: duplicate location id");
  }
};

//! Counts records by (pickup date, pickup zone). Every date between the
//! first and last pickup is present; zones are sorted ascending.
inline DemandPanel aggregate_daily(std::span<const TripRecord> records) {
  if (records.empty())
    throw EmptyInputError("aggregate_daily: no records");
  std::map<std::pair<Date, int>, std::int64_t> tally;
  std::set<int> zones;
  Date first = std::chrono::floor<std::chrono::days>(records.front().pickup_datetime);
  Date last = first;
  for (const auto &r : records) {
    const Date d = std::chrono::floor<std::chrono::days>(r.pickup_datetime);
    first = std::min(first, d);
    last = std::max(last, d);
    ++tally[{d, r.pickup_location_id}];
    zones.insert(r.pickup_location_id);
  }
  DemandPanel p;
  p.location_ids.assign(zones.begin(), zones.end());
  std::map<int, std::size_t> col;
  for (std::size_t i = 0; i < p.location_ids.size(); ++i)
    col[p.location_ids[i]] = i;
  for (Date d = first; d <= last; d += std::chrono::days{1}) {
    p.dates.push_back(d);
    p.counts.emplace_back(p.location_ids.size(), 0);
  }
  for (const auto &[key, n] : tally) {
    const auto row = static_cast<std::size_t>((key.first - first).count());
    p.counts[row][col[key.second]] = n;
  }
  return p;
}

//! Sub-panel restricted to the given column indices, in that order.
inline DemandPanel select_columns(const DemandPanel &panel, std::span<const std::size_t> cols) {
  DemandPanel out;
  out.dates = panel.dates;
  for (auto c : cols)
    out.location_ids.push_back(panel.location_ids.at(c));
  out.counts.reserve(panel.counts.size());
  for (const auto &row : panel.counts) {
    std::vector<std::int64_t> r;
    r.reserve(cols.size());
    for (auto c : cols)
      r.push_back(row[c]);
    out.counts.push_back(std::move(r));
  }
  return out;
}

//! The k zones with highest mean daily demand, busiest first; equal means
//! are ordered by ascending zone id.
inline DemandPanel top_k_locations(const DemandPanel &panel, std::size_t k) {
  if (k == 0 || k > panel.num_locations())
    throw ArgumentError("top_k_locations: k must be in [1, " + std::to_string(panel.num_locations()) + "]");
  // Sort on integer totals: equal means compare exactly.
  std::vector<std::int64_t> totals(panel.num_locations(), 0);
  for (const auto &row : panel.counts)
    for (std::size_t i = 0; i < row.size(); ++i)
      totals[i] += row[i];
  std::vector<std::size_t> order(panel.num_locations());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (totals[a] != totals[b])
      return totals[a] > totals[b];
    return panel.location_ids[a] < panel.location_ids[b];
  });
  order.resize(k);
  return select_columns(panel, order);
}

//! Rows dated on or before the cutoff go to train, the rest to test. Both
//! halves must be nonempty.
inline std::pair<DemandPanel, DemandPanel> split_by_date(const DemandPanel &panel, Date cutoff) {
  if (panel.empty() || cutoff < panel.dates.front() || !(cutoff < panel.dates.back()))
    throw ArgumentError("split_by_date: cutoff " + format_date(cutoff) +
                        " must lie in [first date, last date) of the panel");
  DemandPanel train, test;
  train.location_ids = test.location_ids = panel.location_ids;
  for (std::size_t d = 0; d < panel.dates.size(); ++d) {
    auto &dst = panel.dates[d] <= cutoff ? train : test;
    dst.dates.push_back(panel.dates[d]);
    dst.counts.push_back(panel.counts[d]);
  }
  return {std::move(train), std::move(test)};
}

//! CSV: header "date,<id>,<id>,...", then one ISO date row per day.
inline void write_panel_csv(std::ostream &os, const DemandPanel &p) {
  os << "date";
  for (int id : p.location_ids)
    os << ',' << id;
  os << '\n';
  for (std::size_t d = 0; d < p.dates.size(); ++d) {
    os << format_date(p.dates[d]);
    for (auto v : p.counts[d])
      os << ',' << v;
    os << '\n';
  }
}

inline DemandPanel read_panel_csv(std::istream &is) {
  std::string line;
  if (!std::getline(is, line))
    throw EmptyInputError("read_panel_csv: empty input");
  const auto head = csv::split(line);
  if (head.empty() || head[0] != "date")
    throw SchemaError("read_panel_csv: first column must be 'date'");
  DemandPanel p;
  for (std::size_t i = 1; i < head.size(); ++i) {
    auto id = csv::to_int(head[i]);
    if (!id)
      throw SchemaError("read_panel_csv: bad location id '" + head[i] + "'");
    p.location_ids.push_back(static_cast<int>(*id));
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (csv::trim(line).empty())
      continue;
    const auto f = csv::split(line);
    auto d = parse_date(f[0]);
    if (!d || f.size() != head.size())
      throw SchemaError("read_panel_csv: malformed row at line " + std::to_string(lineno));
    std::vector<std::int64_t> row;
    for (std::size_t i = 1; i < f.size(); ++i) {
      auto v = csv::to_int(f[i]);
      if (!v)
        throw SchemaError("read_panel_csv: bad count at line " + std::to_string(lineno));
      row.push_back(*v);
    }
    p.dates.push_back(*d);
    p.counts.push_back(std::move(row));
  }
  p.validate();
  return p;
}

} // namespace ddksp::ingest
