#pragma once

// Synthetic trip data with bimodal daily demand. Each zone-day is quiet or
// busy and its count is Poisson with the zone's quiet or busy mean, so each
// zone's marginal is a two-Poisson mixture.

#include "ddksp/calendar.hpp"
#include "ddksp/common.hpp"
#include "ddksp/ingest.hpp"

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <random>
#include <vector>

namespace ddksp::synth {

struct BimodalOptions {
  Date start = *parse_date("2017-01-01");
  std::size_t days = 500;
  std::vector<int> zones{11, 22, 33, 44, 55, 66};
  double quiet_mean = 20.0;
  double busy_mean = 100.0;
  double busy_weight = 0.4;
  //! Per-zone means are scaled by a factor drawn uniformly from
  //! [1 - spread, 1 + spread].
  double spread = 0.2;
  //! One regime per day for all zones (true) or per zone (false). Shared
  //! regimes correlate zones, which per-zone fits cannot represent.
  bool shared_regime = false;
  std::uint64_t seed = 1;
};

inline ingest::DemandPanel bimodal_panel(const BimodalOptions &o) {
  if (o.days == 0 || o.zones.empty())
    throw ArgumentError("bimodal_panel: days and zones must be nonempty");
  if (!(o.busy_weight >= 0.0 && o.busy_weight <= 1.0))
    throw ArgumentError("bimodal_panel: busy_weight must lie in [0, 1]");
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> scale(1.0 - o.spread, 1.0 + o.spread);
  std::vector<double> quiet, busy;
  for (std::size_t i = 0; i < o.zones.size(); ++i) {
    quiet.push_back(o.quiet_mean * scale(rng));
    busy.push_back(o.busy_mean * scale(rng));
  }
  std::bernoulli_distribution regime(o.busy_weight);
  ingest::DemandPanel p;
  p.location_ids = o.zones;
  Date d = o.start;
  for (std::size_t k = 0; k < o.days; ++k, d += std::chrono::days{1}) {
    const bool day_busy = regime(rng);
    std::vector<std::int64_t> row;
    for (std::size_t i = 0; i < o.zones.size(); ++i) {
      const bool b = o.shared_regime ? day_busy : regime(rng);
      std::poisson_distribution<std::int64_t> pd(b ? busy[i] : quiet[i]);
      row.push_back(pd(rng));
    }
    p.dates.push_back(d);
    p.counts.push_back(std::move(row));
  }
  return p;
}

//! Writes one trip row per counted pickup in the TLC green-taxi layout.
//! Every `malformed_every`-th row (0 disables) gets its timestamps swapped so
//! that ingestion has something to reject.
inline void write_trips(std::ostream &os, const ingest::DemandPanel &p, std::uint64_t seed,
                        std::size_t malformed_every = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> second(0, 86399), minutes(4, 45);
  std::uniform_int_distribution<std::size_t> dest(0, p.location_ids.size() - 1);
  std::uniform_real_distribution<double> dist(0.3, 9.0);
  os << "VendorID,lpep_pickup_datetime,lpep_dropoff_datetime,PULocationID,DOLocationID,trip_distance,fare_amount\n";
  std::size_t row = 0;
  char buf[64];
  for (std::size_t d = 0; d < p.num_days(); ++d) {
    for (std::size_t i = 0; i < p.num_locations(); ++i) {
      for (std::int64_t k = 0; k < p.counts[d][i]; ++k) {
        const Timestamp pu = Timestamp(p.dates[d]) + std::chrono::seconds(second(rng));
        const Timestamp dropoff = pu + std::chrono::minutes(minutes(rng));
        const double miles = dist(rng);
        const int to = p.location_ids[dest(rng)];
        ++row;
        const bool bad = malformed_every && row % malformed_every == 0;
        std::snprintf(buf, sizeof buf, "%.2f,%.2f", miles, 2.5 + 2.5 * miles);
        os << "2," << format_timestamp(bad ? dropoff : pu) << ',' << format_timestamp(bad ? pu : dropoff) << ','
           << p.location_ids[i] << ',' << to << ',' << buf << '\n';
        if (bad) {
          // The swapped row is rejected; emit a valid copy so counts hold.
          std::snprintf(buf, sizeof buf, "%.2f,%.2f", miles, 2.5 + 2.5 * miles);
          os << "2," << format_timestamp(pu) << ',' << format_timestamp(dropoff) << ',' << p.location_ids[i] << ','
             << to << ',' << buf << '\n';
        }
      }
    }
  }
}

//! Random planar coordinates per zone: id,x,y.
inline void write_coords(std::ostream &os, const std::vector<int> &zones, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  os << "location_id,x,y\n";
  char buf[64];
  for (int z : zones) {
    const double x = u(rng), y = u(rng);
    std::snprintf(buf, sizeof buf, "%.3f,%.3f", x, y);
    os << z << ',' << buf << '\n';
  }
}

} // namespace ddksp::synth
