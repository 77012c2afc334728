#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mesoroute/trace.hpp"

namespace mesoroute {

// Nearest-rank percentile: the ceil(p * n)-th smallest value (p in (0, 1]).
// Throws std::invalid_argument on an empty sample.
double percentile_nearest_rank(std::vector<double> values, double p);

struct SeriesPoint {
  Seconds t = 0;
  double value = 0.0;
};

struct StationStats {
  Label node = -1;
  int arrivals = 0;
  int on_time = 0;
  double mean_deviation = 0.0;
  double pct_on_time = 0.0;  // 0..100, 0 when no arrivals
};

struct ClassStats {
  int spawned = 0;
  int completed = 0;
  double mean_travel = 0.0;
  double p90_travel = 0.0;
  double mean_delay = 0.0;  // travel minus the od's free-flow shortest time
  double p90_delay = 0.0;
};

struct MetricsReport {
  std::string policy;
  std::uint64_t seed = 0;
  Seconds horizon = 0;

  // Accumulated bus schedule delay over time: sum over buses of
  // max(0, min(t, arrival) - scheduled arrival); counts lateness while a run
  // is still on the road.
  std::vector<SeriesPoint> bus_delay;
  double bus_delay_at_horizon = 0.0;

  // Cumulative class travel time: integral of the active-vehicle count.
  std::vector<SeriesPoint> cum_cav_time;
  std::vector<SeriesPoint> cum_hv_time;

  std::vector<StationStats> stations;  // in stop order across lines
  StationStats destination;            // line terminus arrivals

  ClassStats cav, hv, bus;
};

// Builds the full report from a run trace. Time series are sampled every
// `sample_dt` seconds from 0 to the run horizon (the horizon itself always
// gets a sample). Free-flow baselines for trip delay are recomputed from the
// scenario, honoring the run policy's lane permissions.
MetricsReport accumulate_metrics(const Scenario& sc, std::span<const TraceEvent> events,
                                 int sample_dt = 60);

}  // namespace mesoroute
