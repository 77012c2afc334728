#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mesoroute/network.hpp"

namespace mesoroute {

using Seconds = std::int64_t;

struct SimParams {
  double alpha = 0.15;          // volume-delay coefficient
  double beta = 4.0;            // volume-delay exponent
  int window_dl = 30;           // monitor half-width for dedicated lanes, s
  int window_gpl = 60;          // monitor half-width for general lanes, s
  double lambda = 0.1;          // congestion trigger tolerance
  int on_time_tolerance = 60;   // |deviation| <= tolerance counts on time
  int dwell = 60;               // per-stop dwell, s
  enum class SpawnMode { Interval, Poisson } spawn_mode = SpawnMode::Interval;
  Seconds horizon = 3600;
};

struct StopSpec {
  NodeId node = -1;      // station node
  int route_index = -1;  // hosting edge's position within the line route
  Seconds offset = 0;    // scheduled arrival, relative to departure
};

struct BusLine {
  std::string name;
  Route route;                      // dedicated-lane edge sequence
  std::vector<NodeId> route_nodes;  // intersections, in travel order
  std::vector<StopSpec> stops;
  Seconds destination_offset = 0;
  std::vector<Seconds> departures;
};

struct DemandEntry {
  VehicleClass vclass = VehicleClass::Hv;
  double rate_per_min = 0.0;
  std::vector<std::pair<NodeId, NodeId>> ods;  // one picked per spawn
};

struct Scenario {
  int format_version = 1;
  std::string name;
  SimParams params;
  RoadNetwork net;
  std::vector<BusLine> bus_lines;
  std::vector<DemandEntry> demand;
};

// Parses and fully validates; throws ScenarioError on the first problem.
Scenario load_scenario(const std::filesystem::path& file);
Scenario load_scenario_text(const std::string& text);

// Diagnostic sweep without throwing; empty result means the file is clean.
std::vector<Diagnostic> validate_scenario_file(const std::filesystem::path& file);
std::vector<Diagnostic> validate_scenario_text(const std::string& text);

}  // namespace mesoroute
