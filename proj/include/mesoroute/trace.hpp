#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mesoroute/scenario.hpp"

namespace mesoroute {

enum class EventKind : std::uint8_t {
  Meta,         // run header: policy, seed, scenario, horizon
  Spawn,        // vehicle created with its initial route
  Enter,        // vehicle enters an edge on a lane
  Exit,         // vehicle leaves an edge (realized = time spent on it)
  StopArrival,  // bus reaches a station; dwell starts
  Trigger,      // congestion trigger fired for a bus route edge
  Reroute,      // a CAV received a new route tail avoiding the edge
  RerouteSkip,  // a CAV qualified but was not reassigned
  DrpSwitch,    // self-interested CAV swapped to a cheaper tail
  Complete,     // vehicle finished its trip
};

const char* to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view s);

// One trace record. Fields outside the kind's set keep their defaults; all
// node/edge references use document labels.
struct TraceEvent {
  EventKind kind = EventKind::Meta;
  Seconds t = 0;
  std::int64_t seq = -1;

  int vehicle = -1;
  std::optional<VehicleClass> vclass;
  Label edge = -1;
  std::optional<LaneClass> lane;
  Label node = -1;
  Label origin = -1;
  Label destination = -1;
  std::vector<Label> route;

  int line = -1;
  int run = -1;
  Seconds sched = -1;
  Seconds deviation = 0;
  std::optional<bool> on_time;
  Seconds dwell = -1;
  Seconds realized = -1;

  int route_index = -1;
  double tau_hat = 0.0;
  double threshold = 0.0;
  std::string reason;

  std::string policy;
  std::uint64_t seed = 0;
  std::string scenario;
  Seconds horizon = -1;
};

// Compact single-line JSON with sorted keys; byte-stable for identical runs.
std::string to_json_line(const TraceEvent& ev);
TraceEvent parse_trace_line(const std::string& line);

void write_trace_file(const std::filesystem::path& file, std::span<const TraceEvent> events);
std::vector<TraceEvent> read_trace_file(const std::filesystem::path& file);

// Post-hoc consistency audit of a full run trace. Returns one message per
// violation; an empty result means the trace satisfies every invariant:
// ordering, spawn/enter/exit/complete lifecycle, edge chaining, lane
// legality per class, realized times bounded below by free flow (plus dwell
// on stop edges), one trigger per (bus, route index), and reroute tails that
// avoid the congested edge.
std::vector<std::string> audit_trace(const Scenario& sc, std::span<const TraceEvent> events);

}  // namespace mesoroute
