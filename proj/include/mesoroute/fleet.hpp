#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mesoroute/flow.hpp"
#include "mesoroute/network.hpp"
#include "mesoroute/scenario.hpp"

namespace mesoroute {

enum class TripPhase : std::uint8_t { Pending, OnEdge, Done };

struct VehicleBase {
  int vehicle_id = -1;
  Route route;
  int cursor = -1;          // index of the current (or last finished) edge
  Seconds entry_time = 0;   // entry to the current edge
  Seconds exit_due = 0;
  Seconds spawn_time = 0;
  Seconds complete_time = -1;
  TripPhase phase = TripPhase::Pending;

  // Node the vehicle occupies while Pending: route start before the first
  // edge, otherwise the head of the edge just finished.
  NodeId position_node(const RoadNetwork& net) const;
};

struct CavState : VehicleBase {
  NodeId origin = -1;
  NodeId destination = -1;
  bool trigger_locked = false;  // claimed by a trigger until the next intersection
  double ff_baseline = 0.0;     // free-flow shortest trip time for the od
};

struct HvState : VehicleBase {
  NodeId origin = -1;
  NodeId destination = -1;
  double ff_baseline = 0.0;
};

struct BusStopState {
  NodeId node = -1;
  int route_index = -1;
  Seconds scheduled = 0;
  Seconds actual = -1;  // -1 until reached
};

struct BusState : VehicleBase {
  int line_index = 0;
  int run_index = 0;
  Seconds departure = 0;
  std::vector<BusStopState> stops;
  Seconds scheduled_dest = 0;
  Seconds stop_arrival_due = -1;  // stop on the current edge, if any
  bool stop_emitted = true;
};

// Free-flow arrival propagation: entry time plus the edge's free-flow time.
inline double propagate_arrival(Seconds entry_time, double free_flow_time) {
  return static_cast<double>(entry_time) + free_flow_time;
}

// Estimated arrival at the head of the bus's current edge, at free flow.
double bus_estimate_next(const BusState& bus, const RoadNetwork& net);

// Route portion still ahead of the vehicle's next intersection.
std::vector<EdgeId> remaining_route(const VehicleBase& v);

class UnknownStop : public std::out_of_range {
 public:
  explicit UnknownStop(Label node)
      : std::out_of_range("bus does not serve stop " + std::to_string(node)) {}
};

struct Deviation {
  Seconds deviation = 0;  // actual - scheduled
  bool on_time = false;
};

// Deviation at the given stop node; throws UnknownStop when the bus does not
// serve it.
Deviation schedule_deviation(const BusState& bus, const RoadNetwork& net, NodeId stop_node,
                             Seconds actual, int tolerance);

// Deterministic arrival generator for one demand entry. Interval mode spawns
// vehicle n at floor(n * 60 / rate); Poisson mode draws exponential gaps from
// the shared engine rng.
class DemandStream {
 public:
  struct Spawn {
    VehicleClass vclass = VehicleClass::Hv;
    NodeId origin = -1;
    NodeId destination = -1;
  };

  DemandStream(const DemandEntry& entry, SimParams::SpawnMode mode);

  // Appends the spawns due at tick t (spawns stop at the horizon).
  void collect(Seconds t, Seconds horizon, std::mt19937_64& rng, std::vector<Spawn>& out);

 private:
  Seconds interval_due(std::int64_t n) const;

  const DemandEntry* entry_;
  SimParams::SpawnMode mode_;
  std::int64_t produced_ = 0;
  double next_due_ = 0.0;  // poisson accumulator
  bool primed_ = false;
};

// Flow views aligned with the cav vector; vehicles that are not on an edge
// get next_edge = -1.
std::vector<CavFlowView> cav_flow_views(const std::vector<CavState>& cavs,
                                        const RoadNetwork& net);

}  // namespace mesoroute
