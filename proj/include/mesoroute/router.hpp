#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mesoroute/fleet.hpp"
#include "mesoroute/flow.hpp"

namespace mesoroute {

enum class Policy { Srp, Drp, Coordinated, SrpNoJointDl };

std::optional<Policy> parse_policy(std::string_view s);
const char* to_string(Policy p);

struct PathResult {
  Route route;
  double cost = 0.0;
};

// Dijkstra over the cost table. Lane choice per edge is the cheapest
// permitted lane (dedicated lane wins ties). Determinism: the frontier pops
// the lowest node id among equal distances and equal-cost predecessors keep
// the lowest edge id. `lane_mask` can disable a lane class globally.
std::optional<PathResult> shortest_path(
    const RoadNetwork& net, const CostTable& costs, NodeId from, NodeId to,
    const std::vector<bool>& excluded, VehicleClass vclass,
    std::array<bool, kLaneClasses> lane_mask = {true, true});

// Static free-flow route for the class; `joint_dl_allowed` = false keeps CAVs
// off dedicated lanes. Returns nullopt when no usable route exists.
std::optional<PathResult> srp_route(const RoadNetwork& net, NodeId from, NodeId to,
                                    VehicleClass vclass, bool joint_dl_allowed);

struct TriggerCheck {
  EdgeId edge = -1;      // monitored dedicated-lane edge (next on the route)
  int route_index = -1;  // its index within the bus route
  Seconds center = 0;    // monitor window center: the bus's expected entry
  double tau_hat = 0.0;
  double threshold = 0.0;
  bool fired = false;
};

// Evaluates the congestion trigger for the bus's next route edge at time t.
// The monitor window is centered on the bus's expected entry to that edge
// (its scheduled exit from the current one, dwell included). Returns nullopt
// when the bus has no next edge or t lies outside the control horizon
// [entry, scheduled exit].
std::optional<TriggerCheck> detect_trigger(const RoadNetwork& net, const SimParams& params,
                                           const BusState& bus,
                                           std::span<const CavFlowView> views, Seconds t);

// CAV indices whose entry indicator for `edge` is 1 over the window centered
// at `center`. `selected` is ordered by propagated entry time (vehicle id
// breaks ties); CAVs already claimed by an earlier trigger land in `locked`
// instead.
struct RerouteSet {
  std::vector<int> selected;
  std::vector<int> locked;
};

RerouteSet identify_reroute_set(const std::vector<CavState>& cavs,
                                std::span<const CavFlowView> views, const SimParams& params,
                                Seconds center, EdgeId edge);

struct RerouteAssignment {
  int cav_index = -1;
  std::optional<Route> new_tail;  // from the replan node to the destination
};

// Sequential greedy reassignment: candidates are processed in `set.selected`
// order and every assignment updates the flow views seen by the next one.
// A CAV with no alternative keeps its route (new_tail = nullopt).
std::vector<RerouteAssignment> reoptimize_set(const RoadNetwork& net, const SimParams& params,
                                              const std::vector<CavState>& cavs,
                                              std::vector<CavFlowView> views,
                                              const HvEntryLog& hv_log, const RerouteSet& set,
                                              EdgeId excluded_edge, NodeId replan_node,
                                              Seconds t);

// Greedy self-interested check at an intersection: returns a replacement tail
// when a strictly cheaper alternative exists under `costs`.
std::optional<Route> drp_step(const RoadNetwork& net, const CostTable& costs,
                              const CavState& cav, NodeId at_node);

}  // namespace mesoroute
