#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "mesoroute/fleet.hpp"
#include "mesoroute/router.hpp"
#include "mesoroute/trace.hpp"

namespace mesoroute {

struct RunConfig {
  Policy policy = Policy::Coordinated;
  std::uint64_t seed = 1;
  std::optional<Seconds> horizon;
  std::optional<double> lambda;
  std::optional<int> window_dl;
  std::optional<int> window_gpl;
  // Set together to replace the scenario demand with a two-class mix totaling
  // `total_per_hour` vehicles/h at `cav_penetration` CAV share. The od sets
  // come from the scenario's first entry of each class.
  std::optional<double> cav_penetration;
  std::optional<double> total_per_hour;
  Seconds drain_limit = 86400;  // hard stop this long past the horizon
};

// Integer traversal time for a lane under the sensed flow: the volume-delay
// time rounded to whole seconds, never below free flow.
Seconds realized_time(const Lane& lane, double flow, const BprParams& p);

// Event-stepped world advancing one second per step. Each tick runs three
// phases: spawning (bus departures, demand arrivals), policy (congestion
// triggers and coordinated reassignment), movement (stop arrivals, edge
// exits with greedy per-node switching under the self-interested policy,
// then edge entries). Identical scenario + config reproduce the trace
// byte for byte.
class World {
 public:
  World(const Scenario& sc, const RunConfig& cfg);

  void step();
  bool finished() const;
  void run();  // step() until finished()

  Seconds now() const { return t_; }
  int active_vehicles() const { return active_; }
  const SimParams& params() const { return params_; }
  Policy policy() const { return cfg_.policy; }

  const std::vector<TraceEvent>& trace() const { return trace_; }
  std::vector<TraceEvent> take_trace() { return std::move(trace_); }

  const std::vector<CavState>& cavs() const { return cavs_; }
  const std::vector<HvState>& hvs() const { return hvs_; }
  const std::vector<BusState>& buses() const { return buses_; }

 private:
  struct Ref {
    VehicleClass vclass;
    int index;
  };

  void spawn_buses();
  void spawn_demand();
  void policy_phase();
  void movement_phase();
  void enter_edge(int vid);
  void splice_tail(VehicleBase& v, const Route& tail);
  VehicleBase& base(int vid);
  const CostTable& tick_costs();
  double baseline_cost(VehicleClass vc, NodeId o, NodeId d, bool dl_allowed);
  Route initial_route(VehicleClass vc, NodeId o, NodeId d);
  double sensed_flow(EdgeId e, LaneClass lc) const;
  double sensed_flow_window(EdgeId e, LaneClass lc, int window) const;
  double sensed_flow_window(EdgeId e, LaneClass lc, int window, Seconds end) const;
  CostTable sensed_costs(Seconds end) const;
  std::vector<Label> edge_labels(const std::vector<EdgeId>& edges, std::size_t from = 0) const;
  TraceEvent& emit(EventKind kind);

  const Scenario* sc_;
  RunConfig cfg_;
  SimParams params_;
  std::vector<DemandEntry> demand_;
  std::vector<DemandStream> streams_;
  std::mt19937_64 rng_;

  Seconds t_ = 0;
  std::int64_t seq_ = 0;
  int active_ = 0;

  std::vector<CavState> cavs_;
  std::vector<HvState> hvs_;
  std::vector<BusState> buses_;
  std::vector<Ref> registry_;  // vehicle id -> class vector slot

  std::vector<std::array<std::deque<Seconds>, kLaneClasses>> sensors_;
  HvEntryLog hv_log_;
  std::set<std::pair<int, int>> fired_;  // one-shot (bus id, route index)
  std::optional<Seconds> costs_tick_;
  CostTable costs_cache_;
  std::map<std::tuple<int, NodeId, NodeId, bool>, double> baselines_;

  std::vector<int> entry_queue_;
  std::vector<DemandStream::Spawn> spawn_buffer_;
  std::vector<TraceEvent> trace_;
};

}  // namespace mesoroute
