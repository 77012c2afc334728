#pragma once

#include <cmath>
#include <deque>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mesoroute/network.hpp"
#include "mesoroute/scenario.hpp"

namespace mesoroute {

struct BprParams {
  double alpha = 0.15;
  double beta = 4.0;
};

class NonPositiveCapacity : public std::invalid_argument {
 public:
  explicit NonPositiveCapacity(double c)
      : std::invalid_argument("capacity must be positive, got " + std::to_string(c)) {}
};

// Volume-delay curve: tau0 * (1 + alpha * (flow/capacity)^beta).
// Zero flow returns tau0 exactly.
double bpr_time(double tau0, double flow, double capacity, const BprParams& p = {});

// Closed interval [center - half_width, center + half_width].
struct MonitorWindow {
  double center = 0.0;
  int half_width = 1;  // seconds, >= 1
};

inline bool in_window(double t, const MonitorWindow& w) {
  return std::abs(t - w.center) <= static_cast<double>(w.half_width);
}

// Minimal view of an in-transit CAV used by flow estimation: the edge it will
// enter next and when, propagated at free flow from its current entry time.
struct CavFlowView {
  EdgeId next_edge = -1;         // -1 when there is no next edge
  double next_entry_time = 0.0;  // entry at current edge + free-flow time
};

// 1 when the CAV's propagated next entry lands in the window and its next
// route edge is `target`; 0 otherwise.
int cav_entry_indicator(const CavFlowView& view, const MonitorWindow& w, EdgeId target);

// Anticipated dedicated-lane flow: qualifying CAV count / (2 * half_width).
double anticipated_dl_flow(std::span<const CavFlowView> cavs, const MonitorWindow& w,
                           EdgeId dl_edge);

// Ring of recent HV entry timestamps per edge, fed by the entry sensors.
class HvEntryLog {
 public:
  HvEntryLog() = default;
  explicit HvEntryLog(std::size_t edge_count) : entries_(edge_count) {}
  void record(EdgeId e, Seconds t);
  // Number of entries with timestamp in [t0, t1].
  int count_between(EdgeId e, Seconds t0, Seconds t1) const;
  void prune_before(Seconds t);

 private:
  std::vector<std::deque<Seconds>> entries_;
};

class NotAGplEdge : public std::invalid_argument {
 public:
  explicit NotAGplEdge(Label edge)
      : std::invalid_argument("edge " + std::to_string(edge) +
                              " has no general-purpose lane") {}
};

// Anticipated general-lane flow: (qualifying CAV count + extrapolated HV
// entries) / (2 * half_width). The HV term doubles the count observed over
// the trailing half of the window.
double anticipated_gpl_flow(const RoadNetwork& net, std::span<const CavFlowView> cavs,
                            const HvEntryLog& hv_log, const MonitorWindow& w,
                            EdgeId gpl_edge);

struct FlowEstimate {
  EdgeId edge = -1;
  LaneClass lane_class = LaneClass::Gpl;
  double anticipated_flow = 0.0;
  double anticipated_time = 0.0;
  double computed_at = 0.0;
};

FlowEstimate anticipated_edge_time(const RoadNetwork& net, EdgeId e, LaneClass lc,
                                   double flow, double computed_at, const BprParams& p);

// Per-edge, per-lane travel times used as router weights; NaN marks a lane
// that does not exist on the edge.
struct CostTable {
  std::vector<std::array<double, kLaneClasses>> lane_cost;
  double cost(EdgeId e, LaneClass c) const {
    return lane_cost[static_cast<std::size_t>(e)][static_cast<std::size_t>(c)];
  }
};

CostTable free_flow_costs(const RoadNetwork& net);

// Anticipated travel times for every lane at time t. Dedicated lanes use the
// `window_dl` monitor half-width over propagated CAV entries; general lanes
// use `window_gpl` plus the HV extrapolation. `uniform_window` overrides both
// half-widths when set.
CostTable anticipated_costs(const RoadNetwork& net, std::span<const CavFlowView> cavs,
                            const HvEntryLog& hv_log, double t, const SimParams& params,
                            std::optional<int> uniform_window = std::nullopt);

}  // namespace mesoroute
