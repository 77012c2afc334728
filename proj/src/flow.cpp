#include "mesoroute/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mesoroute {

double bpr_time(double tau0, double flow, double capacity, const BprParams& p) {
  if (!(capacity > 0.0) || !std::isfinite(capacity)) throw NonPositiveCapacity(capacity);
  if (!(tau0 > 0.0) || !std::isfinite(tau0)) {
    throw std::invalid_argument("free-flow time must be positive");
  }
  if (flow < 0.0 || !std::isfinite(flow)) {
    throw std::invalid_argument("flow must be non-negative");
  }
  if (p.alpha < 0.0 || p.beta < 1.0) {
    throw std::invalid_argument("volume-delay parameters out of range");
  }
  if (flow == 0.0) return tau0;
  return tau0 * (1.0 + p.alpha * std::pow(flow / capacity, p.beta));
}

int cav_entry_indicator(const CavFlowView& view, const MonitorWindow& w, EdgeId target) {
  if (view.next_edge < 0 || view.next_edge != target) return 0;
  return in_window(view.next_entry_time, w) ? 1 : 0;
}

double anticipated_dl_flow(std::span<const CavFlowView> cavs, const MonitorWindow& w,
                           EdgeId dl_edge) {
  int count = 0;
  for (const auto& v : cavs) count += cav_entry_indicator(v, w, dl_edge);
  return count / (2.0 * w.half_width);
}

void HvEntryLog::record(EdgeId e, Seconds t) {
  entries_.at(static_cast<std::size_t>(e)).push_back(t);
}

int HvEntryLog::count_between(EdgeId e, Seconds t0, Seconds t1) const {
  const auto& q = entries_.at(static_cast<std::size_t>(e));
  int count = 0;
  for (auto it = q.rbegin(); it != q.rend(); ++it) {
    if (*it > t1) continue;
    if (*it < t0) break;  // entries are appended in time order
    ++count;
  }
  return count;
}

void HvEntryLog::prune_before(Seconds t) {
  for (auto& q : entries_) {
    while (!q.empty() && q.front() < t) q.pop_front();
  }
}

double anticipated_gpl_flow(const RoadNetwork& net, std::span<const CavFlowView> cavs,
                            const HvEntryLog& hv_log, const MonitorWindow& w,
                            EdgeId gpl_edge) {
  const Edge& e = net.edge(gpl_edge);
  if (!e.has_lane(LaneClass::Gpl)) throw NotAGplEdge(e.label);
  int count = 0;
  for (const auto& v : cavs) count += cav_entry_indicator(v, w, gpl_edge);
  const auto t1 = static_cast<Seconds>(std::floor(w.center));
  const int hv_recent = hv_log.count_between(gpl_edge, t1 - w.half_width, t1);
  return (count + 2.0 * hv_recent) / (2.0 * w.half_width);
}

FlowEstimate anticipated_edge_time(const RoadNetwork& net, EdgeId e, LaneClass lc,
                                   double flow, double computed_at, const BprParams& p) {
  const Lane* lane = net.edge(e).lane(lc);
  if (!lane) {
    throw std::invalid_argument("edge " + std::to_string(net.edge(e).label) +
                                " has no " + to_string(lc) + " lane");
  }
  FlowEstimate est;
  est.edge = e;
  est.lane_class = lc;
  est.anticipated_flow = flow;
  est.anticipated_time = bpr_time(lane->free_flow_time, flow, lane->capacity, p);
  est.computed_at = computed_at;
  return est;
}

CostTable free_flow_costs(const RoadNetwork& net) {
  CostTable table;
  table.lane_cost.resize(net.edge_count());
  for (const Edge& e : net.edges()) {
    for (std::size_t i = 0; i < kLaneClasses; ++i) {
      table.lane_cost[e.id][i] = e.lanes[i] ? e.lanes[i]->free_flow_time
                                            : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return table;
}

CostTable anticipated_costs(const RoadNetwork& net, std::span<const CavFlowView> cavs,
                            const HvEntryLog& hv_log, double t, const SimParams& params,
                            std::optional<int> uniform_window) {
  const int wdl = uniform_window.value_or(params.window_dl);
  const int wgpl = uniform_window.value_or(params.window_gpl);
  const BprParams bpr{params.alpha, params.beta};

  std::vector<int> dl_count(net.edge_count(), 0);
  std::vector<int> gpl_count(net.edge_count(), 0);
  const MonitorWindow dl_window{t, wdl};
  const MonitorWindow gpl_window{t, wgpl};
  for (const auto& v : cavs) {
    if (v.next_edge < 0) continue;
    if (in_window(v.next_entry_time, dl_window)) dl_count[v.next_edge] += 1;
    if (in_window(v.next_entry_time, gpl_window)) gpl_count[v.next_edge] += 1;
  }

  CostTable table;
  table.lane_cost.resize(net.edge_count());
  const auto t1 = static_cast<Seconds>(std::floor(t));
  for (const Edge& e : net.edges()) {
    auto& slot = table.lane_cost[e.id];
    slot.fill(std::numeric_limits<double>::quiet_NaN());
    if (const Lane* dl = e.lane(LaneClass::JointDl)) {
      const double flow = dl_count[e.id] / (2.0 * wdl);
      slot[static_cast<std::size_t>(LaneClass::JointDl)] =
          bpr_time(dl->free_flow_time, flow, dl->capacity, bpr);
    }
    if (const Lane* gpl = e.lane(LaneClass::Gpl)) {
      const int hv_recent = hv_log.count_between(e.id, t1 - wgpl, t1);
      const double flow = (gpl_count[e.id] + 2.0 * hv_recent) / (2.0 * wgpl);
      slot[static_cast<std::size_t>(LaneClass::Gpl)] =
          bpr_time(gpl->free_flow_time, flow, gpl->capacity, bpr);
    }
  }
  return table;
}

}  // namespace mesoroute
