#include "mesoroute/router.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <queue>

namespace mesoroute {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTriggerEps = 1e-12;
constexpr double kImproveEps = 1e-9;
}  // namespace

std::optional<Policy> parse_policy(std::string_view s) {
  if (s == "srp") return Policy::Srp;
  if (s == "drp") return Policy::Drp;
  if (s == "coordinated") return Policy::Coordinated;
  if (s == "srp-no-joint-dl") return Policy::SrpNoJointDl;
  return std::nullopt;
}

const char* to_string(Policy p) {
  switch (p) {
    case Policy::Srp:
      return "srp";
    case Policy::Drp:
      return "drp";
    case Policy::Coordinated:
      return "coordinated";
    case Policy::SrpNoJointDl:
      return "srp-no-joint-dl";
  }
  return "?";
}

std::optional<PathResult> shortest_path(const RoadNetwork& net, const CostTable& costs,
                                        NodeId from, NodeId to,
                                        const std::vector<bool>& excluded, VehicleClass vclass,
                                        std::array<bool, kLaneClasses> lane_mask) {
  const auto n = net.node_count();
  assert(from >= 0 && static_cast<std::size_t>(from) < n);
  assert(to >= 0 && static_cast<std::size_t>(to) < n);
  if (from == to) return PathResult{};

  std::vector<double> dist(n, kInf);
  std::vector<char> settled(n, 0);
  std::vector<EdgeId> pred_edge(n, -1);
  std::vector<LaneClass> pred_lane(n, LaneClass::Gpl);

  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[static_cast<std::size_t>(from)] = 0.0;
  pq.emplace(0.0, from);

  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (settled[static_cast<std::size_t>(u)]) continue;
    settled[static_cast<std::size_t>(u)] = 1;
    if (u == to) break;
    for (EdgeId e : net.out_edges(u)) {
      if (excluded[static_cast<std::size_t>(e)]) continue;
      const Edge& ed = net.edge(e);
      // Cheapest permitted lane on this edge; dedicated lane wins ties.
      double w = kInf;
      LaneClass chosen = LaneClass::Gpl;
      for (std::size_t li = 0; li < kLaneClasses; ++li) {
        const auto lc = static_cast<LaneClass>(li);
        if (!lane_mask[li] || !lane_permitted(vclass, lc) || !ed.has_lane(lc)) continue;
        const double lw = costs.cost(e, lc);
        if (std::isnan(lw) || lw >= w) continue;
        w = lw;
        chosen = lc;
      }
      if (w == kInf) continue;
      const auto v = static_cast<std::size_t>(ed.to);
      const double nd = d + w;
      if (nd < dist[v]) {
        dist[v] = nd;
        pred_edge[v] = e;
        pred_lane[v] = chosen;
        pq.emplace(nd, ed.to);
      } else if (nd == dist[v] && e < pred_edge[v]) {
        pred_edge[v] = e;
        pred_lane[v] = chosen;
      }
    }
  }

  if (dist[static_cast<std::size_t>(to)] == kInf) return std::nullopt;

  PathResult out;
  out.cost = dist[static_cast<std::size_t>(to)];
  for (NodeId v = to; v != from;) {
    const auto vi = static_cast<std::size_t>(v);
    out.route.edges.push_back(pred_edge[vi]);
    out.route.lane_choice.push_back(pred_lane[vi]);
    v = net.edge(pred_edge[vi]).from;
  }
  std::reverse(out.route.edges.begin(), out.route.edges.end());
  std::reverse(out.route.lane_choice.begin(), out.route.lane_choice.end());
  return out;
}

std::optional<PathResult> srp_route(const RoadNetwork& net, NodeId from, NodeId to,
                                    VehicleClass vclass, bool joint_dl_allowed) {
  const CostTable costs = free_flow_costs(net);
  std::array<bool, kLaneClasses> mask{true, true};
  if (!joint_dl_allowed && vclass == VehicleClass::Cav)
    mask[static_cast<std::size_t>(LaneClass::JointDl)] = false;
  return shortest_path(net, costs, from, to, no_excluded_edges(net), vclass, mask);
}

std::optional<TriggerCheck> detect_trigger(const RoadNetwork& net, const SimParams& params,
                                           const BusState& bus,
                                           std::span<const CavFlowView> views, Seconds t) {
  if (bus.phase != TripPhase::OnEdge) return std::nullopt;
  const auto next = static_cast<std::size_t>(bus.cursor) + 1;
  if (next >= bus.route.size()) return std::nullopt;

  // Active only while the bus traverses its current edge.
  if (t < bus.entry_time || t > bus.exit_due) return std::nullopt;

  TriggerCheck check;
  check.edge = bus.route.edges[next];
  check.route_index = static_cast<int>(next);
  check.center = bus.exit_due;
  const Lane* dl = net.edge(check.edge).lane(LaneClass::JointDl);
  assert(dl != nullptr);

  const MonitorWindow w{static_cast<double>(check.center), params.window_dl};
  const double flow = anticipated_dl_flow(views, w, check.edge);
  check.tau_hat = bpr_time(dl->free_flow_time, flow, dl->capacity, {params.alpha, params.beta});
  check.threshold = (1.0 + params.lambda) * dl->free_flow_time;
  check.fired = check.tau_hat >= check.threshold - kTriggerEps;
  return check;
}

RerouteSet identify_reroute_set(const std::vector<CavState>& cavs,
                                std::span<const CavFlowView> views, const SimParams& params,
                                Seconds center, EdgeId edge) {
  assert(views.size() == cavs.size());
  const MonitorWindow w{static_cast<double>(center), params.window_dl};
  RerouteSet set;
  for (std::size_t i = 0; i < cavs.size(); ++i) {
    if (cav_entry_indicator(views[i], w, edge) != 1) continue;
    (cavs[i].trigger_locked ? set.locked : set.selected).push_back(static_cast<int>(i));
  }
  const auto by_entry = [&](int a, int b) {
    const auto ai = static_cast<std::size_t>(a);
    const auto bi = static_cast<std::size_t>(b);
    if (views[ai].next_entry_time != views[bi].next_entry_time)
      return views[ai].next_entry_time < views[bi].next_entry_time;
    return cavs[ai].vehicle_id < cavs[bi].vehicle_id;
  };
  std::sort(set.selected.begin(), set.selected.end(), by_entry);
  std::sort(set.locked.begin(), set.locked.end(), by_entry);
  return set;
}

std::vector<RerouteAssignment> reoptimize_set(const RoadNetwork& net, const SimParams& params,
                                              const std::vector<CavState>& cavs,
                                              std::vector<CavFlowView> views,
                                              const HvEntryLog& hv_log, const RerouteSet& set,
                                              EdgeId excluded_edge, NodeId replan_node,
                                              Seconds t) {
  std::vector<bool> excluded = no_excluded_edges(net);
  excluded[static_cast<std::size_t>(excluded_edge)] = true;

  std::vector<RerouteAssignment> out;
  out.reserve(set.selected.size());
  for (int idx : set.selected) {
    const CavState& cav = cavs[static_cast<std::size_t>(idx)];
    // Anticipated costs reflect every assignment made so far.
    const CostTable costs = anticipated_costs(net, views, hv_log, static_cast<double>(t), params);
    auto found =
        shortest_path(net, costs, replan_node, cav.destination, excluded, VehicleClass::Cav);
    RerouteAssignment a;
    a.cav_index = idx;
    if (found) {
      auto& view = views[static_cast<std::size_t>(idx)];
      view.next_edge = found->route.empty() ? -1 : found->route.edges.front();
      a.new_tail = std::move(found->route);
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::optional<Route> drp_step(const RoadNetwork& net, const CostTable& costs,
                              const CavState& cav, NodeId at_node) {
  if (at_node == cav.destination) return std::nullopt;
  double current = 0.0;
  for (std::size_t i = static_cast<std::size_t>(cav.cursor) + 1; i < cav.route.size(); ++i)
    current += costs.cost(cav.route.edges[i], cav.route.lane_choice[i]);
  auto best =
      shortest_path(net, costs, at_node, cav.destination, no_excluded_edges(net), VehicleClass::Cav);
  if (!best || best->cost >= current - kImproveEps) return std::nullopt;
  return std::move(best->route);
}

}  // namespace mesoroute
