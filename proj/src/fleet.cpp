#include "mesoroute/fleet.hpp"

#include <cmath>

namespace mesoroute {

NodeId VehicleBase::position_node(const RoadNetwork& net) const {
  if (cursor < 0) {
    if (route.empty()) return -1;
    return net.edge(route.edges.front()).from;
  }
  return net.edge(route.edges[static_cast<std::size_t>(cursor)]).to;
}

double bus_estimate_next(const BusState& bus, const RoadNetwork& net) {
  if (bus.phase != TripPhase::OnEdge) {
    throw std::logic_error("bus is not traversing an edge");
  }
  const Edge& e = net.edge(bus.route.edges[static_cast<std::size_t>(bus.cursor)]);
  return propagate_arrival(bus.entry_time, e.free_flow_time());
}

std::vector<EdgeId> remaining_route(const VehicleBase& v) {
  std::vector<EdgeId> rest;
  for (std::size_t i = static_cast<std::size_t>(v.cursor + 1); i < v.route.edges.size(); ++i) {
    rest.push_back(v.route.edges[i]);
  }
  return rest;
}

Deviation schedule_deviation(const BusState& bus, const RoadNetwork& net, NodeId stop_node,
                             Seconds actual, int tolerance) {
  for (const BusStopState& s : bus.stops) {
    if (s.node == stop_node) {
      Deviation d;
      d.deviation = actual - s.scheduled;
      d.on_time = std::llabs(d.deviation) <= tolerance;
      return d;
    }
  }
  throw UnknownStop(net.node(stop_node).label);
}

DemandStream::DemandStream(const DemandEntry& entry, SimParams::SpawnMode mode)
    : entry_(&entry), mode_(mode) {}

Seconds DemandStream::interval_due(std::int64_t n) const {
  return static_cast<Seconds>(std::floor(n * 60.0 / entry_->rate_per_min));
}

void DemandStream::collect(Seconds t, Seconds horizon, std::mt19937_64& rng,
                           std::vector<Spawn>& out) {
  if (entry_->rate_per_min <= 0.0 || t >= horizon) return;
  auto emit = [&] {
    Spawn s;
    s.vclass = entry_->vclass;
    const auto& ods = entry_->ods;
    const auto& od = ods.size() == 1
                         ? ods.front()
                         : ods[static_cast<std::size_t>(rng() % ods.size())];
    s.origin = od.first;
    s.destination = od.second;
    out.push_back(s);
  };

  if (mode_ == SimParams::SpawnMode::Interval) {
    while (interval_due(produced_) <= t) {
      emit();
      ++produced_;
    }
    return;
  }

  // Poisson: exponential gaps, quantized to whole-second ticks.
  const double per_second = entry_->rate_per_min / 60.0;
  auto draw_gap = [&] {
    const double u = (static_cast<double>(rng() >> 11) + 1.0) * 0x1p-53;
    return -std::log(u) / per_second;
  };
  if (!primed_) {
    next_due_ = draw_gap();
    primed_ = true;
  }
  while (static_cast<Seconds>(std::floor(next_due_)) <= t) {
    emit();
    next_due_ += draw_gap();
  }
}

std::vector<CavFlowView> cav_flow_views(const std::vector<CavState>& cavs,
                                        const RoadNetwork& net) {
  std::vector<CavFlowView> views(cavs.size());
  for (std::size_t i = 0; i < cavs.size(); ++i) {
    const CavState& cav = cavs[i];
    views[i].next_edge = -1;
    if (cav.phase != TripPhase::OnEdge) continue;
    const auto next = static_cast<std::size_t>(cav.cursor + 1);
    if (next >= cav.route.edges.size()) continue;
    const Edge& current = net.edge(cav.route.edges[static_cast<std::size_t>(cav.cursor)]);
    views[i].next_edge = cav.route.edges[next];
    views[i].next_entry_time = propagate_arrival(cav.entry_time, current.free_flow_time());
  }
  return views;
}

}  // namespace mesoroute
