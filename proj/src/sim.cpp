#include "mesoroute/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace mesoroute {

Seconds realized_time(const Lane& lane, double flow, const BprParams& p) {
  const double tau = bpr_time(lane.free_flow_time, flow, lane.capacity, p);
  const auto floor_ff = static_cast<Seconds>(std::ceil(lane.free_flow_time - 1e-9));
  return std::max<Seconds>(std::max<Seconds>(1, floor_ff), std::llround(tau));
}

World::World(const Scenario& sc, const RunConfig& cfg) : sc_(&sc), cfg_(cfg), params_(sc.params) {
  if (cfg_.horizon) params_.horizon = *cfg_.horizon;
  if (cfg_.lambda) params_.lambda = *cfg_.lambda;
  if (cfg_.window_dl) params_.window_dl = *cfg_.window_dl;
  if (cfg_.window_gpl) params_.window_gpl = *cfg_.window_gpl;
  if (params_.horizon <= 0 || params_.window_dl < 1 || params_.window_gpl < 1 ||
      params_.lambda < 0.0)
    throw std::invalid_argument("bad run overrides");

  if (cfg_.cav_penetration.has_value() != cfg_.total_per_hour.has_value())
    throw std::invalid_argument("penetration and total demand must be set together");
  if (cfg_.cav_penetration) {
    const double p = *cfg_.cav_penetration;
    const double total = *cfg_.total_per_hour;
    if (p < 0.0 || p > 1.0 || total < 0.0)
      throw std::invalid_argument("penetration must be in [0,1], total demand nonnegative");
    const DemandEntry* cav = nullptr;
    const DemandEntry* hv = nullptr;
    for (const auto& d : sc.demand) {
      if (!cav && d.vclass == VehicleClass::Cav) cav = &d;
      if (!hv && d.vclass == VehicleClass::Hv) hv = &d;
    }
    if (!cav || !hv)
      throw std::invalid_argument("scenario lacks a demand entry for each class");
    demand_.push_back({VehicleClass::Cav, total * p / 60.0, cav->ods});
    demand_.push_back({VehicleClass::Hv, total * (1.0 - p) / 60.0, hv->ods});
  } else {
    demand_ = sc.demand;
  }
  streams_.reserve(demand_.size());
  for (const auto& d : demand_) streams_.emplace_back(d, params_.spawn_mode);

  rng_.seed(cfg_.seed);
  sensors_.resize(sc.net.edge_count());
  hv_log_ = HvEntryLog(sc.net.edge_count());

  TraceEvent& meta = emit(EventKind::Meta);
  meta.policy = to_string(cfg_.policy);
  meta.seed = cfg_.seed;
  meta.scenario = sc.name;
  meta.horizon = params_.horizon;
}

TraceEvent& World::emit(EventKind kind) {
  TraceEvent ev;
  ev.kind = kind;
  ev.t = t_;
  ev.seq = seq_++;
  trace_.push_back(std::move(ev));
  return trace_.back();
}

VehicleBase& World::base(int vid) {
  const Ref r = registry_.at(static_cast<std::size_t>(vid));
  switch (r.vclass) {
    case VehicleClass::Cav:
      return cavs_[static_cast<std::size_t>(r.index)];
    case VehicleClass::Hv:
      return hvs_[static_cast<std::size_t>(r.index)];
    case VehicleClass::Bus:
      return buses_[static_cast<std::size_t>(r.index)];
  }
  throw std::logic_error("bad vehicle registry entry");
}

std::vector<Label> World::edge_labels(const std::vector<EdgeId>& edges, std::size_t from) const {
  std::vector<Label> out;
  out.reserve(edges.size() - from);
  for (std::size_t i = from; i < edges.size(); ++i)
    out.push_back(sc_->net.edge(edges[i]).label);
  return out;
}

double World::sensed_flow(EdgeId e, LaneClass lc) const {
  const int w = lc == LaneClass::JointDl ? params_.window_dl : params_.window_gpl;
  return sensed_flow_window(e, lc, w);
}

double World::sensed_flow_window(EdgeId e, LaneClass lc, int window) const {
  return sensed_flow_window(e, lc, window, t_);
}

double World::sensed_flow_window(EdgeId e, LaneClass lc, int window, Seconds end) const {
  const auto& log = sensors_[static_cast<std::size_t>(e)][static_cast<std::size_t>(lc)];
  const Seconds lo = end - window;
  int count = 0;
  for (auto it = log.rbegin(); it != log.rend(); ++it) {
    if (*it >= end) continue;  // entries at or after the cutoff do not count
    if (*it < lo) break;
    ++count;
  }
  return static_cast<double>(count) / static_cast<double>(window);
}

CostTable World::sensed_costs(Seconds end) const {
  // Costs from what the roadside sensors measured over the monitoring window
  // ending at `end`, not from planned entries.
  CostTable table;
  table.lane_cost.resize(sc_->net.edge_count());
  const BprParams bpr{params_.alpha, params_.beta};
  for (const Edge& e : sc_->net.edges()) {
    auto& slot = table.lane_cost[e.id];
    slot.fill(std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < kLaneClasses; ++i) {
      const Lane* lane = e.lane(static_cast<LaneClass>(i));
      if (!lane) continue;
      const double flow =
          sensed_flow_window(e.id, static_cast<LaneClass>(i), params_.window_gpl, end);
      slot[i] = bpr_time(lane->free_flow_time, flow, lane->capacity, bpr);
    }
  }
  return table;
}

const CostTable& World::tick_costs() {
  if (cfg_.policy == Policy::Drp) {
    // Sensor aggregates publish once per monitoring window. Every self-routed
    // vehicle deciding inside an epoch reads the same frozen bin, so they
    // chase the currently-cheap road together and meet the congestion their
    // own shift induced only when the next bin publishes.
    const Seconds w = params_.window_gpl;
    const Seconds epoch = t_ - t_ % w;
    if (!costs_tick_ || *costs_tick_ != epoch) {
      costs_cache_ = sensed_costs(epoch);
      costs_tick_ = epoch;
    }
    return costs_cache_;
  }
  if (!costs_tick_ || *costs_tick_ != t_) {
    const auto views = cav_flow_views(cavs_, sc_->net);
    costs_cache_ = anticipated_costs(sc_->net, views, hv_log_, static_cast<double>(t_),
                                     params_, std::nullopt);
    costs_tick_ = t_;
  }
  return costs_cache_;
}

double World::baseline_cost(VehicleClass vc, NodeId o, NodeId d, bool dl_allowed) {
  const auto key = std::make_tuple(static_cast<int>(vc), o, d, dl_allowed);
  const auto it = baselines_.find(key);
  if (it != baselines_.end()) return it->second;
  const auto best = srp_route(sc_->net, o, d, vc, dl_allowed);
  if (!best) throw std::runtime_error("no route for a spawned vehicle");
  baselines_.emplace(key, best->cost);
  return best->cost;
}

Route World::initial_route(VehicleClass vc, NodeId o, NodeId d) {
  std::optional<PathResult> best;
  if (vc == VehicleClass::Hv || cfg_.policy == Policy::Srp) {
    best = srp_route(sc_->net, o, d, vc, true);
  } else if (cfg_.policy == Policy::SrpNoJointDl) {
    best = srp_route(sc_->net, o, d, vc, false);
  } else {
    best = shortest_path(sc_->net, tick_costs(), o, d, no_excluded_edges(sc_->net),
                         VehicleClass::Cav);
  }
  if (!best) throw std::runtime_error("no route for a spawned vehicle");
  return std::move(best->route);
}

void World::spawn_buses() {
  const auto& net = sc_->net;
  for (std::size_t li = 0; li < sc_->bus_lines.size(); ++li) {
    const BusLine& line = sc_->bus_lines[li];
    for (std::size_t ri = 0; ri < line.departures.size(); ++ri) {
      const Seconds dep = line.departures[ri];
      if (dep != t_ || dep > params_.horizon) continue;
      BusState bus;
      bus.vehicle_id = static_cast<int>(registry_.size());
      bus.route = line.route;
      bus.line_index = static_cast<int>(li);
      bus.run_index = static_cast<int>(ri);
      bus.departure = dep;
      bus.scheduled_dest = dep + line.destination_offset;
      bus.spawn_time = t_;
      for (const StopSpec& st : line.stops)
        bus.stops.push_back({st.node, st.route_index, dep + st.offset, -1});
      registry_.push_back({VehicleClass::Bus, static_cast<int>(buses_.size())});
      ++active_;

      TraceEvent& ev = emit(EventKind::Spawn);
      ev.vehicle = bus.vehicle_id;
      ev.vclass = VehicleClass::Bus;
      ev.origin = net.node(net.edge(bus.route.edges.front()).from).label;
      ev.destination = net.node(net.edge(bus.route.edges.back()).to).label;
      ev.route = edge_labels(bus.route.edges);
      ev.line = bus.line_index;
      ev.run = bus.run_index;
      ev.sched = bus.scheduled_dest;

      entry_queue_.push_back(bus.vehicle_id);
      buses_.push_back(std::move(bus));
    }
  }
}

void World::spawn_demand() {
  const auto& net = sc_->net;
  spawn_buffer_.clear();
  for (auto& stream : streams_) stream.collect(t_, params_.horizon, rng_, spawn_buffer_);
  for (const auto& sp : spawn_buffer_) {
    const int vid = static_cast<int>(registry_.size());
    const bool dl_allowed = cfg_.policy != Policy::SrpNoJointDl;
    Route route = initial_route(sp.vclass, sp.origin, sp.destination);

    TraceEvent& ev = emit(EventKind::Spawn);
    ev.vehicle = vid;
    ev.vclass = sp.vclass;
    ev.origin = net.node(sp.origin).label;
    ev.destination = net.node(sp.destination).label;
    ev.route = edge_labels(route.edges);

    const bool trivial = route.empty();
    if (sp.vclass == VehicleClass::Cav) {
      CavState cav;
      cav.vehicle_id = vid;
      cav.origin = sp.origin;
      cav.destination = sp.destination;
      cav.route = std::move(route);
      cav.spawn_time = t_;
      cav.ff_baseline = baseline_cost(VehicleClass::Cav, sp.origin, sp.destination, dl_allowed);
      registry_.push_back({VehicleClass::Cav, static_cast<int>(cavs_.size())});
      cavs_.push_back(std::move(cav));
    } else {
      HvState hv;
      hv.vehicle_id = vid;
      hv.origin = sp.origin;
      hv.destination = sp.destination;
      hv.route = std::move(route);
      hv.spawn_time = t_;
      hv.ff_baseline = baseline_cost(VehicleClass::Hv, sp.origin, sp.destination, true);
      registry_.push_back({VehicleClass::Hv, static_cast<int>(hvs_.size())});
      hvs_.push_back(std::move(hv));
    }

    if (trivial) {
      VehicleBase& v = base(vid);
      v.phase = TripPhase::Done;
      v.complete_time = t_;
      TraceEvent& done = emit(EventKind::Complete);
      done.vehicle = vid;
      done.node = net.node(sp.destination).label;
    } else {
      ++active_;
      entry_queue_.push_back(vid);
    }
  }
}

void World::splice_tail(VehicleBase& v, const Route& tail) {
  const auto keep = static_cast<std::size_t>(v.cursor) + 1;
  v.route.edges.resize(keep);
  v.route.lane_choice.resize(keep);
  v.route.edges.insert(v.route.edges.end(), tail.edges.begin(), tail.edges.end());
  v.route.lane_choice.insert(v.route.lane_choice.end(), tail.lane_choice.begin(),
                             tail.lane_choice.end());
}

void World::policy_phase() {
  if (cfg_.policy != Policy::Coordinated) return;
  const auto& net = sc_->net;
  for (auto& bus : buses_) {
    if (bus.phase != TripPhase::OnEdge) continue;
    const std::pair<int, int> key{bus.vehicle_id, bus.cursor + 1};
    if (fired_.count(key)) continue;
    const auto views = cav_flow_views(cavs_, net);
    const auto check = detect_trigger(net, params_, bus, views, t_);
    if (!check || !check->fired) continue;
    fired_.insert(key);

    const Label edge_label = net.edge(check->edge).label;
    TraceEvent& tr = emit(EventKind::Trigger);
    tr.vehicle = bus.vehicle_id;
    tr.edge = edge_label;
    tr.route_index = check->route_index;
    tr.tau_hat = check->tau_hat;
    tr.threshold = check->threshold;

    const auto set = identify_reroute_set(cavs_, views, params_, check->center, check->edge);
    for (int idx : set.locked) {
      TraceEvent& ev = emit(EventKind::RerouteSkip);
      ev.vehicle = cavs_[static_cast<std::size_t>(idx)].vehicle_id;
      ev.edge = edge_label;
      ev.reason = "locked";
    }
    const NodeId replan = net.edge(check->edge).from;
    const auto assignments =
        reoptimize_set(net, params_, cavs_, views, hv_log_, set, check->edge, replan, t_);
    for (const auto& a : assignments) {
      CavState& cav = cavs_[static_cast<std::size_t>(a.cav_index)];
      if (!a.new_tail) {
        TraceEvent& ev = emit(EventKind::RerouteSkip);
        ev.vehicle = cav.vehicle_id;
        ev.edge = edge_label;
        ev.reason = "no-alternative";
        continue;
      }
      splice_tail(cav, *a.new_tail);
      cav.trigger_locked = true;
      TraceEvent& ev = emit(EventKind::Reroute);
      ev.vehicle = cav.vehicle_id;
      ev.node = net.node(replan).label;
      ev.edge = edge_label;
      ev.route = edge_labels(a.new_tail->edges);
    }
  }
}

void World::movement_phase() {
  const auto& net = sc_->net;

  // Buses reaching a station on their current edge.
  for (auto& bus : buses_) {
    if (bus.phase != TripPhase::OnEdge || bus.stop_emitted || bus.stop_arrival_due != t_)
      continue;
    for (auto& st : bus.stops) {
      if (st.route_index != bus.cursor) continue;
      st.actual = t_;
      const Deviation dev = schedule_deviation(bus, net, st.node, t_, params_.on_time_tolerance);
      TraceEvent& ev = emit(EventKind::StopArrival);
      ev.vehicle = bus.vehicle_id;
      ev.node = net.node(st.node).label;
      ev.edge = net.edge(bus.route.edges[static_cast<std::size_t>(bus.cursor)]).label;
      ev.sched = st.scheduled;
      ev.deviation = dev.deviation;
      ev.on_time = dev.on_time;
      ev.dwell = params_.dwell;
      break;
    }
    bus.stop_emitted = true;
  }

  // Edge exits, in vehicle id order across classes.
  std::vector<int> exits;
  const auto collect_exits = [&](const VehicleBase& v) {
    if (v.phase == TripPhase::OnEdge && v.exit_due == t_) exits.push_back(v.vehicle_id);
  };
  for (const auto& v : cavs_) collect_exits(v);
  for (const auto& v : hvs_) collect_exits(v);
  for (const auto& v : buses_) collect_exits(v);
  std::sort(exits.begin(), exits.end());

  for (int vid : exits) {
    const Ref r = registry_[static_cast<std::size_t>(vid)];
    VehicleBase& v = base(vid);
    const Edge& edge = net.edge(v.route.edges[static_cast<std::size_t>(v.cursor)]);
    TraceEvent& ex = emit(EventKind::Exit);
    ex.vehicle = vid;
    ex.edge = edge.label;
    ex.lane = v.route.lane_choice[static_cast<std::size_t>(v.cursor)];
    ex.realized = t_ - v.entry_time;

    if (r.vclass == VehicleClass::Cav)
      cavs_[static_cast<std::size_t>(r.index)].trigger_locked = false;

    const bool last = static_cast<std::size_t>(v.cursor) + 1 == v.route.size();
    if (last) {
      v.phase = TripPhase::Done;
      v.complete_time = t_;
      --active_;
      TraceEvent& done = emit(EventKind::Complete);
      done.vehicle = vid;
      done.node = net.node(edge.to).label;
      if (r.vclass == VehicleClass::Bus) {
        const BusState& bus = buses_[static_cast<std::size_t>(r.index)];
        done.vclass = VehicleClass::Bus;
        done.sched = bus.scheduled_dest;
        done.deviation = t_ - bus.scheduled_dest;
        done.on_time = std::llabs(done.deviation) <= params_.on_time_tolerance;
      }
      continue;
    }

    if (cfg_.policy == Policy::Drp && r.vclass == VehicleClass::Cav) {
      CavState& cav = cavs_[static_cast<std::size_t>(r.index)];
      if (auto alt = drp_step(net, tick_costs(), cav, edge.to)) {
        splice_tail(cav, *alt);
        TraceEvent& sw = emit(EventKind::DrpSwitch);
        sw.vehicle = vid;
        sw.node = net.node(edge.to).label;
        sw.route = edge_labels(alt->edges);
      }
    }
    entry_queue_.push_back(vid);
  }

  // Edge entries, in vehicle id order.
  std::sort(entry_queue_.begin(), entry_queue_.end());
  for (int vid : entry_queue_) enter_edge(vid);
  entry_queue_.clear();
}

void World::enter_edge(int vid) {
  const auto& net = sc_->net;
  const Ref r = registry_[static_cast<std::size_t>(vid)];
  VehicleBase& v = base(vid);
  const auto next = static_cast<std::size_t>(v.cursor) + 1;
  assert(next < v.route.size());
  const EdgeId e = v.route.edges[next];
  const LaneClass lc = v.route.lane_choice[next];
  const Lane* lane = net.edge(e).lane(lc);
  assert(lane != nullptr);

  const Seconds realized = realized_time(*lane, sensed_flow(e, lc), {params_.alpha, params_.beta});
  v.cursor = static_cast<int>(next);
  v.entry_time = t_;
  v.exit_due = t_ + realized;
  v.phase = TripPhase::OnEdge;

  if (r.vclass == VehicleClass::Bus) {
    BusState& bus = buses_[static_cast<std::size_t>(r.index)];
    bus.stop_arrival_due = -1;
    bus.stop_emitted = true;
    for (const auto& st : bus.stops) {
      if (st.route_index != v.cursor) continue;
      bus.stop_arrival_due = t_ + realized;
      bus.stop_emitted = false;
      v.exit_due += params_.dwell;
      break;
    }
  }

  sensors_[static_cast<std::size_t>(e)][static_cast<std::size_t>(lc)].push_back(t_);
  if (r.vclass == VehicleClass::Hv) hv_log_.record(e, t_);

  TraceEvent& ev = emit(EventKind::Enter);
  ev.vehicle = vid;
  ev.edge = net.edge(e).label;
  ev.lane = lc;
}

void World::step() {
  assert(!finished());
  spawn_buses();
  spawn_demand();
  policy_phase();
  movement_phase();

  if (t_ % 256 == 0) {
    const Seconds keep = t_ - 2 * std::max(params_.window_dl, params_.window_gpl) - 4;
    for (auto& per_edge : sensors_)
      for (auto& lane_log : per_edge)
        while (!lane_log.empty() && lane_log.front() < keep) lane_log.pop_front();
    hv_log_.prune_before(keep);
  }
  ++t_;
}

bool World::finished() const {
  if (t_ > params_.horizon && active_ == 0) return true;
  return t_ > params_.horizon + cfg_.drain_limit;
}

void World::run() {
  while (!finished()) step();
}

}  // namespace mesoroute
