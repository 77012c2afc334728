#include "mesoroute/trace.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace mesoroute {

using nlohmann::json;

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Meta:
      return "meta";
    case EventKind::Spawn:
      return "spawn";
    case EventKind::Enter:
      return "enter";
    case EventKind::Exit:
      return "exit";
    case EventKind::StopArrival:
      return "stop_arrival";
    case EventKind::Trigger:
      return "trigger";
    case EventKind::Reroute:
      return "reroute";
    case EventKind::RerouteSkip:
      return "reroute_skip";
    case EventKind::DrpSwitch:
      return "drp_switch";
    case EventKind::Complete:
      return "complete";
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (int k = 0; k <= static_cast<int>(EventKind::Complete); ++k) {
    const auto kind = static_cast<EventKind>(k);
    if (s == to_string(kind)) return kind;
  }
  return std::nullopt;
}

namespace {

std::optional<VehicleClass> parse_vclass(std::string_view s) {
  if (s == "hv") return VehicleClass::Hv;
  if (s == "cav") return VehicleClass::Cav;
  if (s == "bus") return VehicleClass::Bus;
  return std::nullopt;
}

std::optional<LaneClass> parse_lane(std::string_view s) {
  if (s == "dl") return LaneClass::JointDl;
  if (s == "gpl") return LaneClass::Gpl;
  return std::nullopt;
}

}  // namespace

std::string to_json_line(const TraceEvent& ev) {
  json j;
  j["kind"] = to_string(ev.kind);
  j["t"] = ev.t;
  j["seq"] = ev.seq;
  switch (ev.kind) {
    case EventKind::Meta:
      j["policy"] = ev.policy;
      j["seed"] = ev.seed;
      j["scenario"] = ev.scenario;
      j["horizon"] = ev.horizon;
      break;
    case EventKind::Spawn:
      j["veh"] = ev.vehicle;
      j["class"] = to_string(*ev.vclass);
      j["origin"] = ev.origin;
      j["dest"] = ev.destination;
      j["route"] = ev.route;
      if (*ev.vclass == VehicleClass::Bus) {
        j["line"] = ev.line;
        j["run"] = ev.run;
        j["sched"] = ev.sched;
      }
      break;
    case EventKind::Enter:
      j["veh"] = ev.vehicle;
      j["edge"] = ev.edge;
      j["lane"] = to_string(*ev.lane);
      break;
    case EventKind::Exit:
      j["veh"] = ev.vehicle;
      j["edge"] = ev.edge;
      j["lane"] = to_string(*ev.lane);
      j["realized"] = ev.realized;
      break;
    case EventKind::StopArrival:
      j["veh"] = ev.vehicle;
      j["node"] = ev.node;
      j["edge"] = ev.edge;
      j["sched"] = ev.sched;
      j["dev"] = ev.deviation;
      j["on_time"] = *ev.on_time;
      j["dwell"] = ev.dwell;
      break;
    case EventKind::Trigger:
      j["veh"] = ev.vehicle;
      j["edge"] = ev.edge;
      j["k"] = ev.route_index;
      j["tau_hat"] = ev.tau_hat;
      j["threshold"] = ev.threshold;
      break;
    case EventKind::Reroute:
      j["veh"] = ev.vehicle;
      j["node"] = ev.node;
      j["edge"] = ev.edge;  // the avoided edge
      j["route"] = ev.route;
      break;
    case EventKind::RerouteSkip:
      j["veh"] = ev.vehicle;
      j["edge"] = ev.edge;
      j["reason"] = ev.reason;
      break;
    case EventKind::DrpSwitch:
      j["veh"] = ev.vehicle;
      j["node"] = ev.node;
      j["route"] = ev.route;
      break;
    case EventKind::Complete:
      j["veh"] = ev.vehicle;
      j["node"] = ev.node;
      if (ev.vclass && *ev.vclass == VehicleClass::Bus) {
        j["class"] = "bus";
        j["sched"] = ev.sched;
        j["dev"] = ev.deviation;
        j["on_time"] = *ev.on_time;
      }
      break;
  }
  return j.dump();
}

TraceEvent parse_trace_line(const std::string& line) {
  const json j = json::parse(line);
  TraceEvent ev;
  const auto kind = parse_event_kind(j.at("kind").get<std::string>());
  if (!kind) throw std::runtime_error("unknown trace event kind in: " + line);
  ev.kind = *kind;
  ev.t = j.at("t").get<Seconds>();
  ev.seq = j.at("seq").get<std::int64_t>();
  ev.vehicle = j.value("veh", -1);
  if (j.contains("class")) ev.vclass = parse_vclass(j.at("class").get<std::string>());
  ev.edge = j.value("edge", Label{-1});
  if (j.contains("lane")) ev.lane = parse_lane(j.at("lane").get<std::string>());
  ev.node = j.value("node", Label{-1});
  ev.origin = j.value("origin", Label{-1});
  ev.destination = j.value("dest", Label{-1});
  if (j.contains("route")) ev.route = j.at("route").get<std::vector<Label>>();
  ev.line = j.value("line", -1);
  ev.run = j.value("run", -1);
  ev.sched = j.value("sched", Seconds{-1});
  ev.deviation = j.value("dev", Seconds{0});
  if (j.contains("on_time")) ev.on_time = j.at("on_time").get<bool>();
  ev.dwell = j.value("dwell", Seconds{-1});
  ev.realized = j.value("realized", Seconds{-1});
  ev.route_index = j.value("k", -1);
  ev.tau_hat = j.value("tau_hat", 0.0);
  ev.threshold = j.value("threshold", 0.0);
  ev.reason = j.value("reason", std::string{});
  ev.policy = j.value("policy", std::string{});
  ev.seed = j.value("seed", std::uint64_t{0});
  ev.scenario = j.value("scenario", std::string{});
  ev.horizon = j.value("horizon", Seconds{-1});
  return ev;
}

void write_trace_file(const std::filesystem::path& file, std::span<const TraceEvent> events) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  for (const auto& ev : events) out << to_json_line(ev) << '\n';
  if (!out) throw std::runtime_error("failed writing " + file.string());
}

std::vector<TraceEvent> read_trace_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::vector<TraceEvent> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(parse_trace_line(line));
  }
  return out;
}

namespace {

struct VehTrack {
  bool spawned = false;
  bool complete = false;
  bool on_edge = false;
  VehicleClass vclass = VehicleClass::Hv;
  Label destination = -1;
  Label at_node = -1;
  Label cur_edge = -1;
  LaneClass cur_lane = LaneClass::Gpl;
  Seconds enter_t = 0;
  Seconds stop_arr = -1;
  Seconds stop_dwell = 0;
  std::vector<Label> plan;
  std::size_t plan_pos = 0;
};

}  // namespace

std::vector<std::string> audit_trace(const Scenario& sc, std::span<const TraceEvent> events) {
  std::vector<std::string> bad;
  constexpr std::size_t kMaxReports = 100;
  const auto flag = [&](const TraceEvent& ev, const std::string& what) {
    if (bad.size() < kMaxReports)
      bad.push_back("seq " + std::to_string(ev.seq) + " t " + std::to_string(ev.t) + ": " + what);
  };
  const RoadNetwork& net = sc.net;
  const auto edge_of = [&](Label l) -> const Edge* {
    const auto id = net.edge_by_label(l);
    return id ? &net.edge(*id) : nullptr;
  };
  const auto ff_floor = [&](const Edge& e, LaneClass lc) -> Seconds {
    return static_cast<Seconds>(std::ceil(e.lane(lc)->free_flow_time - 1e-9));
  };

  std::unordered_map<int, VehTrack> vehs;
  std::set<std::pair<int, int>> fired;  // (bus, route index)
  Seconds prev_t = std::numeric_limits<Seconds>::min();
  std::int64_t prev_seq = -1;
  bool saw_meta = false;

  for (std::size_t n = 0; n < events.size(); ++n) {
    const TraceEvent& ev = events[n];
    if (ev.t < prev_t) flag(ev, "time goes backwards");
    if (ev.seq <= prev_seq) flag(ev, "seq not strictly increasing");
    prev_t = ev.t;
    prev_seq = ev.seq;
    if (n == 0 && ev.kind != EventKind::Meta) flag(ev, "first event is not the run header");
    if (ev.kind == EventKind::Meta) {
      if (saw_meta) flag(ev, "duplicate run header");
      saw_meta = true;
      continue;
    }

    VehTrack& v = vehs[ev.vehicle];
    switch (ev.kind) {
      case EventKind::Meta:
        break;
      case EventKind::Spawn: {
        if (v.spawned) flag(ev, "vehicle spawned twice");
        v.spawned = true;
        if (!ev.vclass) {
          flag(ev, "spawn without a vehicle class");
          break;
        }
        v.vclass = *ev.vclass;
        v.at_node = ev.origin;
        v.destination = ev.destination;
        v.plan = ev.route;
        v.plan_pos = 0;
        break;
      }
      case EventKind::Enter: {
        if (!v.spawned || v.complete) flag(ev, "enter outside the vehicle lifecycle");
        if (v.on_edge) flag(ev, "enter while already on an edge");
        const Edge* e = edge_of(ev.edge);
        if (!e) {
          flag(ev, "enter on unknown edge " + std::to_string(ev.edge));
          break;
        }
        if (!ev.lane || !e->has_lane(*ev.lane))
          flag(ev, "enter on a lane the edge does not have");
        else if (!lane_permitted(v.vclass, *ev.lane))
          flag(ev, std::string("lane not permitted for ") + to_string(v.vclass));
        if (net.node(e->from).label != v.at_node)
          flag(ev, "edge does not chain from the vehicle position");
        if (v.plan_pos >= v.plan.size() || v.plan[v.plan_pos] != ev.edge)
          flag(ev, "enter deviates from the planned route");
        else
          ++v.plan_pos;
        v.on_edge = true;
        v.cur_edge = ev.edge;
        v.cur_lane = ev.lane.value_or(LaneClass::Gpl);
        v.enter_t = ev.t;
        v.stop_arr = -1;
        v.stop_dwell = 0;
        break;
      }
      case EventKind::Exit: {
        if (!v.on_edge || v.cur_edge != ev.edge) {
          flag(ev, "exit without a matching enter");
          break;
        }
        const Edge* e = edge_of(ev.edge);
        const Seconds spent = ev.t - v.enter_t;
        if (ev.realized != spent) flag(ev, "realized time disagrees with enter/exit stamps");
        if (e && e->has_lane(v.cur_lane)) {
          const Seconds floor_t = ff_floor(*e, v.cur_lane) + (v.stop_arr >= 0 ? v.stop_dwell : 0);
          if (spent < floor_t) flag(ev, "edge traversed faster than free flow");
        }
        if (v.stop_arr >= 0 && ev.t != v.stop_arr + v.stop_dwell)
          flag(ev, "exit does not follow the stop dwell");
        v.on_edge = false;
        if (e) v.at_node = net.node(e->to).label;
        break;
      }
      case EventKind::StopArrival: {
        if (v.vclass != VehicleClass::Bus) flag(ev, "stop arrival for a non-bus");
        if (!v.on_edge || v.cur_edge != ev.edge) flag(ev, "stop arrival off the current edge");
        const Edge* e = edge_of(ev.edge);
        if (!e || !e->bus_stop || net.node(*e->bus_stop).label != ev.node)
          flag(ev, "edge does not host this station");
        if (e && ev.t - v.enter_t < ff_floor(*e, LaneClass::JointDl))
          flag(ev, "station reached faster than free flow");
        v.stop_arr = ev.t;
        v.stop_dwell = ev.dwell;
        break;
      }
      case EventKind::Trigger: {
        if (!fired.insert({ev.vehicle, ev.route_index}).second)
          flag(ev, "trigger fired twice for the same bus route edge");
        if (ev.tau_hat + 1e-9 < ev.threshold) flag(ev, "trigger fired below its threshold");
        break;
      }
      case EventKind::Reroute: {
        if (v.vclass != VehicleClass::Cav) flag(ev, "reroute of a non-CAV");
        for (Label l : ev.route)
          if (l == ev.edge) flag(ev, "new route still uses the avoided edge");
        if (!ev.route.empty()) {
          const Edge* first = edge_of(ev.route.front());
          if (!first || net.node(first->from).label != ev.node)
            flag(ev, "new route does not start at the replan node");
        }
        v.plan.resize(v.plan_pos);
        v.plan.insert(v.plan.end(), ev.route.begin(), ev.route.end());
        break;
      }
      case EventKind::RerouteSkip:
        break;
      case EventKind::DrpSwitch: {
        if (v.vclass != VehicleClass::Cav) flag(ev, "route switch of a non-CAV");
        if (v.on_edge) flag(ev, "route switch while on an edge");
        if (ev.node != v.at_node) flag(ev, "route switch away from the vehicle position");
        v.plan.resize(v.plan_pos);
        v.plan.insert(v.plan.end(), ev.route.begin(), ev.route.end());
        break;
      }
      case EventKind::Complete: {
        if (!v.spawned || v.complete) flag(ev, "complete outside the vehicle lifecycle");
        if (v.on_edge) flag(ev, "complete while still on an edge");
        if (v.at_node != ev.node) flag(ev, "complete away from the vehicle position");
        if (v.vclass != VehicleClass::Bus && ev.node != v.destination)
          flag(ev, "trip completed away from its destination");
        if (v.plan_pos != v.plan.size()) flag(ev, "trip completed with route left over");
        v.complete = true;
        break;
      }
    }
  }
  for (const auto& [id, v] : vehs) {
    if (v.vclass == VehicleClass::Bus && v.spawned && !v.complete && bad.size() < kMaxReports)
      bad.push_back("bus " + std::to_string(id) + " never completed its run");
  }
  if (bad.size() == kMaxReports) bad.push_back("... report truncated");
  return bad;
}

}  // namespace mesoroute
