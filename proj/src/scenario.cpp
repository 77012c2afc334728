#include "mesoroute/scenario.hpp"

#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace mesoroute {

namespace {

using nlohmann::json;

struct Parser {
  std::vector<Diagnostic> diags;

  void fail(ValidationCode c, std::string m) { diags.push_back({c, std::move(m)}); }

  bool require_sections(const json& j) {
    bool ok = true;
    for (const char* section :
         {"params", "nodes", "edges", "lanes", "bus_lines", "demand"}) {
      if (!j.contains(section)) {
        fail(ValidationCode::MissingSection,
             std::string("missing section '") + section + "'");
        ok = false;
      }
    }
    return ok;
  }

  static bool get_int(const json& j, const char* key, std::int64_t& out) {
    if (!j.contains(key) || !j[key].is_number_integer()) return false;
    out = j[key].get<std::int64_t>();
    return true;
  }

  static bool get_num(const json& j, const char* key, double& out) {
    if (!j.contains(key) || !j[key].is_number()) return false;
    out = j[key].get<double>();
    return true;
  }

  bool parse_params(const json& j, SimParams& p) {
    if (!j.is_object()) {
      fail(ValidationCode::BadParams, "params must be an object");
      return false;
    }
    auto num = [&](const char* key, double& slot, double lo, double hi) {
      if (!j.contains(key)) return true;
      if (!j[key].is_number()) {
        fail(ValidationCode::BadParams, std::string("params.") + key + " must be a number");
        return false;
      }
      const double v = j[key].get<double>();
      if (v < lo || v > hi) {
        fail(ValidationCode::BadParams, std::string("params.") + key + " out of range");
        return false;
      }
      slot = v;
      return true;
    };
    bool ok = true;
    ok &= num("alpha", p.alpha, 0.0, 100.0);
    ok &= num("beta", p.beta, 1.0, 32.0);
    double wdl = p.window_dl, wgpl = p.window_gpl;
    ok &= num("window_dl", wdl, 1, 86400);
    ok &= num("window_gpl", wgpl, 1, 86400);
    p.window_dl = static_cast<int>(wdl);
    p.window_gpl = static_cast<int>(wgpl);
    ok &= num("lambda", p.lambda, 1e-9, 100.0);
    double tol = p.on_time_tolerance, dwell = p.dwell, horizon = p.horizon;
    ok &= num("on_time_tolerance", tol, 0, 86400);
    ok &= num("dwell", dwell, 0, 86400);
    ok &= num("horizon", horizon, 1, 7 * 86400);
    p.on_time_tolerance = static_cast<int>(tol);
    p.dwell = static_cast<int>(dwell);
    p.horizon = static_cast<Seconds>(horizon);
    if (j.contains("spawn_mode")) {
      const std::string mode = j["spawn_mode"].is_string() ? j["spawn_mode"].get<std::string>() : "";
      if (mode == "interval") {
        p.spawn_mode = SimParams::SpawnMode::Interval;
      } else if (mode == "poisson") {
        p.spawn_mode = SimParams::SpawnMode::Poisson;
      } else {
        fail(ValidationCode::BadParams, "params.spawn_mode must be 'interval' or 'poisson'");
        ok = false;
      }
    }
    return ok;
  }

  std::optional<Scenario> parse(const json& j) {
    Scenario sc;
    std::int64_t version = 0;
    if (!get_int(j, "format_version", version)) {
      fail(ValidationCode::UnsupportedVersion, "missing integer format_version");
      return std::nullopt;
    }
    if (version != 1) {
      fail(ValidationCode::UnsupportedVersion,
           "unsupported format_version " + std::to_string(version));
      return std::nullopt;
    }
    sc.format_version = static_cast<int>(version);
    sc.name = j.value("name", std::string("scenario"));
    if (!require_sections(j)) return std::nullopt;
    if (!parse_params(j["params"], sc.params)) return std::nullopt;

    // Nodes: arbitrary integer labels mapped onto dense indices in file order.
    std::vector<Node> nodes;
    std::unordered_map<Label, NodeId> node_ids;
    if (!j["nodes"].is_array()) {
      fail(ValidationCode::BadParams, "nodes must be an array");
      return std::nullopt;
    }
    for (const auto& nj : j["nodes"]) {
      Node n;
      std::int64_t label = 0;
      if (!get_int(nj, "id", label) || label < 0) {
        fail(ValidationCode::BadParams, "node entries need a non-negative integer id");
        return std::nullopt;
      }
      n.label = label;
      n.id = static_cast<NodeId>(nodes.size());
      const std::string kind = nj.value("kind", std::string("intersection"));
      if (kind == "intersection") {
        n.kind = NodeKind::Intersection;
      } else if (kind == "station") {
        n.kind = NodeKind::BusStation;
      } else {
        fail(ValidationCode::BadParams,
             "node " + std::to_string(label) + " has unknown kind '" + kind + "'");
        return std::nullopt;
      }
      n.x = nj.value("x", 0.0);
      n.y = nj.value("y", 0.0);
      if (!node_ids.emplace(n.label, n.id).second) {
        fail(ValidationCode::DuplicateNodeId, "duplicate node id " + std::to_string(label));
        return std::nullopt;
      }
      nodes.push_back(n);
    }

    auto resolve_node = [&](Label l) -> std::optional<NodeId> {
      auto it = node_ids.find(l);
      if (it == node_ids.end()) return std::nullopt;
      return it->second;
    };

    // Edges.
    std::vector<Edge> edges;
    std::unordered_map<Label, EdgeId> edge_ids;
    if (!j["edges"].is_array()) {
      fail(ValidationCode::BadParams, "edges must be an array");
      return std::nullopt;
    }
    for (const auto& ej : j["edges"]) {
      Edge e;
      std::int64_t label = 0, from = 0, to = 0;
      if (!get_int(ej, "id", label) || !get_int(ej, "from", from) || !get_int(ej, "to", to)) {
        fail(ValidationCode::BadParams, "edge entries need integer id, from, to");
        return std::nullopt;
      }
      e.label = label;
      e.id = static_cast<EdgeId>(edges.size());
      if (!edge_ids.emplace(e.label, e.id).second) {
        fail(ValidationCode::DuplicateEdgeId, "duplicate edge id " + std::to_string(label));
        return std::nullopt;
      }
      auto f = resolve_node(from);
      auto t = resolve_node(to);
      if (!f || !t) {
        fail(ValidationCode::DanglingEdgeEndpoint,
             "edge " + std::to_string(label) + " references missing node " +
                 std::to_string(f ? to : from));
        return std::nullopt;
      }
      e.from = *f;
      e.to = *t;
      if (ej.contains("bus_stop")) {
        std::int64_t stop = 0;
        if (!get_int(ej, "bus_stop", stop)) {
          fail(ValidationCode::BadBusStop,
               "edge " + std::to_string(label) + " bus_stop must be a node id");
          return std::nullopt;
        }
        auto s = resolve_node(stop);
        if (!s) {
          fail(ValidationCode::BadBusStop,
               "edge " + std::to_string(label) + " bus_stop references missing node " +
                   std::to_string(stop));
          return std::nullopt;
        }
        e.bus_stop = *s;
      }
      edges.push_back(e);
    }

    // Lanes, attached by edge label.
    if (!j["lanes"].is_array()) {
      fail(ValidationCode::BadParams, "lanes must be an array");
      return std::nullopt;
    }
    for (const auto& lj : j["lanes"]) {
      std::int64_t edge_label = 0;
      double capacity = 0.0, tau0 = 0.0;
      if (!get_int(lj, "edge", edge_label) || !get_num(lj, "capacity", capacity) ||
          !get_num(lj, "free_flow_time", tau0)) {
        fail(ValidationCode::BadParams,
             "lane entries need edge, capacity and free_flow_time");
        return std::nullopt;
      }
      auto it = edge_ids.find(edge_label);
      if (it == edge_ids.end()) {
        fail(ValidationCode::DanglingEdgeEndpoint,
             "lane references missing edge " + std::to_string(edge_label));
        return std::nullopt;
      }
      const std::string cls = lj.value("class", std::string(""));
      LaneClass lc;
      if (cls == "dl") {
        lc = LaneClass::JointDl;
      } else if (cls == "gpl") {
        lc = LaneClass::Gpl;
      } else {
        fail(ValidationCode::BadParams,
             "lane on edge " + std::to_string(edge_label) + " has unknown class '" + cls + "'");
        return std::nullopt;
      }
      Edge& e = edges[it->second];
      if (e.has_lane(lc)) {
        fail(ValidationCode::DuplicateLane,
             "edge " + std::to_string(edge_label) + " already has a " +
                 to_string(lc) + " lane");
        return std::nullopt;
      }
      e.lanes[static_cast<std::size_t>(lc)] = Lane{lc, capacity, tau0};
    }

    auto net_diags = RoadNetwork::validate(nodes, edges);
    if (!net_diags.empty()) {
      for (auto& d : net_diags) diags.push_back(std::move(d));
      return std::nullopt;
    }
    sc.net = RoadNetwork::build(std::move(nodes), std::move(edges));

    if (!parse_bus_lines(j["bus_lines"], sc)) return std::nullopt;
    if (!parse_demand(j["demand"], sc)) return std::nullopt;
    return sc;
  }

  bool parse_bus_lines(const json& arr, Scenario& sc) {
    if (!arr.is_array()) {
      fail(ValidationCode::BadBusRoute, "bus_lines must be an array");
      return false;
    }
    for (const auto& bj : arr) {
      BusLine line;
      line.name = bj.value("name", std::string("line"));
      const std::string tag = "bus line '" + line.name + "'";
      if (!bj.contains("route") || !bj["route"].is_array() || bj["route"].size() < 2) {
        fail(ValidationCode::BadBusRoute, tag + " needs a route of at least two nodes");
        return false;
      }
      for (const auto& nl : bj["route"]) {
        if (!nl.is_number_integer()) {
          fail(ValidationCode::BadBusRoute, tag + " route entries must be node ids");
          return false;
        }
        auto id = sc.net.node_by_label(nl.get<Label>());
        if (!id) {
          fail(ValidationCode::BadBusRoute,
               tag + " route references missing node " + std::to_string(nl.get<Label>()));
          return false;
        }
        line.route_nodes.push_back(*id);
      }
      for (std::size_t i = 0; i + 1 < line.route_nodes.size(); ++i) {
        auto e = sc.net.edge_between(line.route_nodes[i], line.route_nodes[i + 1]);
        if (!e || !sc.net.edge(*e).has_lane(LaneClass::JointDl)) {
          fail(ValidationCode::BadBusRoute,
               tag + " has no dedicated lane between nodes " +
                   std::to_string(sc.net.node(line.route_nodes[i]).label) + " and " +
                   std::to_string(sc.net.node(line.route_nodes[i + 1]).label));
          return false;
        }
        line.route.edges.push_back(*e);
        line.route.lane_choice.push_back(LaneClass::JointDl);
      }

      if (bj.contains("stops")) {
        if (!bj["stops"].is_array()) {
          fail(ValidationCode::BadTimetable, tag + " stops must be an array");
          return false;
        }
        for (const auto& sj : bj["stops"]) {
          StopSpec stop;
          std::int64_t node_label = 0, offset = 0;
          if (!get_int(sj, "node", node_label) || !get_int(sj, "offset", offset)) {
            fail(ValidationCode::BadTimetable,
                 tag + " stop entries need node and offset");
            return false;
          }
          auto node = sc.net.node_by_label(node_label);
          if (!node || sc.net.node(*node).kind != NodeKind::BusStation) {
            fail(ValidationCode::BadTimetable,
                 tag + " stop " + std::to_string(node_label) + " is not a station");
            return false;
          }
          stop.node = *node;
          stop.offset = offset;
          for (std::size_t i = 0; i < line.route.edges.size(); ++i) {
            const Edge& e = sc.net.edge(line.route.edges[i]);
            if (e.bus_stop && *e.bus_stop == stop.node) {
              stop.route_index = static_cast<int>(i);
              break;
            }
          }
          if (stop.route_index < 0) {
            fail(ValidationCode::BadTimetable,
                 tag + " stop " + std::to_string(node_label) + " is not on the route");
            return false;
          }
          line.stops.push_back(stop);
        }
      }
      for (std::size_t i = 1; i < line.stops.size(); ++i) {
        if (line.stops[i].offset <= line.stops[i - 1].offset ||
            line.stops[i].route_index <= line.stops[i - 1].route_index) {
          fail(ValidationCode::BadTimetable,
               tag + " timetable is not increasing at stop " +
                   std::to_string(sc.net.node(line.stops[i].node).label));
          return false;
        }
      }
      std::int64_t dest_offset = 0;
      if (!get_int(bj, "destination_offset", dest_offset)) {
        fail(ValidationCode::BadTimetable, tag + " needs destination_offset");
        return false;
      }
      line.destination_offset = dest_offset;
      if (!line.stops.empty() && dest_offset <= line.stops.back().offset) {
        fail(ValidationCode::BadTimetable,
             tag + " destination_offset must exceed the last stop offset");
        return false;
      }

      if (bj.contains("departures")) {
        if (!bj["departures"].is_array()) {
          fail(ValidationCode::BadTimetable, tag + " departures must be an array");
          return false;
        }
        for (const auto& dj : bj["departures"]) {
          if (!dj.is_number_integer()) {
            fail(ValidationCode::BadTimetable, tag + " departures must be integers");
            return false;
          }
          line.departures.push_back(dj.get<Seconds>());
        }
      } else {
        std::int64_t first = 0, headway = 0, runs = 0;
        if (!get_int(bj, "first_departure", first) || !get_int(bj, "headway", headway) ||
            !get_int(bj, "runs", runs) || headway <= 0 || runs < 1 || first < 0) {
          fail(ValidationCode::BadTimetable,
               tag + " needs departures or first_departure/headway/runs");
          return false;
        }
        for (std::int64_t r = 0; r < runs; ++r) line.departures.push_back(first + r * headway);
      }
      for (std::size_t i = 1; i < line.departures.size(); ++i) {
        if (line.departures[i] <= line.departures[i - 1]) {
          fail(ValidationCode::BadTimetable, tag + " departures must increase");
          return false;
        }
      }
      sc.bus_lines.push_back(std::move(line));
    }
    return true;
  }

  bool parse_demand(const json& arr, Scenario& sc) {
    if (!arr.is_array()) {
      fail(ValidationCode::BadDemand, "demand must be an array");
      return false;
    }
    const auto none = no_excluded_edges(sc.net);
    for (const auto& dj : arr) {
      DemandEntry entry;
      const std::string cls = dj.value("class", std::string(""));
      if (cls == "cav") {
        entry.vclass = VehicleClass::Cav;
      } else if (cls == "hv") {
        entry.vclass = VehicleClass::Hv;
      } else {
        fail(ValidationCode::BadDemand, "demand class must be 'cav' or 'hv'");
        return false;
      }
      if (!get_num(dj, "rate_per_min", entry.rate_per_min) || entry.rate_per_min < 0) {
        fail(ValidationCode::BadDemand, "demand entries need a non-negative rate_per_min");
        return false;
      }
      if (!dj.contains("od") || !dj["od"].is_array() || dj["od"].empty()) {
        fail(ValidationCode::BadDemand, "demand entries need a non-empty od list");
        return false;
      }
      for (const auto& od : dj["od"]) {
        if (!od.is_array() || od.size() != 2 || !od[0].is_number_integer() ||
            !od[1].is_number_integer()) {
          fail(ValidationCode::BadDemand, "od pairs must be [origin, destination]");
          return false;
        }
        auto o = sc.net.node_by_label(od[0].get<Label>());
        auto d = sc.net.node_by_label(od[1].get<Label>());
        if (!o || !d) {
          fail(ValidationCode::BadDemand,
               "od pair references a missing node " +
                   std::to_string((o ? od[1] : od[0]).get<Label>()));
          return false;
        }
        if (!path_exists(sc.net, *o, *d, none, entry.vclass)) {
          fail(ValidationCode::BadDemand,
               std::string(to_string(entry.vclass)) + " od (" +
                   std::to_string(od[0].get<Label>()) + ", " +
                   std::to_string(od[1].get<Label>()) + ") has no usable route");
          return false;
        }
        entry.ods.emplace_back(*o, *d);
      }
      sc.demand.push_back(std::move(entry));
    }
    return true;
  }
};

std::optional<Scenario> parse_text(const std::string& text, std::vector<Diagnostic>& diags) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    diags.push_back({ValidationCode::ParseError, e.what()});
    return std::nullopt;
  }
  if (!j.is_object()) {
    diags.push_back({ValidationCode::ParseError, "scenario root must be an object"});
    return std::nullopt;
  }
  Parser parser;
  auto sc = parser.parse(j);
  for (auto& d : parser.diags) diags.push_back(std::move(d));
  return sc;
}

std::string read_file(const std::filesystem::path& file, std::vector<Diagnostic>& diags) {
  std::ifstream in(file);
  if (!in) {
    diags.push_back({ValidationCode::ParseError, "cannot open " + file.string()});
    return {};
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

Scenario load_scenario_text(const std::string& text) {
  std::vector<Diagnostic> diags;
  auto sc = parse_text(text, diags);
  if (!diags.empty()) throw ScenarioError(diags.front().code, diags.front().message);
  if (!sc) throw ScenarioError(ValidationCode::ParseError, "scenario did not parse");
  return std::move(*sc);
}

Scenario load_scenario(const std::filesystem::path& file) {
  std::vector<Diagnostic> diags;
  const std::string text = read_file(file, diags);
  if (!diags.empty()) throw ScenarioError(diags.front().code, diags.front().message);
  return load_scenario_text(text);
}

std::vector<Diagnostic> validate_scenario_text(const std::string& text) {
  std::vector<Diagnostic> diags;
  parse_text(text, diags);
  return diags;
}

std::vector<Diagnostic> validate_scenario_file(const std::filesystem::path& file) {
  std::vector<Diagnostic> diags;
  const std::string text = read_file(file, diags);
  if (!diags.empty()) return diags;
  return validate_scenario_text(text);
}

}  // namespace mesoroute
