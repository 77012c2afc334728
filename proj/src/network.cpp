#include "mesoroute/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mesoroute {

const char* to_string(LaneClass c) {
  return c == LaneClass::JointDl ? "dl" : "gpl";
}

const char* to_string(VehicleClass v) {
  switch (v) {
    case VehicleClass::Hv: return "hv";
    case VehicleClass::Cav: return "cav";
    case VehicleClass::Bus: return "bus";
  }
  return "?";
}

const char* to_string(NodeKind k) {
  return k == NodeKind::Intersection ? "intersection" : "station";
}

const char* to_string(ValidationCode c) {
  switch (c) {
    case ValidationCode::ParseError: return "ParseError";
    case ValidationCode::UnsupportedVersion: return "UnsupportedVersion";
    case ValidationCode::MissingSection: return "MissingSection";
    case ValidationCode::DuplicateNodeId: return "DuplicateNodeId";
    case ValidationCode::DuplicateEdgeId: return "DuplicateEdgeId";
    case ValidationCode::DanglingEdgeEndpoint: return "DanglingEdgeEndpoint";
    case ValidationCode::SelfLoop: return "SelfLoop";
    case ValidationCode::MissingLane: return "MissingLane";
    case ValidationCode::DuplicateLane: return "DuplicateLane";
    case ValidationCode::NonPositiveLaneParam: return "NonPositiveLaneParam";
    case ValidationCode::LaneTimeMismatch: return "LaneTimeMismatch";
    case ValidationCode::BadBusStop: return "BadBusStop";
    case ValidationCode::StationRefCount: return "StationRefCount";
    case ValidationCode::DisconnectedGraph: return "DisconnectedGraph";
    case ValidationCode::BadParams: return "BadParams";
    case ValidationCode::BadBusRoute: return "BadBusRoute";
    case ValidationCode::BadTimetable: return "BadTimetable";
    case ValidationCode::BadDemand: return "BadDemand";
  }
  return "Unknown";
}

double Edge::free_flow_time() const {
  for (const auto& slot : lanes) {
    if (slot) return slot->free_flow_time;
  }
  return 0.0;
}

bool Edge::usable_by(VehicleClass v) const {
  for (std::size_t i = 0; i < kLaneClasses; ++i) {
    if (lanes[i] && lane_permitted(v, static_cast<LaneClass>(i))) return true;
  }
  return false;
}

namespace {

struct Dsu {
  std::vector<int> parent;
  explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<Diagnostic> RoadNetwork::validate(const std::vector<Node>& nodes,
                                              const std::vector<Edge>& edges) {
  std::vector<Diagnostic> diags;
  auto add = [&](ValidationCode c, std::string m) { diags.push_back({c, std::move(m)}); };

  std::unordered_map<Label, std::size_t> node_seen;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto [it, fresh] = node_seen.emplace(nodes[i].label, i);
    if (!fresh) {
      add(ValidationCode::DuplicateNodeId,
          "duplicate node id " + std::to_string(nodes[i].label));
    }
  }

  const auto n = static_cast<NodeId>(nodes.size());
  std::unordered_map<Label, std::size_t> edge_seen;
  std::vector<int> station_refs(nodes.size(), 0);

  for (const Edge& e : edges) {
    const std::string tag = "edge " + std::to_string(e.label);
    auto [it, fresh] = edge_seen.emplace(e.label, 0);
    if (!fresh) add(ValidationCode::DuplicateEdgeId, "duplicate " + tag);
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n) {
      add(ValidationCode::DanglingEdgeEndpoint, tag + " references a missing node");
      continue;
    }
    if (e.from == e.to) {
      add(ValidationCode::SelfLoop,
          tag + " is a self loop at node " + std::to_string(nodes[e.from].label));
    }
    bool any_lane = false;
    std::optional<double> tau0;
    for (std::size_t i = 0; i < kLaneClasses; ++i) {
      const auto& slot = e.lanes[i];
      if (!slot) continue;
      any_lane = true;
      if (!(slot->capacity > 0.0) || !std::isfinite(slot->capacity) ||
          !(slot->free_flow_time > 0.0) || !std::isfinite(slot->free_flow_time)) {
        add(ValidationCode::NonPositiveLaneParam,
            tag + " " + to_string(static_cast<LaneClass>(i)) +
                " lane needs positive capacity and free-flow time");
      }
      if (tau0 && std::abs(*tau0 - slot->free_flow_time) > 1e-9) {
        add(ValidationCode::LaneTimeMismatch,
            tag + " lanes disagree on free-flow time");
      }
      if (!tau0) tau0 = slot->free_flow_time;
    }
    if (!any_lane) add(ValidationCode::MissingLane, tag + " has no lanes");
    if (e.bus_stop) {
      const NodeId s = *e.bus_stop;
      if (s < 0 || s >= n) {
        add(ValidationCode::BadBusStop, tag + " bus stop references a missing node");
      } else {
        if (nodes[s].kind != NodeKind::BusStation) {
          add(ValidationCode::BadBusStop,
              tag + " bus stop node " + std::to_string(nodes[s].label) +
                  " is not a station");
        }
        if (!e.has_lane(LaneClass::JointDl)) {
          add(ValidationCode::BadBusStop, tag + " hosts a stop but has no dedicated lane");
        }
        station_refs[s] += 1;
      }
    }
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].kind == NodeKind::BusStation && station_refs[i] != 1) {
      add(ValidationCode::StationRefCount,
          "station " + std::to_string(nodes[i].label) + " is referenced by " +
              std::to_string(station_refs[i]) + " edges, expected 1");
    }
  }

  if (!nodes.empty()) {
    Dsu dsu(nodes.size());
    for (const Edge& e : edges) {
      if (e.from >= 0 && e.from < n && e.to >= 0 && e.to < n) {
        dsu.unite(e.from, e.to);
        if (e.bus_stop && *e.bus_stop >= 0 && *e.bus_stop < n) {
          dsu.unite(*e.bus_stop, e.from);
        }
      }
    }
    const int root = dsu.find(0);
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      if (dsu.find(static_cast<int>(i)) != root) {
        add(ValidationCode::DisconnectedGraph,
            "node " + std::to_string(nodes[i].label) +
                " is not connected to node " + std::to_string(nodes[0].label));
        break;
      }
    }
  }

  return diags;
}

RoadNetwork RoadNetwork::build(std::vector<Node> nodes, std::vector<Edge> edges) {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id != static_cast<NodeId>(i)) {
      throw std::logic_error("node ids must be dense and match their index");
    }
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].id != static_cast<EdgeId>(i)) {
      throw std::logic_error("edge ids must be dense and match their index");
    }
  }
  auto diags = validate(nodes, edges);
  if (!diags.empty()) {
    throw ScenarioError(diags.front().code, diags.front().message);
  }
  RoadNetwork net;
  net.nodes_ = std::move(nodes);
  net.edges_ = std::move(edges);
  net.out_.assign(net.nodes_.size(), {});
  for (const Edge& e : net.edges_) net.out_[e.from].push_back(e.id);
  for (const Node& v : net.nodes_) net.node_labels_.emplace(v.label, v.id);
  for (const Edge& e : net.edges_) net.edge_labels_.emplace(e.label, e.id);
  return net;
}

std::optional<NodeId> RoadNetwork::node_by_label(Label l) const {
  auto it = node_labels_.find(l);
  if (it == node_labels_.end()) return std::nullopt;
  return it->second;
}

std::optional<EdgeId> RoadNetwork::edge_by_label(Label l) const {
  auto it = edge_labels_.find(l);
  if (it == edge_labels_.end()) return std::nullopt;
  return it->second;
}

std::optional<EdgeId> RoadNetwork::edge_between(NodeId from, NodeId to) const {
  for (EdgeId e : out_edges(from)) {
    if (edges_[e].to == to) return e;
  }
  return std::nullopt;
}

bool Route::contains_edge(EdgeId e) const {
  return std::find(edges.begin(), edges.end(), e) != edges.end();
}

bool Route::chains(const RoadNetwork& net) const {
  if (lane_choice.size() != edges.size()) return false;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = net.edge(edges[i]);
    if (!e.has_lane(lane_choice[i])) return false;
    if (i > 0 && net.edge(edges[i - 1]).to != e.from) return false;
  }
  return true;
}

bool Route::class_legal(const RoadNetwork& net, VehicleClass v) const {
  if (lane_choice.size() != edges.size()) return false;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!lane_permitted(v, lane_choice[i])) return false;
    if (!net.edge(edges[i]).has_lane(lane_choice[i])) return false;
  }
  return true;
}

double Route::free_flow_cost(const RoadNetwork& net) const {
  double total = 0.0;
  for (EdgeId e : edges) total += net.edge(e).free_flow_time();
  return total;
}

std::vector<bool> no_excluded_edges(const RoadNetwork& net) {
  return std::vector<bool>(net.edge_count(), false);
}

bool path_exists(const RoadNetwork& net, NodeId from, NodeId to,
                 const std::vector<bool>& excluded, VehicleClass vclass) {
  if (from == to) return true;
  std::vector<bool> seen(net.node_count(), false);
  std::vector<NodeId> queue{from};
  seen[from] = true;
  while (!queue.empty()) {
    NodeId u = queue.back();
    queue.pop_back();
    for (EdgeId e : net.out_edges(u)) {
      if (excluded[e] || !net.edge(e).usable_by(vclass)) continue;
      NodeId v = net.edge(e).to;
      if (seen[v]) continue;
      if (v == to) return true;
      seen[v] = true;
      queue.push_back(v);
    }
  }
  return false;
}

namespace {

LaneClass default_lane(const Edge& e, VehicleClass v) {
  for (std::size_t i = 0; i < kLaneClasses; ++i) {
    const auto c = static_cast<LaneClass>(i);
    if (e.has_lane(c) && lane_permitted(v, c)) return c;
  }
  return LaneClass::Gpl;
}

bool dfs_routes(const RoadNetwork& net, NodeId u, NodeId to,
                const std::vector<bool>& excluded, VehicleClass vclass,
                std::vector<bool>& visited, Route& path,
                const std::function<bool(const Route&)>& visit) {
  for (EdgeId e : net.out_edges(u)) {
    if (excluded[e]) continue;
    const Edge& edge = net.edge(e);
    if (!edge.usable_by(vclass)) continue;
    const NodeId v = edge.to;
    if (visited[v]) continue;
    path.edges.push_back(e);
    path.lane_choice.push_back(default_lane(edge, vclass));
    bool keep_going = true;
    if (v == to) {
      keep_going = visit(path);
    } else {
      visited[v] = true;
      keep_going = dfs_routes(net, v, to, excluded, vclass, visited, path, visit);
      visited[v] = false;
    }
    path.edges.pop_back();
    path.lane_choice.pop_back();
    if (!keep_going) return false;
  }
  return true;
}

}  // namespace

void for_each_simple_route(const RoadNetwork& net, NodeId from, NodeId to,
                           const std::vector<bool>& excluded, VehicleClass vclass,
                           const std::function<bool(const Route&)>& visit) {
  if (from == to) {
    visit(Route{});
    return;
  }
  std::vector<bool> visited(net.node_count(), false);
  visited[from] = true;
  Route path;
  dfs_routes(net, from, to, excluded, vclass, visited, path, visit);
}

}  // namespace mesoroute
