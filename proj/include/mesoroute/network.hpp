#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mesoroute {

// Dense internal indices. Scenario documents may label nodes and edges with
// arbitrary non-negative integers; the loader remaps them and keeps the
// original value in `label` for all user-facing output.
using NodeId = std::int32_t;
using EdgeId = std::int32_t;
using Label = std::int64_t;

enum class NodeKind : std::uint8_t { Intersection, BusStation };
enum class LaneClass : std::uint8_t { JointDl = 0, Gpl = 1 };
enum class VehicleClass : std::uint8_t { Hv = 0, Cav = 1, Bus = 2 };

inline constexpr std::size_t kLaneClasses = 2;

// HVs are restricted to general-purpose lanes, buses to the dedicated lane,
// CAVs may use both.
constexpr bool lane_permitted(VehicleClass v, LaneClass l) {
  switch (v) {
    case VehicleClass::Hv:
      return l == LaneClass::Gpl;
    case VehicleClass::Bus:
      return l == LaneClass::JointDl;
    case VehicleClass::Cav:
      return true;
  }
  return false;
}

const char* to_string(LaneClass c);
const char* to_string(VehicleClass v);
const char* to_string(NodeKind k);

struct Node {
  NodeId id = -1;
  Label label = 0;
  NodeKind kind = NodeKind::Intersection;
  double x = 0.0;
  double y = 0.0;
};

struct Lane {
  LaneClass lane_class = LaneClass::Gpl;
  double capacity = 0.0;        // veh/s
  double free_flow_time = 0.0;  // seconds
};

struct Edge {
  EdgeId id = -1;
  Label label = 0;
  NodeId from = -1;
  NodeId to = -1;
  std::array<std::optional<Lane>, kLaneClasses> lanes{};
  std::optional<NodeId> bus_stop;  // station served while traversing this edge

  bool has_lane(LaneClass c) const {
    return lanes[static_cast<std::size_t>(c)].has_value();
  }
  const Lane* lane(LaneClass c) const {
    const auto& slot = lanes[static_cast<std::size_t>(c)];
    return slot ? &*slot : nullptr;
  }
  // Shared by all lanes of the edge (validated at load).
  double free_flow_time() const;
  bool usable_by(VehicleClass v) const;
};

enum class ValidationCode {
  ParseError,
  UnsupportedVersion,
  MissingSection,
  DuplicateNodeId,
  DuplicateEdgeId,
  DanglingEdgeEndpoint,
  SelfLoop,
  MissingLane,
  DuplicateLane,
  NonPositiveLaneParam,
  LaneTimeMismatch,
  BadBusStop,
  StationRefCount,
  DisconnectedGraph,
  BadParams,
  BadBusRoute,
  BadTimetable,
  BadDemand,
};

const char* to_string(ValidationCode c);

struct Diagnostic {
  ValidationCode code;
  std::string message;
};

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(ValidationCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ValidationCode code() const { return code_; }

 private:
  ValidationCode code_;
};

class RoadNetwork {
 public:
  RoadNetwork() = default;

  // Validates all structural invariants and builds adjacency; throws
  // ScenarioError carrying the first violation.
  static RoadNetwork build(std::vector<Node> nodes, std::vector<Edge> edges);

  // Collects every structural violation without throwing.
  static std::vector<Diagnostic> validate(const std::vector<Node>& nodes,
                                          const std::vector<Edge>& edges);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const Edge& edge(EdgeId id) const { return edges_.at(static_cast<std::size_t>(id)); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<EdgeId>& out_edges(NodeId n) const {
    return out_.at(static_cast<std::size_t>(n));
  }

  std::optional<NodeId> node_by_label(Label l) const;
  std::optional<EdgeId> edge_by_label(Label l) const;
  std::optional<EdgeId> edge_between(NodeId from, NodeId to) const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> out_;
  std::unordered_map<Label, NodeId> node_labels_;
  std::unordered_map<Label, EdgeId> edge_labels_;
};

// An edge sequence plus the lane class chosen on each edge.
struct Route {
  std::vector<EdgeId> edges;
  std::vector<LaneClass> lane_choice;

  bool empty() const { return edges.empty(); }
  std::size_t size() const { return edges.size(); }
  bool contains_edge(EdgeId e) const;
  bool chains(const RoadNetwork& net) const;
  bool class_legal(const RoadNetwork& net, VehicleClass v) const;
  double free_flow_cost(const RoadNetwork& net) const;
};

std::vector<bool> no_excluded_edges(const RoadNetwork& net);

// O(V+E) reachability restricted to lanes usable by `vclass`, skipping
// `excluded` edges. `from == to` counts as reachable.
bool path_exists(const RoadNetwork& net, NodeId from, NodeId to,
                 const std::vector<bool>& excluded, VehicleClass vclass);

// Enumerates node-simple routes from `from` to `to`; the visitor returns
// false to stop early. For `from == to` a single empty route is produced.
// Lane choices default to the lowest permitted lane class on each edge.
void for_each_simple_route(const RoadNetwork& net, NodeId from, NodeId to,
                           const std::vector<bool>& excluded, VehicleClass vclass,
                           const std::function<bool(const Route&)>& visit);

}  // namespace mesoroute
