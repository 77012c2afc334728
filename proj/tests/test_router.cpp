#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <random>
#include <vector>

#include "mesoroute/router.hpp"
#include "support/oracles.hpp"

using namespace mesoroute;

namespace {

Node plain_node(NodeId id) {
  Node n;
  n.id = id;
  n.label = 200 + id;
  return n;
}

Edge plain_edge(EdgeId id, NodeId from, NodeId to) {
  Edge e;
  e.id = id;
  e.label = 2000 + id;
  e.from = from;
  e.to = to;
  return e;
}

// up: 0->1 mixed; hot: 1->2 dedicated-only; two general alternatives 1->3
// (one tight, one roomy) and a connector 3->2.
RoadNetwork corridor_net() {
  std::vector<Node> nodes{plain_node(0), plain_node(1), plain_node(2), plain_node(3)};
  std::vector<Edge> edges;

  Edge up = plain_edge(0, 0, 1);
  up.lanes[0] = Lane{LaneClass::JointDl, 0.5, 20.0};
  up.lanes[1] = Lane{LaneClass::Gpl, 0.5, 20.0};
  edges.push_back(up);

  Edge hot = plain_edge(1, 1, 2);
  hot.lanes[0] = Lane{LaneClass::JointDl, 0.1, 100.0};
  edges.push_back(hot);

  Edge tight = plain_edge(2, 1, 3);
  tight.lanes[1] = Lane{LaneClass::Gpl, 0.005, 10.0};
  edges.push_back(tight);

  Edge roomy = plain_edge(3, 1, 3);
  roomy.lanes[1] = Lane{LaneClass::Gpl, 10.0, 11.0};
  edges.push_back(roomy);

  Edge fin = plain_edge(4, 3, 2);
  fin.lanes[1] = Lane{LaneClass::Gpl, 10.0, 1.0};
  edges.push_back(fin);

  return RoadNetwork::build(std::move(nodes), std::move(edges));
}

double route_cost(const Route& r, const CostTable& costs) {
  double total = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) total += costs.cost(r.edges[i], r.lane_choice[i]);
  return total;
}

}  // namespace

TEST_CASE("policy names round-trip") {
  for (Policy p : {Policy::Srp, Policy::Drp, Policy::Coordinated, Policy::SrpNoJointDl}) {
    auto back = parse_policy(to_string(p));
    REQUIRE(back.has_value());
    CHECK(*back == p);
  }
  CHECK_FALSE(parse_policy("SRP").has_value());
  CHECK_FALSE(parse_policy("").has_value());
  CHECK_FALSE(parse_policy("static").has_value());
}

TEST_CASE("shortest path basics") {
  const RoadNetwork net = corridor_net();
  const CostTable costs = free_flow_costs(net);
  const auto none = no_excluded_edges(net);

  SUBCASE("origin equals destination") {
    const auto r = shortest_path(net, costs, 1, 1, none, VehicleClass::Cav);
    REQUIRE(r.has_value());
    CHECK(r->route.empty());
    CHECK(r->cost == 0.0);
  }

  SUBCASE("cheapest route for a connected vehicle") {
    const auto r = shortest_path(net, costs, 0, 2, none, VehicleClass::Cav);
    REQUIRE(r.has_value());
    CHECK(r->route.edges == std::vector<EdgeId>{0, 2, 4});  // 20 + 10 + 1
    CHECK(r->cost == doctest::Approx(31.0));
    CHECK(r->route.chains(net));
    CHECK(r->route.class_legal(net, VehicleClass::Cav));
  }

  SUBCASE("buses are confined to dedicated lanes") {
    const auto r = shortest_path(net, costs, 0, 2, none, VehicleClass::Bus);
    REQUIRE(r.has_value());
    CHECK(r->route.edges == std::vector<EdgeId>{0, 1});
    CHECK(r->cost == doctest::Approx(120.0));
    for (LaneClass lc : r->route.lane_choice) CHECK(lc == LaneClass::JointDl);
    CHECK_FALSE(shortest_path(net, costs, 0, 3, none, VehicleClass::Bus).has_value());
  }

  SUBCASE("exclusions prune routes") {
    auto cut = none;
    cut[2] = true;
    const auto r = shortest_path(net, costs, 0, 2, cut, VehicleClass::Cav);
    REQUIRE(r.has_value());
    CHECK(r->route.edges == std::vector<EdgeId>{0, 3, 4});
    cut[3] = true;
    const auto dl_only = shortest_path(net, costs, 0, 2, cut, VehicleClass::Cav);
    REQUIRE(dl_only.has_value());
    CHECK(dl_only->route.edges == std::vector<EdgeId>{0, 1});
    const auto hv = shortest_path(net, costs, 0, 2, cut, VehicleClass::Hv);
    CHECK_FALSE(hv.has_value());
  }

  SUBCASE("masking the dedicated lanes reroutes connected vehicles") {
    const auto r = shortest_path(net, costs, 1, 2, none, VehicleClass::Cav, {false, true});
    REQUIRE(r.has_value());
    CHECK(r->route.edges == std::vector<EdgeId>{2, 4});
    for (LaneClass lc : r->route.lane_choice) CHECK(lc == LaneClass::Gpl);
  }

  SUBCASE("unreachable pairs return nothing") {
    CHECK_FALSE(shortest_path(net, costs, 2, 0, none, VehicleClass::Cav).has_value());
  }
}

TEST_CASE("tie-breaking is deterministic") {
  // Two identical parallel edges plus a dual-lane edge with equal lane costs.
  std::vector<Node> nodes{plain_node(0), plain_node(1), plain_node(2)};
  std::vector<Edge> edges;
  Edge a = plain_edge(0, 0, 1);
  a.lanes[1] = Lane{LaneClass::Gpl, 1.0, 10.0};
  Edge b = plain_edge(1, 0, 1);
  b.lanes[1] = Lane{LaneClass::Gpl, 1.0, 10.0};
  Edge c = plain_edge(2, 1, 2);
  c.lanes[0] = Lane{LaneClass::JointDl, 1.0, 5.0};
  c.lanes[1] = Lane{LaneClass::Gpl, 1.0, 5.0};
  edges = {a, b, c};
  const RoadNetwork net = RoadNetwork::build(std::move(nodes), std::move(edges));
  const CostTable costs = free_flow_costs(net);

  const auto r = shortest_path(net, costs, 0, 2, no_excluded_edges(net), VehicleClass::Cav);
  REQUIRE(r.has_value());
  CHECK(r->route.edges == std::vector<EdgeId>{0, 2});   // lowest edge id wins the tie
  CHECK(r->route.lane_choice[1] == LaneClass::JointDl);  // dedicated lane wins equal costs
}

TEST_CASE("shortest path matches exhaustive enumeration") {
  std::mt19937_64 rng(80846);
  int found = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const RoadNetwork net = testsupport::random_network(rng);
    const CostTable costs = testsupport::random_costs(net, rng);
    const auto n = static_cast<std::uint64_t>(net.node_count());

    auto excluded = no_excluded_edges(net);
    if (trial % 3 == 1) {
      for (std::size_t e = 0; e < net.edge_count(); ++e) excluded[e] = rng() % 4 == 0;
    }
    std::array<bool, kLaneClasses> mask{true, true};
    if (trial % 5 == 2) mask[rng() % 2] = false;

    const auto from = static_cast<NodeId>(rng() % n);
    const auto to = static_cast<NodeId>(rng() % n);
    for (VehicleClass vc : {VehicleClass::Hv, VehicleClass::Cav, VehicleClass::Bus}) {
      const auto got = shortest_path(net, costs, from, to, excluded, vc, mask);
      const auto want =
          testsupport::brute_force_cheapest_path(net, costs, from, to, excluded, vc, mask);
      REQUIRE(got.has_value() == want.has_value());
      if (!got) continue;
      ++found;
      CHECK(got->cost == *want);  // bitwise: same summation order along the path
      CHECK(route_cost(got->route, costs) == got->cost);
      CHECK(got->route.chains(net));
      CHECK(got->route.class_legal(net, vc));
      if (!got->route.empty()) {
        CHECK(net.edge(got->route.edges.front()).from == from);
        CHECK(net.edge(got->route.edges.back()).to == to);
      }
    }
  }
  CHECK(found > 300);
}

TEST_CASE("static assignment with and without dedicated-lane access") {
  std::vector<Node> nodes{plain_node(0), plain_node(1)};
  Edge fast = plain_edge(0, 0, 1);
  fast.lanes[0] = Lane{LaneClass::JointDl, 1.0, 10.0};
  Edge slow = plain_edge(1, 0, 1);
  slow.lanes[1] = Lane{LaneClass::Gpl, 1.0, 30.0};
  const RoadNetwork net = RoadNetwork::build(std::move(nodes), {fast, slow});

  const auto shared = srp_route(net, 0, 1, VehicleClass::Cav, true);
  REQUIRE(shared.has_value());
  CHECK(shared->route.edges == std::vector<EdgeId>{0});
  CHECK(shared->cost == doctest::Approx(10.0));

  const auto fenced = srp_route(net, 0, 1, VehicleClass::Cav, false);
  REQUIRE(fenced.has_value());
  CHECK(fenced->route.edges == std::vector<EdgeId>{1});
  CHECK(fenced->cost == doctest::Approx(30.0));

  // The flag only fences connected vehicles; buses keep their lanes.
  const auto bus = srp_route(net, 0, 1, VehicleClass::Bus, false);
  REQUIRE(bus.has_value());
  CHECK(bus->route.edges == std::vector<EdgeId>{0});

  const auto hv = srp_route(net, 0, 1, VehicleClass::Hv, true);
  REQUIRE(hv.has_value());
  CHECK(hv->route.edges == std::vector<EdgeId>{1});
}

TEST_CASE("congestion trigger") {
  const RoadNetwork net = corridor_net();
  SimParams params;  // alpha .15, beta 4, dl half-width 30, lambda .1

  BusState bus;
  bus.vehicle_id = 77;
  bus.route.edges = {0, 1};
  bus.route.lane_choice = {LaneClass::JointDl, LaneClass::JointDl};
  bus.cursor = 0;
  bus.entry_time = 50;
  bus.exit_due = 130;
  bus.phase = TripPhase::OnEdge;

  auto views_with = [](int k) {
    // k planned entries onto the hot edge around the bus's scheduled exit.
    std::vector<CavFlowView> views;
    for (int i = 0; i < k; ++i) views.push_back({1, 110.0 + i});
    return views;
  };

  SUBCASE("needs an in-transit bus with a next edge") {
    BusState idle = bus;
    idle.phase = TripPhase::Pending;
    CHECK_FALSE(detect_trigger(net, params, idle, views_with(9), 60).has_value());

    BusState last = bus;
    last.cursor = 1;
    CHECK_FALSE(detect_trigger(net, params, last, views_with(9), 60).has_value());
  }

  SUBCASE("active only while the bus traverses the edge") {
    CHECK_FALSE(detect_trigger(net, params, bus, views_with(9), 49).has_value());
    CHECK(detect_trigger(net, params, bus, views_with(9), 50).has_value());
    CHECK(detect_trigger(net, params, bus, views_with(9), 130).has_value());
    CHECK_FALSE(detect_trigger(net, params, bus, views_with(9), 131).has_value());
  }

  SUBCASE("fires once anticipated delay exceeds the margin") {
    // hot edge: tau0 100, capacity 0.1; threshold 110.
    // Six entries over the hour-window: flow 0.1, anticipated time 115.
    const auto hit = detect_trigger(net, params, bus, views_with(6), 100);
    REQUIRE(hit.has_value());
    CHECK(hit->fired);
    CHECK(hit->edge == 1);
    CHECK(hit->route_index == 1);
    CHECK(hit->center == 130);
    CHECK(hit->threshold == doctest::Approx(110.0));
    CHECK(hit->tau_hat == doctest::Approx(115.0));

    // Five entries: flow 1/12, anticipated time ~107.2, below the margin.
    const auto miss = detect_trigger(net, params, bus, views_with(5), 100);
    REQUIRE(miss.has_value());
    CHECK_FALSE(miss->fired);
    CHECK(miss->tau_hat < miss->threshold);
  }

  SUBCASE("planned entries outside the window are invisible") {
    std::vector<CavFlowView> far;
    for (int i = 0; i < 12; ++i) far.push_back({1, 200.0 + i});  // window ends at 160
    const auto check = detect_trigger(net, params, bus, far, 100);
    REQUIRE(check.has_value());
    CHECK_FALSE(check->fired);
    CHECK(check->tau_hat == doctest::Approx(100.0));
  }
}

TEST_CASE("reroute set selection and ordering") {
  SimParams params;
  std::vector<CavState> cavs(5);
  std::vector<CavFlowView> views(5);
  for (int i = 0; i < 5; ++i) cavs[static_cast<std::size_t>(i)].vehicle_id = 10 - i;

  // Window [100, 160] around center 130, target edge 1.
  views[0] = {1, 120.0};  // id 10
  views[1] = {1, 120.0};  // id 9, ties on time -> id order
  views[2] = {1, 105.0};  // id 8, earliest
  views[3] = {1, 130.0};  // id 7, locked
  views[4] = {1, 161.0};  // id 6, outside the window
  cavs[3].trigger_locked = true;

  const RerouteSet set = identify_reroute_set(cavs, views, params, 130, 1);
  CHECK(set.selected == std::vector<int>{2, 1, 0});
  CHECK(set.locked == std::vector<int>{3});

  // A different target edge matches nobody.
  const RerouteSet other = identify_reroute_set(cavs, views, params, 130, 2);
  CHECK(other.selected.empty());
  CHECK(other.locked.empty());
}

TEST_CASE("sequential reassignment feeds back into the estimates") {
  const RoadNetwork net = corridor_net();
  SimParams params;
  HvEntryLog hv_log(net.edge_count());

  std::vector<CavState> cavs(2);
  std::vector<CavFlowView> views(2);
  for (int i = 0; i < 2; ++i) {
    auto& cav = cavs[static_cast<std::size_t>(i)];
    cav.vehicle_id = i;
    cav.origin = 0;
    cav.destination = 2;
    cav.route.edges = {0, 1};
    cav.route.lane_choice = {LaneClass::Gpl, LaneClass::JointDl};
    cav.cursor = 0;
    cav.phase = TripPhase::OnEdge;
    views[static_cast<std::size_t>(i)] = {1, 120.0 + i};
  }

  const RerouteSet set = identify_reroute_set(cavs, views, params, 130, 1);
  REQUIRE(set.selected.size() == 2);

  const auto assignments = reoptimize_set(net, params, cavs, views, hv_log, set,
                                          /*excluded_edge=*/1, /*replan_node=*/1, /*t=*/130);
  REQUIRE(assignments.size() == 2);
  CHECK(assignments[0].cav_index == 0);
  CHECK(assignments[1].cav_index == 1);

  // First pick: the tight alternative at free flow (10 + 1 beats 11 + 1).
  REQUIRE(assignments[0].new_tail.has_value());
  CHECK(assignments[0].new_tail->edges == std::vector<EdgeId>{2, 4});

  // Its planned entry saturates the tight lane, so the next pick diverges.
  REQUIRE(assignments[1].new_tail.has_value());
  CHECK(assignments[1].new_tail->edges == std::vector<EdgeId>{3, 4});

  for (const auto& a : assignments) {
    CHECK(a.new_tail->chains(net));
    CHECK(a.new_tail->class_legal(net, VehicleClass::Cav));
    CHECK_FALSE(a.new_tail->contains_edge(1));
  }
}

TEST_CASE("reassignment reports vehicles it cannot place") {
  // 0 -> 1 mixed, 1 -> 2 dedicated-only: excluding the dedicated edge strands
  // the vehicle.
  std::vector<Node> nodes{plain_node(0), plain_node(1), plain_node(2)};
  Edge a = plain_edge(0, 0, 1);
  a.lanes[1] = Lane{LaneClass::Gpl, 1.0, 10.0};
  Edge x = plain_edge(1, 1, 2);
  x.lanes[0] = Lane{LaneClass::JointDl, 0.1, 50.0};
  const RoadNetwork net = RoadNetwork::build(std::move(nodes), {a, x});

  SimParams params;
  HvEntryLog hv_log(net.edge_count());
  std::vector<CavState> cavs(1);
  cavs[0].vehicle_id = 0;
  cavs[0].destination = 2;
  cavs[0].route.edges = {0, 1};
  cavs[0].route.lane_choice = {LaneClass::Gpl, LaneClass::JointDl};
  cavs[0].cursor = 0;
  cavs[0].phase = TripPhase::OnEdge;
  std::vector<CavFlowView> views{{1, 120.0}};

  const RerouteSet set = identify_reroute_set(cavs, views, params, 130, 1);
  REQUIRE(set.selected == std::vector<int>{0});
  const auto assignments = reoptimize_set(net, params, cavs, views, hv_log, set, 1, 1, 130);
  REQUIRE(assignments.size() == 1);
  CHECK_FALSE(assignments[0].new_tail.has_value());
}

TEST_CASE("self-routed replanning needs strict improvement") {
  std::vector<Node> nodes{plain_node(0), plain_node(1), plain_node(2), plain_node(3)};
  std::vector<Edge> edges;
  Edge a = plain_edge(0, 0, 1);
  a.lanes[1] = Lane{LaneClass::Gpl, 1.0, 10.0};
  Edge b = plain_edge(1, 1, 2);
  b.lanes[1] = Lane{LaneClass::Gpl, 1.0, 50.0};
  Edge c = plain_edge(2, 1, 3);
  c.lanes[1] = Lane{LaneClass::Gpl, 1.0, 20.0};
  Edge d = plain_edge(3, 3, 2);
  d.lanes[1] = Lane{LaneClass::Gpl, 1.0, 25.0};
  edges = {a, b, c, d};
  const RoadNetwork net = RoadNetwork::build(std::move(nodes), std::move(edges));

  CavState cav;
  cav.vehicle_id = 0;
  cav.destination = 2;
  cav.route.edges = {0, 1};
  cav.route.lane_choice = {LaneClass::Gpl, LaneClass::Gpl};
  cav.cursor = 0;
  cav.phase = TripPhase::OnEdge;

  CostTable costs = free_flow_costs(net);

  SUBCASE("a cheaper detour replaces the tail") {
    const auto alt = drp_step(net, costs, cav, 1);  // 20 + 25 beats 50
    REQUIRE(alt.has_value());
    CHECK(alt->edges == std::vector<EdgeId>{2, 3});
  }

  SUBCASE("an equal-cost detour is ignored") {
    costs.lane_cost[2][static_cast<std::size_t>(LaneClass::Gpl)] = 25.0;  // detour now 50
    CHECK_FALSE(drp_step(net, costs, cav, 1).has_value());
  }

  SUBCASE("arriving vehicles do not replan") {
    CHECK_FALSE(drp_step(net, costs, cav, 2).has_value());
  }
}
