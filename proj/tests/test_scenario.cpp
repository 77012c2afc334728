#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <string>
#include <vector>

#include "json.hpp"
#include "mesoroute/scenario.hpp"

using namespace mesoroute;
using nlohmann::json;

namespace {

const char* kBundled = MESOROUTE_SOURCE_DIR "/scenarios/vanness.json";

// Smallest document that exercises every section: a two-node loop with one
// dedicated-lane edge hosting a station, a one-stop bus line, and demand for
// both self-routed classes.
json base_doc() {
  return json{
      {"format_version", 1},
      {"name", "tiny"},
      {"params", json::object()},
      {"nodes",
       json::array({{{"id", 1}}, {{"id", 2}}, {{"id", 5}, {"kind", "station"}}})},
      {"edges", json::array({{{"id", 10}, {"from", 1}, {"to", 2}, {"bus_stop", 5}},
                             {{"id", 11}, {"from", 2}, {"to", 1}}})},
      {"lanes", json::array({{{"edge", 10}, {"class", "dl"}, {"capacity", 0.5}, {"free_flow_time", 30}},
                             {{"edge", 10}, {"class", "gpl"}, {"capacity", 0.5}, {"free_flow_time", 30}},
                             {{"edge", 11}, {"class", "gpl"}, {"capacity", 0.5}, {"free_flow_time", 20}}})},
      {"bus_lines", json::array({{{"name", "short"},
                                  {"route", json::array({1, 2})},
                                  {"stops", json::array({{{"node", 5}, {"offset", 30}}})},
                                  {"destination_offset", 31},
                                  {"first_departure", 0},
                                  {"headway", 600},
                                  {"runs", 2}}})},
      {"demand", json::array({{{"class", "hv"}, {"rate_per_min", 1.0}, {"od", json::array({json::array({1, 2})})}},
                              {{"class", "cav"}, {"rate_per_min", 1.0}, {"od", json::array({json::array({2, 1})})}}})},
  };
}

ValidationCode first_code(const std::string& text) {
  const auto diags = validate_scenario_text(text);
  REQUIRE_FALSE(diags.empty());
  return diags.front().code;
}

void expect_rejected(const json& doc, ValidationCode code) {
  const std::string text = doc.dump();
  const auto diags = validate_scenario_text(text);
  const bool found = std::any_of(diags.begin(), diags.end(),
                                 [code](const Diagnostic& d) { return d.code == code; });
  CHECK_MESSAGE(found, "expected ", to_string(code), " in: ", text);
  CHECK_THROWS_AS(load_scenario_text(text), ScenarioError);
}

}  // namespace

TEST_CASE("bundled scenario loads and matches its published shape") {
  const Scenario sc = load_scenario(kBundled);
  CHECK(sc.name == "vanness");
  CHECK(sc.format_version == 1);

  CHECK(sc.params.alpha == doctest::Approx(0.15));
  CHECK(sc.params.beta == doctest::Approx(4.0));
  CHECK(sc.params.window_dl == 30);
  CHECK(sc.params.window_gpl == 60);
  CHECK(sc.params.lambda == doctest::Approx(0.03));
  CHECK(sc.params.on_time_tolerance == 60);
  CHECK(sc.params.dwell == 60);
  CHECK(sc.params.spawn_mode == SimParams::SpawnMode::Interval);
  CHECK(sc.params.horizon == 3600);

  CHECK(sc.net.node_count() == 21);
  CHECK(sc.net.edge_count() == 40);

  int stations = 0;
  for (const Node& n : sc.net.nodes())
    if (n.kind == NodeKind::BusStation) ++stations;
  CHECK(stations == 3);
  for (Label l : {8, 10, 13}) {
    auto id = sc.net.node_by_label(l);
    REQUIRE(id.has_value());
    CHECK(sc.net.node(*id).kind == NodeKind::BusStation);
  }

  REQUIRE(sc.bus_lines.size() == 1);
  const BusLine& line = sc.bus_lines.front();
  CHECK(line.name == "47-van-ness");
  REQUIRE(line.route.size() == 5);
  for (LaneClass lc : line.route.lane_choice) CHECK(lc == LaneClass::JointDl);
  std::vector<Label> route_labels;
  for (NodeId n : line.route_nodes) route_labels.push_back(sc.net.node(n).label);
  CHECK(route_labels == std::vector<Label>{7, 9, 11, 12, 14, 15});

  REQUIRE(line.stops.size() == 3);
  CHECK(line.stops[0].offset == 63);
  CHECK(line.stops[1].offset == 226);
  CHECK(line.stops[2].offset == 459);
  CHECK(line.stops[0].route_index == 0);
  CHECK(line.stops[1].route_index == 1);
  CHECK(line.stops[2].route_index == 3);
  CHECK(line.destination_offset == 567);

  REQUIRE(line.departures.size() == 10);
  CHECK(line.departures.front() == 0);
  CHECK(line.departures.back() == 9 * 360);

  // Parallel arterial pair between the same two intersections: the bus-usable
  // edge is declared first so route resolution lands on it.
  const auto a = sc.net.node_by_label(14);
  const auto b = sc.net.node_by_label(15);
  REQUIRE((a && b));
  const auto between = sc.net.edge_between(*a, *b);
  REQUIRE(between.has_value());
  CHECK(sc.net.edge(*between).label == 5);
  CHECK(sc.net.edge(*between).has_lane(LaneClass::JointDl));
  const auto bypass = sc.net.edge_by_label(6);
  REQUIRE(bypass.has_value());
  CHECK_FALSE(sc.net.edge(*bypass).has_lane(LaneClass::JointDl));
  CHECK(sc.net.edge(*bypass).has_lane(LaneClass::Gpl));

  REQUIRE(sc.demand.size() == 2);
  CHECK(sc.demand[0].vclass == VehicleClass::Cav);
  CHECK(sc.demand[0].rate_per_min == doctest::Approx(8.0));
  CHECK(sc.demand[0].ods.size() == 1);
  CHECK(sc.demand[1].vclass == VehicleClass::Hv);
  CHECK(sc.demand[1].rate_per_min == doctest::Approx(20.0));
  CHECK(sc.demand[1].ods.size() == 3);

  CHECK(validate_scenario_file(kBundled).empty());
}

TEST_CASE("minimal document round-trips") {
  const Scenario sc = load_scenario_text(base_doc().dump());
  CHECK(sc.name == "tiny");
  CHECK(sc.net.node_count() == 3);
  CHECK(sc.net.edge_count() == 2);
  REQUIRE(sc.bus_lines.size() == 1);
  CHECK(sc.bus_lines[0].route.size() == 1);
  CHECK(sc.bus_lines[0].stops.size() == 1);
  CHECK(sc.bus_lines[0].stops[0].route_index == 0);
  CHECK(sc.bus_lines[0].departures == std::vector<Seconds>{0, 600});
  CHECK(sc.demand.size() == 2);

  // Defaults survive an empty params object.
  CHECK(sc.params.alpha == doctest::Approx(0.15));
  CHECK(sc.params.horizon == 3600);
  CHECK(validate_scenario_text(base_doc().dump()).empty());
}

TEST_CASE("parse failures") {
  CHECK(first_code("{ nope") == ValidationCode::ParseError);
  CHECK(first_code("[1, 2]") == ValidationCode::ParseError);
  CHECK_THROWS_AS(load_scenario_text("{ nope"), ScenarioError);
  CHECK_FALSE(validate_scenario_file("/nonexistent/path.json").empty());
  CHECK_THROWS_AS(load_scenario("/nonexistent/path.json"), ScenarioError);
}

TEST_CASE("version gate") {
  auto doc = base_doc();
  doc["format_version"] = 2;
  expect_rejected(doc, ValidationCode::UnsupportedVersion);
  doc.erase("format_version");
  expect_rejected(doc, ValidationCode::UnsupportedVersion);
}

TEST_CASE("missing sections are reported") {
  for (const char* section : {"params", "nodes", "edges", "lanes", "bus_lines", "demand"}) {
    auto doc = base_doc();
    doc.erase(section);
    expect_rejected(doc, ValidationCode::MissingSection);
  }
}

TEST_CASE("bad parameter values") {
  auto doc = base_doc();
  doc["params"]["lambda"] = 0.0;  // the trigger margin must be positive
  expect_rejected(doc, ValidationCode::BadParams);

  doc = base_doc();
  doc["params"]["beta"] = 0.5;
  expect_rejected(doc, ValidationCode::BadParams);

  doc = base_doc();
  doc["params"]["spawn_mode"] = "burst";
  expect_rejected(doc, ValidationCode::BadParams);

  doc = base_doc();
  doc["params"]["window_dl"] = 0;
  expect_rejected(doc, ValidationCode::BadParams);

  doc = base_doc();
  doc["nodes"][0]["kind"] = "ramp";
  expect_rejected(doc, ValidationCode::BadParams);

  doc = base_doc();
  doc["lanes"][0]["class"] = "bike";
  expect_rejected(doc, ValidationCode::BadParams);
}

TEST_CASE("graph defects surface through the loader") {
  auto doc = base_doc();
  doc["nodes"][1]["id"] = 1;
  expect_rejected(doc, ValidationCode::DuplicateNodeId);

  doc = base_doc();
  doc["edges"][1]["id"] = 10;
  expect_rejected(doc, ValidationCode::DuplicateEdgeId);

  doc = base_doc();
  doc["edges"][1]["to"] = 99;
  expect_rejected(doc, ValidationCode::DanglingEdgeEndpoint);

  doc = base_doc();
  doc["lanes"][2]["edge"] = 99;
  expect_rejected(doc, ValidationCode::DanglingEdgeEndpoint);

  doc = base_doc();
  doc["edges"][1]["from"] = 1;  // 1 -> 1
  expect_rejected(doc, ValidationCode::SelfLoop);

  doc = base_doc();
  doc["lanes"].erase(2);  // edge 11 loses its only lane
  expect_rejected(doc, ValidationCode::MissingLane);

  doc = base_doc();
  doc["lanes"].push_back({{"edge", 10}, {"class", "dl"}, {"capacity", 0.1}, {"free_flow_time", 30}});
  expect_rejected(doc, ValidationCode::DuplicateLane);

  doc = base_doc();
  doc["lanes"][0]["capacity"] = 0.0;
  expect_rejected(doc, ValidationCode::NonPositiveLaneParam);

  doc = base_doc();
  doc["lanes"][1]["free_flow_time"] = 31;
  expect_rejected(doc, ValidationCode::LaneTimeMismatch);

  doc = base_doc();
  doc["nodes"].push_back({{"id", 7}});
  expect_rejected(doc, ValidationCode::DisconnectedGraph);
}

TEST_CASE("bus stop wiring") {
  auto doc = base_doc();
  doc["edges"][0]["bus_stop"] = 2;  // an intersection, not a station
  expect_rejected(doc, ValidationCode::BadBusStop);

  doc = base_doc();
  doc["edges"][0]["bus_stop"] = 99;
  expect_rejected(doc, ValidationCode::BadBusStop);

  doc = base_doc();
  doc["edges"][0].erase("bus_stop");  // station 5 now served by nothing
  expect_rejected(doc, ValidationCode::StationRefCount);

  doc = base_doc();
  doc["edges"][1]["bus_stop"] = 5;  // served twice
  expect_rejected(doc, ValidationCode::StationRefCount);
}

TEST_CASE("bus line validation") {
  auto doc = base_doc();
  doc["bus_lines"][0]["route"] = json::array({1});
  expect_rejected(doc, ValidationCode::BadBusRoute);

  doc = base_doc();
  doc["bus_lines"][0]["route"] = json::array({1, 99});
  expect_rejected(doc, ValidationCode::BadBusRoute);

  doc = base_doc();
  doc["bus_lines"][0]["route"] = json::array({2, 1});  // return edge is mixed-only
  expect_rejected(doc, ValidationCode::BadBusRoute);
}

TEST_CASE("timetable validation") {
  auto doc = base_doc();
  doc["bus_lines"][0]["stops"][0]["node"] = 1;  // not a station
  expect_rejected(doc, ValidationCode::BadTimetable);

  doc = base_doc();
  doc["bus_lines"][0]["destination_offset"] = 30;  // not past the last stop
  expect_rejected(doc, ValidationCode::BadTimetable);

  doc = base_doc();
  doc["bus_lines"][0]["stops"].push_back({{"node", 5}, {"offset", 40}});  // same edge twice
  expect_rejected(doc, ValidationCode::BadTimetable);

  doc = base_doc();
  doc["bus_lines"][0]["headway"] = 0;
  expect_rejected(doc, ValidationCode::BadTimetable);

  doc = base_doc();
  doc["bus_lines"][0].erase("first_departure");
  expect_rejected(doc, ValidationCode::BadTimetable);

  doc = base_doc();
  doc["bus_lines"][0]["departures"] = json::array({0, 0});
  expect_rejected(doc, ValidationCode::BadTimetable);

  // An explicit departure list overrides the headway expansion.
  doc = base_doc();
  doc["bus_lines"][0]["departures"] = json::array({5, 25});
  const Scenario sc = load_scenario_text(doc.dump());
  CHECK(sc.bus_lines[0].departures == std::vector<Seconds>{5, 25});
}

TEST_CASE("demand validation") {
  auto doc = base_doc();
  doc["demand"][0]["class"] = "bike";
  expect_rejected(doc, ValidationCode::BadDemand);

  doc = base_doc();
  doc["demand"][0]["rate_per_min"] = -1.0;
  expect_rejected(doc, ValidationCode::BadDemand);

  doc = base_doc();
  doc["demand"][0]["od"] = json::array();
  expect_rejected(doc, ValidationCode::BadDemand);

  doc = base_doc();
  doc["demand"][0]["od"] = json::array({json::array({1, 99})});
  expect_rejected(doc, ValidationCode::BadDemand);

  doc = base_doc();
  doc["demand"][0]["od"] = json::array({json::array({1})});
  expect_rejected(doc, ValidationCode::BadDemand);

  // Conventional traffic cannot be asked to use a dedicated-lane-only link.
  doc = base_doc();
  doc["lanes"].erase(1);  // edge 10 keeps only its dedicated lane
  expect_rejected(doc, ValidationCode::BadDemand);
}
