#include <gtest/gtest.h>

#include "icat/map_io.hpp"

using namespace icat;
using nlohmann::json;

namespace {

bool any_contains(const std::vector<std::string>& errors, const std::string& needle) {
  for (const auto& e : errors)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(MapIo, DefaultMapRoundTrips) {
  const RoadGraph g = build_icat_default(0.5);
  const json doc = map_to_json(g);
  const MapReport r = validate_map(doc);
  EXPECT_TRUE(r.ok()) << (r.errors.empty() ? "" : r.errors.front());
  EXPECT_TRUE(r.strongly_connected);
  EXPECT_EQ(r.node_count, g.nodes().size());
  EXPECT_EQ(r.edge_count, g.edges().size());

  const RoadGraph back = load_map(doc);
  ASSERT_EQ(back.edges().size(), g.edges().size());
  for (std::size_t i = 0; i < g.edges().size(); ++i) {
    const auto& a = g.edges()[i];
    const auto& b = back.edges()[i];
    EXPECT_EQ(a.name, b.name);
    EXPECT_NEAR(a.length(), b.length(), 1e-9);
    ASSERT_EQ(a.waypoints.size(), b.waypoints.size());
    for (std::size_t k = 0; k < a.waypoints.size(); ++k)
      EXPECT_LT(distance(a.waypoints[k].position, b.waypoints[k].position), 1e-9);
  }
  EXPECT_EQ(map_to_json(back), doc);
}

TEST(MapIo, DanglingEndpointNamesEdge) {
  json doc = map_to_json(build_icat_default(0.5));
  const std::string victim = doc["edges"][3]["id"];
  doc["edges"][3]["to"] = "nowhere";
  const MapReport r = validate_map(doc);
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(any_contains(r.errors, victim));
  EXPECT_TRUE(any_contains(r.errors, "nowhere"));
  EXPECT_THROW(load_map(doc), MapFormatError);
}

TEST(MapIo, WrongSpacingNamesEdgeAndMeasuredGap) {
  json doc = map_to_json(build_icat_default(0.5));
  // Find a straight edge with enough points and shift one interior waypoint
  // along the edge by 0.1 m.
  for (auto& e : doc["edges"]) {
    if (e["geometry"]["type"] != "straight" || e["waypoints"].size() < 5) continue;
    const double x0 = e["waypoints"][0][0], y0 = e["waypoints"][0][1];
    const double x1 = e["waypoints"][1][0], y1 = e["waypoints"][1][1];
    const double ux = (x1 - x0) / 0.5, uy = (y1 - y0) / 0.5;
    e["waypoints"][2][0] = e["waypoints"][2][0].get<double>() + 0.1 * ux;
    e["waypoints"][2][1] = e["waypoints"][2][1].get<double>() + 0.1 * uy;
    const std::string name = e["id"];
    const MapReport r = validate_map(doc);
    ASSERT_FALSE(r.ok());
    EXPECT_TRUE(any_contains(r.errors, name));
    EXPECT_TRUE(any_contains(r.errors, "0.6"));
    return;
  }
  FAIL() << "no straight edge found";
}

TEST(MapIo, OffGeometryWaypointRejected) {
  json doc = map_to_json(build_icat_default(0.5));
  for (auto& e : doc["edges"]) {
    if (e["geometry"]["type"] != "arc") continue;
    e["waypoints"][1][0] = e["waypoints"][1][0].get<double>() + 0.05;
    const MapReport r = validate_map(doc);
    EXPECT_FALSE(r.ok());
    EXPECT_TRUE(any_contains(r.errors, e["id"].get<std::string>()));
    return;
  }
}

TEST(MapIo, StructuralErrors) {
  EXPECT_FALSE(validate_map(json::array()).ok());
  json doc = map_to_json(build_icat_default(0.5));
  doc["extra"] = 1;
  EXPECT_TRUE(any_contains(validate_map(doc).errors, "extra"));
  doc = map_to_json(build_icat_default(0.5));
  doc["nodes"][0]["kind"] = "roundabout";
  EXPECT_TRUE(any_contains(validate_map(doc).errors, "kind"));
  doc = map_to_json(build_icat_default(0.5));
  doc["edges"][1]["id"] = doc["edges"][0]["id"];
  EXPECT_TRUE(any_contains(validate_map(doc).errors, "duplicate"));
}

TEST(MapIo, MergeCycleRoundTrips) {
  const RoadGraph g = build_merge_cycle(0.5);
  const RoadGraph back = load_map(map_to_json(g));
  EXPECT_EQ(back.edges().size(), g.edges().size());
  EXPECT_TRUE(strongly_connected(back));
}
