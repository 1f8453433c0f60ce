#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "icat/scenario.hpp"

using namespace icat;
using nlohmann::json;

namespace {

std::string error_of(const json& doc) {
  try {
    scenario_from_json(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Scenario, EmptyDocumentGivesDefaults) {
  const SimConfig c = scenario_from_json(json::object());
  const SimConfig d;
  EXPECT_EQ(c.seed, d.seed);
  EXPECT_EQ(c.n_cars, d.n_cars);
  EXPECT_EQ(c.map, "default");
  EXPECT_EQ(c.mode, ManagerMode::optimized);
}

TEST(Scenario, UnknownKeysNamePath) {
  EXPECT_EQ(error_of({{"channel", {{"foo", 1}}}}), "channel.foo: unknown key");
  EXPECT_EQ(error_of({{"bogus", true}}), "bogus: unknown key");
  EXPECT_EQ(error_of({{"initial_cars", {{{"edge", "W_in"}, {"spd", 1.0}}}}}),
            "initial_cars[0].spd: unknown key");
}

TEST(Scenario, TypeMismatchesNamePath) {
  EXPECT_EQ(error_of({{"duration", "long"}}), "duration: expected a number");
  EXPECT_EQ(error_of({{"noise", {{"enabled", 1}}}}), "noise.enabled: expected a boolean");
  EXPECT_EQ(error_of({{"seed", -3}}), "seed: expected a non-negative integer");
  EXPECT_EQ(error_of({{"lights", 5}}), "lights: expected an array");
  EXPECT_NE(error_of({{"mode", "fast"}}).find("mode"), std::string::npos);
  EXPECT_NE(error_of({{"preemptions", {{{"requested", "blue"}}}}}).find("preemptions[0].requested"),
            std::string::npos);
}

TEST(Scenario, InvariantsCheckedOnLoad) {
  EXPECT_NE(error_of({{"vehicle_dt", 0.5}}).find("invariant"), std::string::npos);
}

TEST(Scenario, CarCountFollowsInitialCars) {
  const json cars = {{{"edge", "W_in"}, {"offset", 1.0}}, {{"edge", "S_in"}, {"offset", 2.0}}};
  EXPECT_EQ(scenario_from_json({{"initial_cars", cars}}).n_cars, 2);
  EXPECT_THROW(scenario_from_json({{"initial_cars", cars}, {"n_cars", 3}}), ConfigError);
  EXPECT_EQ(error_of({{"initial_cars", {{{"offset", 1.0}}}}}), "initial_cars[0].edge: required");
}

TEST(Scenario, RelativeMapResolvedAgainstFile) {
  const auto dir = std::filesystem::temp_directory_path() / "icat_scenario_test";
  std::filesystem::create_directories(dir / "maps");
  std::ofstream(dir / "s.json") << R"({"map": "maps/m.json", "duration": 5})";
  const SimConfig c = load_scenario((dir / "s.json").string());
  EXPECT_EQ(std::filesystem::path(c.map), dir / "maps" / "m.json");
  EXPECT_EQ(scenario_from_json({{"map", "merge_cycle"}}, dir.string()).map, "merge_cycle");
  EXPECT_THROW(load_scenario((dir / "missing.json").string()), std::runtime_error);
  std::ofstream(dir / "bad.json") << "{";
  EXPECT_THROW(load_scenario((dir / "bad.json").string()), ConfigError);
}

TEST(Scenario, RoundTrip) {
  SimConfig c;
  c.seed = 99;
  c.duration = 12.5;
  c.n_cars = 2;
  c.mode = ManagerMode::fifo_baseline;
  c.channel.base_latency = 0.07;
  c.noise.enabled = false;
  c.separation.priority_rule = PriorityRule::lower_id;
  c.initial_cars = {{"W_in", 1.0, 0.5}, {"S_in", 2.0, 0.0}};
  LightConfig l;
  l.id = "W";
  l.node = "W_entry";
  l.phases = {{LightState::green, 5.0}, {LightState::yellow, 2.0}, {LightState::red, 7.0}};
  c.lights = {l};
  c.obstacles = {{{3.0, 4.0}, 0.5, ObstacleKind::construction_zone}};
  c.preemptions = {{1.5, "W", LightState::red}};
  const json j = scenario_to_json(c);
  EXPECT_EQ(scenario_to_json(scenario_from_json(j)), j);
}

TEST(Scenario, ShippedExamplesLoad) {
  int n = 0;
  for (const auto& f : std::filesystem::directory_iterator(ICAT_SCENARIO_DIR)) {
    if (f.path().extension() != ".json") continue;
    SCOPED_TRACE(f.path().string());
    EXPECT_NO_THROW(load_scenario(f.path().string()));
    ++n;
  }
  EXPECT_GE(n, 4);
}
