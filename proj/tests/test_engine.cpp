#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "icat/engine.hpp"
#include "icat/map_io.hpp"

using namespace icat;

namespace {

std::string two_loops_map() {
  GraphBuilder b;
  for (auto [tag, cx] : {std::pair{"a", 10.0}, {"b", 40.0}}) {
    const std::string t = tag;
    const NodeId e = b.add_node(t + "_east", {cx + 5.0, 10.0});
    const NodeId w = b.add_node(t + "_west", {cx - 5.0, 10.0});
    b.add_arc(t + "_top", e, w, {{cx, 10.0}, 5.0, false}, 2.0);
    b.add_arc(t + "_bottom", w, e, {{cx, 10.0}, 5.0, false}, 2.0);
  }
  const auto path = std::filesystem::temp_directory_path() / "icat_two_loops.json";
  std::ofstream(path) << map_to_json(b.build(0.5)).dump();
  return path.string();
}

}  // namespace

TEST(Config, InvariantViolationsNamed) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  c.vehicle_dt = 0.5;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("vehicle_dt <= planner.dt <= planning_period"),
              std::string::npos);
  }
  c = {};
  c.bsm_period = 0.03;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.channel.drop_prob = 2.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.n_cars = 2;
  c.initial_cars = {{"W_in", 1.0, 0.0}};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Run, IdealSingleCarTracksExactly) {
  SimConfig c;
  c.n_cars = 1;
  c.ideal = true;
  c.duration = 60.0;
  const Metrics m = run(c);
  EXPECT_EQ(m.separation_violations, 0u);
  EXPECT_LE(m.max_cross_track, 1e-12);
  EXPECT_LE(m.cross_track_straight, 1e-12);
  EXPECT_LE(m.cross_track_curve, 1e-12);
  EXPECT_GE(m.completed_routes, 1u);
  EXPECT_TRUE(m.to_json()["min_separation"].is_null());
}

TEST(Run, ByteIdenticalReruns) {
  SimConfig c;
  c.duration = 20.0;
  c.n_cars = 6;
  auto once = [&](int workers) {
    SimConfig w = c;
    w.workers = workers;
    std::ostringstream trace, events;
    const Metrics m = run(w, {&trace, &events});
    return std::tuple{m.to_json().dump(), trace.str(), events.str()};
  };
  const auto a = once(1);
  EXPECT_EQ(a, once(1));
  EXPECT_EQ(a, once(4));
  EXPECT_EQ(std::get<1>(a).rfind("time,car_id,x,y,heading,v,s,d,edge,flags\n", 0), 0u);
}

TEST(Run, TenCarsSixtySecondsSafe) {
  SimConfig c;
  c.duration = 60.0;
  const Metrics m = run(c);
  EXPECT_EQ(m.separation_violations, 0u);
  EXPECT_EQ(m.deadlock_events, 0u);
  EXPECT_GE(m.min_separation, c.separation.d_safe);
  EXPECT_FALSE(m.left_bounds);
  EXPECT_GT(m.commands_applied, 0u);
}

TEST(Run, ModesAgreeWithoutInteraction) {
  SimConfig c;
  c.map = two_loops_map();
  c.n_cars = 2;
  c.initial_cars = {{"a_top", 1.0, 0.0}, {"b_top", 1.0, 0.0}};
  c.duration = 60.0;
  const Metrics opt = run(c);
  c.mode = ManagerMode::fifo_baseline;
  const Metrics fifo = run(c);
  EXPECT_GT(opt.completed_routes, 0u);
  EXPECT_DOUBLE_EQ(opt.throughput, fifo.throughput);
}

TEST(Run, MergeCycleDeadlocksUnderFifoOnly) {
  SimConfig c;
  c.map = "merge_cycle";
  c.n_cars = 4;
  c.duration = 120.0;
  for (int k = 0; k < 4; ++k)
    c.initial_cars.push_back(
        {"ring_M" + std::to_string(k) + "_D" + std::to_string((k + 1) % 4), 0.3, 0.0});
  c.mode = ManagerMode::fifo_baseline;
  EXPECT_GE(run(c).deadlock_events, 1u);
  c.mode = ManagerMode::optimized;
  const Metrics m = run(c);
  EXPECT_EQ(m.deadlock_events, 0u);
  EXPECT_EQ(m.separation_violations, 0u);
}

TEST(Lag, ResponseDelayGrowsWithLatency) {
  SimConfig c;
  c.duration = 30.0;
  const LagReport r = lag_experiment(c, {0.0, 0.05, 0.2});
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_LE(r.rows[0].mean_response_delay, c.vehicle_dt + 1e-12);
  EXPECT_TRUE(r.strictly_increasing);
  for (std::size_t k = 1; k < r.rows.size(); ++k)
    EXPECT_GT(r.rows[k].mean_response_delay, r.rows[k - 1].mean_response_delay);
  EXPECT_GE(r.rows[2].mean_response_delay, 0.2 - 1e-12);
  EXPECT_LE(r.rows[2].mean_response_delay, 0.2 + c.planning_period + c.vehicle_dt);
  EXPECT_THROW(lag_experiment(c, {-0.1}), ConfigError);
}

TEST(Run, CurvesTrackWorseThanStraights) {
  SimConfig c;
  c.duration = 60.0;
  c.noise.enabled = false;
  const Metrics m = run(c);
  EXPECT_GT(m.cross_track_curve, m.cross_track_straight);
  EXPECT_LT(m.cross_track_straight, 0.02);
  EXPECT_LT(m.cross_track_curve, 0.15);
}

TEST(Run, PreemptionForcesGreen) {
  SimConfig c;
  c.n_cars = 2;
  c.duration = 10.0;
  LightConfig l;
  l.id = "W";
  l.node = "W_entry";
  l.phases = {{LightState::red, 30.0}, {LightState::green, 30.0}, {LightState::yellow, 2.0}};
  c.lights = {l};
  c.preemptions = {{2.0, "W", LightState::green}};
  std::ostringstream events;
  run(c, {nullptr, &events});
  EXPECT_NE(events.str().find("Preemption"), std::string::npos);
}
