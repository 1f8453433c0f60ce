#include <gtest/gtest.h>

#include <random>

#include "icat/conflict.hpp"
#include "support.hpp"

using namespace icat;

using icat::testing::scan;

namespace {

Trajectory line_traj(CarId id, Vec2 start, Vec2 vel, std::size_t n, double t0 = 0.0,
                     double dt = 0.1, EdgeId edge = EdgeId{0}) {
  Trajectory t;
  t.car_id = id;
  t.start_time = t0;
  t.dt = dt;
  for (std::size_t k = 0; k < n; ++k) {
    TrajectoryFrame f;
    f.t = static_cast<double>(k) * dt;
    f.x = start.x + vel.x * f.t;
    f.y = start.y + vel.y * f.t;
    f.heading = std::atan2(vel.y, vel.x);
    f.v = vel.norm();
    f.s = f.v * f.t;
    f.edge = edge;
    t.frames.push_back(f);
  }
  return t;
}

double scan_min(const Trajectory& a, const Trajectory& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& fa : a.frames)
    for (const auto& fb : b.frames)
      if (std::abs(a.start_time + fa.t - b.start_time - fb.t) < 1e-9)
        best = std::min(best, distance(fa.position(), fb.position()));
  return best;
}

struct Car {
  PlanContext ctx;
  Trajectory traj;
};

Car make_car(const RoadGraph& g, const std::vector<std::string>& edges, double s, double v,
             CarId id, const PlannerParams& pp, double limit = 2.0) {
  std::vector<EdgeId> ids;
  for (const auto& e : edges) ids.push_back(*g.find_edge(e));
  Car c;
  c.ctx.car_id = id;
  c.ctx.path = std::make_shared<const Path>(make_path(g, ids));
  c.ctx.fs.s = s;
  c.ctx.fs.s_dot = v;
  c.ctx.speed_limit = limit;
  c.ctx.target = plan_target(*c.ctx.path, c.ctx.fs, pp, std::nullopt, {}, limit);
  const auto prof = longitudinal_profile(s, v, 0.0, c.ctx.target.s1, c.ctx.target.v1, pp, limit);
  c.traj = build_trajectory(*c.ctx.path, c.ctx.fs, prof, pp, limit, id, 0.0);
  return c;
}

}  // namespace

TEST(Detect, IdenticalTrajectories) {
  const Trajectory a = line_traj(1, {0, 0}, {1, 0}, 20);
  Trajectory b = a;
  b.car_id = 2;
  const std::vector<Trajectory> all{a, b};
  const auto cs = detect(a, all, SeparationParams{});
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].car_a, 1u);
  EXPECT_EQ(cs[0].car_b, 2u);
  EXPECT_EQ(cs[0].frame_index, 0u);
  EXPECT_EQ(cs[0].distance, 0.0);
  EXPECT_EQ(cs[0].kind, ConflictKind::rear_end);
}

TEST(Detect, ParallelSeparated) {
  const SeparationParams p;
  const Trajectory a = line_traj(1, {0, 0}, {1, 0}, 40);
  const Trajectory b = line_traj(2, {0, 2 * p.d_safe}, {1, 0}, 40);
  const std::vector<Trajectory> all{a, b};
  EXPECT_TRUE(detect(a, all, p).empty());
  EXPECT_NEAR(min_separation(a, b), 2 * p.d_safe, 1e-12);
}

TEST(Detect, CrossingAtTwoSeconds) {
  // 10 m/s so neighbouring frames stay more than d_safe apart until t = 2.0.
  const Trajectory a = line_traj(3, {-20, 0}, {10, 0}, 40, 0.0, 0.1, EdgeId{1});
  const Trajectory b = line_traj(4, {0, -20}, {0, 10}, 40, 0.0, 0.1, EdgeId{2});
  const std::vector<Trajectory> all{a, b};
  const auto cs = detect(b, all, SeparationParams{});
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].frame_index, 20u);
  const auto ref = scan(a, b, SeparationParams{}.d_safe);
  ASSERT_TRUE(ref);
  EXPECT_EQ(cs[0].frame_index, ref->first);
  EXPECT_NEAR(cs[0].distance, ref->second, 1e-12);
  EXPECT_EQ(cs[0].kind, ConflictKind::crossing);
}

TEST(Detect, RejectsMisalignedFrames) {
  const Trajectory a = line_traj(1, {0, 0}, {1, 0}, 10, 0.0, 0.1);
  const Trajectory b = line_traj(2, {0, 0}, {1, 0}, 10, 0.0, 0.2);
  const Trajectory c = line_traj(3, {0, 0}, {1, 0}, 10, 0.05, 0.1);
  EXPECT_THROW(detect(a, std::vector<Trajectory>{a, b}, {}), InvalidParameter);
  EXPECT_THROW(detect(a, std::vector<Trajectory>{a, c}, {}), InvalidParameter);
}

TEST(Detect, MatchesExhaustiveScan) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> ncar(2, 10), off(0, 20), edge(0, 2);
  std::uniform_real_distribution<double> pos(0.0, 15.0), h(-3.14, 3.14);
  std::normal_distribution<double> step(0.0, 0.3);
  const SeparationParams p;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = ncar(rng);
    std::vector<CarId> ids(n);
    for (int i = 0; i < n; ++i) ids[i] = static_cast<CarId>(i * 3 + 1);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::vector<Trajectory> all;
    for (int i = 0; i < n; ++i) {
      Trajectory t;
      t.car_id = ids[i];
      t.dt = 0.1;
      t.start_time = 0.1 * off(rng);
      Vec2 q{pos(rng), pos(rng)};
      for (int k = 0; k < 100; ++k) {
        TrajectoryFrame f;
        f.t = 0.1 * k;
        f.x = q.x;
        f.y = q.y;
        f.heading = h(rng);
        f.edge = EdgeId{static_cast<std::uint32_t>(edge(rng))};
        t.frames.push_back(f);
        q = q + Vec2{step(rng), step(rng)};
      }
      all.push_back(t);
    }
    const auto got = detect_all(all, p);
    std::vector<Conflict> want;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (all[i].car_id >= all[j].car_id) continue;
        if (auto r = scan(all[i], all[j], p.d_safe))
          want.push_back({all[i].car_id, all[j].car_id, r->first, r->second});
      }
    std::sort(want.begin(), want.end(), [](const Conflict& a, const Conflict& b) {
      return std::tie(a.car_a, a.car_b) < std::tie(b.car_a, b.car_b);
    });
    ASSERT_EQ(got.size(), want.size()) << "trial " << trial;
    for (std::size_t k = 0; k < got.size(); ++k) {
      EXPECT_EQ(got[k].car_a, want[k].car_a);
      EXPECT_EQ(got[k].car_b, want[k].car_b);
      EXPECT_EQ(got[k].frame_index, want[k].frame_index);
      EXPECT_NEAR(got[k].distance, want[k].distance, 1e-12);
    }
    // detect() for one car is the matching subset.
    const auto mine = detect(all[0], all, p);
    std::size_t expect = 0;
    for (const auto& c : want)
      if (c.car_a == all[0].car_id || c.car_b == all[0].car_id) ++expect;
    EXPECT_EQ(mine.size(), expect);
  }
}

TEST(Replan, EmptyConflictListIsIdentity) {
  const RoadGraph g = build_icat_default(0.5);
  PlannerParams pp;
  const Car c = make_car(g, {"W_in", "W_straight", "E_out"}, 5.0, 2.0, 1, pp);
  const std::vector<Trajectory> all{c.traj};
  const Trajectory out = replan(c.ctx, {}, all, {}, pp);
  ASSERT_EQ(out.frames.size(), c.traj.frames.size());
  for (std::size_t k = 0; k < out.frames.size(); ++k) EXPECT_EQ(out.frames[k].s, c.traj.frames[k].s);
}

TEST(Replan, SymmetricCrossingLowerIdWins) {
  const RoadGraph g = build_icat_default(0.5);
  PlannerParams pp;
  SeparationParams p;
  p.priority_rule = PriorityRule::lower_id;
  // Both cars are 6 m from the crossing point (31.5, 23.5) at 2 m/s.
  const Car a = make_car(g, {"W_in", "W_straight", "E_out"}, 24.5 - 6.0, 2.0, 1, pp);
  const Car b = make_car(g, {"S_in", "S_straight", "N_out"}, 16.5 - 6.0, 2.0, 2, pp);
  std::vector<Trajectory> all{a.traj, b.traj};
  const auto cs = detect_all(all, p);
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].kind, ConflictKind::crossing);
  const CarId w = conflict_winner(cs[0], a.traj, b.traj, p);
  EXPECT_EQ(w, 1u);
  all[1] = replan(b.ctx, cs, all, p, pp);
  EXPECT_LT(all[1].frames.back().s, b.traj.frames.back().s);
  EXPECT_GE(scan_min(all[0], all[1]), p.d_safe - 1e-9);
}

TEST(ResolveAll, NoConflictsIsIdentity) {
  const RoadGraph g = build_icat_default(0.5);
  PlannerParams pp;
  const Car a = make_car(g, {"W_in", "W_straight", "E_out"}, 2.0, 2.0, 1, pp);
  const Car b = make_car(g, {"E_in", "E_straight", "W_out"}, 2.0, 2.0, 2, pp);
  const std::vector<PlanContext> ctx{a.ctx, b.ctx};
  const auto out = resolve_all(ctx, {a.traj, b.traj}, {}, pp);
  for (std::size_t k = 0; k < a.traj.frames.size(); ++k) {
    EXPECT_EQ(out[0].frames[k].s, a.traj.frames[k].s);
    EXPECT_EQ(out[1].frames[k].s, b.traj.frames[k].s);
  }
}

TEST(ResolveAll, ThreeCarMergeFanIn) {
  GraphBuilder gb;
  const NodeId A = gb.add_node("A", {-10, 6});
  const NodeId B = gb.add_node("B", {-12, 0});
  const NodeId C = gb.add_node("C", {-10, -6});
  const NodeId M = gb.add_node("M", {0, 0}, NodeKind::merge);
  const NodeId X = gb.add_node("X", {30, 0});
  gb.add_straight("a", A, M, 2.0);
  gb.add_straight("b", B, M, 2.0);
  gb.add_straight("c", C, M, 2.0);
  gb.add_straight("out", M, X, 2.0);
  const RoadGraph g = gb.build(0.5);
  PlannerParams pp;
  SeparationParams p;
  std::vector<Car> cars;
  const double la = std::hypot(10.0, 6.0);
  cars.push_back(make_car(g, {"a", "out"}, la - 7.0, 2.0, 1, pp));
  cars.push_back(make_car(g, {"b", "out"}, 12.0 - 7.0, 2.0, 2, pp));
  cars.push_back(make_car(g, {"c", "out"}, la - 7.0, 2.0, 3, pp));
  std::vector<PlanContext> ctx;
  std::vector<Trajectory> trajs;
  for (const auto& c : cars) {
    ctx.push_back(c.ctx);
    trajs.push_back(c.traj);
  }
  ASSERT_FALSE(detect_all(trajs, p).empty());
  const auto out = resolve_all(ctx, trajs, p, pp);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = i + 1; j < out.size(); ++j)
      EXPECT_GE(scan_min(out[i], out[j]), p.d_safe - 1e-9) << i << "," << j;
}

TEST(ResolveAll, FourWayArrivalKeepsOneCarMoving) {
  const RoadGraph g = build_icat_default(0.5);
  PlannerParams pp;
  SeparationParams p;
  std::vector<Car> cars;
  const double lead = 2.0;
  cars.push_back(make_car(g, {"W_in", "W_left", "N_out"}, 18.0 - lead, 2.0, 1, pp));
  cars.push_back(make_car(g, {"S_in", "S_left", "W_out"}, 13.0 - lead, 2.0, 2, pp));
  cars.push_back(make_car(g, {"E_in", "E_left", "S_out"}, 18.0 - lead, 2.0, 3, pp));
  cars.push_back(make_car(g, {"N_in", "N_left", "E_out"}, 13.0 - lead, 2.0, 4, pp));
  std::vector<PlanContext> ctx;
  std::vector<Trajectory> trajs;
  for (const auto& c : cars) {
    ctx.push_back(c.ctx);
    trajs.push_back(c.traj);
  }
  ASSERT_FALSE(detect_all(trajs, p).empty());
  const auto out = resolve_all(ctx, trajs, p, pp);
  int unchanged = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = i + 1; j < out.size(); ++j)
      EXPECT_GE(scan_min(out[i], out[j]), p.d_safe - 1e-9) << i << "," << j;
    bool same = true;
    for (std::size_t k = 0; k < out[i].frames.size(); ++k)
      same = same && out[i].frames[k].s == trajs[i].frames[k].s;
    unchanged += same;
  }
  EXPECT_GE(unchanged, 1);
}

TEST(Fifo, ZonesCoverIntersectionAndMerges) {
  const RoadGraph g = build_icat_default(0.5);
  const auto zones = fifo_zones(g, 2.6);
  int merges = 0;
  for (const auto& n : g.nodes()) merges += n.kind == NodeKind::merge;
  EXPECT_EQ(zones.size(), static_cast<std::size_t>(merges + 1));
  EXPECT_THROW(fifo_zones(g, 0.0), InvalidParameter);
}

TEST(Fifo, SingleCarGoesAndTwoCarsQueue) {
  const RoadGraph g = build_icat_default(0.5);
  FifoGate gate(fifo_zones(g, 2.6), 1.4);
  auto path_of = [&](std::vector<std::string> names) {
    std::vector<EdgeId> ids;
    for (const auto& n : names) ids.push_back(*g.find_edge(n));
    return std::make_shared<const Path>(make_path(g, ids));
  };
  const auto pw = path_of({"W_in", "W_straight", "E_out"});
  const auto ps = path_of({"S_in", "S_straight", "N_out"});
  auto car = [](CarId id, std::shared_ptr<const Path> p, double s) {
    return FifoCar{id, p->pose_at(s).position, p, s};
  };
  // Just short of the W entry.
  const double sw = 17.5, ss = 12.5;
  auto cmd = gate.update(std::vector<FifoCar>{car(1, pw, sw)}, 0.0);
  ASSERT_EQ(cmd.size(), 1u);
  EXPECT_TRUE(cmd[0].go);

  FifoGate gate2(fifo_zones(g, 2.6), 1.4);
  gate2.update(std::vector<FifoCar>{car(1, pw, sw), car(2, ps, 0.0)}, 0.0);
  cmd = gate2.update(std::vector<FifoCar>{car(1, pw, sw + 0.4), car(2, ps, ss)}, 0.2);
  EXPECT_TRUE(cmd[0].go);
  EXPECT_FALSE(cmd[1].go);
  ASSERT_TRUE(cmd[1].hold_s);
  EXPECT_LT(*cmd[1].hold_s, 13.0);
  // Car 1 still crossing: car 2 keeps holding.
  cmd = gate2.update(std::vector<FifoCar>{car(1, pw, 24.0), car(2, ps, ss)}, 0.4);
  EXPECT_FALSE(cmd[1].go);
  // Car 1 gone past the zone: car 2 released.
  cmd = gate2.update(std::vector<FifoCar>{car(1, pw, 40.0), car(2, ps, ss)}, 0.6);
  EXPECT_TRUE(cmd[1].go);
}

TEST(Separation, Validate) {
  SeparationParams p;
  EXPECT_NO_THROW(p.validate(0.9));
  EXPECT_THROW(p.validate(1.5), InvalidParameter);
}
