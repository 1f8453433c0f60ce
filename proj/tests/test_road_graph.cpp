#include <gtest/gtest.h>

#include <numbers>
#include <set>

#include "icat/road_graph.hpp"
#include "support.hpp"

using namespace icat;

namespace {

std::set<std::uint32_t> bfs(const RoadGraph& g, NodeId from) {
  std::set<std::uint32_t> seen;
  std::vector<NodeId> stack{from};
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (EdgeId e : g.out_edges(u)) {
      NodeId v = g.edge(e).to;
      if (seen.insert(v.value).second) stack.push_back(v);
    }
  }
  return seen;
}

double tangent_heading(const Edge& e, Vec2 p) {
  if (const auto* arc = std::get_if<ArcGeometry>(&e.geometry)) {
    const Vec2 r = p - arc->center;
    const double radial = std::atan2(r.y, r.x);
    return wrap_angle(radial + (arc->clockwise ? -0.5 : 0.5) * std::numbers::pi);
  }
  const Vec2 d = e.waypoints.back().position - e.waypoints.front().position;
  return std::atan2(d.y, d.x);
}

}  // namespace

TEST(DefaultMap, FitsTestbedAndHasThreeMovesPerApproach) {
  const RoadGraph g = build_icat_default(0.5);
  auto [lo, hi] = g.bounds();
  EXPECT_LE(hi.x - lo.x, 60.0);
  EXPECT_LE(hi.y - lo.y, 50.0);
  int approaches = 0;
  for (const auto& n : g.nodes()) {
    if (n.kind != NodeKind::intersection_entry) continue;
    ++approaches;
    EXPECT_EQ(g.out_edges(n.id).size(), 3u) << n.name;
  }
  EXPECT_EQ(approaches, 4);
}

TEST(DefaultMap, StronglyConnected) {
  const RoadGraph g = build_icat_default(0.5);
  for (const auto& n : g.nodes()) EXPECT_EQ(bfs(g, n.id).size(), g.nodes().size()) << n.name;
  EXPECT_TRUE(strongly_connected(g));
}

TEST(DefaultMap, RejectsOversizedSpacing) {
  EXPECT_THROW(build_icat_default(1e9), InvalidParameter);
  EXPECT_THROW(build_icat_default(0.0), InvalidParameter);
}

TEST(DefaultMap, WaypointInvariants) {
  for (const RoadGraph& g : {build_icat_default(0.5), build_merge_cycle(0.5)}) {
    for (const auto& e : g.edges()) {
      ASSERT_GE(e.waypoints.size(), 2u) << e.name;
      EXPECT_LT(distance(e.waypoints.front().position, g.node(e.from).position), 1e-9) << e.name;
      EXPECT_LT(distance(e.waypoints.back().position, g.node(e.to).position), 1e-9) << e.name;
      const auto* arc = std::get_if<ArcGeometry>(&e.geometry);
      for (std::size_t k = 0; k < e.waypoints.size(); ++k) {
        const auto& w = e.waypoints[k];
        if (arc) EXPECT_NEAR(distance(w.position, arc->center), arc->radius, 1e-9) << e.name;
        EXPECT_NEAR(wrap_angle(w.heading - tangent_heading(e, w.position)), 0.0, 1e-9) << e.name;
        if (k == 0) continue;
        EXPECT_GT(w.s_offset, e.waypoints[k - 1].s_offset) << e.name;
        const double gap = w.s_offset - e.waypoints[k - 1].s_offset;
        if (k + 1 < e.waypoints.size())
          EXPECT_NEAR(gap, 0.5, 1e-6) << e.name;
        else
          EXPECT_LE(gap, 0.5 + 1e-6) << e.name;
      }
    }
  }
}

TEST(DefaultMap, HeadingContinuousAcrossJunctions) {
  const RoadGraph g = build_icat_default(0.5);
  for (const auto& n : g.nodes()) {
    for (EdgeId in : g.in_edges(n.id)) {
      const double h_in = g.edge(in).waypoints.back().heading;
      for (EdgeId out : g.out_edges(n.id)) {
        const double h_out = g.edge(out).waypoints.front().heading;
        EXPECT_NEAR(wrap_angle(h_out - h_in), 0.0, 1e-6)
            << g.edge(in).name << " -> " << g.edge(out).name;
      }
    }
  }
}

TEST(Builder, RejectsDanglingAndBadArcs) {
  GraphBuilder b;
  const NodeId a = b.add_node("a", {0, 0});
  const NodeId c = b.add_node("c", {4, 0});
  b.add_straight("ok", a, c, 2.0);
  b.add_straight("dangling", a, NodeId{7}, 2.0);
  EXPECT_THROW(b.build(0.5), InvalidParameter);

  GraphBuilder b2;
  const NodeId p = b2.add_node("p", {0, 0});
  const NodeId q = b2.add_node("q", {4, 0});
  b2.add_arc("arc", p, q, {{2.0, 5.0}, 1.0, false}, 2.0);
  EXPECT_THROW(b2.build(0.5), InvalidParameter);
}

TEST(MakePath, RequiresSharedNodesAndIncreasingArclength) {
  const RoadGraph g = build_icat_default(0.5);
  const Path p = a_star(g, *g.find_node("W_entry"), *g.find_node("N_exit"));
  ASSERT_FALSE(p.empty());
  for (std::size_t k = 1; k < p.edges.size(); ++k)
    EXPECT_EQ(g.edge(p.edges[k - 1]).to, g.edge(p.edges[k]).from);
  for (std::size_t k = 1; k < p.waypoints.size(); ++k)
    EXPECT_GT(p.waypoints[k].s_offset, p.waypoints[k - 1].s_offset);
  EXPECT_THROW(make_path(g, {p.edges.back(), p.edges.front()}), InvalidParameter);
}

TEST(AStar, TrivialCases) {
  const RoadGraph g = build_icat_default(0.5);
  const NodeId n = g.nodes().front().id;
  const Path self = a_star(g, n, n);
  EXPECT_TRUE(self.empty());
  EXPECT_EQ(self.total_length, 0.0);

  GraphBuilder b;
  const NodeId a = b.add_node("a", {0, 0});
  const NodeId c = b.add_node("b", {10, 0});
  b.add_straight("ab", a, c, 2.0);
  const RoadGraph two = b.build(0.5);
  const Path p = a_star(two, a, c);
  ASSERT_EQ(p.edges.size(), 1u);
  EXPECT_DOUBLE_EQ(p.total_length, 10.0);
  EXPECT_THROW(a_star(two, c, a), NoRoute);
}

TEST(AStar, MatchesDijkstraOnRandomGraphs) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const RoadGraph g = icat::testing::random_graph(rng, 20, 30);
    std::uniform_int_distribution<std::uint32_t> pick(0, 19);
    for (int q = 0; q < 50; ++q) {
      const NodeId s{pick(rng)};
      const NodeId t{pick(rng)};
      const double oracle = icat::testing::dijkstra_cost(g, s, t);
      EXPECT_NEAR(a_star(g, s, t).total_length, oracle, 1e-9 * (1.0 + oracle));
    }
  }
}

TEST(RandomGoal, OnlyChoiceAndDeterminism) {
  GraphBuilder b;
  const NodeId a = b.add_node("A", {0, 0});
  const NodeId c = b.add_node("B", {5, 0});
  b.add_straight("ab", a, c, 2.0);
  b.add_arc("ba", c, a, {{2.5, 0.0}, 2.5, false}, 2.0);
  const RoadGraph g = b.build(0.5);
  Rng r(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(random_goal(g, a, r), c);

  const RoadGraph d = build_icat_default(0.5);
  Rng r1(42), r2(42);
  NodeId c1 = d.nodes().front().id, c2 = c1;
  for (int i = 0; i < 50; ++i) {
    c1 = random_goal(d, c1, r1);
    c2 = random_goal(d, c2, r2);
    EXPECT_EQ(c1, c2);
  }
}

TEST(RandomGoal, GoalsReachable) {
  const RoadGraph g = build_icat_default(0.5);
  Rng rng(3);
  NodeId cur = g.nodes().front().id;
  for (int i = 0; i < 1000; ++i) {
    const NodeId next = random_goal(g, cur, rng);
    EXPECT_NE(next, cur);
    EXPECT_TRUE(bfs(g, cur).count(next.value));
    cur = next;
  }
}
