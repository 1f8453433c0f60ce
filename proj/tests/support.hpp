#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <vector>

#include "icat/planner.hpp"
#include "icat/road_graph.hpp"

namespace icat::testing {

// Straight +x path from the origin built from one edge.
inline Path straight_path(double length, double spacing = 0.5) {
  GraphBuilder b;
  const NodeId a = b.add_node("a", {0.0, 0.0});
  const NodeId c = b.add_node("b", {length, 0.0});
  b.add_straight("ab", a, c, 3.0);
  b.add_straight("ba", c, a, 3.0);
  return make_path(b.build(spacing), {EdgeId{0}});
}

// Random strongly connected graph: a shuffled ring plus random chords, all
// straight edges between random points.
inline RoadGraph random_graph(std::mt19937_64& rng, int n, int extra_edges) {
  std::uniform_real_distribution<double> coord(0.0, 100.0);
  GraphBuilder b;
  std::vector<NodeId> ids;
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) {
    Vec2 p{coord(rng), coord(rng)};
    bool clash = true;
    while (clash) {
      clash = false;
      for (const auto& q : pts)
        if (distance(p, q) < 1.0) clash = true;
      if (clash) p = {coord(rng), coord(rng)};
    }
    pts.push_back(p);
    ids.push_back(b.add_node("n" + std::to_string(i), p));
  }
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    const int u = order[i];
    const int v = order[(i + 1) % n];
    b.add_straight("e" + std::to_string(k++), ids[u], ids[v], 3.0);
  }
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int j = 0; j < extra_edges; ++j) {
    const int u = pick(rng);
    const int v = pick(rng);
    if (u == v) continue;
    b.add_straight("e" + std::to_string(k++), ids[u], ids[v], 3.0);
  }
  return b.build(0.5);
}

// Plain Dijkstra over edge lengths; +inf when unreachable.
inline double dijkstra_cost(const RoadGraph& g, NodeId start, NodeId goal) {
  const std::size_t n = g.nodes().size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[start.value] = 0.0;
  pq.push({0.0, start.value});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (EdgeId e : g.out_edges(NodeId{u})) {
      const Edge& ed = g.edge(e);
      const double nd = d + ed.length();
      if (nd < dist[ed.to.value]) {
        dist[ed.to.value] = nd;
        pq.push({nd, ed.to.value});
      }
    }
  }
  return dist[goal.value];
}

// Chains shortest legs between named nodes into one path.
inline Path tour(const RoadGraph& g, const std::vector<std::string>& stops) {
  std::vector<EdgeId> edges;
  for (std::size_t k = 0; k + 1 < stops.size(); ++k) {
    const Path leg = a_star(g, *g.find_node(stops[k]), *g.find_node(stops[k + 1]));
    edges.insert(edges.end(), leg.edges.begin(), leg.edges.end());
  }
  return make_path(g, edges);
}

// Position, velocity and acceleration of sum c[k] t^k evaluated term by term.
inline std::array<double, 3> poly_eval(const std::array<double, 6>& c, double t) {
  double p = 0.0, v = 0.0, a = 0.0;
  for (int k = 0; k < 6; ++k) {
    p += c[k] * std::pow(t, k);
    if (k >= 1) v += k * c[k] * std::pow(t, k - 1);
    if (k >= 2) a += k * (k - 1) * c[k] * std::pow(t, k - 2);
  }
  return {p, v, a};
}

// Exhaustive all-frames scan: first frame of `a` whose equal-time frame in
// `b` is closer than d_safe.
inline std::optional<std::pair<std::size_t, double>> scan(const Trajectory& a,
                                                          const Trajectory& b, double d_safe) {
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    const double ta = a.start_time + a.frames[i].t;
    for (std::size_t j = 0; j < b.frames.size(); ++j) {
      const double tb = b.start_time + b.frames[j].t;
      if (std::abs(ta - tb) > 1e-9) continue;
      const double d = distance(a.frames[i].position(), b.frames[j].position());
      if (d < d_safe) return std::pair{i, d};
    }
  }
  return std::nullopt;
}

}  // namespace icat::testing
