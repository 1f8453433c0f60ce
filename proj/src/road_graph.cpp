#include "icat/road_graph.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <sstream>

namespace icat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double positive_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

}  // namespace

std::string to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::lane_point: return "lane_point";
    case NodeKind::intersection_entry: return "intersection_entry";
    case NodeKind::intersection_exit: return "intersection_exit";
    case NodeKind::merge: return "merge";
    case NodeKind::diverge: return "diverge";
  }
  return "lane_point";
}

std::optional<NodeKind> node_kind_from_string(const std::string& s) {
  for (auto k : {NodeKind::lane_point, NodeKind::intersection_entry, NodeKind::intersection_exit,
                 NodeKind::merge, NodeKind::diverge}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Curve

Curve Curve::straight(Vec2 start, Vec2 end) {
  Curve c;
  c.start_ = start;
  const Vec2 delta = end - start;
  c.length_ = delta.norm();
  c.direction_ = c.length_ > 0.0 ? delta * (1.0 / c.length_) : Vec2{1.0, 0.0};
  return c;
}

Curve Curve::arc(Vec2 start, Vec2 end, const ArcGeometry& g) {
  Curve c;
  c.is_arc_ = true;
  c.start_ = start;
  c.center_ = g.center;
  c.radius_ = g.radius;
  c.clockwise_ = g.clockwise;
  c.start_angle_ = std::atan2(start.y - g.center.y, start.x - g.center.x);
  const double end_angle = std::atan2(end.y - g.center.y, end.x - g.center.x);
  double sweep = g.clockwise ? positive_angle(c.start_angle_ - end_angle)
                             : positive_angle(end_angle - c.start_angle_);
  if (sweep < 1e-12) sweep = kTwoPi;
  c.length_ = g.radius * sweep;
  return c;
}

double Curve::curvature() const {
  if (!is_arc_) return 0.0;
  return clockwise_ ? -1.0 / radius_ : 1.0 / radius_;
}

Vec2 Curve::point_at(double s) const {
  if (!is_arc_) return start_ + direction_ * s;
  const double theta = start_angle_ + (clockwise_ ? -s : s) / radius_;
  return center_ + Vec2{std::cos(theta), std::sin(theta)} * radius_;
}

double Curve::heading_at(double s) const {
  if (!is_arc_) return std::atan2(direction_.y, direction_.x);
  const double theta = start_angle_ + (clockwise_ ? -s : s) / radius_;
  return wrap_angle(theta + (clockwise_ ? -0.5 : 0.5) * std::numbers::pi);
}

Projection Curve::project(const Vec2& p) const {
  Projection out;
  if (!is_arc_) {
    const Vec2 rel = p - start_;
    out.s = std::clamp(rel.dot(direction_), 0.0, length_);
    out.d = direction_.cross(rel);
    out.distance = distance(p, point_at(out.s));
    return out;
  }
  const Vec2 rel = p - center_;
  const double r = rel.norm();
  const double phi = std::atan2(rel.y, rel.x);
  const double along = clockwise_ ? positive_angle(start_angle_ - phi)
                                  : positive_angle(phi - start_angle_);
  const double sweep = length_ / radius_;
  if (along <= sweep && r > 0.0) {
    out.s = along * radius_;
    out.d = clockwise_ ? r - radius_ : radius_ - r;
    out.distance = std::abs(r - radius_);
    return out;
  }
  const Vec2 end = point_at(length_);
  out.s = distance(p, end) < distance(p, start_) ? length_ : 0.0;
  const Pose foot = pose_at(out.s);
  out.d = unit_from_heading(foot.heading).cross(p - foot.position);
  out.distance = distance(p, foot.position);
  return out;
}

std::vector<Waypoint> discretize(const Curve& curve, double spacing, Vec2 exact_end) {
  std::vector<Waypoint> wps;
  const double length = curve.length();
  for (std::size_t k = 0;; ++k) {
    const double s = static_cast<double>(k) * spacing;
    if (s >= length - 1e-9) break;
    wps.push_back({k == 0 ? curve.start() : curve.point_at(s), curve.heading_at(s), s,
                   curve.curvature()});
  }
  wps.push_back({exact_end, curve.heading_at(length), length, curve.curvature()});
  return wps;
}

// ---------------------------------------------------------------------------
// RoadGraph

const Node& RoadGraph::node(NodeId id) const {
  if (!has_node(id)) throw InvalidParameter("unknown node id " + std::to_string(id.value));
  return nodes_[id.value];
}

const Edge& RoadGraph::edge(EdgeId id) const {
  if (!has_edge(id)) throw InvalidParameter("unknown edge id " + std::to_string(id.value));
  return edges_[id.value];
}

const std::vector<EdgeId>& RoadGraph::out_edges(NodeId id) const {
  node(id);
  return out_[id.value];
}

const std::vector<EdgeId>& RoadGraph::in_edges(NodeId id) const {
  node(id);
  return in_[id.value];
}

std::optional<NodeId> RoadGraph::find_node(const std::string& name) const {
  auto it = node_index_.find(name);
  if (it == node_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<EdgeId> RoadGraph::find_edge(const std::string& name) const {
  auto it = edge_index_.find(name);
  if (it == edge_index_.end()) return std::nullopt;
  return it->second;
}

std::pair<Vec2, Vec2> RoadGraph::bounds() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Vec2 lo{inf, inf};
  Vec2 hi{-inf, -inf};
  auto take = [&](const Vec2& p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  };
  for (const auto& n : nodes_) take(n.position);
  for (const auto& e : edges_)
    for (const auto& w : e.waypoints) take(w.position);
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// GraphBuilder

NodeId GraphBuilder::add_node(std::string name, Vec2 position, NodeKind kind) {
  NodeId id{static_cast<std::uint32_t>(nodes_.size())};
  nodes_.push_back({id, std::move(name), position, kind});
  return id;
}

EdgeId GraphBuilder::add_edge(std::string name, NodeId from, NodeId to, EdgeGeometry geometry,
                              double speed_limit) {
  EdgeId id{static_cast<std::uint32_t>(edges_.size())};
  edges_.push_back({std::move(name), from, to, std::move(geometry), speed_limit});
  return id;
}

EdgeId GraphBuilder::add_straight(std::string name, NodeId from, NodeId to, double speed_limit) {
  return add_edge(std::move(name), from, to, StraightGeometry{}, speed_limit);
}

EdgeId GraphBuilder::add_arc(std::string name, NodeId from, NodeId to, ArcGeometry arc,
                             double speed_limit) {
  return add_edge(std::move(name), from, to, arc, speed_limit);
}

RoadGraph GraphBuilder::build(double spacing) const {
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw InvalidParameter("spacing must be positive and finite");

  RoadGraph g;
  g.spacing_ = spacing;
  g.nodes_ = nodes_;
  for (const auto& n : g.nodes_) {
    if (!std::isfinite(n.position.x) || !std::isfinite(n.position.y))
      throw InvalidParameter("node '" + n.name + "': position not finite");
    if (!g.node_index_.emplace(n.name, n.id).second)
      throw InvalidParameter("node '" + n.name + "': duplicate id");
  }
  g.out_.resize(g.nodes_.size());
  g.in_.resize(g.nodes_.size());

  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const auto& pe = edges_[i];
    const std::string where = "edge '" + pe.name + "'";
    if (pe.from.value >= g.nodes_.size())
      throw InvalidParameter(where + ": unknown from-node");
    if (pe.to.value >= g.nodes_.size()) throw InvalidParameter(where + ": unknown to-node");
    if (!(pe.speed_limit > 0.0) || !std::isfinite(pe.speed_limit))
      throw InvalidParameter(where + ": speed_limit must be positive");
    const Vec2 a = g.nodes_[pe.from.value].position;
    const Vec2 b = g.nodes_[pe.to.value].position;
    if (distance(a, b) < 1e-9) throw InvalidParameter(where + ": endpoints coincide");

    Edge e;
    e.id = EdgeId{static_cast<std::uint32_t>(i)};
    e.name = pe.name;
    e.from = pe.from;
    e.to = pe.to;
    e.geometry = pe.geometry;
    e.speed_limit = pe.speed_limit;
    if (const auto* arc = std::get_if<ArcGeometry>(&pe.geometry)) {
      if (!(arc->radius > 0.0) || !std::isfinite(arc->radius))
        throw InvalidParameter(where + ": arc radius must be positive");
      const double tol = 1e-6 * std::max(1.0, arc->radius);
      const double ra = distance(a, arc->center);
      const double rb = distance(b, arc->center);
      if (std::abs(ra - arc->radius) > tol || std::abs(rb - arc->radius) > tol) {
        std::ostringstream os;
        os << where << ": endpoints not on arc (radius " << arc->radius << ", distances " << ra
           << ", " << rb << ")";
        throw InvalidParameter(os.str());
      }
      e.curve = Curve::arc(a, b, *arc);
    } else {
      e.curve = Curve::straight(a, b);
    }
    e.waypoints = discretize(e.curve, spacing, b);
    if (!g.edge_index_.emplace(e.name, e.id).second)
      throw InvalidParameter(where + ": duplicate id");
    g.out_[e.from.value].push_back(e.id);
    g.in_[e.to.value].push_back(e.id);
    g.edges_.push_back(std::move(e));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Path

std::size_t Path::segment_index_at(double s) const {
  if (segments.empty()) throw InvalidParameter("empty path");
  auto it = std::upper_bound(segments.begin(), segments.end(), s,
                             [](double v, const PathSegment& seg) { return v < seg.s_start; });
  if (it == segments.begin()) return 0;
  return static_cast<std::size_t>(std::distance(segments.begin(), it) - 1);
}

Pose Path::pose_at(double s) const {
  const auto& seg = segments[segment_index_at(s)];
  return seg.curve.pose_at(std::clamp(s - seg.s_start, 0.0, seg.curve.length()));
}

double Path::speed_limit_at(double s) const {
  return segments[segment_index_at(s)].speed_limit;
}

double Path::curvature_at(double s) const {
  return segments[segment_index_at(s)].curve.curvature();
}

Path make_path(const RoadGraph& graph, const std::vector<EdgeId>& edges) {
  Path p;
  p.edges = edges;
  double s = 0.0;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = graph.edge(edges[k]);
    if (k > 0 && graph.edge(edges[k - 1]).to != e.from)
      throw InvalidParameter("path edges '" + graph.edge(edges[k - 1]).name + "' and '" + e.name +
                             "' do not share a node");
    p.segments.push_back({e.id, s, e.speed_limit, e.curve});
    for (std::size_t w = (k == 0 ? 0 : 1); w < e.waypoints.size(); ++w) {
      Waypoint wp = e.waypoints[w];
      wp.s_offset += s;
      p.waypoints.push_back(wp);
    }
    s += e.length();
  }
  p.total_length = s;
  return p;
}

// ---------------------------------------------------------------------------
// Routing

namespace {

std::vector<EdgeId> chain_to(const std::vector<std::optional<EdgeId>>& pred, const RoadGraph& g,
                             NodeId node) {
  std::vector<EdgeId> seq;
  while (pred[node.value]) {
    seq.push_back(*pred[node.value]);
    node = g.edge(*pred[node.value]).from;
  }
  std::reverse(seq.begin(), seq.end());
  return seq;
}

}  // namespace

Path a_star(const RoadGraph& graph, NodeId start, NodeId goal) {
  if (!graph.has_node(start) || !graph.has_node(goal))
    throw InvalidParameter("a_star: unknown node id");
  if (start == goal) return Path{};

  const std::size_t n = graph.nodes().size();
  const Vec2 target = graph.node(goal).position;
  // Slightly deflated so rounding can never make the heuristic overestimate.
  auto h = [&](NodeId v) { return distance(graph.node(v).position, target) * (1.0 - 1e-12); };

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> g(n, inf);
  std::vector<std::optional<EdgeId>> pred(n);
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  g[start.value] = 0.0;
  open.push({h(start), start.value});

  while (!open.empty()) {
    auto [f, u] = open.top();
    open.pop();
    if (f > g[u] + h(NodeId{u})) continue;  // stale
    // Keep expanding equal-f entries so cost ties resolve lexicographically.
    if (f > g[goal.value]) break;
    if (u == goal.value) continue;
    for (EdgeId eid : graph.out_edges(NodeId{u})) {
      const Edge& e = graph.edge(eid);
      const std::uint32_t v = e.to.value;
      if (v == start.value) continue;
      const double cand = g[u] + e.length();
      bool better = cand < g[v];
      if (!better && cand == g[v]) {
        auto via = chain_to(pred, graph, NodeId{u});
        via.push_back(eid);
        better = via < chain_to(pred, graph, NodeId{v});
      }
      if (better) {
        g[v] = cand;
        pred[v] = eid;
        open.push({cand + h(NodeId{v}), v});
      }
    }
  }
  if (g[goal.value] == inf)
    throw NoRoute("no route from '" + graph.node(start).name + "' to '" + graph.node(goal).name +
                  "'");
  return make_path(graph, chain_to(pred, graph, goal));
}

std::vector<NodeId> reachable_from(const RoadGraph& graph, NodeId from) {
  std::vector<char> seen(graph.nodes().size(), 0);
  std::vector<NodeId> stack{from};
  std::vector<NodeId> out;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (EdgeId e : graph.out_edges(u)) {
      NodeId v = graph.edge(e).to;
      if (!seen[v.value]) {
        seen[v.value] = 1;
        out.push_back(v);
        stack.push_back(v);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool strongly_connected(const RoadGraph& graph) {
  const std::size_t n = graph.nodes().size();
  if (n == 0) return true;
  for (const auto& node : graph.nodes()) {
    auto r = reachable_from(graph, node.id);
    const bool self = std::binary_search(r.begin(), r.end(), node.id);
    if (r.size() + (self ? 0 : 1) != n) return false;
  }
  return true;
}

NodeId random_goal(const RoadGraph& graph, NodeId current, Rng& rng) {
  if (graph.nodes().size() < 2) throw InvalidParameter("random_goal: graph needs >= 2 nodes");
  auto candidates = reachable_from(graph, current);
  std::erase(candidates, current);
  if (candidates.empty())
    throw NoRoute("no node reachable from '" + graph.node(current).name + "'");
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  return candidates[pick(rng)];
}

}  // namespace icat
