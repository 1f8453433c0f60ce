#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "icat/common.hpp"

namespace icat {

enum class NodeKind { lane_point, intersection_entry, intersection_exit, merge, diverge };

std::string to_string(NodeKind kind);
std::optional<NodeKind> node_kind_from_string(const std::string& s);

struct Node {
  NodeId id;
  std::string name;
  Vec2 position;
  NodeKind kind = NodeKind::lane_point;
};

struct StraightGeometry {};

struct ArcGeometry {
  Vec2 center;
  double radius = 0.0;
  bool clockwise = false;
};

using EdgeGeometry = std::variant<StraightGeometry, ArcGeometry>;

struct Waypoint {
  Vec2 position;
  double heading = 0.0;
  double s_offset = 0.0;
  // Signed, left-positive. Zero on straights.
  double curvature = 0.0;
};

/// Result of projecting a point onto a single geometric primitive.
struct Projection {
  double s = 0.0;         // arclength from primitive start
  double d = 0.0;         // signed lateral offset, left positive
  double distance = 0.0;  // Euclidean distance to the foot point
};

/// One geometric primitive (line segment or circular arc) parameterized by
/// arclength. Shared by edges and paths so both evaluate identical geometry.
class Curve {
 public:
  static Curve straight(Vec2 start, Vec2 end);
  static Curve arc(Vec2 start, Vec2 end, const ArcGeometry& geometry);

  double length() const { return length_; }
  bool is_arc() const { return is_arc_; }
  double curvature() const;
  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  Pose pose_at(double s) const { return {point_at(s), heading_at(s)}; }
  Projection project(const Vec2& p) const;

  const Vec2& start() const { return start_; }
  const Vec2& center() const { return center_; }
  double radius() const { return radius_; }
  bool clockwise() const { return clockwise_; }

 private:
  Vec2 start_;
  Vec2 direction_;  // unit, straight only
  Vec2 center_;
  double radius_ = 0.0;
  double start_angle_ = 0.0;
  bool clockwise_ = false;
  bool is_arc_ = false;
  double length_ = 0.0;
};

struct Edge {
  EdgeId id;
  std::string name;
  NodeId from;
  NodeId to;
  EdgeGeometry geometry;
  double speed_limit = 0.0;
  Curve curve;
  std::vector<Waypoint> waypoints;

  double length() const { return curve.length(); }
  bool is_arc() const { return curve.is_arc(); }
};

class RoadGraph {
 public:
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(NodeId id) const;
  const Edge& edge(EdgeId id) const;
  bool has_node(NodeId id) const { return id.value < nodes_.size(); }
  bool has_edge(EdgeId id) const { return id.value < edges_.size(); }
  const std::vector<EdgeId>& out_edges(NodeId id) const;
  const std::vector<EdgeId>& in_edges(NodeId id) const;
  std::optional<NodeId> find_node(const std::string& name) const;
  std::optional<EdgeId> find_edge(const std::string& name) const;
  double spacing() const { return spacing_; }

  /// Axis-aligned bounds of all waypoints: {min, max}.
  std::pair<Vec2, Vec2> bounds() const;

 private:
  friend class GraphBuilder;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> out_;
  std::vector<std::vector<EdgeId>> in_;
  std::unordered_map<std::string, NodeId> node_index_;
  std::unordered_map<std::string, EdgeId> edge_index_;
  double spacing_ = 0.0;
};

/// Accumulates nodes and edges, then discretizes waypoints and validates.
class GraphBuilder {
 public:
  NodeId add_node(std::string name, Vec2 position, NodeKind kind = NodeKind::lane_point);
  EdgeId add_straight(std::string name, NodeId from, NodeId to, double speed_limit);
  EdgeId add_arc(std::string name, NodeId from, NodeId to, ArcGeometry arc, double speed_limit);
  EdgeId add_edge(std::string name, NodeId from, NodeId to, EdgeGeometry geometry,
                  double speed_limit);

  /// Throws InvalidParameter naming the offending element.
  RoadGraph build(double spacing) const;

 private:
  struct PendingEdge {
    std::string name;
    NodeId from;
    NodeId to;
    EdgeGeometry geometry;
    double speed_limit;
  };
  std::vector<Node> nodes_;
  std::vector<PendingEdge> edges_;
};

/// Fixed-spacing discretization of a curve; the final gap may be shorter.
std::vector<Waypoint> discretize(const Curve& curve, double spacing, Vec2 exact_end);

struct PathSegment {
  EdgeId edge;
  double s_start = 0.0;
  double speed_limit = 0.0;
  Curve curve;
};

struct Path {
  std::vector<EdgeId> edges;
  std::vector<PathSegment> segments;
  std::vector<Waypoint> waypoints;  // s_offset re-based to path start
  double total_length = 0.0;

  bool empty() const { return edges.empty(); }
  std::size_t segment_index_at(double s) const;
  Pose pose_at(double s) const;
  double speed_limit_at(double s) const;
  double curvature_at(double s) const;
  EdgeId edge_at(double s) const { return segments[segment_index_at(s)].edge; }
};

/// Builds a path over consecutive edges; throws InvalidParameter if two
/// consecutive edges do not share a node.
Path make_path(const RoadGraph& graph, const std::vector<EdgeId>& edges);

/// Minimum-arclength route with a straight-line heuristic. Equal-cost routes
/// resolve to the lexicographically smaller edge-id sequence.
Path a_star(const RoadGraph& graph, NodeId start, NodeId goal);

/// Nodes reachable from `from` (excluding `from` unless it lies on a cycle),
/// in ascending id order.
std::vector<NodeId> reachable_from(const RoadGraph& graph, NodeId from);
bool strongly_connected(const RoadGraph& graph);

NodeId random_goal(const RoadGraph& graph, NodeId current, Rng& rng);

/// Built-in maps.
RoadGraph build_icat_default(double spacing = 0.5);
/// Small ring of four merges with bypass petals; used for the FIFO gridlock
/// demonstration.
RoadGraph build_merge_cycle(double spacing = 0.5);

}  // namespace icat
