#include <array>

#include "icat/road_graph.hpp"

namespace icat {

namespace {

// Layout of the default map, digital (60 x 50 m) scale.
constexpr Vec2 kCenter{30.0, 25.0};
constexpr double kLaneOffset = 1.5;     // lane centerline offset from road axis
constexpr double kBoxHalf = 5.0;        // intersection entry/exit distance from center
constexpr double kJunctionRadius = 3.0; // arm <-> ring connector arcs
constexpr double kCornerRadius = 6.0;
constexpr double kStraightLimit = 3.0;
constexpr double kCurveLimit = 2.0;

struct Approach {
  const char* tag;
  Vec2 u;        // outward arm direction
  double reach;  // distance from center to the ring along u

  Vec2 n() const { return u.left(); }
  Vec2 at(double a, double b) const { return kCenter + u * a + n() * b; }
};

}  // namespace

RoadGraph build_icat_default(double spacing) {
  // Four approaches in clockwise ring order. The ring is one-way clockwise,
  // arms are two-way with right-hand traffic.
  const std::array<Approach, 4> ap{{
      {"N", {0.0, 1.0}, 21.0},
      {"E", {1.0, 0.0}, 26.0},
      {"S", {0.0, -1.0}, 21.0},
      {"W", {-1.0, 0.0}, 26.0},
  }};
  const double w = kLaneOffset;
  const double h = kBoxHalf;
  const double rj = kJunctionRadius;

  GraphBuilder b;
  struct ApproachNodes {
    NodeId entry, exit, out_top, merge, diverge, in_top;
  };
  std::array<ApproachNodes, 4> nodes{};
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& a = ap[k];
    const std::string t = a.tag;
    const double L = a.reach;
    nodes[k].entry = b.add_node(t + "_entry", a.at(h, w), NodeKind::intersection_entry);
    nodes[k].exit = b.add_node(t + "_exit", a.at(h, -w), NodeKind::intersection_exit);
    nodes[k].out_top = b.add_node(t + "_out_top", a.at(L - rj, -w));
    nodes[k].merge = b.add_node(t + "_merge", a.at(L, -w - rj), NodeKind::merge);
    nodes[k].diverge = b.add_node(t + "_diverge", a.at(L, w + rj), NodeKind::diverge);
    nodes[k].in_top = b.add_node(t + "_in_top", a.at(L - rj, w));
  }
  std::array<std::array<NodeId, 2>, 4> corners{};
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& a = ap[k];
    const auto& next = ap[(k + 1) % 4];
    const Vec2 corner = kCenter + a.u * a.reach - a.n() * next.reach;
    const std::string t = std::string(a.tag) + next.tag;
    corners[k][0] = b.add_node(t + "_corner_in", corner + a.n() * kCornerRadius);
    corners[k][1] = b.add_node(t + "_corner_out", corner - a.u * kCornerRadius);
  }

  for (std::size_t k = 0; k < 4; ++k) {
    const auto& a = ap[k];
    const std::string t = a.tag;
    const double L = a.reach;
    const auto& nk = nodes[k];
    // Arms and ring junction.
    b.add_straight(t + "_out", nk.exit, nk.out_top, kStraightLimit);
    b.add_arc(t + "_merge_arc", nk.out_top, nk.merge, {a.at(L - rj, -w - rj), rj, true},
              kCurveLimit);
    b.add_arc(t + "_diverge_arc", nk.diverge, nk.in_top, {a.at(L - rj, w + rj), rj, true}, kCurveLimit);
    b.add_straight(t + "_in", nk.in_top, nk.entry, kStraightLimit);
    b.add_straight(t + "_ring_pass", nk.diverge, nk.merge, kStraightLimit);

    // Intersection turns from this approach's entry.
    const auto& right = nodes[(k + 3) % 4];
    const auto& straight = nodes[(k + 2) % 4];
    const auto& left = nodes[(k + 1) % 4];
    b.add_straight(t + "_straight", nk.entry, straight.exit, kStraightLimit);
    b.add_arc(t + "_right", nk.entry, right.exit, {kCenter + (a.u + a.n()) * h, h - w, true},
              kCurveLimit);
    b.add_arc(t + "_left", nk.entry, left.exit, {kCenter + (a.u - a.n()) * h, h + w, false},
              kCurveLimit);

    // Ring corner towards the next approach.
    const auto& next = ap[(k + 1) % 4];
    const Vec2 corner = kCenter + a.u * a.reach - a.n() * next.reach;
    const std::string c = t + next.tag;
    b.add_straight(c + "_ring_a", nk.merge, corners[k][0], kStraightLimit);
    b.add_arc(c + "_corner", corners[k][0], corners[k][1],
              {corner + (a.n() - a.u) * kCornerRadius, kCornerRadius, true}, kCurveLimit);
    b.add_straight(c + "_ring_b", corners[k][1], nodes[(k + 1) % 4].diverge, kStraightLimit);
  }

  double shortest = std::numeric_limits<double>::infinity();
  RoadGraph probe = b.build(1.0);
  for (const auto& e : probe.edges()) shortest = std::min(shortest, e.length());
  if (!(spacing > 0.0) || spacing > shortest)
    throw InvalidParameter("spacing must be in (0, " + std::to_string(shortest) + "]");
  return b.build(spacing);
}

RoadGraph build_merge_cycle(double spacing) {
  constexpr Vec2 c{6.0, 6.0};
  constexpr double radius = 3.2;
  constexpr double petal_offset = 1.6;
  constexpr double limit = 2.0;
  auto on_ring = [&](double angle) {
    return c + Vec2{std::cos(angle), std::sin(angle)} * radius;
  };
  const double quarter = 0.5 * std::numbers::pi;

  GraphBuilder b;
  std::array<NodeId, 4> merge{};
  std::array<NodeId, 4> diverge{};
  for (std::size_t k = 0; k < 4; ++k) {
    const double ang = quarter * static_cast<double>(k);
    merge[k] = b.add_node("M" + std::to_string(k), on_ring(ang), NodeKind::merge);
    diverge[k] = b.add_node("D" + std::to_string(k), on_ring(ang - 0.5 * quarter),
                            NodeKind::diverge);
  }
  for (std::size_t k = 0; k < 4; ++k) {
    const std::string i = std::to_string(k);
    const std::string prev = std::to_string((k + 3) % 4);
    b.add_arc("ring_M" + prev + "_D" + i, merge[(k + 3) % 4], diverge[k], {c, radius, false},
              limit);
    b.add_arc("ring_D" + i + "_M" + i, diverge[k], merge[k], {c, radius, false}, limit);
    const double bis = quarter * static_cast<double>(k) - 0.25 * quarter;
    const Vec2 pc = c + Vec2{std::cos(bis), std::sin(bis)} * petal_offset;
    const double pr = distance(pc, on_ring(bis - 0.25 * quarter));
    b.add_arc("petal_" + i, diverge[k], merge[k], {pc, pr, false}, limit);
  }
  return b.build(spacing);
}

}  // namespace icat
