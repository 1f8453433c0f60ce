#include "icat/frenet.hpp"

#include <algorithm>
#include <limits>

namespace icat {

namespace {

std::optional<PathProjection> scan(const Path& path, const Vec2& point, double lo, double hi,
                                   std::optional<double> prefer) {
  std::optional<PathProjection> best;
  for (const auto& seg : path.segments) {
    const double end = seg.s_start + seg.curve.length();
    if (end < lo || seg.s_start > hi) continue;
    const Projection pr = seg.curve.project(point);
    PathProjection cand{seg.s_start + pr.s, pr.d, pr.distance};
    if (!best || cand.distance < best->distance - 1e-12) {
      best = cand;
    } else if (prefer && std::abs(cand.distance - best->distance) <= 1e-12 &&
               std::abs(cand.s - *prefer) < std::abs(best->s - *prefer)) {
      best = cand;
    }
  }
  return best;
}

}  // namespace

std::optional<PathProjection> project_to_path(const Path& path, const Vec2& point,
                                              const FrenetOptions& options) {
  if (path.segments.empty()) throw InvalidParameter("cannot project onto an empty path");
  if (options.hint_s) {
    const double h = *options.hint_s;
    auto local = scan(path, point, h - options.window, h + options.window, h);
    if (local && local->distance <= options.corridor) return local;
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto global = scan(path, point, -inf, inf, options.hint_s);
  if (!global || global->distance > options.corridor) return std::nullopt;
  return global;
}

FrenetState to_frenet(const Path& path, const Pose& pose, double speed,
                      const FrenetOptions& options) {
  if (path.segments.empty()) throw InvalidParameter("to_frenet: empty path");
  auto proj = project_to_path(path, pose.position, options);
  if (!proj) throw OffPath("pose is outside the path corridor");
  const double tangent = path.pose_at(proj->s).heading;
  const double dtheta = wrap_angle(pose.heading - tangent);
  FrenetState fs;
  fs.s = std::clamp(proj->s, 0.0, path.total_length);
  fs.d = proj->d;
  fs.s_dot = speed * std::cos(dtheta);
  fs.d_dot = speed * std::sin(dtheta);
  return fs;
}

Pose to_euclidean(const Path& path, double s, double d) {
  if (path.segments.empty()) throw InvalidParameter("to_euclidean: empty path");
  if (!(s >= -1e-9 && s <= path.total_length + 1e-9))
    throw InvalidParameter("to_euclidean: s outside [0, total_length]");
  const Pose base = path.pose_at(std::clamp(s, 0.0, path.total_length));
  return {base.position + unit_from_heading(base.heading).left() * d, base.heading};
}

}  // namespace icat
