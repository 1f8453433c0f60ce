#pragma once

#include <optional>

#include "icat/road_graph.hpp"

namespace icat {

/// Path-relative kinematic state. `d` is positive to the left of travel.
struct FrenetState {
  double s = 0.0;
  double d = 0.0;
  double s_dot = 0.0;
  double d_dot = 0.0;
  double s_ddot = 0.0;
};

struct FrenetOptions {
  double corridor = 2.0;
  // Previous-tick arclength; when set, segments within +-window of it are
  // searched first so self-approaching paths resolve by continuity.
  std::optional<double> hint_s;
  double window = 2.5;
};

struct PathProjection {
  double s = 0.0;
  double d = 0.0;
  double distance = 0.0;
};

/// Nearest point on the path geometry, or nullopt when farther than
/// `options.corridor`.
std::optional<PathProjection> project_to_path(const Path& path, const Vec2& point,
                                              const FrenetOptions& options = {});

/// Throws OffPath when the pose is outside the corridor and InvalidParameter
/// for an empty path.
FrenetState to_frenet(const Path& path, const Pose& pose, double speed,
                      const FrenetOptions& options = {});

/// Throws InvalidParameter when s lies outside [0, total_length].
Pose to_euclidean(const Path& path, double s, double d);

}  // namespace icat
