#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "icat/frenet.hpp"
#include "icat/road_graph.hpp"

namespace icat {

struct TrajectoryFrame {
  double t = 0.0;  // seconds from trajectory start
  double s = 0.0;
  double d = 0.0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double v = 0.0;
  double a = 0.0;
  EdgeId edge;

  Vec2 position() const { return {x, y}; }
};

struct Trajectory {
  CarId car_id = 0;
  double start_time = 0.0;  // simulation clock
  double dt = 0.1;
  double horizon = 0.0;
  std::vector<TrajectoryFrame> frames;

  bool empty() const { return frames.empty(); }
  /// Frame state linearly interpolated at trajectory-relative time t,
  /// clamped to the first/last frame.
  TrajectoryFrame sample(double t) const;
};

struct PlannerParams {
  double horizon = 4.0;
  double dt = 0.1;
  double a_max = 2.0;
  double a_min = -4.0;
  double standstill_gap = 2.2;
  double time_headway = 1.0;
  double cruise_speed_cap = 3.0;
  double lateral_time = 2.0;         // lateral convergence time cap
  double obstacle_corridor = 1.0;    // lateral reach of the lane for obstacles

  /// Throws InvalidParameter on violated invariants.
  void validate() const;
};

enum class ObstacleKind { static_obstacle, construction_zone };

struct Obstacle {
  Vec2 position;
  double radius = 0.1;
  ObstacleKind kind = ObstacleKind::static_obstacle;
};

/// Quintic polynomial p(t) = sum c[k] t^k on [0, duration].
struct Quintic {
  std::array<double, 6> c{};
  double duration = 0.0;

  double value(double t) const;
  double velocity(double t) const;
  double acceleration(double t) const;
};

/// Throws InvalidParameter when T <= 0.
Quintic quintic_solve(double s0, double v0, double a0, double s1, double v1, double a1, double T);

struct LongitudinalTarget {
  double s1 = 0.0;
  double v1 = 0.0;
  double a1 = 0.0;
  bool leader_bound = false;
};

/// Terminal state at the horizon: free cruise, or the ACC gap behind a
/// constant-velocity leader.
LongitudinalTarget acc_target(const FrenetState& ego, const std::optional<FrenetState>& leader,
                              const PlannerParams& params, double speed_limit);

/// Longitudinal motion: a quintic segment followed by constant-velocity
/// continuation (or standstill) up to the horizon.
struct LongitudinalProfile {
  Quintic q;
  double s0 = 0.0;

  double s(double t) const;
  double v(double t) const;
  double a(double t) const;
};

/// Monotone (non-reversing) profile towards (s1, v1). Terminal targets that
/// would need more than `v_max` or `a_max` are pulled closer; targets that
/// would need negative speed become a stop at s1.
LongitudinalProfile longitudinal_profile(double s0, double v0, double a0, double s1, double v1,
                                         const PlannerParams& params, double v_max);

/// Stop after `distance` meters with a smooth deceleration.
LongitudinalProfile stop_profile(double s0, double v0, double distance,
                                 const PlannerParams& params);

/// Shortest smooth stopping distance whose peak deceleration is |a_min|.
double min_stop_distance(double v0, const PlannerParams& params);

/// Samples frames for a given longitudinal profile with a lateral quintic
/// that converges to the centerline.
Trajectory build_trajectory(const Path& path, const FrenetState& fs,
                            const LongitudinalProfile& profile, const PlannerParams& params,
                            double speed_limit, CarId car_id, double start_time);

/// Stop position (path s) imposed by obstacles ahead of `ego_s`, if any.
std::optional<double> obstacle_stop(const Path& path, double ego_s,
                                    std::span<const Obstacle> obstacles,
                                    const PlannerParams& params);

Trajectory plan(const Path& path, const FrenetState& fs, const PlannerParams& params,
                const std::optional<FrenetState>& leader, std::span<const Obstacle> obstacles,
                double speed_limit, CarId car_id = 0, double start_time = 0.0);

/// The longitudinal target `plan` aims for, after obstacle and path-end
/// truncation.
LongitudinalTarget plan_target(const Path& path, const FrenetState& fs,
                               const PlannerParams& params,
                               const std::optional<FrenetState>& leader,
                               std::span<const Obstacle> obstacles, double speed_limit);

enum class SegmentClass { normal, approaching_merge, approaching_diverge, in_intersection };

std::string to_string(SegmentClass c);

SegmentClass classify_segment(const Path& path, double s, const RoadGraph& graph,
                              double lookahead = 8.0);

}  // namespace icat
