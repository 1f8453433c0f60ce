#include "icat/planner.hpp"

#include <algorithm>
#include <cmath>

namespace icat {

namespace {

struct ProfileBounds {
  double v_min = 0.0;
  double v_max = 0.0;
  double a_max = 0.0;
};

ProfileBounds bounds_of(const Quintic& q) {
  constexpr int kSamples = 80;
  ProfileBounds b{q.velocity(0.0), q.velocity(0.0), q.acceleration(0.0)};
  for (int i = 1; i <= kSamples; ++i) {
    const double t = q.duration * static_cast<double>(i) / kSamples;
    const double v = q.velocity(t);
    b.v_min = std::min(b.v_min, v);
    b.v_max = std::max(b.v_max, v);
    b.a_max = std::max(b.a_max, q.acceleration(t));
  }
  return b;
}

LongitudinalProfile hold(double s0, double duration) {
  LongitudinalProfile p;
  p.s0 = s0;
  p.q.duration = duration;
  return p;
}

}  // namespace

TrajectoryFrame Trajectory::sample(double t) const {
  if (frames.empty()) throw InvalidParameter("sample: empty trajectory");
  if (t <= 0.0) return frames.front();
  const double pos = t / dt;
  const auto k = static_cast<std::size_t>(std::floor(pos));
  if (k + 1 >= frames.size()) return frames.back();
  const double w = pos - static_cast<double>(k);
  const auto& a = frames[k];
  const auto& b = frames[k + 1];
  auto lerp = [w](double x, double y) { return x + (y - x) * w; };
  TrajectoryFrame f;
  f.t = t;
  f.s = lerp(a.s, b.s);
  f.d = lerp(a.d, b.d);
  f.x = lerp(a.x, b.x);
  f.y = lerp(a.y, b.y);
  f.heading = wrap_angle(a.heading + wrap_angle(b.heading - a.heading) * w);
  f.v = lerp(a.v, b.v);
  f.a = lerp(a.a, b.a);
  f.edge = w < 0.5 ? a.edge : b.edge;
  return f;
}

void PlannerParams::validate() const {
  if (!(horizon >= 1.0)) throw InvalidParameter("planner.horizon must be >= 1 s");
  if (!(dt > 0.0 && dt <= 0.1)) throw InvalidParameter("planner.dt must be in (0, 0.1]");
  if (!(a_min < 0.0 && a_max > 0.0)) throw InvalidParameter("planner requires a_min < 0 < a_max");
  if (!(standstill_gap >= 0.0)) throw InvalidParameter("planner.standstill_gap must be >= 0");
  if (!(time_headway >= 0.0)) throw InvalidParameter("planner.time_headway must be >= 0");
  if (!(cruise_speed_cap > 0.0)) throw InvalidParameter("planner.cruise_speed_cap must be > 0");
  if (!(lateral_time > 0.0)) throw InvalidParameter("planner.lateral_time must be > 0");
}

// ---------------------------------------------------------------------------
// Quintic

double Quintic::value(double t) const {
  return c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
}

double Quintic::velocity(double t) const {
  return c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
}

double Quintic::acceleration(double t) const {
  return 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
}

Quintic quintic_solve(double s0, double v0, double a0, double s1, double v1, double a1,
                      double T) {
  if (!(T > 0.0) || !std::isfinite(T)) throw InvalidParameter("quintic_solve: T must be > 0");
  Quintic q;
  q.duration = T;
  q.c[0] = s0;
  q.c[1] = v0;
  q.c[2] = 0.5 * a0;
  const double T2 = T * T;
  const double T3 = T2 * T;
  const double ds = s1 - (s0 + v0 * T + 0.5 * a0 * T2);
  const double dv = v1 - (v0 + a0 * T);
  const double da = a1 - a0;
  q.c[3] = (20.0 * ds - 8.0 * dv * T + da * T2) / (2.0 * T3);
  q.c[4] = (-30.0 * ds + 14.0 * dv * T - 2.0 * da * T2) / (2.0 * T3 * T);
  q.c[5] = (12.0 * ds - 6.0 * dv * T + da * T2) / (2.0 * T3 * T2);
  return q;
}

// ---------------------------------------------------------------------------
// Longitudinal

LongitudinalTarget acc_target(const FrenetState& ego, const std::optional<FrenetState>& leader,
                              const PlannerParams& params, double speed_limit) {
  const double T = params.horizon;
  const double v0 = std::max(ego.s_dot, 0.0);
  const double v_free = std::max(0.0, std::min(speed_limit, params.cruise_speed_cap));
  LongitudinalTarget target{ego.s + 0.5 * (v0 + v_free) * T, v_free, 0.0, false};
  if (leader) {
    const double vl = std::max(leader->s_dot, 0.0);
    const double v1 = std::min({vl, speed_limit, params.cruise_speed_cap});
    const double s1 = leader->s + vl * T - (params.standstill_gap + params.time_headway * v1);
    if (s1 <= target.s1) target = {std::max(s1, ego.s), v1, 0.0, true};
  }
  return target;
}

double LongitudinalProfile::s(double t) const {
  if (t <= q.duration) return s0 + q.value(t);
  return s0 + q.value(q.duration) + q.velocity(q.duration) * (t - q.duration);
}

double LongitudinalProfile::v(double t) const {
  return q.velocity(std::min(t, q.duration));
}

double LongitudinalProfile::a(double t) const {
  return t <= q.duration ? q.acceleration(t) : 0.0;
}

double min_stop_distance(double v0, const PlannerParams& params) {
  return 0.75 * v0 * v0 / std::abs(params.a_min);
}

LongitudinalProfile stop_profile(double s0, double v0, double distance,
                                 const PlannerParams& params) {
  if (v0 <= 1e-9) return hold(s0, params.horizon);
  if (!(distance > 0.0)) distance = min_stop_distance(v0, params);
  const double T = 2.0 * distance / v0;
  LongitudinalProfile p;
  p.s0 = s0;
  if (T >= params.horizon) {
    p.q = quintic_solve(0.0, v0, 0.0, distance, 0.0, 0.0, params.horizon);
  } else {
    p.q = quintic_solve(0.0, v0, 0.0, distance, 0.0, 0.0, T);
  }
  return p;
}

LongitudinalProfile longitudinal_profile(double s0, double v0, double a0, double s1, double v1,
                                         const PlannerParams& params, double v_max) {
  const double T = params.horizon;
  v0 = std::max(v0, 0.0);
  v1 = std::clamp(v1, 0.0, std::max(v_max, 0.0));
  if (s1 <= s0 + 1e-9) {
    if (v0 <= 1e-9) return hold(s0, T);
    return stop_profile(s0, v0, min_stop_distance(v0, params), params);
  }
  const double D = s1 - s0;
  auto make = [&](double dist) { return quintic_solve(0.0, v0, a0, dist, v1, 0.0, T); };
  auto too_fast = [&](const ProfileBounds& b) {
    return b.v_max > std::max(v_max, v0) + 1e-9 || b.a_max > std::max(params.a_max, a0) + 1e-9;
  };

  LongitudinalProfile p;
  p.s0 = s0;
  p.q = make(D);
  ProfileBounds b = bounds_of(p.q);
  if (too_fast(b)) {
    // Pull the terminal position back until the hump fits the limits.
    double lo = std::min(D, 0.5 * (v0 + v1) * T);
    double hi = D;
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (too_fast(bounds_of(make(mid)))) hi = mid; else lo = mid;
    }
    p.q = make(lo);
    b = bounds_of(p.q);
  }
  if (b.v_min < -1e-9) {
    // Reaching (s1, v1) would need reversing: stop at s1 instead.
    return stop_profile(s0, v0, D, params);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Trajectory synthesis

Trajectory build_trajectory(const Path& path, const FrenetState& fs,
                            const LongitudinalProfile& profile, const PlannerParams& params,
                            double speed_limit, CarId car_id, double start_time) {
  Trajectory traj;
  traj.car_id = car_id;
  traj.start_time = start_time;
  traj.dt = params.dt;
  traj.horizon = params.horizon;
  const auto n = static_cast<std::size_t>(std::llround(params.horizon / params.dt));
  const double t_lat = std::min(params.horizon, params.lateral_time);
  const Quintic lateral = quintic_solve(fs.d, fs.d_dot, 0.0, 0.0, 0.0, 0.0, t_lat);
  const double v_cap = std::max(speed_limit, std::max(fs.s_dot, 0.0));
  traj.frames.reserve(n + 1);
  double prev_s = fs.s;
  for (std::size_t k = 0; k <= n; ++k) {
    TrajectoryFrame f;
    f.t = static_cast<double>(k) * params.dt;
    f.s = std::clamp(profile.s(f.t), prev_s, path.total_length);
    f.v = std::clamp(profile.v(f.t), 0.0, v_cap);
    f.a = profile.a(f.t);
    if (f.s >= path.total_length) {
      f.v = 0.0;
      f.a = 0.0;
    }
    f.d = f.t <= t_lat ? lateral.value(f.t) : 0.0;
    const Pose pose = to_euclidean(path, f.s, f.d);
    f.x = pose.position.x;
    f.y = pose.position.y;
    f.heading = pose.heading;
    f.edge = path.edge_at(f.s);
    prev_s = f.s;
    traj.frames.push_back(f);
  }
  return traj;
}

std::optional<double> obstacle_stop(const Path& path, double ego_s,
                                    std::span<const Obstacle> obstacles,
                                    const PlannerParams& params) {
  std::optional<double> stop;
  for (const auto& ob : obstacles) {
    FrenetOptions opt;
    opt.corridor = ob.radius + params.obstacle_corridor;
    auto proj = project_to_path(path, ob.position, opt);
    if (!proj || proj->s + ob.radius <= ego_s) continue;
    const double s_stop = proj->s - ob.radius - params.standstill_gap;
    stop = stop ? std::min(*stop, s_stop) : s_stop;
  }
  return stop;
}

LongitudinalTarget plan_target(const Path& path, const FrenetState& fs,
                               const PlannerParams& params,
                               const std::optional<FrenetState>& leader,
                               std::span<const Obstacle> obstacles, double speed_limit) {
  LongitudinalTarget target = acc_target(fs, leader, params, speed_limit);
  if (auto stop = obstacle_stop(path, fs.s, obstacles, params); stop && *stop < target.s1) {
    target = {std::max(*stop, fs.s), 0.0, 0.0, false};
  }
  if (target.s1 >= path.total_length) target = {path.total_length, 0.0, 0.0, target.leader_bound};
  return target;
}

Trajectory plan(const Path& path, const FrenetState& fs, const PlannerParams& params,
                const std::optional<FrenetState>& leader, std::span<const Obstacle> obstacles,
                double speed_limit, CarId car_id, double start_time) {
  if (path.empty()) throw InvalidParameter("plan: empty path");
  if (!std::isfinite(fs.s) || !std::isfinite(fs.d) || fs.s < -1e-9 ||
      fs.s > path.total_length + 1e-9 || std::abs(fs.d) > FrenetOptions{}.corridor)
    throw OffPath("plan: Frenet state is not on the path");
  const LongitudinalTarget target =
      plan_target(path, fs, params, leader, obstacles, speed_limit);
  const double v_max = std::min(speed_limit, params.cruise_speed_cap);
  const LongitudinalProfile profile =
      longitudinal_profile(fs.s, fs.s_dot, fs.s_ddot, target.s1, target.v1, params, v_max);
  return build_trajectory(path, fs, profile, params, speed_limit, car_id, start_time);
}

// ---------------------------------------------------------------------------
// Segment classification

std::string to_string(SegmentClass c) {
  switch (c) {
    case SegmentClass::normal: return "normal";
    case SegmentClass::approaching_merge: return "approaching_merge";
    case SegmentClass::approaching_diverge: return "approaching_diverge";
    case SegmentClass::in_intersection: return "in_intersection";
  }
  return "normal";
}

SegmentClass classify_segment(const Path& path, double s, const RoadGraph& graph,
                              double lookahead) {
  if (path.empty()) return SegmentClass::normal;
  const std::size_t current = path.segment_index_at(s);
  if (graph.node(graph.edge(path.segments[current].edge).from).kind ==
      NodeKind::intersection_entry)
    return SegmentClass::in_intersection;
  bool merge = false;
  bool diverge = false;
  bool intersection = false;
  for (std::size_t k = current; k < path.segments.size(); ++k) {
    const auto& seg = path.segments[k];
    const double end = seg.s_start + seg.curve.length();
    const double ahead = end - s;
    if (ahead > lookahead) break;
    if (ahead < 0.0) continue;
    switch (graph.node(graph.edge(seg.edge).to).kind) {
      case NodeKind::merge: merge = true; break;
      case NodeKind::diverge: diverge = true; break;
      case NodeKind::intersection_entry: intersection = true; break;
      default: break;
    }
  }
  if (intersection) return SegmentClass::in_intersection;
  if (merge) return SegmentClass::approaching_merge;
  if (diverge) return SegmentClass::approaching_diverge;
  return SegmentClass::normal;
}

}  // namespace icat
