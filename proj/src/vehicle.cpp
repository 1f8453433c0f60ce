#include "icat/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace icat {

void VehicleState::validate() const {
  if (!(wheelbase > 0.0)) throw InvalidParameter("vehicle wheelbase must be > 0");
  if (!(length > 0.0 && width > 0.0)) throw InvalidParameter("vehicle dimensions must be > 0");
  if (!(steer_max > 0.0)) throw InvalidParameter("vehicle steer_max must be > 0");
  if (!(v >= 0.0)) throw InvalidParameter("vehicle speed must be >= 0");
  if (std::abs(steering) > steer_max + 1e-12)
    throw InvalidParameter("vehicle steering exceeds steer_max");
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(heading))
    throw InvalidParameter("vehicle pose must be finite");
}

void NoiseModel::validate() const {
  if (!(pos_sigma >= 0.0) || !(heading_sigma >= 0.0))
    throw InvalidParameter("noise sigmas must be >= 0");
}

VehicleState step(const VehicleState& state, const Control& u, double dt) {
  if (!(dt > 0.0)) throw InvalidParameter("step: dt must be > 0");
  VehicleState next = state;
  const double delta = std::clamp(u.steering, -state.steer_max, state.steer_max);
  next.x = state.x + state.v * std::cos(state.heading) * dt;
  next.y = state.y + state.v * std::sin(state.heading) * dt;
  next.heading = wrap_angle(state.heading + state.v / state.wheelbase * std::tan(delta) * dt);
  next.v = std::max(0.0, state.v + u.accel * dt);
  next.steering = delta;
  return next;
}

Control pure_pursuit(const VehicleState& state, const Trajectory& traj, double lookahead,
                     const PursuitParams& params) {
  if (traj.empty()) throw InvalidParameter("pure_pursuit: empty trajectory");
  if (!(lookahead > 0.0)) throw InvalidParameter("pure_pursuit: lookahead must be > 0");
  const auto& f = traj.frames;
  const Vec2 p = state.position();

  // Projection onto the frame polyline.
  std::size_t seg = 0;
  double seg_t = 0.0;
  double best = distance(p, f[0].position());
  for (std::size_t k = 0; k + 1 < f.size(); ++k) {
    const Vec2 a = f[k].position();
    const Vec2 ab = f[k + 1].position() - a;
    const double len2 = ab.dot(ab);
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const double dist = distance(p, a + ab * t);
    if (dist < best - 1e-12) {
      best = dist;
      seg = k;
      seg_t = t;
    }
  }

  std::size_t target = f.size() - 1;
  if (f.size() > 1) {
    double run = -seg_t * distance(f[seg].position(), f[seg + 1].position());
    for (std::size_t k = seg + 1; k < f.size(); ++k) {
      run += distance(f[k - 1].position(), f[k].position());
      if (run >= lookahead) {
        target = k;
        break;
      }
    }
  }

  Control u;
  const Vec2 to_target = f[target].position() - p;
  if (to_target.norm() > 1e-9) {
    const double alpha = wrap_angle(std::atan2(to_target.y, to_target.x) - state.heading);
    u.steering = std::atan(2.0 * state.wheelbase * std::sin(alpha) / lookahead);
  }
  u.steering = std::clamp(u.steering, -state.steer_max, state.steer_max);
  u.accel = std::clamp(params.k_v * (f[target].v - state.v), params.a_min, params.a_max);
  return u;
}

VehicleState perturb(const VehicleState& state, const NoiseModel& nm, Rng& rng) {
  if (!nm.enabled) return state;
  VehicleState out = state;
  if (nm.pos_sigma > 0.0) {
    std::normal_distribution<double> n(0.0, nm.pos_sigma);
    out.x += n(rng);
    out.y += n(rng);
  }
  if (nm.heading_sigma > 0.0) {
    std::normal_distribution<double> n(0.0, nm.heading_sigma);
    out.heading = wrap_angle(out.heading + n(rng));
  }
  return out;
}

}  // namespace icat
