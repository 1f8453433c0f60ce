#pragma once

#include "icat/planner.hpp"

namespace icat {

struct VehicleState {
  CarId car_id = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double v = 0.0;
  double steering = 0.0;
  double wheelbase = 0.6;
  double length = 0.9;
  double width = 0.5;
  double steer_max = 0.6;

  Vec2 position() const { return {x, y}; }
  Pose pose() const { return {{x, y}, heading}; }
  void validate() const;
};

struct Control {
  double accel = 0.0;
  double steering = 0.0;
};

struct PursuitParams {
  double k_v = 1.5;
  double a_min = -4.0;
  double a_max = 2.0;
};

struct NoiseModel {
  double pos_sigma = 0.02;
  double heading_sigma = 0.01;
  bool enabled = true;

  void validate() const;
};

/// Forward-Euler kinematic bicycle. Steering is clamped to steer_max and
/// speed to v >= 0.
VehicleState step(const VehicleState& state, const Control& u, double dt);

/// Geometric pure pursuit on the trajectory polyline. Throws InvalidParameter
/// for an empty trajectory or non-positive lookahead.
Control pure_pursuit(const VehicleState& state, const Trajectory& traj, double lookahead,
                     const PursuitParams& params = {});

/// Gaussian pose noise; the input is returned unchanged when disabled.
VehicleState perturb(const VehicleState& state, const NoiseModel& nm, Rng& rng);

}  // namespace icat
