#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "icat/conflict.hpp"
#include "icat/v2x.hpp"

namespace icat {

enum class ManagerMode { optimized, fifo_baseline };

std::string to_string(ManagerMode m);
std::optional<ManagerMode> manager_mode_from_string(const std::string& s);

struct ManagerParams {
  ManagerMode mode = ManagerMode::optimized;
  PlannerParams planner;
  SeparationParams separation;
  double planning_margin = 0.8;   // added to d_safe when resolving plans
  double goal_tolerance = 1.0;
  double extend_margin = 20.0;    // next route is drawn when the path end gets this close
  double leader_lateral = 0.75;
  double leader_range = 20.0;
  double box_clearance = 1.0;     // past the box exit before a stop is allowed
  double fifo_zone_radius = 2.6;
  double fifo_check_margin = 1.4;
  int workers = 1;

  void validate() const;
};

struct RouteEvent {
  CarId car = 0;
  NodeId goal;
  double time = 0.0;
  double travel_time = 0.0;
};

struct ManagedCar {
  CarId id = 0;
  std::optional<VehicleState> bsm;  // last delivered snapshot
  double bsm_created = 0.0;
  std::shared_ptr<const Path> path;
  double s = 0.0;  // last localized arclength on path
  struct Goal {
    NodeId node;
    double s = 0.0;
  };
  std::vector<Goal> goals;  // pending goals along path, ascending s
  double route_start = 0.0;
  Trajectory last;
  std::optional<double> box_since;  // time the car entered its current intersection box
  Rng rng;
};

/// Centralized planner. It only learns about cars through delivered BSMs and
/// about lights through delivered SPaT.
class TrafficManager {
 public:
  TrafficManager(std::shared_ptr<const RoadGraph> graph, ManagerParams params,
                 const std::vector<CarId>& cars, std::uint64_t seed,
                 std::vector<Obstacle> obstacles = {},
                 std::map<std::string, NodeId> light_stop_nodes = {});

  void on_message(const V2XMessage& msg);

  /// One planning cycle; returns one TrajectoryCmd per managed car in
  /// ascending id order.
  std::vector<V2XMessage> tick(double now);

  V2XMessage map_message(double now) const;

  const ManagedCar& car(CarId id) const;
  const std::vector<ManagedCar>& cars() const { return cars_; }
  const RoadGraph& graph() const { return *graph_; }
  const ManagerParams& params() const { return params_; }

  std::vector<RouteEvent> take_route_events();
  std::uint64_t unmanaged_ticks() const { return unmanaged_ticks_; }
  std::uint64_t relocalizations() const { return relocalizations_; }

 private:
  struct Estimate {
    bool known = false;
    Vec2 position;
    double heading = 0.0;
    double v = 0.0;
  };
  struct PlanResult {
    bool ok = false;
    PlanContext ctx;
    Trajectory traj;
    std::vector<RouteEvent> routes;
    bool relocalized = false;
  };

  // Previous-tick view of a car, shared read-only across planning workers.
  struct Snapshot {
    CarId id = 0;
    std::shared_ptr<const Path> path;
    double s = 0.0;
    std::optional<std::pair<std::size_t, double>> box;  // box segment, end of box + clearance
  };

  PlanResult plan_car(ManagedCar& car, const std::vector<Estimate>& est,
                      const std::vector<Snapshot>& snapshot, double now);
  std::optional<std::pair<std::size_t, double>> current_box(const Path& path, double s) const;
  bool box_occupied(const Path& path, std::size_t k, CarId self,
                    const std::vector<Snapshot>& snapshot) const;
  void relocalize(ManagedCar& car, const Estimate& e, double now);
  void extend(ManagedCar& car);
  std::vector<Obstacle> light_obstacles(const Path& path, const FrenetState& fs) const;

  std::shared_ptr<const RoadGraph> graph_;
  ManagerParams params_;
  std::vector<ManagedCar> cars_;
  std::map<CarId, std::size_t> index_;
  std::vector<Obstacle> obstacles_;
  std::map<std::string, NodeId> light_nodes_;
  std::map<std::string, SpatPayload> spat_;
  std::optional<FifoGate> gate_;
  std::vector<RouteEvent> route_events_;
  std::uint64_t unmanaged_ticks_ = 0;
  std::uint64_t relocalizations_ = 0;
};

/// Closest edge whose heading at the foot point agrees with `heading` (within
/// 90 degrees); ties go to the lower edge id.
std::optional<std::pair<EdgeId, double>> locate_on_graph(const RoadGraph& graph, Vec2 position,
                                                         double heading);

}  // namespace icat
