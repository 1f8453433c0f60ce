#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icat/manager.hpp"

namespace icat {

struct InitialCar {
  std::string edge;
  double offset = 0.0;
  double speed = 0.0;
};

struct LightConfig {
  std::string id;
  std::string node;  // stop-line node name
  std::vector<LightPhase> phases;
  std::size_t initial_phase = 0;
  double offset = 0.0;  // initial time_in_phase
};

struct PreemptionEvent {
  double time = 0.0;
  std::string light;
  LightState requested = LightState::green;
};

struct VehicleGeometry {
  double wheelbase = 0.6;
  double length = 0.9;
  double width = 0.5;
  double steer_max = 0.6;
};

struct SimConfig {
  std::uint64_t seed = 1;
  double duration = 60.0;
  double vehicle_dt = 0.02;
  double planning_period = 0.2;
  double bsm_period = 0.1;
  double spat_period = 0.1;
  int n_cars = 10;
  ManagerMode mode = ManagerMode::optimized;
  bool ideal = false;
  ChannelModel channel;
  NoiseModel noise;
  PlannerParams planner;
  SeparationParams separation;
  double planning_margin = 0.8;
  double lookahead = 1.0;
  PursuitParams pursuit;
  VehicleGeometry vehicle;
  std::string map = "default";  // "default", "merge_cycle", or a map file path
  double map_spacing = 0.5;
  std::vector<InitialCar> initial_cars;
  std::vector<LightConfig> lights;
  std::vector<Obstacle> obstacles;
  std::vector<PreemptionEvent> preemptions;
  int workers = 1;
  bool log_messages = true;
  double deadlock_speed = 0.01;
  double deadlock_time = 10.0;
  double fifo_zone_radius = 2.6;
  double fifo_check_margin = 1.4;

  /// Throws ConfigError naming the violated invariant.
  void validate() const;
  ManagerParams manager_params() const;
};

struct MessageStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  double mean_delay = 0.0;
};

struct Metrics {
  std::uint64_t completed_routes = 0;
  std::vector<double> travel_times;
  std::vector<std::uint64_t> routes_per_car;
  double throughput = 0.0;  // routes per minute
  double min_separation = 0.0;
  std::uint64_t separation_violations = 0;
  std::uint64_t deadlock_events = 0;
  double mean_speed = 0.0;
  MessageStats message_stats;
  double cross_track_straight = 0.0;
  double cross_track_curve = 0.0;
  double max_cross_track = 0.0;
  double mean_response_delay = 0.0;
  std::uint64_t commands_applied = 0;
  std::uint64_t unmanaged_ticks = 0;
  std::uint64_t relocalizations = 0;
  bool left_bounds = false;
  double duration = 0.0;

  double mean_travel_time() const;
  nlohmann::json to_json() const;
};

struct RunOutputs {
  std::ostream* trace = nullptr;   // CSV
  std::ostream* events = nullptr;  // JSON lines
};

RoadGraph load_graph(const SimConfig& cfg);

Metrics run(const SimConfig& cfg, const RunOutputs& outputs = {});

struct LagRow {
  double latency = 0.0;
  double mean_response_delay = 0.0;
  double min_separation = 0.0;
};

struct LagReport {
  std::vector<LagRow> rows;
  bool strictly_increasing = true;
};

/// One run per latency with the same seed; jitter and loss are disabled so the
/// delay reflects latency alone.
LagReport lag_experiment(const SimConfig& cfg, const std::vector<double>& latencies);

void write_trace_header(std::ostream& os);

}  // namespace icat
