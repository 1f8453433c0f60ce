#pragma once

#include <map>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "icat/planner.hpp"

namespace icat {

enum class ConflictKind { rear_end, crossing, merging };
enum class PriorityRule { earlier_arrival, lower_id };

std::string to_string(ConflictKind k);
std::string to_string(PriorityRule r);

struct SeparationParams {
  double d_safe = 1.2;  // center-to-center
  PriorityRule priority_rule = PriorityRule::earlier_arrival;
  int max_rounds = 10;

  void validate(double vehicle_length) const;
};

struct Conflict {
  CarId car_a = 0;  // car_a < car_b
  CarId car_b = 0;
  std::size_t frame_index = 0;  // index into car_a's frames
  double distance = 0.0;
  ConflictKind kind = ConflictKind::crossing;
};

/// Conflicts between `traj` and every other trajectory in `all` (entries with
/// the same car id are skipped). One conflict per pair, at the first
/// co-timestamped frame closer than d_safe, ordered by (car_a, car_b).
/// Throws InvalidParameter when dt differs or start times are not aligned to
/// a whole number of frames.
std::vector<Conflict> detect(const Trajectory& traj, std::span<const Trajectory> all,
                             const SeparationParams& p);

/// All pairwise conflicts, ordered by (car_a, car_b).
std::vector<Conflict> detect_all(std::span<const Trajectory> all, const SeparationParams& p);

/// Minimum co-timestamped center distance between two trajectories, or
/// +inf when they share no timestamps.
double min_separation(const Trajectory& a, const Trajectory& b);

/// Stretch of another car's path [s0, s1].
struct PathStretch {
  std::shared_ptr<const Path> path;
  double s0 = 0.0;
  double s1 = 0.0;
};

/// Inputs needed to regenerate one car's plan during conflict resolution.
struct PlanContext {
  CarId car_id = 0;
  std::shared_ptr<const Path> path;
  FrenetState fs;
  double speed_limit = 0.0;
  LongitudinalTarget target;
  double start_time = 0.0;
  // Path intervals the car must not end its plan stalled in (intersection boxes
  // it has not entered yet).
  std::vector<std::pair<double, double>> keep_clear;
  // Lower wins outright; cars inside an intersection carry their entry time.
  double priority = std::numeric_limits<double>::infinity();
  // Path stretches of cars this one yields to; a stalled plan must not end
  // closer to them than d_safe. Filled in by resolve_all.
  std::vector<PathStretch> no_stop;
};

/// Path reach ahead of a winning car that a yielder may not stall near.
inline constexpr double kNoStopReach = 10.0;

double distance_to_stretch(const PathStretch& st, Vec2 point);

/// Slowest terminal speed that counts as clearing a keep-clear interval.
inline constexpr double kKeepClearSpeed = 0.3;

/// True when the trajectory ends stalled inside one of the intervals.
bool ends_in_keep_clear(const Trajectory& traj,
                        const std::vector<std::pair<double, double>>& keep_clear);

/// Car that keeps its plan for a conflict: earlier arrival at the conflict
/// point, then the car further ahead, then the lower id.
CarId conflict_winner(const Conflict& c, const Trajectory& a, const Trajectory& b,
                      const SeparationParams& p);

/// New trajectory for the yielding car: the largest terminal-speed scale
/// factor in {1.0, 0.9, ..., 0.1} whose plan keeps d_safe to every other
/// trajectory, else the farthest safe stop, else the shortest stop. The
/// result never runs ahead of the original plan. No conflicts: original
/// returned unchanged.
Trajectory replan(const PlanContext& yielder, std::span<const Conflict> conflicts,
                  std::span<const Trajectory> trajectories, const SeparationParams& p,
                  const PlannerParams& pp);

/// Forced stop for the yielder (lambda = 0 branch of replan).
Trajectory replan_stop(const PlanContext& yielder, std::span<const Trajectory> trajectories,
                       const SeparationParams& p, const PlannerParams& pp);

/// Iterated detect/replan in priority order. `contexts[i]` describes the
/// car owning `trajectories[i]`; a null path marks a car whose plan is fixed.
std::vector<Trajectory> resolve_all(std::span<const PlanContext> contexts,
                                    std::vector<Trajectory> trajectories,
                                    const SeparationParams& p, const PlannerParams& pp);

// ---------------------------------------------------------------------------
// FIFO checkpoint baseline

struct FifoZone {
  std::string name;
  Vec2 center;
  double radius = 0.0;
};

/// One zone per intersection (entry/exit cluster) and one per merge node.
std::vector<FifoZone> fifo_zones(const RoadGraph& graph, double zone_radius);

struct FifoCar {
  CarId id = 0;
  Vec2 position;
  std::shared_ptr<const Path> path;
  double s = 0.0;
};

struct GateCommand {
  CarId car = 0;
  bool go = true;
  std::optional<double> hold_s;  // path arclength to stop at
};

/// First-come-first-served checkpoint gate. A car reaching a zone's checking
/// radius joins its queue; the head of the queue claims the zone and keeps it
/// until it has left the zone disc. Everyone else queued holds at the disc
/// boundary.
class FifoGate {
 public:
  FifoGate(std::vector<FifoZone> zones, double check_margin);

  std::vector<GateCommand> update(std::span<const FifoCar> cars, double now);

  const std::vector<FifoZone>& zones() const { return zones_; }
  std::optional<CarId> claimant(std::size_t zone) const { return state_[zone].claimant; }

 private:
  struct ZoneState {
    std::optional<CarId> claimant;
    std::map<CarId, double> arrivals;
  };
  std::vector<FifoZone> zones_;
  std::vector<ZoneState> state_;
  double check_margin_;
};

}  // namespace icat
