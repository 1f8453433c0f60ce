#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "icat/vehicle.hpp"

namespace icat {

enum class MessageKind { BSM, SPaT, MAP, TrajectoryCmd, Preemption };
enum class LightState { red, green, yellow };

std::string to_string(MessageKind k);
std::string to_string(LightState s);
std::optional<LightState> light_state_from_string(const std::string& s);

struct BsmPayload {
  VehicleState state;
};

struct SpatPayload {
  std::string light_id;
  LightState state = LightState::red;
  double time_to_change = 0.0;
};

struct MapPayload {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  std::uint64_t digest = 0;
};

struct TrajectoryCmdPayload {
  Trajectory trajectory;
};

struct PreemptionPayload {
  std::string light_id;
  LightState requested = LightState::green;
};

using Payload = std::variant<BsmPayload, SpatPayload, MapPayload, TrajectoryCmdPayload,
                             PreemptionPayload>;

struct V2XMessage {
  std::uint64_t msg_id = 0;  // assigned by the bus
  MessageKind kind = MessageKind::BSM;
  std::string sender;
  Payload payload;
  double created = 0.0;
  double delivery = 0.0;  // scheduled delivery time, set by the bus
};

MessageKind kind_of(const Payload& p);

struct ChannelModel {
  double base_latency = 0.05;
  double jitter_sigma = 0.01;
  double drop_prob = 0.01;

  void validate() const;
  static ChannelModel ideal() { return {0.0, 0.0, 0.0}; }
};

struct BusStats {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  double latency_sum = 0.0;  // over delivered messages
  double latency_max = 0.0;

  double mean_latency() const { return delivered ? latency_sum / delivered : 0.0; }
};

/// Broadcast bus with a per-message latency/loss draw. Deterministic for a
/// given seed and call sequence.
class MessageBus {
 public:
  MessageBus(ChannelModel channel, std::uint64_t seed);

  /// Scheduled delivery time, or nullopt if the message was dropped.
  /// Throws InvalidParameter when msg.created > now.
  std::optional<double> broadcast(V2XMessage msg, double now);

  /// Messages due at or before `now`, ordered by (delivery time, msg_id).
  std::vector<V2XMessage> deliver(double now);

  const BusStats& stats() const { return stats_; }
  std::size_t queued() const { return queue_.size(); }
  const ChannelModel& channel() const { return channel_; }

  /// JSON-lines event log; pass nullptr to disable.
  void set_log(std::ostream* log) { log_ = log; }

 private:
  ChannelModel channel_;
  Rng rng_;
  std::uint64_t next_id_ = 1;
  std::vector<V2XMessage> queue_;  // heap ordered by (delivery, msg_id)
  BusStats stats_;
  std::ostream* log_ = nullptr;
};

struct LightPhase {
  LightState state = LightState::red;
  double duration = 1.0;
};

struct TrafficLight {
  std::string light_id;
  std::vector<LightPhase> phases;
  std::size_t phase_index = 0;
  double time_in_phase = 0.0;
  std::optional<std::size_t> pending;  // phase to jump to after a preemption yellow
  std::optional<NodeId> stop_node;     // stop line controlled by this light

  LightState state() const { return phases.at(phase_index).state; }
  void validate() const;
};

TrafficLight light_step(const TrafficLight& light, double dt);

/// Throws InvalidParameter when the requested state is not among the phases.
TrafficLight preempt(const TrafficLight& light, LightState requested);

SpatPayload spat_of(const TrafficLight& light);

}  // namespace icat
