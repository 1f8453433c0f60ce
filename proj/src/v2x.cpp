#include "icat/v2x.hpp"

#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

namespace icat {

namespace {

bool later(const V2XMessage& a, const V2XMessage& b) {
  if (a.delivery != b.delivery) return a.delivery > b.delivery;
  return a.msg_id > b.msg_id;
}

}  // namespace

std::string to_string(MessageKind k) {
  switch (k) {
    case MessageKind::BSM: return "BSM";
    case MessageKind::SPaT: return "SPaT";
    case MessageKind::MAP: return "MAP";
    case MessageKind::TrajectoryCmd: return "TrajectoryCmd";
    case MessageKind::Preemption: return "Preemption";
  }
  return "BSM";
}

std::string to_string(LightState s) {
  switch (s) {
    case LightState::red: return "red";
    case LightState::green: return "green";
    case LightState::yellow: return "yellow";
  }
  return "red";
}

std::optional<LightState> light_state_from_string(const std::string& s) {
  if (s == "red") return LightState::red;
  if (s == "green") return LightState::green;
  if (s == "yellow") return LightState::yellow;
  return std::nullopt;
}

MessageKind kind_of(const Payload& p) {
  return static_cast<MessageKind>(p.index());
}

void ChannelModel::validate() const {
  if (!(base_latency >= 0.0)) throw InvalidParameter("channel.base_latency must be >= 0");
  if (!(jitter_sigma >= 0.0)) throw InvalidParameter("channel.jitter_sigma must be >= 0");
  if (!(drop_prob >= 0.0 && drop_prob <= 1.0))
    throw InvalidParameter("channel.drop_prob must be in [0, 1]");
}

MessageBus::MessageBus(ChannelModel channel, std::uint64_t seed)
    : channel_(channel), rng_(seed) {
  channel_.validate();
}

std::optional<double> MessageBus::broadcast(V2XMessage msg, double now) {
  if (msg.created > now + 1e-12) throw InvalidParameter("broadcast: message created in the future");
  msg.msg_id = next_id_++;
  msg.kind = kind_of(msg.payload);
  ++stats_.sent;
  // Always draw both variates so the stream does not depend on outcomes.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const double roll = u(rng_);
  const double jitter = n(rng_) * channel_.jitter_sigma;
  if (roll < channel_.drop_prob) {
    ++stats_.dropped;
    if (log_) {
      *log_ << nlohmann::json{{"msg_id", msg.msg_id}, {"kind", to_string(msg.kind)},
                              {"sender", msg.sender}, {"created", msg.created},
                              {"dropped", true}}.dump()
            << '\n';
    }
    return std::nullopt;
  }
  msg.delivery = now + std::max(0.0, channel_.base_latency + jitter);
  const double at = msg.delivery;
  queue_.push_back(std::move(msg));
  std::push_heap(queue_.begin(), queue_.end(), later);
  return at;
}

std::vector<V2XMessage> MessageBus::deliver(double now) {
  std::vector<V2XMessage> out;
  while (!queue_.empty() && queue_.front().delivery <= now + 1e-9) {
    std::pop_heap(queue_.begin(), queue_.end(), later);
    out.push_back(std::move(queue_.back()));
    queue_.pop_back();
    auto& m = out.back();
    ++stats_.delivered;
    const double latency = m.delivery - m.created;
    stats_.latency_sum += latency;
    stats_.latency_max = std::max(stats_.latency_max, latency);
    if (log_) {
      *log_ << nlohmann::json{{"msg_id", m.msg_id}, {"kind", to_string(m.kind)},
                              {"sender", m.sender}, {"created", m.created},
                              {"delivered", m.delivery}}.dump()
            << '\n';
    }
  }
  return out;
}

void TrafficLight::validate() const {
  if (phases.empty()) throw InvalidParameter("light '" + light_id + "' has no phases");
  for (const auto& p : phases)
    if (!(p.duration > 0.0))
      throw InvalidParameter("light '" + light_id + "' has a non-positive phase duration");
  if (phase_index >= phases.size())
    throw InvalidParameter("light '" + light_id + "' phase index out of range");
  if (!(time_in_phase >= 0.0))
    throw InvalidParameter("light '" + light_id + "' time_in_phase must be >= 0");
}

TrafficLight light_step(const TrafficLight& light, double dt) {
  if (!(dt > 0.0)) throw InvalidParameter("light_step: dt must be > 0");
  TrafficLight out = light;
  out.time_in_phase += dt;
  while (out.time_in_phase >= out.phases[out.phase_index].duration - 1e-12) {
    out.time_in_phase = std::max(0.0, out.time_in_phase - out.phases[out.phase_index].duration);
    if (out.pending) {
      out.phase_index = *out.pending;
      out.pending.reset();
    } else {
      out.phase_index = (out.phase_index + 1) % out.phases.size();
    }
  }
  return out;
}

TrafficLight preempt(const TrafficLight& light, LightState requested) {
  const auto find = [&](LightState s) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < light.phases.size(); ++i)
      if (light.phases[i].state == s) return i;
    return std::nullopt;
  };
  const auto target = find(requested);
  if (!target)
    throw InvalidParameter("light '" + light.light_id + "' has no " + to_string(requested) +
                           " phase");
  TrafficLight out = light;
  out.time_in_phase = 0.0;
  out.pending.reset();
  if (light.state() == requested) return out;
  const auto yellow = find(LightState::yellow);
  if (light.state() == LightState::green && yellow) {
    out.phase_index = *yellow;
    out.pending = *target;
  } else {
    out.phase_index = *target;
  }
  return out;
}

SpatPayload spat_of(const TrafficLight& light) {
  return {light.light_id, light.state(),
          light.phases[light.phase_index].duration - light.time_in_phase};
}

}  // namespace icat
