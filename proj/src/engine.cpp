#include "icat/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "icat/map_io.hpp"

namespace icat {

namespace {

enum Stream : std::uint64_t { kChannel = 1, kNoise = 2, kPlacement = 3, kManager = 4 };

long ticks_of(double period, double dt, const std::string& name) {
  const double ratio = period / dt;
  const double r = std::round(ratio);
  if (r < 1.0 || std::abs(ratio - r) > 1e-9)
    throw ConfigError(name + " must be a positive integer multiple of vehicle_dt");
  return static_cast<long>(r);
}

struct CarRuntime {
  VehicleState state;
  std::optional<Trajectory> traj;
  double traj_created = -1.0;
  bool applied = false;
};

double polyline_distance(const Trajectory& traj, Vec2 p, bool* on_arc, const RoadGraph& g) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_k = 0;
  const auto& f = traj.frames;
  if (f.size() == 1) {
    best = distance(p, f[0].position());
  }
  for (std::size_t k = 0; k + 1 < f.size(); ++k) {
    const Vec2 a = f[k].position();
    const Vec2 ab = f[k + 1].position() - a;
    const double len2 = ab.dot(ab);
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const double d = distance(p, a + ab * t);
    if (d < best) {
      best = d;
      best_k = k;
    }
  }
  *on_arc = g.edge(f[best_k].edge).is_arc();
  return best;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<VehicleState> place_cars(const SimConfig& cfg, const RoadGraph& g) {
  std::vector<VehicleState> cars;
  auto make = [&](CarId id, const Edge& e, double offset, double speed) {
    VehicleState v;
    v.car_id = id;
    const Pose p = e.curve.pose_at(offset);
    v.x = p.position.x;
    v.y = p.position.y;
    v.heading = p.heading;
    v.v = speed;
    v.wheelbase = cfg.vehicle.wheelbase;
    v.length = cfg.vehicle.length;
    v.width = cfg.vehicle.width;
    v.steer_max = cfg.vehicle.steer_max;
    return v;
  };
  if (!cfg.initial_cars.empty()) {
    for (std::size_t i = 0; i < cfg.initial_cars.size(); ++i) {
      const auto& ic = cfg.initial_cars[i];
      auto eid = g.find_edge(ic.edge);
      if (!eid) throw ConfigError("initial_cars[" + std::to_string(i) + "].edge: unknown edge '" +
                                  ic.edge + "'");
      const Edge& e = g.edge(*eid);
      if (ic.offset < 0.0 || ic.offset > e.length())
        throw ConfigError("initial_cars[" + std::to_string(i) + "].offset outside the edge");
      cars.push_back(make(static_cast<CarId>(i), e, ic.offset, ic.speed));
    }
    return cars;
  }
  std::vector<const Edge*> candidates;
  for (const auto& e : g.edges()) {
    const auto kind = g.node(e.from).kind;
    if (kind == NodeKind::intersection_entry) continue;
    if (e.length() >= 1.5) candidates.push_back(&e);
  }
  if (candidates.empty()) throw ConfigError("map has no edge long enough to place cars");
  Rng rng(split_seed(cfg.seed, kPlacement));
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double min_gap = 5.0;
  for (int attempt = 0; cars.size() < static_cast<std::size_t>(cfg.n_cars); ++attempt) {
    if (attempt > 100000)
      throw ConfigError("n_cars: cannot place " + std::to_string(cfg.n_cars) +
                        " cars with 5 m spacing on this map");
    const Edge& e = *candidates[pick(rng)];
    const double offset = 0.5 + unit(rng) * (e.length() - 1.0);
    VehicleState v = make(static_cast<CarId>(cars.size()), e, offset, 0.0);
    bool ok = true;
    for (const auto& o : cars)
      if (distance(o.position(), v.position()) < min_gap) ok = false;
    if (ok) cars.push_back(v);
  }
  return cars;
}

}  // namespace

void SimConfig::validate() const {
  try {
    if (!(duration > 0.0)) throw ConfigError("duration must be > 0");
    if (!(vehicle_dt > 0.0)) throw ConfigError("vehicle_dt must be > 0");
    if (!(vehicle_dt <= planner.dt + 1e-12 && planner.dt <= planning_period + 1e-12))
      throw ConfigError("invariant vehicle_dt <= planner.dt <= planning_period violated (vehicle_dt=" +
                        fmt6(vehicle_dt) + ", planner.dt=" + fmt6(planner.dt) +
                        ", planning_period=" + fmt6(planning_period) + ")");
    ticks_of(planning_period, vehicle_dt, "planning_period");
    ticks_of(bsm_period, vehicle_dt, "bsm_period");
    ticks_of(spat_period, vehicle_dt, "spat_period");
    if (n_cars < 1) throw ConfigError("n_cars must be >= 1");
    if (!initial_cars.empty() && static_cast<std::size_t>(n_cars) != initial_cars.size())
      throw ConfigError("n_cars must equal the number of initial_cars");
    if (!(lookahead > 0.0)) throw ConfigError("lookahead must be > 0");
    if (!(vehicle.wheelbase > 0.0 && vehicle.length > 0.0 && vehicle.width > 0.0 &&
          vehicle.steer_max > 0.0))
      throw ConfigError("vehicle dimensions must be > 0");
    if (!(pursuit.k_v > 0.0)) throw ConfigError("pursuit.k_v must be > 0");
    if (!(map_spacing > 0.0)) throw ConfigError("map_spacing must be > 0");
    if (!(deadlock_speed > 0.0 && deadlock_time > 0.0))
      throw ConfigError("deadlock thresholds must be > 0");
    channel.validate();
    noise.validate();
    separation.validate(vehicle.length);
    manager_params().validate();
    for (const auto& l : lights) {
      TrafficLight tl{l.id, l.phases, l.initial_phase, l.offset, std::nullopt, std::nullopt};
      tl.validate();
    }
    for (const auto& p : preemptions)
      if (!(p.time >= 0.0)) throw ConfigError("preemption time must be >= 0");
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
}

ManagerParams SimConfig::manager_params() const {
  ManagerParams mp;
  mp.mode = mode;
  mp.planner = planner;
  mp.separation = separation;
  mp.planning_margin = planning_margin;
  mp.fifo_zone_radius = fifo_zone_radius;
  mp.fifo_check_margin = fifo_check_margin;
  mp.workers = workers;
  return mp;
}

double Metrics::mean_travel_time() const {
  if (travel_times.empty()) return 0.0;
  double sum = 0.0;
  for (double t : travel_times) sum += t;
  return sum / static_cast<double>(travel_times.size());
}

nlohmann::json Metrics::to_json() const {
  nlohmann::json j;
  j["completed_routes"] = completed_routes;
  j["travel_times"] = travel_times;
  j["mean_travel_time"] = mean_travel_time();
  j["routes_per_car"] = routes_per_car;
  j["throughput"] = throughput;
  j["min_separation"] = std::isfinite(min_separation) ? nlohmann::json(min_separation)
                                                      : nlohmann::json(nullptr);
  j["separation_violations"] = separation_violations;
  j["deadlock_events"] = deadlock_events;
  j["mean_speed"] = mean_speed;
  j["message_stats"] = {{"sent", message_stats.sent},
                        {"delivered", message_stats.delivered},
                        {"dropped", message_stats.dropped},
                        {"mean_delay", message_stats.mean_delay}};
  j["cross_track_error"] = {{"straight_mean", cross_track_straight},
                            {"curve_mean", cross_track_curve},
                            {"max", max_cross_track}};
  j["mean_response_delay"] = mean_response_delay;
  j["commands_applied"] = commands_applied;
  j["unmanaged_ticks"] = unmanaged_ticks;
  j["relocalizations"] = relocalizations;
  j["left_bounds"] = left_bounds;
  j["duration"] = duration;
  return j;
}

RoadGraph load_graph(const SimConfig& cfg) {
  if (cfg.map == "default") return build_icat_default(cfg.map_spacing);
  if (cfg.map == "merge_cycle") return build_merge_cycle(cfg.map_spacing);
  return load_map_file(cfg.map);
}

void write_trace_header(std::ostream& os) {
  os << "time,car_id,x,y,heading,v,s,d,edge,flags\n";
}

Metrics run(const SimConfig& cfg_in, const RunOutputs& out) {
  cfg_in.validate();
  SimConfig cfg = cfg_in;
  if (cfg.ideal) {
    cfg.channel = ChannelModel::ideal();
    cfg.noise.enabled = false;
  }
  auto graph = std::make_shared<const RoadGraph>(load_graph(cfg));
  const double dt = cfg.vehicle_dt;
  const long n_ticks = std::max(1L, std::lround(cfg.duration / dt));
  const long plan_every = ticks_of(cfg.planning_period, dt, "planning_period");
  const long bsm_every = ticks_of(cfg.bsm_period, dt, "bsm_period");
  const long spat_every = ticks_of(cfg.spat_period, dt, "spat_period");

  std::vector<CarRuntime> cars;
  for (auto& v : place_cars(cfg, *graph)) cars.push_back({v, std::nullopt, -1.0, false});
  std::vector<CarId> ids;
  for (const auto& c : cars) ids.push_back(c.state.car_id);

  std::vector<TrafficLight> lights;
  std::map<std::string, NodeId> light_nodes;
  for (const auto& lc : cfg.lights) {
    auto node = graph->find_node(lc.node);
    if (!node) throw ConfigError("lights." + lc.id + ".node: unknown node '" + lc.node + "'");
    TrafficLight tl{lc.id, lc.phases, lc.initial_phase, lc.offset, std::nullopt, *node};
    lights.push_back(tl);
    light_nodes[lc.id] = *node;
  }

  MessageBus bus(cfg.channel, split_seed(cfg.seed, kChannel));
  if (cfg.log_messages && out.events) bus.set_log(out.events);
  Rng noise_rng(split_seed(cfg.seed, kNoise));
  TrafficManager manager(graph, cfg.manager_params(), ids, split_seed(cfg.seed, kManager),
                         cfg.obstacles, light_nodes);

  Metrics m;
  m.duration = cfg.duration;
  m.routes_per_car.assign(cars.size(), 0);
  m.min_separation = std::numeric_limits<double>::infinity();
  const double d_safe = cfg.separation.d_safe;
  auto [lo, hi] = graph->bounds();
  lo = lo - Vec2{1.0, 1.0};
  hi = hi + Vec2{1.0, 1.0};

  std::set<std::pair<CarId, CarId>> violating;
  std::optional<double> slow_since;
  bool deadlocked = false;
  double speed_sum = 0.0;
  std::uint64_t speed_samples = 0;
  double xte_straight = 0.0, xte_curve = 0.0;
  std::uint64_t n_straight = 0, n_curve = 0;
  std::int64_t delay_ticks = 0;
  std::vector<std::size_t> preempt_done(cfg.preemptions.size(), 0);
  const std::string mode_flag = to_string(cfg.mode) + (cfg.ideal ? "+ideal" : "");

  if (out.trace) write_trace_header(*out.trace);
  auto event = [&](const nlohmann::json& j) {
    if (out.events) *out.events << j.dump() << '\n';
  };

  auto dispatch = [&](double now) {
    for (auto& msg : bus.deliver(now)) {
      switch (msg.kind) {
        case MessageKind::BSM:
        case MessageKind::SPaT:
          manager.on_message(msg);
          break;
        case MessageKind::TrajectoryCmd: {
          auto& cmd = std::get<TrajectoryCmdPayload>(msg.payload);
          for (auto& c : cars) {
            if (c.state.car_id != cmd.trajectory.car_id) continue;
            if (msg.created > c.traj_created) {
              c.traj = std::move(cmd.trajectory);
              c.traj_created = msg.created;
              c.applied = false;
            }
          }
          break;
        }
        case MessageKind::Preemption: {
          const auto& p = std::get<PreemptionPayload>(msg.payload);
          for (auto& l : lights)
            if (l.light_id == p.light_id) l = preempt(l, p.requested);
          break;
        }
        case MessageKind::MAP:
          break;
      }
    }
  };

  for (long n = 0; n < n_ticks; ++n) {
    const double now = static_cast<double>(n) * dt;

    // Lights and infrastructure messages.
    if (n > 0)
      for (auto& l : lights) l = light_step(l, dt);
    for (std::size_t i = 0; i < cfg.preemptions.size(); ++i) {
      const auto& p = cfg.preemptions[i];
      if (preempt_done[i] || now + 1e-9 < p.time) continue;
      preempt_done[i] = 1;
      V2XMessage msg;
      msg.sender = "emergency";
      msg.created = now;
      msg.payload = PreemptionPayload{p.light, p.requested};
      bus.broadcast(std::move(msg), now);
    }
    if (n % spat_every == 0) {
      for (const auto& l : lights) {
        V2XMessage msg;
        msg.sender = l.light_id;
        msg.created = now;
        msg.payload = spat_of(l);
        bus.broadcast(std::move(msg), now);
      }
    }

    // Observe the state at `now`.
    bool all_slow = true;
    for (std::size_t i = 0; i < cars.size(); ++i) {
      const auto& c = cars[i];
      const Vec2 p = c.state.position();
      speed_sum += c.state.v;
      ++speed_samples;
      if (c.state.v >= cfg.deadlock_speed) all_slow = false;
      if (p.x < lo.x || p.y < lo.y || p.x > hi.x || p.y > hi.y) m.left_bounds = true;
      if (c.traj) {
        bool arc = false;
        const double e = polyline_distance(*c.traj, p, &arc, *graph);
        m.max_cross_track = std::max(m.max_cross_track, e);
        if (arc) {
          xte_curve += e;
          ++n_curve;
        } else {
          xte_straight += e;
          ++n_straight;
        }
      }
      for (std::size_t j = i + 1; j < cars.size(); ++j) {
        const double d = distance(p, cars[j].state.position());
        m.min_separation = std::min(m.min_separation, d);
        const auto key = std::make_pair(c.state.car_id, cars[j].state.car_id);
        if (d < d_safe) {
          if (violating.insert(key).second) {
            ++m.separation_violations;
            event({{"event", "separation_violation"}, {"time", now}, {"car_a", key.first},
                   {"car_b", key.second}, {"distance", d}});
          }
        } else {
          violating.erase(key);
        }
      }
      if (out.trace) {
        const auto& mc = manager.car(c.state.car_id);
        std::string s_col, d_col, edge_col;
        if (mc.path) {
          FrenetOptions opt;
          opt.hint_s = mc.s;
          if (auto pr = project_to_path(*mc.path, p, opt)) {
            s_col = fmt6(pr->s);
            d_col = fmt6(pr->d);
            edge_col = graph->edge(mc.path->edge_at(pr->s)).name;
          }
        }
        *out.trace << fmt6(now) << ',' << c.state.car_id << ',' << fmt6(c.state.x) << ','
                   << fmt6(c.state.y) << ',' << fmt6(c.state.heading) << ',' << fmt6(c.state.v)
                   << ',' << s_col << ',' << d_col << ',' << edge_col << ',' << mode_flag
                   << (c.traj ? "" : "+nocmd") << '\n';
      }
    }
    if (all_slow) {
      if (!slow_since) slow_since = now;
      if (!deadlocked && now - *slow_since > cfg.deadlock_time) {
        deadlocked = true;
        ++m.deadlock_events;
        event({{"event", "deadlock"}, {"time", now}, {"since", *slow_since}});
      }
    } else {
      slow_since.reset();
      deadlocked = false;
    }

    // Vehicles report.
    if (n % bsm_every == 0) {
      for (const auto& c : cars) {
        V2XMessage msg;
        msg.sender = "car:" + std::to_string(c.state.car_id);
        msg.created = now;
        msg.payload = BsmPayload{perturb(c.state, cfg.noise, noise_rng)};
        bus.broadcast(std::move(msg), now);
      }
    }
    dispatch(now);

    // Manager cycle.
    if (n == 0) bus.broadcast(manager.map_message(now), now);
    if (n % plan_every == 0) {
      for (auto& msg : manager.tick(now)) bus.broadcast(std::move(msg), now);
      for (const auto& r : manager.take_route_events()) {
        ++m.completed_routes;
        m.travel_times.push_back(r.travel_time);
        ++m.routes_per_car[r.car];
        event({{"event", "route_completed"}, {"time", r.time}, {"car", r.car},
               {"goal", graph->node(r.goal).name}, {"travel_time", r.travel_time}});
      }
    }
    dispatch(now);

    // Vehicle control and dynamics.
    for (auto& c : cars) {
      if (c.traj && !c.applied) {
        c.applied = true;
        ++m.commands_applied;
        delay_ticks += n - std::llround(c.traj_created / dt);
      }
      if (cfg.ideal) {
        if (!c.traj) continue;
        const TrajectoryFrame f = c.traj->sample(now + dt - c.traj->start_time);
        c.state.x = f.x;
        c.state.y = f.y;
        c.state.heading = f.heading;
        c.state.v = f.v;
        continue;
      }
      Control u;
      if (c.traj) {
        u = pure_pursuit(c.state, *c.traj, cfg.lookahead, cfg.pursuit);
      } else {
        u.accel = std::clamp(-cfg.pursuit.k_v * c.state.v, cfg.pursuit.a_min, cfg.pursuit.a_max);
      }
      c.state = step(c.state, u, dt);
    }
  }

  m.throughput = static_cast<double>(m.completed_routes) / (cfg.duration / 60.0);
  m.mean_speed = speed_samples ? speed_sum / static_cast<double>(speed_samples) : 0.0;
  m.cross_track_straight = n_straight ? xte_straight / static_cast<double>(n_straight) : 0.0;
  m.cross_track_curve = n_curve ? xte_curve / static_cast<double>(n_curve) : 0.0;
  m.mean_response_delay =
      m.commands_applied
          ? static_cast<double>(delay_ticks) * dt / static_cast<double>(m.commands_applied)
          : 0.0;
  const auto& st = bus.stats();
  m.message_stats = {st.sent, st.delivered, st.dropped, st.mean_latency()};
  m.unmanaged_ticks = manager.unmanaged_ticks();
  m.relocalizations = manager.relocalizations();
  return m;
}

LagReport lag_experiment(const SimConfig& cfg, const std::vector<double>& latencies) {
  for (double l : latencies)
    if (!(l >= 0.0)) throw ConfigError("latency values must be >= 0");
  LagReport report;
  for (double l : latencies) {
    SimConfig c = cfg;
    c.ideal = false;
    c.channel = {l, 0.0, 0.0};
    const Metrics m = run(c);
    report.rows.push_back({l, m.mean_response_delay, m.min_separation});
  }
  for (std::size_t i = 1; i < report.rows.size(); ++i)
    if (!(report.rows[i].mean_response_delay > report.rows[i - 1].mean_response_delay))
      report.strictly_increasing = false;
  return report;
}

}  // namespace icat
