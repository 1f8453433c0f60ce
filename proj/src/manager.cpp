#include "icat/manager.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace icat {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

double lookahead_speed_limit(const Path& path, double s, double reach) {
  double limit = path.speed_limit_at(s);
  for (std::size_t k = path.segment_index_at(s); k < path.segments.size(); ++k) {
    const auto& seg = path.segments[k];
    if (seg.s_start > s + reach) break;
    limit = std::min(limit, seg.speed_limit);
  }
  return limit;
}

}  // namespace

std::string to_string(ManagerMode m) {
  return m == ManagerMode::fifo_baseline ? "fifo_baseline" : "optimized";
}

std::optional<ManagerMode> manager_mode_from_string(const std::string& s) {
  if (s == "optimized") return ManagerMode::optimized;
  if (s == "fifo_baseline" || s == "fifo") return ManagerMode::fifo_baseline;
  return std::nullopt;
}

void ManagerParams::validate() const {
  planner.validate();
  if (!(planning_margin >= 0.0)) throw InvalidParameter("manager.planning_margin must be >= 0");
  if (!(goal_tolerance > 0.0)) throw InvalidParameter("manager.goal_tolerance must be > 0");
  if (!(extend_margin > 0.0)) throw InvalidParameter("manager.extend_margin must be > 0");
  if (!(leader_lateral > 0.0 && leader_range > 0.0))
    throw InvalidParameter("manager leader window must be positive");
  if (!(fifo_zone_radius > 0.0)) throw InvalidParameter("fifo_zone_radius must be > 0");
  if (!(fifo_check_margin >= 0.0)) throw InvalidParameter("fifo_check_margin must be >= 0");
  if (workers < 1) throw InvalidParameter("workers must be >= 1");
}

std::optional<std::pair<EdgeId, double>> locate_on_graph(const RoadGraph& graph, Vec2 position,
                                                         double heading) {
  std::optional<std::pair<EdgeId, double>> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& e : graph.edges()) {
    const Projection pr = e.curve.project(position);
    if (std::abs(wrap_angle(e.curve.heading_at(pr.s) - heading)) >= 0.5 * kPi) continue;
    if (pr.distance < best_dist - 1e-12) {
      best_dist = pr.distance;
      best = std::make_pair(e.id, pr.s);
    }
  }
  return best;
}

TrafficManager::TrafficManager(std::shared_ptr<const RoadGraph> graph, ManagerParams params,
                               const std::vector<CarId>& cars, std::uint64_t seed,
                               std::vector<Obstacle> obstacles,
                               std::map<std::string, NodeId> light_stop_nodes)
    : graph_(std::move(graph)),
      params_(std::move(params)),
      obstacles_(std::move(obstacles)),
      light_nodes_(std::move(light_stop_nodes)) {
  params_.validate();
  std::vector<CarId> ids = cars;
  std::sort(ids.begin(), ids.end());
  for (CarId id : ids) {
    ManagedCar c;
    c.id = id;
    // Per-car route streams keep goal sequences identical across modes.
    c.rng.seed(split_seed(seed, 1000 + id));
    index_[id] = cars_.size();
    cars_.push_back(std::move(c));
  }
  if (params_.mode == ManagerMode::fifo_baseline)
    gate_.emplace(fifo_zones(*graph_, params_.fifo_zone_radius), params_.fifo_check_margin);
}

const ManagedCar& TrafficManager::car(CarId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw InvalidParameter("unknown car id " + std::to_string(id));
  return cars_[it->second];
}

std::vector<RouteEvent> TrafficManager::take_route_events() {
  std::vector<RouteEvent> out;
  out.swap(route_events_);
  return out;
}

void TrafficManager::on_message(const V2XMessage& msg) {
  if (const auto* bsm = std::get_if<BsmPayload>(&msg.payload)) {
    auto it = index_.find(bsm->state.car_id);
    if (it == index_.end()) return;
    auto& c = cars_[it->second];
    if (!c.bsm || msg.created >= c.bsm_created) {
      c.bsm = bsm->state;
      c.bsm_created = msg.created;
    }
  } else if (const auto* spat = std::get_if<SpatPayload>(&msg.payload)) {
    spat_[spat->light_id] = *spat;
  }
}

V2XMessage TrafficManager::map_message(double now) const {
  MapPayload m;
  m.node_count = graph_->nodes().size();
  m.edge_count = graph_->edges().size();
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& n : graph_->nodes()) {
    h = fnv1a(h, n.name.data(), n.name.size());
    h = fnv1a(h, &n.position.x, sizeof(double));
    h = fnv1a(h, &n.position.y, sizeof(double));
  }
  for (const auto& e : graph_->edges()) {
    h = fnv1a(h, e.name.data(), e.name.size());
    h = fnv1a(h, &e.from.value, sizeof(e.from.value));
    h = fnv1a(h, &e.to.value, sizeof(e.to.value));
  }
  m.digest = h;
  V2XMessage msg;
  msg.sender = "manager";
  msg.payload = m;
  msg.kind = MessageKind::MAP;
  msg.created = now;
  return msg;
}

void TrafficManager::extend(ManagedCar& car) {
  const Path& old = *car.path;
  const NodeId last = graph_->edge(old.edges.back()).to;
  Path route;
  NodeId goal = last;
  for (int attempt = 0; attempt < 8; ++attempt) {
    goal = random_goal(*graph_, last, car.rng);
    try {
      route = a_star(*graph_, last, goal);
      break;
    } catch (const NoRoute&) {
      route = Path{};
    }
  }
  if (route.empty()) return;
  const std::size_t cur = old.segment_index_at(car.s);
  const double shift = old.segments[cur].s_start;
  std::vector<EdgeId> edges(old.edges.begin() + static_cast<long>(cur), old.edges.end());
  edges.insert(edges.end(), route.edges.begin(), route.edges.end());
  auto path = std::make_shared<const Path>(make_path(*graph_, edges));
  car.s -= shift;
  for (auto& g : car.goals) g.s -= shift;
  car.goals.push_back({goal, path->total_length});
  car.path = std::move(path);
}

void TrafficManager::relocalize(ManagedCar& car, const Estimate& e, double now) {
  auto loc = locate_on_graph(*graph_, e.position, e.heading);
  if (!loc) {
    car.path.reset();
    return;
  }
  car.path = std::make_shared<const Path>(make_path(*graph_, {loc->first}));
  car.s = loc->second;
  car.goals.clear();
  car.route_start = now;
  for (int i = 0; i < 8 && car.path->total_length - car.s < params_.extend_margin; ++i)
    extend(car);
}

std::vector<Obstacle> TrafficManager::light_obstacles(const Path& path,
                                                      const FrenetState& fs) const {
  std::vector<Obstacle> out;
  for (const auto& [id, spat] : spat_) {
    if (spat.state == LightState::green) continue;
    auto node = light_nodes_.find(id);
    if (node == light_nodes_.end()) continue;
    const Vec2 line = graph_->node(node->second).position;
    FrenetOptions opt;
    opt.corridor = 0.5;
    opt.hint_s = fs.s;
    auto pr = project_to_path(path, line, opt);
    if (!pr || pr->s <= fs.s) continue;
    if (spat.state == LightState::yellow) {
      const double room = pr->s - 0.05 - params_.planner.standstill_gap - fs.s;
      if (room < min_stop_distance(std::max(fs.s_dot, 0.0), params_.planner)) continue;
    }
    out.push_back({line, 0.05, ObstacleKind::static_obstacle});
  }
  return out;
}

std::optional<std::pair<std::size_t, double>> TrafficManager::current_box(const Path& path,
                                                                         double s) const {
  for (std::size_t k = path.segment_index_at(s) + 1; k-- > 0;) {
    const auto& seg = path.segments[k];
    const double end = seg.s_start + seg.curve.length() + params_.box_clearance;
    if (end < s) break;
    if (graph_->node(graph_->edge(seg.edge).from).kind == NodeKind::intersection_entry)
      return std::pair{k, end};
  }
  return std::nullopt;
}

bool TrafficManager::box_occupied(const Path& path, std::size_t k, CarId self,
                                  const std::vector<Snapshot>& snapshot) const {
  const auto& seg = path.segments[k];
  const NodeId entry = graph_->edge(seg.edge).from;
  const double d_plan = params_.separation.d_safe + params_.planning_margin;
  const double len = seg.curve.length();
  constexpr double kStep = 0.25;
  for (const auto& o : snapshot) {
    if (o.id == self || !o.path || !o.box) continue;
    const auto& oseg = o.path->segments[o.box->first];
    if (graph_->edge(oseg.edge).from == entry) continue;  // same approach: car following
    const PathStretch st{o.path, o.s, o.box->second};
    for (double u = 0.0; u <= len + 1e-9; u += kStep) {
      if (distance_to_stretch(st, path.pose_at(seg.s_start + u).position) < d_plan) return true;
    }
  }
  return false;
}

TrafficManager::PlanResult TrafficManager::plan_car(ManagedCar& car,
                                                    const std::vector<Estimate>& est,
                                                    const std::vector<Snapshot>& snapshot,
                                                    double now) {
  PlanResult res;
  const Estimate& e = est[index_.at(car.id)];
  if (!e.known) return res;
  const PlannerParams& pp = params_.planner;

  if (!car.path) {
    relocalize(car, e, now);
    res.relocalized = true;
  }
  if (!car.path) return res;
  FrenetOptions opt;
  opt.hint_s = car.s;
  auto proj = project_to_path(*car.path, e.position, opt);
  if (!proj) {
    // Off the corridor: the path is no longer valid.
    relocalize(car, e, now);
    res.relocalized = true;
    if (!car.path) return res;
    opt.hint_s = car.s;
    proj = project_to_path(*car.path, e.position, opt);
    if (!proj) return res;
  }
  car.s = proj->s;

  while (!car.goals.empty() && car.goals.front().s - car.s <= params_.goal_tolerance) {
    res.routes.push_back({car.id, car.goals.front().node, now, now - car.route_start});
    car.route_start = now;
    car.goals.erase(car.goals.begin());
  }
  for (int i = 0; i < 8 && car.path->total_length - car.s < params_.extend_margin; ++i) {
    const double before = car.path->total_length - car.s;
    extend(car);
    if (car.path->total_length - car.s <= before) break;
  }
  const Path& path = *car.path;

  const double tangent = path.pose_at(car.s).heading;
  const double dtheta = wrap_angle(e.heading - tangent);
  FrenetState fs;
  fs.s = car.s;
  fs.d = proj->d;
  fs.s_dot = e.v * std::cos(dtheta);
  fs.d_dot = e.v * std::sin(dtheta);

  std::optional<FrenetState> leader;
  for (std::size_t j = 0; j < cars_.size(); ++j) {
    if (cars_[j].id == car.id || !est[j].known) continue;
    FrenetOptions lo;
    lo.corridor = params_.leader_lateral;
    lo.hint_s = car.s + 0.5 * params_.leader_range;
    lo.window = 0.5 * params_.leader_range + 1.0;
    auto pj = project_to_path(path, est[j].position, lo);
    if (!pj || pj->s <= car.s + 1e-6 || pj->s - car.s > params_.leader_range) continue;
    if (leader && leader->s <= pj->s) continue;
    FrenetState l;
    l.s = pj->s;
    l.d = pj->d;
    const double dth = wrap_angle(est[j].heading - path.pose_at(pj->s).heading);
    l.s_dot = est[j].v * std::cos(dth);
    leader = l;
  }

  std::vector<Obstacle> obstacles = obstacles_;
  for (auto& o : light_obstacles(path, fs)) obstacles.push_back(o);

  // Intersection boxes ahead that the car has not entered.
  std::vector<std::pair<double, double>> keep_clear;
  std::optional<std::size_t> next_box;
  for (std::size_t k = path.segment_index_at(car.s); k < path.segments.size(); ++k) {
    const auto& seg = path.segments[k];
    if (seg.s_start > car.s + params_.extend_margin) break;
    if (seg.s_start <= car.s) continue;
    if (graph_->node(graph_->edge(seg.edge).from).kind != NodeKind::intersection_entry) continue;
    if (!next_box) next_box = k;
    keep_clear.emplace_back(seg.s_start - 0.1,
                            seg.s_start + seg.curve.length() + params_.box_clearance);
  }

  const auto box = current_box(path, car.s);
  const bool in_box = box.has_value();
  if (!in_box) car.box_since.reset();
  else if (!car.box_since) car.box_since = now;

  const double limit = lookahead_speed_limit(path, car.s, std::max(2.0, e.v * 2.0));
  LongitudinalTarget target = plan_target(path, fs, pp, leader, obstacles, limit);
  for (const auto& [lo, hi] : keep_clear) {
    if (target.s1 > lo && target.s1 < hi && target.v1 < kKeepClearSpeed) {
      target = {std::max(lo, fs.s), 0.0, 0.0, target.leader_bound};
      break;
    }
  }
  if (next_box && !gate_ && box_occupied(path, *next_box, car.id, snapshot)) {
    const double lo = keep_clear.front().first;
    if (target.s1 > lo && lo - fs.s >= min_stop_distance(std::max(fs.s_dot, 0.0), pp))
      target = {std::max(lo, fs.s), 0.0, 0.0, target.leader_bound};
  }
  const double v_max = std::min(limit, pp.cruise_speed_cap);
  const LongitudinalProfile profile =
      longitudinal_profile(fs.s, fs.s_dot, 0.0, target.s1, target.v1, pp, v_max);
  res.traj = build_trajectory(path, fs, profile, pp, limit, car.id, now);
  res.ctx.car_id = car.id;
  res.ctx.path = car.path;
  res.ctx.fs = fs;
  res.ctx.speed_limit = limit;
  res.ctx.target = target;
  res.ctx.start_time = now;
  res.ctx.keep_clear = std::move(keep_clear);
  if (car.box_since) res.ctx.priority = *car.box_since;
  res.ok = true;
  return res;
}

std::vector<V2XMessage> TrafficManager::tick(double now) {
  std::vector<Estimate> est(cars_.size());
  for (std::size_t i = 0; i < cars_.size(); ++i) {
    const auto& c = cars_[i];
    if (!c.bsm) continue;
    // Dead-reckon the last snapshot to the current time.
    const double age = std::max(0.0, now - c.bsm_created);
    est[i].known = true;
    est[i].heading = c.bsm->heading;
    est[i].v = c.bsm->v;
    est[i].position = c.bsm->position() + unit_from_heading(c.bsm->heading) * (c.bsm->v * age);
  }

  std::vector<Snapshot> snapshot;
  for (const auto& c : cars_) {
    Snapshot sn{c.id, c.path, c.s, std::nullopt};
    if (c.path && c.box_since) sn.box = current_box(*c.path, c.s);
    snapshot.push_back(std::move(sn));
  }

  std::vector<PlanResult> results(cars_.size());
  const auto workers = static_cast<std::size_t>(params_.workers);
  if (workers <= 1 || cars_.size() < 2) {
    for (std::size_t i = 0; i < cars_.size(); ++i) results[i] = plan_car(cars_[i], est, snapshot, now);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < cars_.size(); i += workers)
            results[i] = plan_car(cars_[i], est, snapshot, now);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<PlanContext> contexts;
  std::vector<Trajectory> trajs;
  for (std::size_t i = 0; i < cars_.size(); ++i) {
    auto& r = results[i];
    if (r.relocalized) ++relocalizations_;
    for (auto& ev : r.routes) route_events_.push_back(ev);
    if (!r.ok) {
      ++unmanaged_ticks_;
      continue;
    }
    contexts.push_back(r.ctx);
    trajs.push_back(std::move(r.traj));
  }

  const PlannerParams& pp = params_.planner;
  if (gate_) {
    std::vector<FifoCar> fc;
    for (const auto& ctx : contexts) {
      const auto i = index_.at(ctx.car_id);
      fc.push_back({ctx.car_id, est[i].position, ctx.path, ctx.fs.s});
    }
    const auto cmds = gate_->update(fc, now);
    for (std::size_t k = 0; k < cmds.size(); ++k) {
      if (cmds[k].go || !cmds[k].hold_s) continue;
      auto& ctx = contexts[k];
      const double hold = *cmds[k].hold_s;
      if (hold >= ctx.target.s1) continue;
      ctx.target = {std::max(hold, ctx.fs.s), 0.0, 0.0, false};
      const double v_max = std::min(ctx.speed_limit, pp.cruise_speed_cap);
      const auto profile = longitudinal_profile(ctx.fs.s, ctx.fs.s_dot, 0.0, ctx.target.s1, 0.0,
                                                pp, v_max);
      trajs[k] = build_trajectory(*ctx.path, ctx.fs, profile, pp, ctx.speed_limit, ctx.car_id,
                                  now);
    }
  } else {
    SeparationParams sp = params_.separation;
    sp.d_safe += params_.planning_margin;
    trajs = resolve_all(contexts, std::move(trajs), sp, pp);
  }

  std::vector<V2XMessage> out;
  out.reserve(trajs.size());
  for (auto& t : trajs) {
    cars_[index_.at(t.car_id)].last = t;
    V2XMessage msg;
    msg.sender = "manager";
    msg.kind = MessageKind::TrajectoryCmd;
    msg.created = now;
    msg.payload = TrajectoryCmdPayload{std::move(t)};
    out.push_back(std::move(msg));
  }
  return out;
}

}  // namespace icat
