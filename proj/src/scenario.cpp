#include "icat/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace icat {

namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }
  ~Reader() = default;

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(field(key) + ": expected a boolean");
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned()) throw ConfigError(field(key) + ": expected a non-negative integer");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
    }
    out = v.get<T>();
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()) + ": unknown key");
  }

 private:
  std::string where() const { return path_.empty() ? "scenario" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const json& require_array(const json* j, const std::string& path) {
  if (!j->is_array()) throw ConfigError(path + ": expected an array");
  return *j;
}

LightState parse_light_state(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path + ": expected a light state string");
  auto s = light_state_from_string(v.get<std::string>());
  if (!s) throw ConfigError(path + ": unknown light state '" + v.get<std::string>() + "'");
  return *s;
}

}  // namespace

SimConfig scenario_from_json(const json& doc, const std::string& base_dir) {
  SimConfig cfg;
  Reader r(doc, "");
  r.get("seed", cfg.seed);
  r.get("duration", cfg.duration);
  r.get("vehicle_dt", cfg.vehicle_dt);
  r.get("planning_period", cfg.planning_period);
  r.get("bsm_period", cfg.bsm_period);
  r.get("spat_period", cfg.spat_period);
  r.get("ideal", cfg.ideal);
  r.get("planning_margin", cfg.planning_margin);
  r.get("lookahead", cfg.lookahead);
  r.get("map_spacing", cfg.map_spacing);
  r.get("workers", cfg.workers);
  r.get("log_messages", cfg.log_messages);
  r.get("deadlock_speed", cfg.deadlock_speed);
  r.get("deadlock_time", cfg.deadlock_time);
  r.get("fifo_zone_radius", cfg.fifo_zone_radius);
  r.get("fifo_check_margin", cfg.fifo_check_margin);

  std::string mode = to_string(cfg.mode);
  r.get("mode", mode);
  auto m = manager_mode_from_string(mode);
  if (!m) throw ConfigError("mode: expected 'optimized' or 'fifo_baseline'");
  cfg.mode = *m;

  r.get("map", cfg.map);
  if (cfg.map != "default" && cfg.map != "merge_cycle" && !base_dir.empty()) {
    std::filesystem::path p(cfg.map);
    if (p.is_relative()) cfg.map = (std::filesystem::path(base_dir) / p).string();
  }

  if (const json* c = r.child("channel")) {
    Reader cr(*c, "channel");
    cr.get("base_latency", cfg.channel.base_latency);
    cr.get("jitter_sigma", cfg.channel.jitter_sigma);
    cr.get("drop_prob", cfg.channel.drop_prob);
    cr.finish();
  }
  if (const json* c = r.child("noise")) {
    Reader nr(*c, "noise");
    nr.get("pos_sigma", cfg.noise.pos_sigma);
    nr.get("heading_sigma", cfg.noise.heading_sigma);
    nr.get("enabled", cfg.noise.enabled);
    nr.finish();
  }
  if (const json* c = r.child("planner")) {
    Reader pr(*c, "planner");
    auto& p = cfg.planner;
    pr.get("horizon", p.horizon);
    pr.get("dt", p.dt);
    pr.get("a_max", p.a_max);
    pr.get("a_min", p.a_min);
    pr.get("standstill_gap", p.standstill_gap);
    pr.get("time_headway", p.time_headway);
    pr.get("cruise_speed_cap", p.cruise_speed_cap);
    pr.get("lateral_time", p.lateral_time);
    pr.get("obstacle_corridor", p.obstacle_corridor);
    pr.finish();
  }
  if (const json* c = r.child("separation")) {
    Reader sr(*c, "separation");
    sr.get("d_safe", cfg.separation.d_safe);
    sr.get("max_rounds", cfg.separation.max_rounds);
    std::string rule = to_string(cfg.separation.priority_rule);
    sr.get("priority_rule", rule);
    if (rule == "earlier_arrival") cfg.separation.priority_rule = PriorityRule::earlier_arrival;
    else if (rule == "lower_id") cfg.separation.priority_rule = PriorityRule::lower_id;
    else throw ConfigError("separation.priority_rule: expected 'earlier_arrival' or 'lower_id'");
    sr.finish();
  }
  if (const json* c = r.child("pursuit")) {
    Reader pr(*c, "pursuit");
    pr.get("k_v", cfg.pursuit.k_v);
    pr.get("a_min", cfg.pursuit.a_min);
    pr.get("a_max", cfg.pursuit.a_max);
    pr.finish();
  }
  if (const json* c = r.child("vehicle")) {
    Reader vr(*c, "vehicle");
    vr.get("wheelbase", cfg.vehicle.wheelbase);
    vr.get("length", cfg.vehicle.length);
    vr.get("width", cfg.vehicle.width);
    vr.get("steer_max", cfg.vehicle.steer_max);
    vr.finish();
  }

  bool n_given = doc.contains("n_cars");
  r.get("n_cars", cfg.n_cars);
  if (const json* c = r.child("initial_cars")) {
    const json& arr = require_array(c, "initial_cars");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Reader ir(arr[i], "initial_cars[" + std::to_string(i) + "]");
      InitialCar ic;
      ir.get("edge", ic.edge);
      ir.get("offset", ic.offset);
      ir.get("speed", ic.speed);
      if (ic.edge.empty()) throw ConfigError(ir.field("edge") + ": required");
      ir.finish();
      cfg.initial_cars.push_back(ic);
    }
    if (!n_given) cfg.n_cars = static_cast<int>(cfg.initial_cars.size());
  }
  if (const json* c = r.child("lights")) {
    const json& arr = require_array(c, "lights");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "lights[" + std::to_string(i) + "]";
      Reader lr(arr[i], path);
      LightConfig lc;
      lr.get("id", lc.id);
      lr.get("node", lc.node);
      lr.get("initial_phase", lc.initial_phase);
      lr.get("offset", lc.offset);
      if (const json* ph = lr.child("phases")) {
        const json& phases = require_array(ph, path + ".phases");
        for (std::size_t k = 0; k < phases.size(); ++k) {
          const std::string pp = path + ".phases[" + std::to_string(k) + "]";
          Reader phr(phases[k], pp);
          LightPhase phase;
          if (const json* st = phr.child("state")) phase.state = parse_light_state(*st, pp + ".state");
          phr.get("duration", phase.duration);
          phr.finish();
          lc.phases.push_back(phase);
        }
      }
      lr.finish();
      if (lc.id.empty()) throw ConfigError(path + ".id: required");
      cfg.lights.push_back(lc);
    }
  }
  if (const json* c = r.child("obstacles")) {
    const json& arr = require_array(c, "obstacles");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Reader orr(arr[i], "obstacles[" + std::to_string(i) + "]");
      Obstacle o;
      orr.get("x", o.position.x);
      orr.get("y", o.position.y);
      orr.get("radius", o.radius);
      std::string kind = "static";
      orr.get("kind", kind);
      if (kind == "static") o.kind = ObstacleKind::static_obstacle;
      else if (kind == "construction_zone") o.kind = ObstacleKind::construction_zone;
      else throw ConfigError(orr.field("kind") + ": expected 'static' or 'construction_zone'");
      orr.finish();
      cfg.obstacles.push_back(o);
    }
  }
  if (const json* c = r.child("preemptions")) {
    const json& arr = require_array(c, "preemptions");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "preemptions[" + std::to_string(i) + "]";
      Reader pr(arr[i], path);
      PreemptionEvent ev;
      pr.get("time", ev.time);
      pr.get("light", ev.light);
      if (const json* st = pr.child("requested")) ev.requested = parse_light_state(*st, path + ".requested");
      pr.finish();
      cfg.preemptions.push_back(ev);
    }
  }
  r.finish();
  cfg.validate();
  return cfg;
}

nlohmann::json scenario_to_json(const SimConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["duration"] = cfg.duration;
  j["vehicle_dt"] = cfg.vehicle_dt;
  j["planning_period"] = cfg.planning_period;
  j["bsm_period"] = cfg.bsm_period;
  j["spat_period"] = cfg.spat_period;
  j["n_cars"] = cfg.n_cars;
  j["mode"] = to_string(cfg.mode);
  j["ideal"] = cfg.ideal;
  j["channel"] = {{"base_latency", cfg.channel.base_latency},
                  {"jitter_sigma", cfg.channel.jitter_sigma},
                  {"drop_prob", cfg.channel.drop_prob}};
  j["noise"] = {{"pos_sigma", cfg.noise.pos_sigma},
                {"heading_sigma", cfg.noise.heading_sigma},
                {"enabled", cfg.noise.enabled}};
  const auto& p = cfg.planner;
  j["planner"] = {{"horizon", p.horizon}, {"dt", p.dt}, {"a_max", p.a_max}, {"a_min", p.a_min},
                  {"standstill_gap", p.standstill_gap}, {"time_headway", p.time_headway},
                  {"cruise_speed_cap", p.cruise_speed_cap}, {"lateral_time", p.lateral_time},
                  {"obstacle_corridor", p.obstacle_corridor}};
  j["separation"] = {{"d_safe", cfg.separation.d_safe},
                     {"priority_rule", to_string(cfg.separation.priority_rule)},
                     {"max_rounds", cfg.separation.max_rounds}};
  j["planning_margin"] = cfg.planning_margin;
  j["lookahead"] = cfg.lookahead;
  j["pursuit"] = {{"k_v", cfg.pursuit.k_v}, {"a_min", cfg.pursuit.a_min},
                  {"a_max", cfg.pursuit.a_max}};
  j["vehicle"] = {{"wheelbase", cfg.vehicle.wheelbase}, {"length", cfg.vehicle.length},
                  {"width", cfg.vehicle.width}, {"steer_max", cfg.vehicle.steer_max}};
  j["map"] = cfg.map;
  j["map_spacing"] = cfg.map_spacing;
  j["workers"] = cfg.workers;
  j["log_messages"] = cfg.log_messages;
  j["deadlock_speed"] = cfg.deadlock_speed;
  j["deadlock_time"] = cfg.deadlock_time;
  j["fifo_zone_radius"] = cfg.fifo_zone_radius;
  j["fifo_check_margin"] = cfg.fifo_check_margin;
  j["initial_cars"] = json::array();
  for (const auto& c : cfg.initial_cars)
    j["initial_cars"].push_back({{"edge", c.edge}, {"offset", c.offset}, {"speed", c.speed}});
  j["lights"] = json::array();
  for (const auto& l : cfg.lights) {
    json phases = json::array();
    for (const auto& ph : l.phases)
      phases.push_back({{"state", to_string(ph.state)}, {"duration", ph.duration}});
    j["lights"].push_back({{"id", l.id}, {"node", l.node}, {"phases", phases},
                           {"initial_phase", l.initial_phase}, {"offset", l.offset}});
  }
  j["obstacles"] = json::array();
  for (const auto& o : cfg.obstacles)
    j["obstacles"].push_back(
        {{"x", o.position.x}, {"y", o.position.y}, {"radius", o.radius},
         {"kind", o.kind == ObstacleKind::construction_zone ? "construction_zone" : "static"}});
  j["preemptions"] = json::array();
  for (const auto& e : cfg.preemptions)
    j["preemptions"].push_back(
        {{"time", e.time}, {"light", e.light}, {"requested", to_string(e.requested)}});
  return j;
}

SimConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed scenario document: " + std::string(e.what()));
  }
  return scenario_from_json(doc, std::filesystem::path(path).parent_path().string());
}

}  // namespace icat
