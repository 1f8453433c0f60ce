#include "icat/map_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace icat {

using nlohmann::json;

namespace {

constexpr double kOnGeometryTol = 1e-6;
constexpr double kSpacingTol = 1e-6;

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

struct Collector {
  std::vector<std::string>& errors;
  bool stop_on_first;
  bool full() const { return stop_on_first && !errors.empty(); }
  void add(std::string msg) {
    if (!full()) errors.push_back(std::move(msg));
  }
};

bool read_number(const json& obj, const char* key, const std::string& where, Collector& c,
                 double& out) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    c.add(where + "." + key + ": missing or not a number");
    return false;
  }
  out = obj[key].get<double>();
  if (!std::isfinite(out)) {
    c.add(where + "." + key + ": not finite");
    return false;
  }
  return true;
}

bool read_string(const json& obj, const char* key, const std::string& where, Collector& c,
                 std::string& out) {
  if (!obj.contains(key) || !obj[key].is_string()) {
    c.add(where + "." + key + ": missing or not a string");
    return false;
  }
  out = obj[key].get<std::string>();
  return true;
}

// Checks explicitly listed waypoints against the regenerated geometry.
void check_waypoints(const json& wps, const Edge& e, double spacing, const std::string& where,
                     Collector& c) {
  if (!wps.is_array() || wps.size() < 2) {
    c.add(where + ".waypoints: expected an array of at least two [x, y] points");
    return;
  }
  std::vector<double> s_values;
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const auto& p = wps[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      c.add(where + ".waypoints[" + std::to_string(i) + "]: expected [x, y]");
      return;
    }
    const Vec2 pos{p[0].get<double>(), p[1].get<double>()};
    const Projection pr = e.curve.project(pos);
    if (pr.distance > kOnGeometryTol) {
      c.add("edge '" + e.name + "': waypoint " + std::to_string(i) + " lies " +
            fmt_num(pr.distance) + " m off its geometry");
      return;
    }
    s_values.push_back(pr.s);
  }
  const Vec2 first{wps.front()[0].get<double>(), wps.front()[1].get<double>()};
  const Vec2 last{wps.back()[0].get<double>(), wps.back()[1].get<double>()};
  if (distance(first, e.curve.start()) > 1e-9)
    c.add("edge '" + e.name + "': first waypoint does not coincide with from-node");
  if (distance(last, e.curve.point_at(e.length())) > 1e-9)
    c.add("edge '" + e.name + "': last waypoint does not coincide with to-node");
  for (std::size_t i = 1; i < s_values.size(); ++i) {
    const double gap = s_values[i] - s_values[i - 1];
    const bool final_gap = i + 1 == s_values.size();
    const bool ok = final_gap ? (gap > 0.0 && gap <= spacing + kSpacingTol)
                              : std::abs(gap - spacing) <= kSpacingTol;
    if (!ok) {
      c.add("edge '" + e.name + "': waypoint spacing " + fmt_num(gap) + " m between points " +
            std::to_string(i - 1) + " and " + std::to_string(i) + " (expected " +
            fmt_num(spacing) + " m)");
      return;
    }
  }
}

std::optional<RoadGraph> parse(const json& doc, Collector& c, MapReport* report) {
  if (!doc.is_object()) {
    c.add("document: expected a JSON object");
    return std::nullopt;
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "nodes" && key != "edges" && key != "spacing_m") c.add("document: unknown key '" + key + "'");
  }
  double spacing = 0.0;
  if (read_number(doc, "spacing_m", "document", c, spacing) && !(spacing > 0.0))
    c.add("document.spacing_m: must be positive");
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) c.add("document.nodes: missing array");
  if (!doc.contains("edges") || !doc["edges"].is_array()) c.add("document.edges: missing array");
  if (c.full() || !doc.contains("nodes") || !doc.contains("edges") || !doc["nodes"].is_array() ||
      !doc["edges"].is_array())
    return std::nullopt;

  GraphBuilder b;
  std::unordered_map<std::string, NodeId> ids;
  const auto& nodes = doc["nodes"];
  for (std::size_t i = 0; i < nodes.size() && !c.full(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const auto& n = nodes[i];
    if (!n.is_object()) {
      c.add(where + ": expected an object");
      continue;
    }
    std::string id;
    double x = 0.0;
    double y = 0.0;
    bool ok = read_string(n, "id", where, c, id);
    ok = read_number(n, "x", where, c, x) && ok;
    ok = read_number(n, "y", where, c, y) && ok;
    NodeKind kind = NodeKind::lane_point;
    if (n.contains("kind")) {
      auto k = n["kind"].is_string() ? node_kind_from_string(n["kind"].get<std::string>())
                                     : std::nullopt;
      if (!k) {
        c.add(where + ".kind: unknown node kind");
        ok = false;
      } else {
        kind = *k;
      }
    }
    if (!ok) continue;
    if (ids.contains(id)) {
      c.add("node '" + id + "': duplicate id");
      continue;
    }
    ids[id] = b.add_node(id, {x, y}, kind);
  }

  std::set<std::string> edge_names;
  std::vector<std::pair<std::string, const json*>> explicit_waypoints;
  const auto& edges = doc["edges"];
  for (std::size_t i = 0; i < edges.size() && !c.full(); ++i) {
    const std::string where = "edges[" + std::to_string(i) + "]";
    const auto& e = edges[i];
    if (!e.is_object()) {
      c.add(where + ": expected an object");
      continue;
    }
    std::string id;
    std::string from;
    std::string to;
    double limit = 0.0;
    bool ok = read_string(e, "id", where, c, id);
    ok = read_string(e, "from", where, c, from) && ok;
    ok = read_string(e, "to", where, c, to) && ok;
    ok = read_number(e, "speed_limit", where, c, limit) && ok;
    if (!ok) continue;
    const std::string ename = "edge '" + id + "'";
    if (!edge_names.insert(id).second) {
      c.add(ename + ": duplicate id");
      continue;
    }
    if (!ids.contains(from)) {
      c.add(ename + ": from-node '" + from + "' does not exist");
      continue;
    }
    if (!ids.contains(to)) {
      c.add(ename + ": to-node '" + to + "' does not exist");
      continue;
    }
    if (!(limit > 0.0)) {
      c.add(ename + ": speed_limit must be positive");
      continue;
    }
    EdgeGeometry geometry = StraightGeometry{};
    const json* g = e.contains("geometry") ? &e["geometry"] : nullptr;
    if (!g || !g->is_object() || !g->contains("type") || !(*g)["type"].is_string()) {
      c.add(where + ".geometry: expected an object with a 'type'");
      continue;
    }
    const std::string type = (*g)["type"].get<std::string>();
    if (type == "arc") {
      ArcGeometry arc;
      double cx = 0.0;
      double cy = 0.0;
      const std::string gw = where + ".geometry";
      bool gok = read_number(*g, "cx", gw, c, cx);
      gok = read_number(*g, "cy", gw, c, cy) && gok;
      gok = read_number(*g, "radius", gw, c, arc.radius) && gok;
      if (!g->contains("clockwise") || !(*g)["clockwise"].is_boolean()) {
        c.add(gw + ".clockwise: missing or not a boolean");
        gok = false;
      }
      if (!gok) continue;
      arc.center = {cx, cy};
      arc.clockwise = (*g)["clockwise"].get<bool>();
      geometry = arc;
    } else if (type != "straight") {
      c.add(where + ".geometry.type: unknown geometry '" + type + "'");
      continue;
    }
    b.add_edge(id, ids[from], ids[to], geometry, limit);
    if (e.contains("waypoints")) explicit_waypoints.emplace_back(id, &e["waypoints"]);
  }
  if (c.full() || !(spacing > 0.0)) return std::nullopt;

  std::optional<RoadGraph> graph;
  try {
    graph = b.build(spacing);
  } catch (const InvalidParameter& ex) {
    c.add(ex.what());
    return std::nullopt;
  }
  for (const auto& [name, wps] : explicit_waypoints) {
    if (c.full()) break;
    const Edge& edge = graph->edge(*graph->find_edge(name));
    check_waypoints(*wps, edge, spacing, "edge '" + name + "'", c);
  }
  if (report) {
    report->node_count = graph->nodes().size();
    report->edge_count = graph->edges().size();
    report->strongly_connected = strongly_connected(*graph);
  }
  return graph;
}

}  // namespace

MapReport validate_map(const json& doc) {
  MapReport report;
  Collector c{report.errors, false};
  parse(doc, c, &report);
  return report;
}

RoadGraph load_map(const json& doc) {
  std::vector<std::string> errors;
  Collector c{errors, true};
  auto g = parse(doc, c, nullptr);
  if (!errors.empty()) throw MapFormatError(errors.front());
  if (!g) throw MapFormatError("map could not be parsed");
  return std::move(*g);
}

RoadGraph load_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& ex) {
    throw MapFormatError(path + ": " + ex.what());
  }
  return load_map(doc);
}

json map_to_json(const RoadGraph& graph) {
  json nodes = json::array();
  for (const auto& n : graph.nodes())
    nodes.push_back({{"id", n.name}, {"x", n.position.x}, {"y", n.position.y},
                     {"kind", to_string(n.kind)}});
  json edges = json::array();
  for (const auto& e : graph.edges()) {
    json geometry;
    if (const auto* arc = std::get_if<ArcGeometry>(&e.geometry)) {
      geometry = {{"type", "arc"}, {"cx", arc->center.x}, {"cy", arc->center.y},
                  {"radius", arc->radius}, {"clockwise", arc->clockwise}};
    } else {
      geometry = {{"type", "straight"}};
    }
    json wps = json::array();
    for (const auto& w : e.waypoints) wps.push_back({w.position.x, w.position.y});
    edges.push_back({{"id", e.name}, {"from", graph.node(e.from).name},
                     {"to", graph.node(e.to).name}, {"geometry", geometry},
                     {"speed_limit", e.speed_limit}, {"waypoints", wps}});
  }
  return {{"spacing_m", graph.spacing()}, {"nodes", nodes}, {"edges", edges}};
}

}  // namespace icat
