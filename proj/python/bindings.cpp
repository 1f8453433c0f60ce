#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "icat/engine.hpp"
#include "icat/frenet.hpp"
#include "icat/map_io.hpp"
#include "icat/planner.hpp"
#include "icat/scenario.hpp"

namespace py = pybind11;
using namespace icat;

namespace {

using Graph = std::shared_ptr<RoadGraph>;

struct RoutePath {
  Graph graph;
  Path path;
};

NodeId node_named(const RoadGraph& g, const std::string& name) {
  auto id = g.find_node(name);
  if (!id) throw InvalidParameter("unknown node '" + name + "'");
  return *id;
}

RoutePath route(const Graph& g, const std::string& from, const std::string& to) {
  return {g, a_star(*g, node_named(*g, from), node_named(*g, to))};
}

std::vector<std::string> edge_names(const RoutePath& r) {
  std::vector<std::string> out;
  for (EdgeId e : r.path.edges) out.push_back(r.graph->edge(e).name);
  return out;
}

py::tuple run_json(const std::string& scenario, const std::string& base_dir, bool trace,
                   bool events) {
  const SimConfig cfg = scenario_from_json(nlohmann::json::parse(scenario), base_dir);
  std::ostringstream t, e;
  Metrics m;
  {
    py::gil_scoped_release release;
    m = run(cfg, {trace ? &t : nullptr, events ? &e : nullptr});
  }
  return py::make_tuple(m.to_json().dump(), t.str(), e.str());
}

py::tuple lag_json(const std::string& scenario, const std::string& base_dir,
                   const std::vector<double>& latencies) {
  const SimConfig cfg = scenario_from_json(nlohmann::json::parse(scenario), base_dir);
  LagReport r;
  {
    py::gil_scoped_release release;
    r = lag_experiment(cfg, latencies);
  }
  py::list rows;
  for (const auto& row : r.rows)
    rows.append(py::make_tuple(row.latency, row.mean_response_delay, row.min_separation));
  return py::make_tuple(rows, r.strictly_increasing);
}

}  // namespace

PYBIND11_MODULE(_icat, m) {
  m.doc() = "Connected-vehicle intersection traffic simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<MapFormatError>(m, "MapFormatError", PyExc_ValueError);
  py::register_exception<NoRoute>(m, "NoRoute", PyExc_LookupError);
  py::register_exception<OffPath>(m, "OffPath", PyExc_ValueError);

  py::class_<RoadGraph, Graph>(m, "RoadGraph")
      .def_property_readonly("spacing", &RoadGraph::spacing)
      .def_property_readonly("nodes",
                             [](const RoadGraph& g) {
                               std::vector<std::string> out;
                               for (const auto& n : g.nodes()) out.push_back(n.name);
                               return out;
                             })
      .def_property_readonly("edges",
                             [](const RoadGraph& g) {
                               std::vector<std::string> out;
                               for (const auto& e : g.edges()) out.push_back(e.name);
                               return out;
                             })
      .def("node_position",
           [](const RoadGraph& g, const std::string& name) {
             const Vec2 p = g.node(node_named(g, name)).position;
             return py::make_tuple(p.x, p.y);
           })
      .def("to_json", [](const RoadGraph& g) { return map_to_json(g).dump(); })
      .def("route", &route, py::arg("start"), py::arg("goal"));

  py::class_<RoutePath>(m, "Path")
      .def_property_readonly("length", [](const RoutePath& r) { return r.path.total_length; })
      .def_property_readonly("edges", &edge_names)
      .def("to_euclidean",
           [](const RoutePath& r, double s, double d) {
             const Pose p = to_euclidean(r.path, s, d);
             return py::make_tuple(p.position.x, p.position.y, p.heading);
           },
           py::arg("s"), py::arg("d") = 0.0)
      .def("to_frenet",
           [](const RoutePath& r, double x, double y, double heading,
              std::optional<double> hint_s) {
             FrenetOptions opt;
             opt.hint_s = hint_s;
             const FrenetState fs = to_frenet(r.path, {{x, y}, heading}, 0.0, opt);
             return py::make_tuple(fs.s, fs.d);
           },
           py::arg("x"), py::arg("y"), py::arg("heading") = 0.0, py::arg("hint_s") = py::none());

  m.def("default_map", [](double spacing) { return Graph(std::make_shared<RoadGraph>(build_icat_default(spacing))); },
        py::arg("spacing") = 0.5);
  m.def("merge_cycle_map", [](double spacing) { return Graph(std::make_shared<RoadGraph>(build_merge_cycle(spacing))); },
        py::arg("spacing") = 0.5);
  m.def("load_map", [](const std::string& path) { return Graph(std::make_shared<RoadGraph>(load_map_file(path))); });
  m.def("validate_map_json", [](const std::string& doc) {
    const MapReport r = validate_map(nlohmann::json::parse(doc));
    return py::make_tuple(r.errors, r.strongly_connected);
  });

  m.def("quintic",
        [](double s0, double v0, double a0, double s1, double v1, double a1, double T) {
          const auto c = quintic_solve(s0, v0, a0, s1, v1, a1, T).c;
          return std::vector<double>(c.begin(), c.end());
        },
        py::arg("s0"), py::arg("v0"), py::arg("a0"), py::arg("s1"), py::arg("v1"), py::arg("a1"),
        py::arg("T"));

  m.def("scenario_defaults", [] { return scenario_to_json(SimConfig{}).dump(); });
  m.def("run_json", &run_json, py::arg("scenario"), py::arg("base_dir") = "",
        py::arg("trace") = false, py::arg("events") = false);
  m.def("lag_json", &lag_json, py::arg("scenario"), py::arg("base_dir") = "",
        py::arg("latencies"));
}
