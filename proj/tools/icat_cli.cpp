#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "icat/engine.hpp"
#include "icat/map_io.hpp"
#include "icat/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kIo = 3, kInternal = 4 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write '" + p.string() + "'");
  return os;
}

std::string fixed(double v, int prec = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

icat::SimConfig scenario_with_overrides(const std::string& path, const std::optional<std::uint64_t>& seed,
                                        const std::string& mode) {
  icat::SimConfig cfg = icat::load_scenario(path);
  if (seed) cfg.seed = *seed;
  if (!mode.empty()) {
    auto m = icat::manager_mode_from_string(mode);
    if (!m) throw icat::ConfigError("--mode: expected 'optimized' or 'fifo_baseline'");
    cfg.mode = *m;
  }
  cfg.validate();
  return cfg;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const icat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const icat::MapFormatError& e) {
    std::cerr << "map error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::runtime_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"icat: intersection traffic digital twin"};
  app.require_subcommand(1);

  std::string scenario, out, mode, map_path, map_name = "default", from, to;
  std::optional<std::uint64_t> seed;
  std::vector<double> latencies;
  bool quiet = false;
  double spacing = 0.5;

  auto* run = app.add_subcommand("run", "Run a scenario and write trace.csv, events.jsonl, metrics.json");
  run->add_option("--scenario", scenario, "Scenario JSON file")->required();
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--mode", mode, "optimized | fifo_baseline");
  run->add_flag("--quiet", quiet);

  auto* validate = app.add_subcommand("validate-map", "Check a map file");
  validate->add_option("map", map_path, "Map JSON file")->required();
  validate->add_flag("--quiet", quiet);

  auto* compare = app.add_subcommand("compare", "Run optimized and FIFO modes side by side");
  compare->add_option("--scenario", scenario)->required();
  compare->add_option("--out", out, "Directory for compare.json");
  compare->add_option("--seed", seed);
  compare->add_flag("--quiet", quiet);

  auto* lag = app.add_subcommand("lag", "Response delay versus channel latency");
  lag->add_option("--scenario", scenario)->required();
  lag->add_option("--latency", latencies, "Latency in seconds (repeatable)")->required();
  lag->add_option("--out", out, "Directory for lag.json");
  lag->add_option("--seed", seed);
  lag->add_option("--mode", mode);
  lag->add_flag("--quiet", quiet);

  auto* export_map = app.add_subcommand("export-map", "Write a built-in map as JSON");
  export_map->add_option("--map", map_name, "default | merge_cycle");
  export_map->add_option("--spacing", spacing, "Waypoint spacing in meters");
  export_map->add_option("--out", out, "Output file")->required();

  auto* route = app.add_subcommand("route", "Shortest route between two nodes");
  route->add_option("--map", map_name, "default | merge_cycle | map file");
  route->add_option("--from", from)->required();
  route->add_option("--to", to)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (*run) {
    return guarded([&] {
      icat::SimConfig cfg = scenario_with_overrides(scenario, seed, mode);
      ensure_dir(out);
      auto trace = open_out(fs::path(out) / "trace.csv");
      auto events = open_out(fs::path(out) / "events.jsonl");
      const icat::Metrics m = icat::run(cfg, {&trace, &events});
      auto metrics = open_out(fs::path(out) / "metrics.json");
      metrics << m.to_json().dump(2) << '\n';
      if (!trace || !events || !metrics) throw IoError("failed writing outputs in '" + out + "'");
      if (!quiet) {
        std::cout << "completed_routes " << m.completed_routes << '\n'
                  << "throughput " << fixed(m.throughput) << '\n'
                  << "min_separation " << fixed(m.min_separation) << '\n'
                  << "separation_violations " << m.separation_violations << '\n'
                  << "deadlock_events " << m.deadlock_events << '\n';
      }
      return static_cast<int>(kOk);
    });
  }

  if (*validate) {
    return guarded([&] {
      std::ifstream in(map_path);
      if (!in) throw IoError("cannot read map file '" + map_path + "'");
      json doc;
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        std::cerr << "malformed map document: " << e.what() << '\n';
        return static_cast<int>(kConfig);
      }
      const icat::MapReport rep = icat::validate_map(doc);
      for (const auto& err : rep.errors) std::cerr << "error: " << err << '\n';
      if (!quiet) {
        std::cout << "nodes " << rep.node_count << '\n'
                  << "edges " << rep.edge_count << '\n'
                  << "strongly_connected " << (rep.strongly_connected ? "yes" : "no") << '\n'
                  << (rep.ok() ? "valid" : "invalid") << '\n';
      }
      return static_cast<int>(rep.ok() ? kOk : kConfig);
    });
  }

  if (*compare) {
    return guarded([&] {
      icat::SimConfig cfg = scenario_with_overrides(scenario, seed, "");
      json report = json::object();
      std::vector<std::pair<std::string, icat::Metrics>> rows;
      for (auto m : {icat::ManagerMode::optimized, icat::ManagerMode::fifo_baseline}) {
        icat::SimConfig c = cfg;
        c.mode = m;
        rows.emplace_back(icat::to_string(m), icat::run(c));
      }
      if (!quiet) {
        std::cout << "mode throughput mean_travel_time deadlocks min_separation\n";
        for (const auto& [name, m] : rows)
          std::cout << name << ' ' << fixed(m.throughput) << ' ' << fixed(m.mean_travel_time())
                    << ' ' << m.deadlock_events << ' ' << fixed(m.min_separation) << '\n';
      }
      for (const auto& [name, m] : rows) {
        report[name] = {{"throughput", m.throughput},
                        {"mean_travel_time", m.mean_travel_time()},
                        {"deadlock_events", m.deadlock_events},
                        {"min_separation", std::isfinite(m.min_separation)
                                               ? json(m.min_separation) : json(nullptr)},
                        {"completed_routes", m.completed_routes}};
      }
      if (!out.empty()) {
        ensure_dir(out);
        open_out(fs::path(out) / "compare.json") << report.dump(2) << '\n';
      } else {
        std::cout << report.dump() << '\n';
      }
      return static_cast<int>(kOk);
    });
  }

  if (*lag) {
    return guarded([&] {
      icat::SimConfig cfg = scenario_with_overrides(scenario, seed, mode);
      const icat::LagReport rep = icat::lag_experiment(cfg, latencies);
      json j = {{"strictly_increasing", rep.strictly_increasing}, {"rows", json::array()}};
      for (const auto& r : rep.rows)
        j["rows"].push_back({{"latency", r.latency},
                             {"mean_response_delay", r.mean_response_delay},
                             {"min_separation", std::isfinite(r.min_separation)
                                                    ? json(r.min_separation) : json(nullptr)}});
      if (!quiet) {
        std::cout << "latency mean_response_delay min_separation\n";
        for (const auto& r : rep.rows)
          std::cout << fixed(r.latency, 3) << ' ' << fixed(r.mean_response_delay) << ' '
                    << fixed(r.min_separation) << '\n';
      }
      if (!out.empty()) {
        ensure_dir(out);
        open_out(fs::path(out) / "lag.json") << j.dump(2) << '\n';
      } else {
        std::cout << j.dump() << '\n';
      }
      return static_cast<int>(kOk);
    });
  }

  if (*export_map) {
    return guarded([&] {
      icat::RoadGraph g;
      if (map_name == "default") g = icat::build_icat_default(spacing);
      else if (map_name == "merge_cycle") g = icat::build_merge_cycle(spacing);
      else throw icat::ConfigError("--map: expected 'default' or 'merge_cycle'");
      open_out(out) << icat::map_to_json(g).dump(2) << '\n';
      return static_cast<int>(kOk);
    });
  }

  if (*route) {
    return guarded([&] {
      icat::SimConfig cfg;
      cfg.map = map_name;
      const icat::RoadGraph g = icat::load_graph(cfg);
      auto a = g.find_node(from);
      auto b = g.find_node(to);
      if (!a) throw icat::ConfigError("--from: unknown node '" + from + "'");
      if (!b) throw icat::ConfigError("--to: unknown node '" + to + "'");
      try {
        const icat::Path p = icat::a_star(g, *a, *b);
        for (auto e : p.edges) std::cout << g.edge(e).name << '\n';
        std::cout << "length " << fixed(p.total_length, 6) << '\n';
      } catch (const icat::NoRoute& e) {
        std::cerr << "no route: " << e.what() << '\n';
        return static_cast<int>(kConfig);
      }
      return static_cast<int>(kOk);
    });
  }
  return kOk;
}
