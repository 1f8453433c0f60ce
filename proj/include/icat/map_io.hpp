#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icat/road_graph.hpp"

namespace icat {

class MapFormatError : public InvalidParameter {
 public:
  using InvalidParameter::InvalidParameter;
};

/// Every invariant violation found in a map document, each naming the field
/// path or element id at fault. Empty `errors` means the map is valid.
struct MapReport {
  std::vector<std::string> errors;
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  bool strongly_connected = false;

  bool ok() const { return errors.empty(); }
};

MapReport validate_map(const nlohmann::json& doc);

/// Parses and validates; throws MapFormatError with the first violation.
RoadGraph load_map(const nlohmann::json& doc);
RoadGraph load_map_file(const std::string& path);

/// Serializes the graph including generated waypoints.
nlohmann::json map_to_json(const RoadGraph& graph);

}  // namespace icat
