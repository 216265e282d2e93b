#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetflow/demand.hpp"
#include "fleetflow/graph.hpp"
#include "fleetflow/objective.hpp"

namespace fleetflow {

/// A market instance: the graph, per-edge (and per-period) demand, the
/// objective and the time discretization.
///
/// Instances built through normalize() carry demand measured in units of
/// the total driver mass, with every curve capped and padded so that
/// D(0|e) = 1. `scale` records the driver mass that was divided out.
struct Instance {
  CityGraph graph;
  /// demand[e][period]; a single period means a static environment.
  std::vector<std::vector<DemandCurve>> demand;
  ObjectiveKind objective = ObjectiveKind::revenue();
  /// Multiplier on each edge's objective (1 except on expanded chains).
  std::vector<double> edge_weight;
  double step_minutes = 15.0;
  int steps_per_period = 1;
  double scale = 1.0;
  bool normalized = false;
  /// Available drivers per node at the first step, if given.
  std::optional<std::vector<double>> initial_distribution;

  std::size_t periods() const;
  bool is_static() const { return periods() == 1; }
  std::size_t period_of_step(std::size_t step) const;
  const DemandCurve& demand_at(std::size_t edge, std::size_t step) const;
  double weight(std::size_t edge) const { return edge_weight.empty() ? 1.0 : edge_weight.at(edge); }
  /// Per-trip duration used by per-minute pricing.
  double edge_minutes(std::size_t edge) const;
};

/// Divides request volume by `driver_mass` and caps/pads every curve at 1.
Instance normalize(Instance raw, double driver_mass);

/// Structural and semantic problems, empty when the instance is usable.
std::vector<std::string> validate_instance(const Instance& instance);

/// Parses the instance document and normalizes it.
Instance parse_instance(const nlohmann::json& doc);
Instance load_instance(const std::filesystem::path& path);
nlohmann::json instance_to_json(const Instance& instance);

nlohmann::json demand_to_json(const DemandCurve& curve);
DemandCurve demand_from_json(const nlohmann::json& doc);

/// Uniform distribution over nodes, or the instance's initial distribution.
std::vector<double> initial_distribution_or_uniform(const Instance& instance);

}  // namespace fleetflow
