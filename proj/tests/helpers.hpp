#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fleetflow/instance.hpp"

namespace testing {

struct EdgeSpec {
  std::string id;
  std::size_t from;
  std::size_t to;
  int travel_time = 1;
  double cost = 0.0;
  double minutes = 0.0;
};

/// Normalized instance with one demand curve per edge.
inline fleetflow::Instance make_instance(std::vector<std::string> nodes, const std::vector<EdgeSpec>& edges,
                                         const std::vector<fleetflow::DemandCurve>& curves,
                                         fleetflow::ObjectiveKind kind = fleetflow::ObjectiveKind::revenue()) {
  std::vector<fleetflow::Edge> list;
  for (const auto& e : edges) list.push_back({e.id, e.from, e.to, e.travel_time, e.cost, e.minutes});
  fleetflow::Instance inst;
  inst.graph = fleetflow::CityGraph(std::move(nodes), std::move(list));
  for (const auto& c : curves) inst.demand.push_back({c});
  inst.objective = kind;
  return fleetflow::normalize(std::move(inst), 1.0);
}

/// Self-loop with D(p) = 1 - p.
inline fleetflow::Instance self_loop() {
  return make_instance({"A"}, {{"AA", 0, 0}}, {fleetflow::DemandCurve::linear(1.0, 1.0)});
}

/// Two nodes, D(p) = min(1, 2 - p) both ways.
inline fleetflow::Instance two_node() {
  const auto d = fleetflow::DemandCurve::linear(2.0, 1.0, 1.0);
  return make_instance({"A", "B"}, {{"AB", 0, 1}, {"BA", 1, 0}}, {d, d});
}

/// Three nodes with travel times 1, 2 and 3, step and linear curves and a
/// trip cost.
inline fleetflow::Instance three_node() {
  using fleetflow::DemandCurve;
  return make_instance({"A", "B", "C"},
                       {{"AB", 0, 1, 2}, {"BC", 1, 2, 3, 0.1}, {"CA", 2, 0, 1}, {"BA", 1, 0, 1}},
                       {DemandCurve::step({{3.0, 0.3}, {1.0, 0.7}}), DemandCurve::linear(2.0, 1.0, 1.0),
                        DemandCurve::linear(1.0, 1.0), DemandCurve::step({})});
}

}  // namespace testing
