#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "fleetflow/instance.hpp"

namespace fleetflow {

/// Where every driver is: available at a node, or mid-trip on an edge.
///
/// `in_transit[e][j]` is the mass that reaches the head of edge e in j + 1
/// steps; edge e holds travel_time(e) - 1 slots.
struct DriverState {
  std::vector<double> available;
  std::vector<std::vector<double>> in_transit;

  double total_mass() const;
  /// All mass available at nodes, nothing in transit.
  static DriverState at_nodes(const CityGraph& graph, std::vector<double> available);
};

/// Mapping between an instance and its 1-travel-time expansion. Real nodes
/// keep their indices; virtual nodes follow them.
struct Expansion {
  struct VirtualNode {
    std::size_t edge = 0;  ///< original edge
    int position = 0;      ///< 1 .. travel_time - 1 along the chain
  };

  std::size_t original_nodes = 0;
  /// chain[e] lists the expanded edges replacing original edge e, in order.
  std::vector<std::vector<std::size_t>> chain;
  /// virtual_nodes[v - original_nodes] describes expanded node v.
  std::vector<VirtualNode> virtual_nodes;
  /// For each expanded edge: originating edge and 0-based chain position.
  std::vector<std::pair<std::size_t, int>> edge_origin;

  bool is_virtual(std::size_t v) const { return v >= original_nodes; }
  std::size_t expanded_node_count() const { return original_nodes + virtual_nodes.size(); }

  /// Node masses on the expanded graph for a driver state on the original.
  std::vector<double> expand_state(const DriverState& state) const;
  /// Inverse of expand_state.
  DriverState contract_state(const CityGraph& original, std::span<const double> expanded_w) const;

  nlohmann::json to_json(const CityGraph& original, const CityGraph& expanded) const;
};

struct ExpandedInstance {
  Instance instance;
  Expansion map;
};

/// Replaces every edge of travel time k > 1 by a chain of k unit edges
/// through k - 1 virtual nodes. Chain edges copy the demand of the original
/// edge and carry 1/k of its objective weight.
ExpandedInstance expand(const Instance& instance);

struct ContractedStatic {
  std::vector<double> q;  ///< per original edge
  DriverState state;
  double max_chain_residual = 0.0;
};

/// Reads launch flows off the first chain edge. Throws std::runtime_error
/// when chain flows or node balances disagree by more than `tol`.
ContractedStatic contract_static(const ExpandedInstance& expanded, const Instance& original,
                                 std::span<const double> q, std::span<const double> w, double tol = 1e-7);

/// Launch flows per step; q[step][expanded edge] -> [step][original edge].
/// Throws when a chain does not carry its launch flow forward one step at a
/// time, beyond `tol`.
std::vector<std::vector<double>> contract_dynamic(const ExpandedInstance& expanded,
                                                  const std::vector<std::vector<double>>& q, double tol = 1e-7);

}  // namespace fleetflow
