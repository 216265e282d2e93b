#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace fleetflow {

/// A directed road segment between two regions.
///
/// `travel_time` is measured in simulation steps, `minutes` is the
/// wall-clock duration used by per-minute pricing. A zero `minutes`
/// means "derive from travel_time and the step length".
struct Edge {
  std::string id;
  std::size_t from = 0;
  std::size_t to = 0;
  int travel_time = 1;
  double cost = 0.0;
  double minutes = 0.0;
};

/// City graph: regions plus directed edges with adjacency lists.
///
/// Endpoint indices are checked on construction; semantic problems
/// (connectivity, travel times, costs, duplicate ids) are left to
/// validate_graph() so that they can be reported all at once.
class CityGraph {
 public:
  CityGraph() = default;
  CityGraph(std::vector<std::string> nodes, std::vector<Edge> edges);

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const Edge& edge(std::size_t e) const { return edges_.at(e); }
  const std::vector<std::size_t>& out_edges(std::size_t v) const { return out_.at(v); }
  const std::vector<std::size_t>& in_edges(std::size_t v) const { return in_.at(v); }

  std::optional<std::size_t> find_node(const std::string& name) const;
  std::optional<std::size_t> find_edge(const std::string& id) const;
  std::size_t node_index(const std::string& name) const;
  std::size_t edge_index(const std::string& id) const;

 private:
  std::vector<std::string> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

/// Returns every violation found; an empty list means the graph is valid.
std::vector<std::string> validate_graph(const CityGraph& graph);

bool is_strongly_connected(const CityGraph& graph);

}  // namespace fleetflow
