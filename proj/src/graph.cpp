#include "fleetflow/graph.hpp"

#include <set>
#include <stdexcept>

namespace fleetflow {

CityGraph::CityGraph(std::vector<std::string> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), out_(nodes_.size()), in_(nodes_.size()) {
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& edge = edges_[e];
    if (edge.from >= nodes_.size() || edge.to >= nodes_.size()) {
      throw std::invalid_argument("edge '" + edge.id + "' references an unknown node");
    }
    out_[edge.from].push_back(e);
    in_[edge.to].push_back(e);
  }
}

std::optional<std::size_t> CityGraph::find_node(const std::string& name) const {
  for (std::size_t v = 0; v < nodes_.size(); ++v) {
    if (nodes_[v] == name) return v;
  }
  return std::nullopt;
}

std::optional<std::size_t> CityGraph::find_edge(const std::string& id) const {
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    if (edges_[e].id == id) return e;
  }
  return std::nullopt;
}

std::size_t CityGraph::node_index(const std::string& name) const {
  if (auto v = find_node(name)) return *v;
  throw std::invalid_argument("unknown node '" + name + "'");
}

std::size_t CityGraph::edge_index(const std::string& id) const {
  if (auto e = find_edge(id)) return *e;
  throw std::invalid_argument("unknown edge '" + id + "'");
}

namespace {

std::size_t reachable_count(const CityGraph& graph, bool forward) {
  std::vector<char> seen(graph.node_count(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    const auto& adjacent = forward ? graph.out_edges(v) : graph.in_edges(v);
    for (std::size_t e : adjacent) {
      const std::size_t u = forward ? graph.edge(e).to : graph.edge(e).from;
      if (!seen[u]) {
        seen[u] = 1;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count;
}

}  // namespace

bool is_strongly_connected(const CityGraph& graph) {
  if (graph.node_count() == 0) return false;
  return reachable_count(graph, true) == graph.node_count() &&
         reachable_count(graph, false) == graph.node_count();
}

std::vector<std::string> validate_graph(const CityGraph& graph) {
  std::vector<std::string> report;
  if (graph.node_count() == 0) {
    report.emplace_back("graph has no nodes");
    return report;
  }
  std::set<std::string> names;
  for (const auto& name : graph.nodes()) {
    if (!names.insert(name).second) report.push_back("duplicate node id '" + name + "'");
  }
  std::set<std::string> ids;
  for (const Edge& edge : graph.edges()) {
    if (!ids.insert(edge.id).second) report.push_back("duplicate edge id '" + edge.id + "'");
    if (edge.travel_time < 1) {
      report.push_back("edge '" + edge.id + "' has travel_time " + std::to_string(edge.travel_time) +
                       " (must be >= 1)");
    }
    if (!(edge.cost >= 0.0)) report.push_back("edge '" + edge.id + "' has negative cost");
    if (edge.minutes < 0.0) report.push_back("edge '" + edge.id + "' has negative minutes");
  }
  if (!is_strongly_connected(graph)) report.emplace_back("not strongly connected");
  return report;
}

}  // namespace fleetflow
