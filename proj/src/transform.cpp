#include "fleetflow/transform.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fleetflow {

using nlohmann::json;

double DriverState::total_mass() const {
  double total = 0.0;
  for (double x : available) total += x;
  for (const auto& slots : in_transit) {
    for (double x : slots) total += x;
  }
  return total;
}

DriverState DriverState::at_nodes(const CityGraph& graph, std::vector<double> available) {
  DriverState s;
  s.available = std::move(available);
  s.in_transit.resize(graph.edge_count());
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    s.in_transit[e].assign(static_cast<std::size_t>(graph.edge(e).travel_time - 1), 0.0);
  }
  return s;
}

std::vector<double> Expansion::expand_state(const DriverState& state) const {
  if (state.available.size() != original_nodes) throw std::invalid_argument("driver state does not match the graph");
  std::vector<double> w(expanded_node_count(), 0.0);
  for (std::size_t v = 0; v < original_nodes; ++v) w[v] = state.available[v];
  for (std::size_t i = 0; i < virtual_nodes.size(); ++i) {
    const auto& vn = virtual_nodes[i];
    const auto& slots = state.in_transit.at(vn.edge);
    const int len = static_cast<int>(chain.at(vn.edge).size());
    const auto slot = static_cast<std::size_t>(len - 1 - vn.position);
    if (slot < slots.size()) w[original_nodes + i] = slots[slot];
  }
  return w;
}

DriverState Expansion::contract_state(const CityGraph& original, std::span<const double> expanded_w) const {
  if (expanded_w.size() != expanded_node_count()) throw std::invalid_argument("expanded distribution has wrong size");
  std::vector<double> avail(expanded_w.begin(), expanded_w.begin() + static_cast<std::ptrdiff_t>(original_nodes));
  DriverState s = DriverState::at_nodes(original, std::move(avail));
  for (std::size_t i = 0; i < virtual_nodes.size(); ++i) {
    const auto& vn = virtual_nodes[i];
    const int len = static_cast<int>(chain.at(vn.edge).size());
    s.in_transit[vn.edge][static_cast<std::size_t>(len - 1 - vn.position)] = expanded_w[original_nodes + i];
  }
  return s;
}

json Expansion::to_json(const CityGraph& original, const CityGraph& expanded) const {
  json chains = json::object();
  for (std::size_t e = 0; e < chain.size(); ++e) {
    json ids = json::array();
    for (std::size_t x : chain[e]) ids.push_back(expanded.edge(x).id);
    chains[original.edge(e).id] = ids;
  }
  json nodes = json::object();
  for (std::size_t i = 0; i < virtual_nodes.size(); ++i) {
    nodes[expanded.nodes()[original_nodes + i]] = {{"edge", original.edge(virtual_nodes[i].edge).id},
                                                   {"position", virtual_nodes[i].position}};
  }
  return {{"chain_map", chains}, {"node_map", nodes}, {"nodes", expanded.node_count()},
          {"edges", expanded.edge_count()}};
}

ExpandedInstance expand(const Instance& instance) {
  const CityGraph& g = instance.graph;
  ExpandedInstance out;
  Expansion& map = out.map;
  map.original_nodes = g.node_count();
  map.chain.resize(g.edge_count());

  std::vector<std::string> nodes = g.nodes();
  std::vector<Edge> edges;
  std::vector<std::vector<DemandCurve>> demand;
  std::vector<double> weight;

  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const Edge& orig = g.edge(e);
    const int k = orig.travel_time;
    const double minutes = instance.edge_minutes(e);
    std::size_t prev = orig.from;
    for (int pos = 0; pos < k; ++pos) {
      std::size_t next = orig.to;
      if (pos + 1 < k) {
        next = nodes.size();
        nodes.push_back(orig.id + "#" + std::to_string(pos + 1));
        map.virtual_nodes.push_back({e, pos + 1});
      }
      Edge piece;
      piece.id = k == 1 ? orig.id : orig.id + "@" + std::to_string(pos + 1);
      piece.from = prev;
      piece.to = next;
      piece.travel_time = 1;
      // The chain keeps the trip cost inside each piece's objective; the
      // 1/k weight below is what splits it.
      piece.cost = orig.cost;
      piece.minutes = minutes / k;
      map.chain[e].push_back(edges.size());
      map.edge_origin.emplace_back(e, pos);
      edges.push_back(std::move(piece));
      demand.push_back(instance.demand.at(e));
      weight.push_back(instance.weight(e) / k);
      prev = next;
    }
  }

  Instance& x = out.instance;
  x.graph = CityGraph(std::move(nodes), std::move(edges));
  x.demand = std::move(demand);
  x.objective = instance.objective;
  x.edge_weight = std::move(weight);
  x.step_minutes = instance.step_minutes;
  x.steps_per_period = instance.steps_per_period;
  x.scale = instance.scale;
  x.normalized = instance.normalized;
  if (instance.initial_distribution) {
    auto w = *instance.initial_distribution;
    w.resize(x.graph.node_count(), 0.0);
    x.initial_distribution = std::move(w);
  }
  return out;
}

ContractedStatic contract_static(const ExpandedInstance& expanded, const Instance& original, std::span<const double> q,
                                 std::span<const double> w, double tol) {
  const CityGraph& xg = expanded.instance.graph;
  if (q.size() != xg.edge_count() || w.size() != xg.node_count()) {
    throw std::invalid_argument("expanded solution has wrong dimensions");
  }
  std::ostringstream issues;
  double worst = 0.0;
  auto note = [&](double r, const std::string& what) {
    worst = std::max(worst, r);
    if (r > tol) issues << "  " << what << ": residual " << r << "\n";
  };

  ContractedStatic out;
  out.q.resize(original.graph.edge_count());
  for (std::size_t e = 0; e < expanded.map.chain.size(); ++e) {
    const auto& ch = expanded.map.chain[e];
    out.q[e] = q[ch.front()];
    double r = 0.0;
    for (std::size_t x : ch) r = std::max(r, std::abs(q[x] - q[ch.front()]));
    out.max_chain_residual = std::max(out.max_chain_residual, r);
    note(r, "chain " + original.graph.edge(e).id);
  }
  double mass = 0.0;
  for (std::size_t v = 0; v < xg.node_count(); ++v) {
    double outflow = 0.0;
    double inflow = 0.0;
    for (std::size_t e : xg.out_edges(v)) outflow += q[e];
    for (std::size_t e : xg.in_edges(v)) inflow += q[e];
    note(std::abs(outflow - inflow), "balance at " + xg.nodes()[v]);
    note(std::max(0.0, outflow - w[v]), "capacity at " + xg.nodes()[v]);
    note(std::max(0.0, -w[v]), "negative mass at " + xg.nodes()[v]);
    mass += w[v];
  }
  for (double x : q) note(std::max(0.0, -x), "negative flow");
  note(std::abs(mass - 1.0), "total driver mass");
  const std::string report = issues.str();
  if (!report.empty()) throw std::runtime_error("expanded solution is infeasible:\n" + report);

  out.state = expanded.map.contract_state(original.graph, w);
  return out;
}

std::vector<std::vector<double>> contract_dynamic(const ExpandedInstance& expanded,
                                                  const std::vector<std::vector<double>>& q, double tol) {
  const std::size_t edges = expanded.instance.graph.edge_count();
  std::vector<std::vector<double>> out;
  out.reserve(q.size());
  std::ostringstream issues;
  for (std::size_t t = 0; t < q.size(); ++t) {
    if (q[t].size() != edges) throw std::invalid_argument("expanded dynamic flows have wrong dimensions");
    std::vector<double> row(expanded.map.chain.size());
    for (std::size_t e = 0; e < expanded.map.chain.size(); ++e) {
      const auto& ch = expanded.map.chain[e];
      row[e] = q[t][ch.front()];
      for (std::size_t k = 1; k < ch.size() && k <= t; ++k) {
        const double r = std::abs(q[t][ch[k]] - q[t - k][ch.front()]);
        if (r > tol) issues << "  step " << t << " chain piece " << k << " of edge " << e << ": residual " << r << "\n";
      }
    }
    out.push_back(std::move(row));
  }
  const std::string report = issues.str();
  if (!report.empty()) throw std::runtime_error("expanded dynamic flows do not follow their chains:\n" + report);
  return out;
}

}  // namespace fleetflow
