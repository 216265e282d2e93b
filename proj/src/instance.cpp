#include "fleetflow/instance.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace fleetflow {

using nlohmann::json;

std::size_t Instance::periods() const { return demand.empty() ? 1 : demand.front().size(); }

std::size_t Instance::period_of_step(std::size_t step) const {
  const std::size_t per = static_cast<std::size_t>(std::max(1, steps_per_period));
  return (step / per) % periods();
}

const DemandCurve& Instance::demand_at(std::size_t edge, std::size_t step) const {
  const auto& curves = demand.at(edge);
  return curves.size() == 1 ? curves.front() : curves.at(period_of_step(step));
}

double Instance::edge_minutes(std::size_t edge) const {
  const Edge& e = graph.edge(edge);
  return e.minutes > 0.0 ? e.minutes : e.travel_time * step_minutes;
}

Instance normalize(Instance raw, double driver_mass) {
  if (!(driver_mass > 0.0)) throw std::invalid_argument("driver mass must be positive");
  for (auto& curves : raw.demand) {
    for (auto& curve : curves) curve = curve.scaled(driver_mass).with_ceiling(1.0);
  }
  raw.scale *= driver_mass;
  raw.normalized = true;
  return raw;
}

std::vector<std::string> validate_instance(const Instance& instance) {
  auto report = validate_graph(instance.graph);
  if (instance.demand.size() != instance.graph.edge_count()) {
    report.emplace_back("demand table does not cover every edge");
    return report;
  }
  const std::size_t periods = instance.periods();
  for (std::size_t e = 0; e < instance.demand.size(); ++e) {
    const auto n = instance.demand[e].size();
    if (n != periods && n != 1) {
      report.push_back("edge '" + instance.graph.edge(e).id + "' has " + std::to_string(n) +
                       " demand periods, expected " + std::to_string(periods));
    }
  }
  if (!instance.edge_weight.empty() && instance.edge_weight.size() != instance.graph.edge_count()) {
    report.emplace_back("edge weights do not cover every edge");
  }
  if (instance.steps_per_period < 1) report.emplace_back("steps_per_period must be >= 1");
  if (!(instance.step_minutes > 0.0)) report.emplace_back("step_minutes must be positive");
  if (instance.initial_distribution) {
    const auto& w = *instance.initial_distribution;
    double total = 0.0;
    bool negative = false;
    for (double x : w) {
      total += x;
      negative = negative || x < 0.0;
    }
    if (w.size() != instance.graph.node_count()) report.emplace_back("initial distribution does not cover every node");
    if (negative) report.emplace_back("initial distribution has negative mass");
    if (std::abs(total - 1.0) > 1e-9) report.emplace_back("initial distribution does not sum to 1");
  }
  return report;
}

json demand_to_json(const DemandCurve& curve) {
  json out;
  if (const auto* d = std::get_if<LinearDemand>(&curve.shape())) {
    out = {{"kind", "linear"}, {"intercept", d->intercept}, {"slope", d->slope}, {"cap", d->cap}};
  } else if (const auto* d = std::get_if<StepDemand>(&curve.shape())) {
    json atoms = json::array();
    for (const auto& atom : d->atoms) atoms.push_back({atom.value, atom.mass});
    out = {{"kind", "step"}, {"atoms", atoms}};
  } else {
    const auto& l = std::get<LogNormalDemand>(curve.shape());
    out = {{"kind", "lognormal"}, {"mu_log", l.mu_log}, {"sigma_log", l.sigma_log}, {"volume", l.volume}};
  }
  return out;
}

DemandCurve demand_from_json(const json& doc) {
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "linear") {
    std::optional<double> cap;
    if (doc.contains("cap")) cap = doc.at("cap").get<double>();
    return DemandCurve::linear(doc.at("intercept").get<double>(), doc.at("slope").get<double>(), cap);
  }
  if (kind == "step") {
    std::vector<ValueAtom> atoms;
    for (const auto& atom : doc.at("atoms")) {
      if (atom.is_array()) {
        atoms.push_back({atom.at(0).get<double>(), atom.at(1).get<double>()});
      } else {
        atoms.push_back({atom.at("value").get<double>(), atom.at("mass").get<double>()});
      }
    }
    return DemandCurve::step(std::move(atoms));
  }
  if (kind == "lognormal") {
    return DemandCurve::lognormal(doc.at("mu_log").get<double>(), doc.at("sigma_log").get<double>(),
                                  doc.at("volume").get<double>());
  }
  if (kind == "none") return DemandCurve::step({});
  throw std::invalid_argument("unknown demand kind '" + kind + "'");
}

Instance parse_instance(const json& doc) {
  std::vector<std::string> nodes = doc.at("nodes").get<std::vector<std::string>>();
  std::vector<Edge> edges;
  auto node_of = [&](const std::string& name) {
    for (std::size_t v = 0; v < nodes.size(); ++v) {
      if (nodes[v] == name) return v;
    }
    throw std::invalid_argument("edge endpoint '" + name + "' is not a node");
  };
  for (const auto& e : doc.at("edges")) {
    Edge edge;
    edge.id = e.at("id").get<std::string>();
    edge.from = node_of(e.at("from").get<std::string>());
    edge.to = node_of(e.at("to").get<std::string>());
    edge.travel_time = e.value("travel_time", 1);
    edge.cost = e.value("cost", 0.0);
    edge.minutes = e.value("minutes", 0.0);
    edges.push_back(std::move(edge));
  }

  Instance instance;
  instance.graph = CityGraph(std::move(nodes), std::move(edges));
  instance.step_minutes = doc.value("step_minutes", 15.0);
  instance.steps_per_period = doc.value("steps_per_period", 1);
  if (doc.contains("objective")) {
    const auto& obj = doc.at("objective");
    instance.objective = ObjectiveKind::parse(obj.at("kind").get<std::string>(), obj.value("theta", 0.5));
  }

  const json demand = doc.value("demand", json::object());
  for (const auto& edge : instance.graph.edges()) {
    std::vector<DemandCurve> curves;
    if (!demand.contains(edge.id)) {
      curves.push_back(DemandCurve::step({}));
    } else if (const auto& spec = demand.at(edge.id); spec.is_array()) {
      for (const auto& c : spec) curves.push_back(demand_from_json(c));
      if (curves.empty()) throw std::invalid_argument("edge '" + edge.id + "' has an empty demand list");
    } else {
      curves.push_back(demand_from_json(spec));
    }
    instance.demand.push_back(std::move(curves));
  }
  for (const auto& [id, spec] : demand.items()) {
    if (!instance.graph.find_edge(id)) throw std::invalid_argument("demand given for unknown edge '" + id + "'");
  }

  if (doc.contains("initial_distribution")) {
    std::vector<double> w(instance.graph.node_count(), 0.0);
    for (const auto& [name, mass] : doc.at("initial_distribution").items()) {
      w.at(instance.graph.node_index(name)) = mass.get<double>();
    }
    instance.initial_distribution = std::move(w);
  }
  if (doc.contains("edge_weight")) instance.edge_weight = doc.at("edge_weight").get<std::vector<double>>();

  const double driver_mass = doc.value("driver_mass", 1.0);
  const double prior_scale = doc.value("scale", 1.0);
  Instance out = normalize(std::move(instance), driver_mass);
  out.scale = prior_scale * driver_mass;
  return out;
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file " + path.string());
  return parse_instance(json::parse(in));
}

json instance_to_json(const Instance& instance) {
  json doc;
  doc["nodes"] = instance.graph.nodes();
  doc["edges"] = json::array();
  for (const auto& edge : instance.graph.edges()) {
    json e = {{"id", edge.id},
              {"from", instance.graph.nodes()[edge.from]},
              {"to", instance.graph.nodes()[edge.to]},
              {"travel_time", edge.travel_time},
              {"cost", edge.cost}};
    if (edge.minutes > 0.0) e["minutes"] = edge.minutes;
    doc["edges"].push_back(e);
  }
  json demand = json::object();
  for (std::size_t e = 0; e < instance.demand.size(); ++e) {
    const auto& curves = instance.demand[e];
    if (curves.size() == 1) {
      demand[instance.graph.edge(e).id] = demand_to_json(curves.front());
    } else {
      json list = json::array();
      for (const auto& c : curves) list.push_back(demand_to_json(c));
      demand[instance.graph.edge(e).id] = list;
    }
  }
  doc["demand"] = demand;
  doc["objective"] = {{"kind", instance.objective.name()}, {"theta", instance.objective.theta()}};
  doc["step_minutes"] = instance.step_minutes;
  doc["steps_per_period"] = instance.steps_per_period;
  // curves are already in driver-mass units
  doc["driver_mass"] = 1.0;
  doc["scale"] = instance.scale;
  if (!instance.edge_weight.empty()) doc["edge_weight"] = instance.edge_weight;
  if (instance.initial_distribution) {
    json w = json::object();
    for (std::size_t v = 0; v < instance.graph.node_count(); ++v) {
      w[instance.graph.nodes()[v]] = (*instance.initial_distribution)[v];
    }
    doc["initial_distribution"] = w;
  }
  return doc;
}

std::vector<double> initial_distribution_or_uniform(const Instance& instance) {
  if (instance.initial_distribution) return *instance.initial_distribution;
  const std::size_t n = instance.graph.node_count();
  return std::vector<double>(n, n == 0 ? 0.0 : 1.0 / static_cast<double>(n));
}

}  // namespace fleetflow
