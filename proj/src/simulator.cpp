#include "fleetflow/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fleetflow {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double parse_number(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw std::invalid_argument("policy option " + key + " is not a number");
  return v;
}

/// Plan action for one edge and step.
struct EdgeQuote {
  std::vector<PriceEntry> entries;  // probability, price, throughput
};

}  // namespace

double real_demand(const DemandCurve& curve, double price) {
  if (price > 0.0) return curve(price);
  const auto cap = curve.ceiling();
  return cap ? std::min(curve.raw_volume(), *cap) : curve.raw_volume();
}

std::string policy_name(const Policy& policy) {
  if (std::holds_alternative<FixedPolicy>(policy)) return "FIXED";
  if (std::holds_alternative<SurgePolicy>(policy)) return "SURGE";
  return "DYNAM";
}

PolicySpec parse_policy_spec(const std::string& text) {
  PolicySpec spec;
  const auto colon = text.find(':');
  std::string kind = text.substr(0, colon);
  std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char c) { return std::tolower(c); });
  if (kind == "fixed") {
    spec.kind = PolicySpec::Kind::Fixed;
  } else if (kind == "surge") {
    spec.kind = PolicySpec::Kind::Surge;
  } else if (kind == "dynam") {
    spec.kind = PolicySpec::Kind::Dynam;
  } else {
    throw std::invalid_argument("unknown policy '" + kind + "'");
  }
  std::stringstream rest(colon == std::string::npos ? "" : text.substr(colon + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("policy option '" + item + "' needs key=value");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "alpha") {
      spec.alpha = parse_number(key, value);
    } else if (key == "beta") {
      const auto dots = value.find("..");
      if (dots == std::string::npos) {
        spec.beta_min = spec.beta_max = parse_number(key, value);
      } else {
        spec.beta_min = parse_number(key, value.substr(0, dots));
        spec.beta_max = parse_number(key, value.substr(dots + 2));
      }
    } else if (key == "plan") {
      spec.plan_path = value;
    } else {
      throw std::invalid_argument("unknown policy option '" + key + "'");
    }
  }
  if (spec.kind != PolicySpec::Kind::Dynam && !(spec.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (spec.kind == PolicySpec::Kind::Surge && !(1.0 <= spec.beta_min && spec.beta_min <= spec.beta_max)) {
    throw std::invalid_argument("surge needs 1 <= beta_min <= beta_max");
  }
  if (spec.kind == PolicySpec::Kind::Dynam && spec.plan_path.empty()) {
    throw std::invalid_argument("dynam policy needs plan=path");
  }
  return spec;
}

DynamPolicy dynam_from_solution(const Solution& solution, const Instance& original) {
  DynamPolicy p;
  p.q = solution.original_q;
  p.envelopes.resize(original.graph.edge_count());
  for (std::size_t e = 0; e < original.graph.edge_count(); ++e) {
    p.envelopes[e] = solution.envelopes.at(solution.unified.map.chain.at(e).front());
  }
  p.source = solution.result.plan.dynamic ? "dynamic plan" : "static plan";
  return p;
}

DynamPolicy dynam_from_plan(const json& plan, const Instance& original) {
  const json& view = plan.at("original");
  const auto edges = view.at("edges").get<std::vector<std::string>>();
  if (edges.size() != original.graph.edge_count()) throw std::invalid_argument("plan edges do not match the instance");
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (edges[e] != original.graph.edge(e).id) throw std::invalid_argument("plan edge order does not match the instance");
  }
  DynamPolicy p;
  p.q = view.at("q").get<std::vector<std::vector<double>>>();
  for (const auto& row : p.q) {
    if (row.size() != edges.size()) throw std::invalid_argument("plan flow rows do not match the edges");
  }
  p.envelopes = build_envelopes(original, plan.value("grid_size", std::size_t{1000}));
  p.source = plan.value("mode", "static") + " plan";
  return p;
}

double surge_multiplier(const Instance& instance, std::size_t node, double available, std::size_t step, double alpha,
                        double beta_min, double beta_max) {
  const auto& out = instance.graph.out_edges(node);
  auto demand = [&](double beta) {
    double d = 0.0;
    for (std::size_t e : out) d += real_demand(instance.demand_at(e, step), alpha * beta * instance.edge_minutes(e));
    return d;
  };
  if (demand(beta_min) <= available) return beta_min;
  if (demand(beta_max) > available) return beta_max;
  double lo = beta_min;
  double hi = beta_max;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (demand(mid) <= available) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

SimTrace run_simulation(const Instance& instance, const Policy& policy, const DriverState& start,
                        const SimConfig& config) {
  const CityGraph& g = instance.graph;
  const std::size_t n = g.node_count();
  const std::size_t E = g.edge_count();
  if (start.available.size() != n || start.in_transit.size() != E) {
    throw std::invalid_argument("start state does not match the graph");
  }
  for (std::size_t e = 0; e < E; ++e) {
    if (start.in_transit[e].size() != static_cast<std::size_t>(g.edge(e).travel_time - 1)) {
      throw std::invalid_argument("start pipeline length does not match travel time of " + g.edge(e).id);
    }
  }
  for (double x : start.available) {
    if (x < 0.0) throw std::invalid_argument("start state has negative mass");
  }
  const double mass0 = start.total_mass();
  if (std::abs(mass0 - 1.0) > 1e-9) throw std::invalid_argument("start state must hold unit driver mass");
  if (config.steps < 1) throw std::invalid_argument("simulation needs at least one step");

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SimTrace trace;
  trace.policy = policy_name(policy);
  DriverState state = start;

  for (std::size_t t = 0; t < config.steps; ++t) {
    SimStep step;
    step.available = state.available;
    step.in_transit = state.in_transit;
    step.mass = state.total_mass();
    step.accepted.assign(E, 0.0);
    step.mean_price.assign(E, kNaN);
    step.demand.assign(n, 0.0);
    std::vector<EdgeQuote> quotes(E);

    if (const auto* dyn = std::get_if<DynamPolicy>(&policy)) {
      const std::vector<double>* row = nullptr;
      if (dyn->q.size() == 1) {
        row = &dyn->q.front();
      } else if (t < dyn->q.size()) {
        row = &dyn->q[t];
      }
      for (std::size_t v = 0; v < n && row; ++v) {
        double planned = 0.0;
        for (std::size_t e : g.out_edges(v)) planned += std::max(0.0, (*row)[e]);
        // Plans are feasible from their own start; from any other state the
        // launches are scaled into the available supply.
        const double factor = planned > state.available[v] ? state.available[v] / planned : 1.0;
        for (std::size_t e : g.out_edges(v)) {
          const double target = std::max(0.0, (*row)[e]) * factor;
          if (!(target > 0.0)) continue;
          const auto& envs = dyn->envelopes.at(e);
          const IronedObjective& env = envs.size() == 1 ? envs.front() : envs.at(instance.period_of_step(t));
          const DemandCurve& curve = instance.demand_at(e, t);
          const PriceMixture mix = price_mixture(env, curve, std::min(target, env.max_throughput()));
          if (config.sampled) {
            double u = unit(rng);
            for (const auto& entry : mix.entries) {
              if (u <= entry.probability || &entry == &mix.entries.back()) {
                quotes[e].entries.push_back({entry.price, 1.0, entry.throughput});
                break;
              }
              u -= entry.probability;
            }
          } else {
            quotes[e].entries = mix.entries;
          }
        }
      }
      for (std::size_t e = 0; e < E; ++e) {
        const Edge& edge = g.edge(e);
        const DemandCurve& curve = instance.demand_at(e, t);
        double served = 0.0;
        double paid = 0.0;
        for (const auto& entry : quotes[e].entries) {
          double thr = entry.throughput;
          if (config.sampled) {
            thr *= 1.0 + config.demand_noise * (2.0 * unit(rng) - 1.0);
          }
          served += entry.probability * thr;
          if (!std::isinf(entry.price)) {
            paid += entry.probability * entry.price * thr;
            step.demand[edge.from] += entry.probability * real_demand(curve, entry.price);
          }
          step.revenue += entry.probability * (std::isinf(entry.price) ? 0.0 : entry.price - edge.cost) * thr;
        }
        step.accepted[e] = served;
        if (served > 0.0) step.mean_price[e] = paid / served;
      }
      // Sampled noise may overshoot a node; trim proportionally.
      for (std::size_t v = 0; v < n; ++v) {
        double out = 0.0;
        for (std::size_t e : g.out_edges(v)) out += step.accepted[e];
        if (out > state.available[v] * (1.0 + 1e-12) + 1e-15) {
          if (!config.sampled) throw std::logic_error("planned flows exceed available drivers");
          const double f = state.available[v] / out;
          for (std::size_t e : g.out_edges(v)) {
            step.revenue -= (1.0 - f) * step.accepted[e] * (std::isnan(step.mean_price[e]) ? 0.0
                                                                                           : step.mean_price[e] - g.edge(e).cost);
            step.accepted[e] *= f;
          }
        }
      }
    } else {
      double alpha = 0.0;
      const SurgePolicy* surge = std::get_if<SurgePolicy>(&policy);
      alpha = surge ? surge->alpha : std::get<FixedPolicy>(policy).alpha;
      for (std::size_t v = 0; v < n; ++v) {
        const double beta =
            surge ? surge_multiplier(instance, v, state.available[v], t, alpha, surge->beta_min, surge->beta_max) : 1.0;
        double induced = 0.0;
        std::vector<double> price(g.out_edges(v).size());
        std::vector<double> want(price.size());
        for (std::size_t k = 0; k < price.size(); ++k) {
          const std::size_t e = g.out_edges(v)[k];
          price[k] = alpha * beta * instance.edge_minutes(e);
          want[k] = real_demand(instance.demand_at(e, t), price[k]);
          if (config.sampled) want[k] *= 1.0 + config.demand_noise * (2.0 * unit(rng) - 1.0);
          induced += want[k];
        }
        step.demand[v] = induced;
        const double factor = induced > state.available[v] ? state.available[v] / induced : 1.0;
        for (std::size_t k = 0; k < price.size(); ++k) {
          const std::size_t e = g.out_edges(v)[k];
          step.accepted[e] = want[k] * factor;
          if (step.accepted[e] > 0.0) step.mean_price[e] = price[k];
          step.revenue += step.accepted[e] * (price[k] - g.edge(e).cost);
        }
      }
    }

    step.supply_ratio.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
      if (step.demand[v] > 0.0) step.supply_ratio[v] = state.available[v] / step.demand[v];
    }

    // Advance: launches leave their origin, pipelines move one slot.
    DriverState next = state;
    for (std::size_t e = 0; e < E; ++e) {
      const Edge& edge = g.edge(e);
      next.available[edge.from] -= step.accepted[e];
      auto& slots = next.in_transit[e];
      if (slots.empty()) {
        next.available[edge.to] += step.accepted[e];
        continue;
      }
      next.available[edge.to] += slots.front();
      for (std::size_t j = 0; j + 1 < slots.size(); ++j) slots[j] = slots[j + 1];
      slots.back() = step.accepted[e];
    }
    for (double& x : next.available) {
      if (x < 0.0 && x > -1e-12) x = 0.0;
    }
    trace.steps.push_back(std::move(step));
    state = std::move(next);
  }
  return trace;
}

double SimTrace::total_revenue() const {
  double total = 0.0;
  for (const auto& s : steps) total += s.revenue;
  return total;
}

double SimTrace::time_average_revenue() const {
  return steps.empty() ? 0.0 : total_revenue() / static_cast<double>(steps.size());
}

double SimTrace::supply_deviation() const {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& s : steps) {
    for (const auto& r : s.supply_ratio) {
      if (r) {
        total += std::abs(*r - 1.0);
        ++count;
      }
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

double SimTrace::max_mass_error() const {
  double worst = 0.0;
  for (const auto& s : steps) worst = std::max(worst, std::abs(s.mass - 1.0));
  return worst;
}

std::string SimTrace::to_csv(const Instance& instance) const {
  const CityGraph& g = instance.graph;
  std::ostringstream out;
  out << std::setprecision(12);
  out << "step,revenue,mass";
  for (const auto& v : g.nodes()) out << ",available_" << v;
  for (const auto& e : g.edges()) out << ",in_transit_" << e.id;
  for (const auto& v : g.nodes()) out << ",demand_" << v;
  for (const auto& v : g.nodes()) out << ",supply_ratio_" << v;
  for (const auto& e : g.edges()) out << ",accepted_" << e.id;
  for (const auto& e : g.edges()) out << ",price_" << e.id;
  out << "\n";
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const SimStep& s = steps[t];
    out << t << "," << s.revenue << "," << s.mass;
    for (double x : s.available) out << "," << x;
    for (const auto& slots : s.in_transit) {
      double sum = 0.0;
      for (double x : slots) sum += x;
      out << "," << sum;
    }
    for (double x : s.demand) out << "," << x;
    for (const auto& r : s.supply_ratio) {
      out << ",";
      if (r) out << *r;
    }
    for (double x : s.accepted) out << "," << x;
    for (double x : s.mean_price) {
      out << ",";
      if (!std::isnan(x)) out << x;
    }
    out << "\n";
  }
  return out.str();
}

json SimTrace::summary(const Instance& instance) const {
  json revenue = json::array();
  for (const auto& s : steps) revenue.push_back(s.revenue);
  return {{"policy", policy},
          {"steps", steps.size()},
          {"time_average_revenue", time_average_revenue()},
          {"total_revenue", total_revenue()},
          {"time_average_revenue_denormalized", time_average_revenue() * instance.scale},
          {"supply_deviation", supply_deviation()},
          {"max_mass_error", max_mass_error()},
          {"revenue", revenue}};
}

json PolicyComparison::to_json(const Instance& instance) const {
  json out = json::array();
  for (const auto& t : traces) {
    json s = t.summary(instance);
    s.erase("revenue");
    out.push_back(s);
  }
  return {{"policies", out}};
}

std::string PolicyComparison::to_csv() const {
  std::ostringstream out;
  out << std::setprecision(12) << "step";
  for (const auto& t : traces) out << "," << t.policy << "_revenue";
  out << "\n";
  std::size_t steps = 0;
  for (const auto& t : traces) steps = std::max(steps, t.steps.size());
  for (std::size_t i = 0; i < steps; ++i) {
    out << i;
    for (const auto& t : traces) {
      out << ",";
      if (i < t.steps.size()) out << t.steps[i].revenue;
    }
    out << "\n";
  }
  return out.str();
}

PolicyComparison compare_policies(const Instance& instance, const std::vector<Policy>& policies,
                                  const DriverState& start, const SimConfig& config) {
  PolicyComparison c;
  for (const auto& p : policies) c.traces.push_back(run_simulation(instance, p, start, config));
  return c;
}

}  // namespace fleetflow
