#include "fleetflow/solver.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fleetflow/duality.hpp"

namespace fleetflow {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<LpSegment> column_segments(const IronedObjective& env, double weight) {
  std::vector<LpSegment> out;
  for (const auto& s : pwl_discretize(env).segments) out.push_back({s.length, weight * s.marginal});
  return out;
}

std::size_t period_index(const Instance& instance, std::size_t step) {
  return instance.is_static() ? 0 : instance.period_of_step(step);
}

const IronedObjective& envelope_for(const EnvelopeTable& table, std::size_t edge, std::size_t period) {
  const auto& row = table.at(edge);
  return row.size() == 1 ? row.front() : row.at(period);
}

}  // namespace

EnvelopeTable build_envelopes(const Instance& instance, std::size_t grid_size) {
  EnvelopeTable table(instance.graph.edge_count());
  for (std::size_t e = 0; e < instance.graph.edge_count(); ++e) {
    const double cost = instance.graph.edge(e).cost;
    for (const auto& curve : instance.demand.at(e)) table[e].push_back(iron(curve, cost, instance.objective, grid_size));
  }
  return table;
}

EnvelopeTable build_envelopes(const Instance& original, const ExpandedInstance& expanded, std::size_t grid_size) {
  const EnvelopeTable base = build_envelopes(original, grid_size);
  EnvelopeTable table;
  table.reserve(expanded.map.edge_origin.size());
  for (const auto& [orig, pos] : expanded.map.edge_origin) table.push_back(base.at(orig));
  return table;
}

SupplyConstraint SupplyConstraint::total(std::optional<double> budget) {
  SupplyConstraint s;
  s.kind = SupplyKind::TotalAccumulated;
  s.budget = budget;
  return s;
}

SupplyConstraint SupplyConstraint::soft(std::vector<SupplyTier> tiers) {
  for (std::size_t k = 0; k < tiers.size(); ++k) {
    if (!(tiers[k].capacity > 0.0)) throw std::invalid_argument("supply tiers need positive capacity");
    if (tiers[k].marginal_cost < 0.0) throw std::invalid_argument("supply tiers need non-negative marginal cost");
    if (k > 0 && tiers[k].marginal_cost < tiers[k - 1].marginal_cost) {
      throw std::invalid_argument("supply tier marginal costs must be non-decreasing");
    }
  }
  SupplyConstraint s;
  s.kind = SupplyKind::Soft;
  s.tiers = std::move(tiers);
  return s;
}

SupplyConstraint SupplyConstraint::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "per_step" || head == "per-step") return per_step();
  if (head == "total") return rest.empty() ? total() : total(std::stod(rest));
  if (head == "soft") {
    std::vector<SupplyTier> tiers;
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto at = item.find('@');
      if (at == std::string::npos) throw std::invalid_argument("soft tier must read capacity@cost: " + item);
      const std::string cap = item.substr(0, at);
      tiers.push_back({cap == "inf" ? kInf : std::stod(cap), std::stod(item.substr(at + 1))});
    }
    if (tiers.empty()) throw std::invalid_argument("soft supply needs at least one tier");
    return soft(std::move(tiers));
  }
  throw std::invalid_argument("unknown supply constraint '" + text + "'");
}

std::string SupplyConstraint::name() const {
  switch (kind) {
    case SupplyKind::PerStep: return "per_step";
    case SupplyKind::TotalAccumulated: return "total";
    case SupplyKind::Soft: return "soft";
  }
  return "per_step";
}

double SupplyConstraint::attraction_cost(double amount) const {
  double total = 0.0;
  for (const auto& t : tiers) {
    if (amount <= 0.0) break;
    const double take = std::min(amount, t.capacity);
    total += take * t.marginal_cost;
    amount -= take;
  }
  return total;
}

Slopes SupplyConstraint::marginal_cost(double amount) const {
  if (tiers.empty()) return {0.0, 0.0};
  double start = 0.0;
  for (std::size_t k = 0; k < tiers.size(); ++k) {
    const double end = start + tiers[k].capacity;
    const double tol = 1e-9 * std::max(1.0, std::abs(end));
    if (amount < end - tol) {
      const double left = (k > 0 && amount <= start + tol) ? tiers[k - 1].marginal_cost : tiers[k].marginal_cost;
      return {left, tiers[k].marginal_cost};
    }
    if (amount <= end + tol) {
      const double right = k + 1 < tiers.size() ? tiers[k + 1].marginal_cost : kInf;
      return {tiers[k].marginal_cost, right};
    }
    start = end;
  }
  return {tiers.back().marginal_cost, kInf};
}

Program build_static_program(const ExpandedInstance& unified, const EnvelopeTable& envelopes) {
  const CityGraph& g = unified.instance.graph;
  Program p;
  p.nodes = g.node_count();
  p.edges = g.edge_count();
  LinearProgram& lp = p.lp;

  p.q_col.assign(1, std::vector<std::ptrdiff_t>(p.edges, -1));
  p.w_col.assign(1, std::vector<std::ptrdiff_t>(p.nodes, -1));
  for (std::size_t e = 0; e < p.edges; ++e) {
    const double weight = unified_weight(unified, e, false);
    p.q_col[0][e] = static_cast<std::ptrdiff_t>(
        lp.add_pwl_column(column_segments(envelope_for(envelopes, e, 0), weight), "q[" + g.edge(e).id + "]"));
  }
  for (std::size_t v = 0; v < p.nodes; ++v) {
    p.w_col[0][v] = static_cast<std::ptrdiff_t>(lp.add_column(0.0, kInf, "w[" + g.nodes()[v] + "]"));
  }

  const auto mass = lp.add_row(LinearProgram::Sense::Equal, 1.0, "mass");
  p.mass_row = {static_cast<std::ptrdiff_t>(mass)};
  for (std::size_t v = 0; v < p.nodes; ++v) lp.add(mass, static_cast<std::size_t>(p.w_col[0][v]), 1.0);

  p.cap_row.assign(1, std::vector<std::ptrdiff_t>(p.nodes, -1));
  p.balance_row.assign(1, std::vector<std::ptrdiff_t>(p.nodes, -1));
  for (std::size_t v = 0; v < p.nodes; ++v) {
    const auto sense = unified.map.is_virtual(v) ? LinearProgram::Sense::Equal : LinearProgram::Sense::LessEqual;
    const auto cap = lp.add_row(sense, 0.0, "cap[" + g.nodes()[v] + "]");
    p.cap_row[0][v] = static_cast<std::ptrdiff_t>(cap);
    for (std::size_t e : g.out_edges(v)) lp.add(cap, static_cast<std::size_t>(p.q_col[0][e]), 1.0);
    lp.add(cap, static_cast<std::size_t>(p.w_col[0][v]), -1.0);
  }
  // Balance rows sum to zero; node 0 is the reference and gets mu = 0.
  for (std::size_t v = 1; v < p.nodes; ++v) {
    const auto row = lp.add_row(LinearProgram::Sense::Equal, 0.0, "balance[" + g.nodes()[v] + "]");
    p.balance_row[0][v] = static_cast<std::ptrdiff_t>(row);
    for (std::size_t e : g.out_edges(v)) lp.add(row, static_cast<std::size_t>(p.q_col[0][e]), 1.0);
    for (std::size_t e : g.in_edges(v)) lp.add(row, static_cast<std::size_t>(p.q_col[0][e]), -1.0);
  }
  return p;
}

Program build_dynamic_program(const ExpandedInstance& unified, const EnvelopeTable& envelopes, std::size_t horizon,
                              const std::vector<double>& w1, const SupplyConstraint& supply) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1 step");
  const Instance& inst = unified.instance;
  const CityGraph& g = inst.graph;
  if (w1.size() != g.node_count()) throw std::invalid_argument("initial distribution does not match the graph");
  double mass = 0.0;
  for (double x : w1) {
    if (x < 0.0) throw std::invalid_argument("initial distribution has negative mass");
    mass += x;
  }
  if (supply.kind == SupplyKind::PerStep && std::abs(mass - 1.0) > 1e-9) {
    throw std::invalid_argument("initial distribution must sum to 1 under per-step supply");
  }

  Program p;
  p.dynamic = true;
  p.horizon = horizon;
  p.supply = supply;
  p.nodes = g.node_count();
  p.edges = g.edge_count();
  p.w1 = w1;
  for (const auto& e : g.edges()) p.edge_to.push_back(e.to);
  LinearProgram& lp = p.lp;
  const std::size_t T = horizon;
  const auto& nodes = g.nodes();
  auto tag = [](const std::string& name, std::size_t t) { return name + "@" + std::to_string(t); };

  p.q_col.assign(T, std::vector<std::ptrdiff_t>(p.edges, -1));
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t period = period_index(inst, t);
    for (std::size_t e = 0; e < p.edges; ++e) {
      const double weight = unified_weight(unified, e, true);
      const std::string name = tag("q[" + g.edge(e).id + "]", t);
      std::size_t col;
      if (weight > 0.0) {
        col = lp.add_pwl_column(column_segments(envelope_for(envelopes, e, period), weight), name);
      } else {
        col = lp.add_column(0.0, kInf, name);
      }
      p.q_col[t][e] = static_cast<std::ptrdiff_t>(col);
    }
  }

  if (supply.kind == SupplyKind::TotalAccumulated) {
    const double budget = supply.budget.value_or(static_cast<double>(T));
    p.w_col.assign(T, std::vector<std::ptrdiff_t>(p.nodes, -1));
    p.cap_row.assign(T, std::vector<std::ptrdiff_t>(p.nodes, -1));
    p.balance_row.assign(T, std::vector<std::ptrdiff_t>(p.nodes, -1));
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t v = 0; v < p.nodes; ++v) {
        p.w_col[t][v] = static_cast<std::ptrdiff_t>(lp.add_column(0.0, kInf, tag("w[" + nodes[v] + "]", t)));
      }
    }
    const auto brow = lp.add_row(LinearProgram::Sense::Equal, budget, "budget");
    p.mass_row = {static_cast<std::ptrdiff_t>(brow)};
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t v = 0; v < p.nodes; ++v) {
        const auto w = static_cast<std::size_t>(p.w_col[t][v]);
        lp.add(brow, w, 1.0);
        const bool virt = unified.map.is_virtual(v);
        const auto cap = lp.add_row(virt ? LinearProgram::Sense::Equal : LinearProgram::Sense::LessEqual, 0.0,
                                    tag("cap[" + nodes[v] + "]", t));
        p.cap_row[t][v] = static_cast<std::ptrdiff_t>(cap);
        for (std::size_t e : g.out_edges(v)) lp.add(cap, static_cast<std::size_t>(p.q_col[t][e]), 1.0);
        lp.add(cap, w, -1.0);
        if (!virt) continue;
        // Drivers on a chain cannot leave it: w_t = w_{t-1} - OUT + IN.
        const auto def = lp.add_row(LinearProgram::Sense::Equal, t == 0 ? w1[v] : 0.0, tag("def[" + nodes[v] + "]", t));
        p.balance_row[t][v] = static_cast<std::ptrdiff_t>(def);
        lp.add(def, w, 1.0);
        if (t > 0) {
          lp.add(def, static_cast<std::size_t>(p.w_col[t - 1][v]), -1.0);
          for (std::size_t e : g.out_edges(v)) lp.add(def, static_cast<std::size_t>(p.q_col[t - 1][e]), 1.0);
          for (std::size_t e : g.in_edges(v)) lp.add(def, static_cast<std::size_t>(p.q_col[t - 1][e]), -1.0);
        }
      }
    }
    return p;
  }

  // Time-expanded flow form: drivers at (t, v) either launch a trip or idle
  // until t + 1. Idling is impossible on virtual nodes.
  p.idle_col.assign(T, std::vector<std::ptrdiff_t>(p.nodes, -1));
  p.balance_row.assign(T, std::vector<std::ptrdiff_t>(p.nodes, -1));
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t v = 0; v < p.nodes; ++v) {
      p.balance_row[t][v] = static_cast<std::ptrdiff_t>(
          lp.add_row(LinearProgram::Sense::Equal, t == 0 ? w1[v] : 0.0, tag("balance[" + nodes[v] + "]", t)));
    }
  }
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t e = 0; e < p.edges; ++e) {
      const Edge& edge = g.edge(e);
      const auto col = static_cast<std::size_t>(p.q_col[t][e]);
      lp.add(static_cast<std::size_t>(p.balance_row[t][edge.from]), col, 1.0);
      if (t + 1 < T) lp.add(static_cast<std::size_t>(p.balance_row[t + 1][edge.to]), col, -1.0);
    }
    for (std::size_t v = 0; v < p.nodes; ++v) {
      if (unified.map.is_virtual(v)) continue;
      const auto col = lp.add_column(0.0, kInf, tag("idle[" + nodes[v] + "]", t));
      p.idle_col[t][v] = static_cast<std::ptrdiff_t>(col);
      lp.add(static_cast<std::size_t>(p.balance_row[t][v]), col, 1.0);
      if (t + 1 < T) lp.add(static_cast<std::size_t>(p.balance_row[t + 1][v]), col, -1.0);
    }
  }
  if (supply.kind == SupplyKind::Soft) {
    std::vector<LpSegment> cost;
    for (const auto& tier : supply.tiers) cost.push_back({tier.capacity, -tier.marginal_cost});
    p.join_col.assign(T, std::vector<std::ptrdiff_t>(p.nodes, -1));
    for (std::size_t t = 0; t < T; ++t) {
      const auto row = lp.add_row(LinearProgram::Sense::Equal, 0.0, tag("joins", t));
      p.mass_row.push_back(static_cast<std::ptrdiff_t>(row));
      const auto attract = lp.add_pwl_column(cost, tag("attract", t));
      p.attract_col.push_back(static_cast<std::ptrdiff_t>(attract));
      lp.add(row, attract, -1.0);
      for (std::size_t v = 0; v < p.nodes; ++v) {
        if (unified.map.is_virtual(v)) continue;
        const auto col = lp.add_column(0.0, kInf, tag("join[" + nodes[v] + "]", t));
        p.join_col[t][v] = static_cast<std::ptrdiff_t>(col);
        lp.add(row, col, 1.0);
        lp.add(static_cast<std::size_t>(p.balance_row[t][v]), col, -1.0);
      }
    }
  }
  return p;
}

SolveResult solve(const Program& program, const SolverConfig& config) {
  SimplexOptions opt;
  opt.max_pivots = config.max_pivots;
  const LpResult lp = solve_lp(program.lp, opt);

  SolveResult out;
  out.status = lp.status;
  out.pivots = lp.pivots;
  out.breakpoint_steps = lp.breakpoint_steps;
  out.primal_residual = program.lp.max_violation(lp.x);

  FlowPlan& plan = out.plan;
  DualCertificate& cert = out.cert;
  plan.dynamic = program.dynamic;
  plan.horizon = program.horizon;
  plan.supply = program.supply.kind;
  const std::size_t T = program.horizon;
  const std::size_t n = program.nodes;
  auto val = [&](std::ptrdiff_t col) { return col < 0 ? 0.0 : lp.x[static_cast<std::size_t>(col)]; };
  auto dual = [&](std::ptrdiff_t row) { return row < 0 ? 0.0 : lp.duals[static_cast<std::size_t>(row)]; };

  plan.q.assign(T, std::vector<double>(program.edges, 0.0));
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t e = 0; e < program.edges; ++e) plan.q[t][e] = val(program.q_col[t][e]);
  }
  plan.w.assign(T, std::vector<double>(n, 0.0));
  cert.mu.assign(T, std::vector<double>(n, 0.0));
  cert.nu.assign(T, std::vector<double>(n, 0.0));

  if (!program.dynamic || program.supply.kind == SupplyKind::TotalAccumulated) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t v = 0; v < n; ++v) {
        plan.w[t][v] = val(program.w_col[t][v]);
        cert.nu[t][v] = dual(program.cap_row[t][v]);
        cert.mu[t][v] = dual(program.balance_row[t][v]);
      }
    }
    cert.lambda = {dual(program.mass_row.front())};
  } else {
    // w_t = IN_{t-1} + idle_{t-1} + joined_t, the balance-row right side.
    if (program.supply.kind == SupplyKind::Soft) plan.joined.assign(T, std::vector<double>(n, 0.0));
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t v = 0; v < n; ++v) {
        cert.mu[t][v] = dual(program.balance_row[t][v]);
        if (!plan.joined.empty()) plan.joined[t][v] = val(program.join_col[t][v]);
      }
    }
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double>& w = plan.w[t];
      if (t == 0) {
        w = program.w1;
      } else {
        for (std::size_t v = 0; v < n; ++v) w[v] = val(program.idle_col[t - 1][v]);
        for (std::size_t e = 0; e < program.edges; ++e) w[program.edge_to[e]] += plan.q[t - 1][e];
      }
      if (!plan.joined.empty()) {
        for (std::size_t v = 0; v < n; ++v) w[v] += plan.joined[t][v];
      }
    }
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t v = 0; v < n; ++v) {
        const double next = t + 1 < T ? cert.mu[t + 1][v] : 0.0;
        cert.nu[t][v] = cert.mu[t][v] - next;
      }
    }
    cert.lambda.assign(T, 0.0);
    if (program.supply.kind == SupplyKind::Soft) {
      for (std::size_t t = 0; t < T; ++t) cert.lambda[t] = dual(program.mass_row[t]);
    }
  }
  return out;
}

double unified_weight(const ExpandedInstance& unified, std::size_t edge, bool dynamic) {
  const double w = unified.instance.weight(edge);
  if (!dynamic) return w;
  const auto [orig, pos] = unified.map.edge_origin.at(edge);
  return pos == 0 ? w * static_cast<double>(unified.map.chain.at(orig).size()) : 0.0;
}

namespace {

void fill_objectives(Solution& s, bool dynamic, const SupplyConstraint& supply) {
  FlowPlan& plan = s.result.plan;
  const Instance& inst = s.unified.instance;
  plan.step_objective.assign(plan.horizon, 0.0);
  plan.objective = 0.0;
  for (std::size_t t = 0; t < plan.horizon; ++t) {
    double total = 0.0;
    const std::size_t period = period_index(inst, t);
    for (std::size_t e = 0; e < inst.graph.edge_count(); ++e) {
      const double weight = unified_weight(s.unified, e, dynamic);
      if (weight == 0.0) continue;
      const auto& env = envelope_for(s.envelopes, e, period);
      total += weight * env.value(std::min(plan.q[t][e], env.max_throughput()));
    }
    if (supply.kind == SupplyKind::Soft && !plan.joined.empty()) {
      double joined = 0.0;
      for (double x : plan.joined[t]) joined += x;
      total -= supply.attraction_cost(joined);
    }
    plan.step_objective[t] = total;
    plan.objective += total;
  }
}

void certify(Solution& s, const SupplyConstraint& supply, const SolverConfig& config) {
  KKTTolerances tol;
  tol.stationarity = config.stationarity_tol;
  tol.slackness = config.slackness_tol;
  tol.feasibility = config.feasibility_tol;
  const KKTReport report = kkt_check(s.unified, s.envelopes, s.result.plan, s.result.cert, supply, tol);
  s.stationarity_residual = report.max_stationarity;
  s.slackness_residual = report.slackness;
  s.certified = s.result.status == LpStatus::Optimal && s.result.primal_residual <= config.feasibility_tol &&
                report.passed;
  if (s.result.status != LpStatus::Optimal) s.notes.push_back("simplex stopped: " + to_string(s.result.status));
  for (const auto& f : report.failures) s.notes.push_back(f);
}

}  // namespace

Solution solve_static(const Instance& instance, const SolverConfig& config) {
  if (!instance.is_static()) throw std::invalid_argument("static solve needs a single-period instance");
  Solution s;
  s.unified = expand(instance);
  s.envelopes = build_envelopes(instance, s.unified, config.grid_size);
  s.grid_size = config.grid_size;
  const Program program = build_static_program(s.unified, s.envelopes);
  s.result = solve(program, config);
  fill_objectives(s, false, {});
  certify(s, {}, config);
  try {
    auto c = contract_static(s.unified, instance, s.result.plan.q.front(), s.result.plan.w.front(),
                             std::max(config.feasibility_tol, 1e-7));
    s.original_q = {c.q};
    s.original_state = {c.state};
  } catch (const std::runtime_error& err) {
    s.certified = false;
    s.notes.emplace_back(err.what());
    std::vector<double> q(instance.graph.edge_count());
    for (std::size_t e = 0; e < q.size(); ++e) q[e] = s.result.plan.q.front()[s.unified.map.chain[e].front()];
    s.original_q = {q};
    s.original_state = {s.unified.map.contract_state(instance.graph, s.result.plan.w.front())};
  }
  return s;
}

Solution solve_dynamic(const Instance& instance, std::size_t horizon, const DriverState& start,
                       const SupplyConstraint& supply, const SolverConfig& config) {
  Solution s;
  s.unified = expand(instance);
  s.envelopes = build_envelopes(instance, s.unified, config.grid_size);
  s.grid_size = config.grid_size;
  const std::vector<double> w1 = s.unified.map.expand_state(start);
  s.supply = supply;
  const Program program = build_dynamic_program(s.unified, s.envelopes, horizon, w1, supply);
  s.result = solve(program, config);
  fill_objectives(s, true, supply);
  certify(s, supply, config);
  try {
    s.original_q = contract_dynamic(s.unified, s.result.plan.q, std::max(config.feasibility_tol, 1e-7));
  } catch (const std::runtime_error& err) {
    s.certified = false;
    s.notes.emplace_back(err.what());
  }
  if (s.original_q.empty()) {
    for (const auto& row : s.result.plan.q) {
      std::vector<double> q(instance.graph.edge_count());
      for (std::size_t e = 0; e < q.size(); ++e) q[e] = row[s.unified.map.chain[e].front()];
      s.original_q.push_back(std::move(q));
    }
  }
  for (const auto& w : s.result.plan.w) s.original_state.push_back(s.unified.map.contract_state(instance.graph, w));
  return s;
}

namespace {

}  // namespace

json supply_to_json(const SupplyConstraint& supply) {
  json out = {{"kind", supply.name()}};
  if (supply.budget) out["budget"] = *supply.budget;
  if (!supply.tiers.empty()) {
    json tiers = json::array();
    for (const auto& t : supply.tiers) {
      tiers.push_back({std::isinf(t.capacity) ? json(nullptr) : json(t.capacity), t.marginal_cost});
    }
    out["tiers"] = tiers;
  }
  return out;
}

SupplyConstraint supply_from_json(const json& doc) {
  const std::string kind = doc.value("kind", "per_step");
  if (kind == "per_step") return SupplyConstraint::per_step();
  if (kind == "total") {
    return doc.contains("budget") ? SupplyConstraint::total(doc.at("budget").get<double>()) : SupplyConstraint::total();
  }
  std::vector<SupplyTier> tiers;
  for (const auto& t : doc.at("tiers")) {
    tiers.push_back({t.at(0).is_null() ? kInf : t.at(0).get<double>(), t.at(1).get<double>()});
  }
  return SupplyConstraint::soft(std::move(tiers));
}

json plan_to_json(const Solution& s, const Instance& original) {
  const FlowPlan& plan = s.result.plan;
  const CityGraph& ug = s.unified.instance.graph;
  json edges = json::array();
  for (const auto& e : ug.edges()) edges.push_back(e.id);
  json unified = {{"nodes", ug.nodes()}, {"edges", edges}, {"q", plan.q}, {"w", plan.w}};
  if (!plan.joined.empty()) unified["joined"] = plan.joined;

  json orig_edges = json::array();
  for (const auto& e : original.graph.edges()) orig_edges.push_back(e.id);
  json available = json::array();
  json transit = json::object();
  for (std::size_t e = 0; e < original.graph.edge_count(); ++e) transit[original.graph.edge(e).id] = json::array();
  for (const auto& st : s.original_state) {
    available.push_back(st.available);
    for (std::size_t e = 0; e < original.graph.edge_count(); ++e) {
      transit[original.graph.edge(e).id].push_back(st.in_transit[e]);
    }
  }
  json view = {{"nodes", original.graph.nodes()},
               {"edges", orig_edges},
               {"q", s.original_q},
               {"available", available},
               {"in_transit", transit}};

  json doc = {{"mode", plan.dynamic ? "dynamic" : "static"},
              {"horizon", plan.horizon},
              {"objective", plan.objective},
              {"step_objective", plan.step_objective},
              {"objective_kind", original.objective.name()},
              {"scale", original.scale},
              {"grid_size", s.grid_size},
              {"certified", s.certified},
              {"status", to_string(s.result.status)},
              {"primal_residual", s.result.primal_residual},
              {"stationarity_residual", s.stationarity_residual},
              {"slackness_residual", s.slackness_residual},
              {"pivots", s.result.pivots},
              {"notes", s.notes},
              {"unified", unified},
              {"original", view},
              {"mapping", s.unified.map.to_json(original.graph, ug)}};
  if (plan.dynamic) doc["supply"] = supply_to_json(s.supply);
  return doc;
}

json certificate_to_json(const Solution& s) {
  const DualCertificate& c = s.result.cert;
  return {{"nodes", s.unified.instance.graph.nodes()},
          {"mode", s.result.plan.dynamic ? "dynamic" : "static"},
          {"lambda", c.lambda},
          {"mu", c.mu},
          {"nu", c.nu}};
}

namespace {

std::vector<std::vector<double>> matrix(const json& doc, const char* key, std::size_t width) {
  auto m = doc.at(key).get<std::vector<std::vector<double>>>();
  for (const auto& row : m) {
    if (row.size() != width) throw std::invalid_argument(std::string("plan field '") + key + "' has wrong width");
  }
  return m;
}

}  // namespace

FlowPlan plan_from_json(const json& doc, const CityGraph& unified) {
  FlowPlan plan;
  plan.dynamic = doc.value("mode", "static") == "dynamic";
  const json& u = doc.at("unified");
  if (u.at("nodes").get<std::vector<std::string>>() != unified.nodes()) {
    throw std::invalid_argument("plan nodes do not match the instance");
  }
  if (u.at("edges").size() != unified.edge_count()) throw std::invalid_argument("plan edges do not match the instance");
  plan.q = matrix(u, "q", unified.edge_count());
  plan.w = matrix(u, "w", unified.node_count());
  if (u.contains("joined")) plan.joined = matrix(u, "joined", unified.node_count());
  plan.horizon = plan.q.size();
  if (plan.w.size() != plan.horizon) throw std::invalid_argument("plan q and w cover different horizons");
  plan.objective = doc.value("objective", 0.0);
  plan.step_objective = doc.value("step_objective", std::vector<double>{});
  if (doc.contains("supply")) plan.supply = supply_from_json(doc.at("supply")).kind;
  return plan;
}

DualCertificate certificate_from_json(const json& doc, const CityGraph& unified) {
  if (doc.at("nodes").get<std::vector<std::string>>() != unified.nodes()) {
    throw std::invalid_argument("certificate nodes do not match the instance");
  }
  DualCertificate c;
  c.lambda = doc.at("lambda").get<std::vector<double>>();
  c.mu = matrix(doc, "mu", unified.node_count());
  c.nu = matrix(doc, "nu", unified.node_count());
  return c;
}

}  // namespace fleetflow
