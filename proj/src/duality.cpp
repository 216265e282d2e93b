#include "fleetflow/duality.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fleetflow {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const IronedObjective& envelope_at(const EnvelopeTable& table, const Instance& inst, std::size_t edge, std::size_t t) {
  const auto& row = table.at(edge);
  if (row.size() == 1) return row.front();
  return row.at(inst.period_of_step(t));
}

/// Distance from x to the (weighted) subgradient of the envelope at q,
/// one-sided at the ends of the domain.
double stationarity_gap(const IronedObjective& env, double weight, double q, double x, double kink) {
  const double top = env.max_throughput();
  if (weight == 0.0) {
    // Flat zero objective on [0, inf): needs x = 0, or x >= 0 at q = 0.
    return q <= kink ? std::max(0.0, -x) : std::abs(x);
  }
  if (!(top > 0.0)) return 0.0;
  const Slopes s = env.slopes(std::clamp(q, 0.0, top), kink);
  const double left = weight * s.left;
  const double right = weight * s.right;
  if (q <= kink) return std::max(0.0, right - x);
  if (q >= top - kink) return std::max(0.0, x - left);
  if (x > left) return x - left;
  if (x < right) return right - x;
  return 0.0;
}

/// sup over q in [0, D(0)] of weight * env(q) - x q; attained at a breakpoint.
double edge_sup(const IronedObjective& env, double weight, double x, double tol) {
  if (weight == 0.0) return x >= -tol ? 0.0 : kInf;
  double best = 0.0;
  for (const auto& b : env.breakpoints()) best = std::max(best, weight * b.value - x * b.q);
  return best;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

json KKTReport::to_json() const {
  return {{"passed", passed},
          {"max_stationarity", max_stationarity},
          {"dual_feasibility", dual_feasibility},
          {"slackness", slackness},
          {"primal_feasibility", primal_feasibility},
          {"primal_objective", primal_objective},
          {"dual_function", dual_function},
          {"gap", gap},
          {"failures", failures}};
}

std::string KKTReport::summary() const {
  std::ostringstream out;
  out << std::setprecision(6);
  out << "KKT " << (passed ? "PASS" : "FAIL") << "\n"
      << "  stationarity       " << max_stationarity << "\n"
      << "  dual feasibility   " << dual_feasibility << "\n"
      << "  slackness          " << slackness << "\n"
      << "  primal feasibility " << primal_feasibility << "\n"
      << "  primal objective   " << primal_objective << "\n"
      << "  duality gap        " << gap << "\n";
  for (const auto& f : failures) out << "  ! " << f << "\n";
  return out.str();
}

KKTReport kkt_check(const ExpandedInstance& unified, const EnvelopeTable& envelopes, const FlowPlan& plan,
                    const DualCertificate& cert, const SupplyConstraint& supply, const KKTTolerances& tol) {
  const Instance& inst = unified.instance;
  const CityGraph& g = inst.graph;
  const std::size_t n = g.node_count();
  const std::size_t E = g.edge_count();
  const std::size_t T = plan.q.size();

  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("kkt_check: " + what);
  };
  require(T >= 1 && plan.w.size() == T, "plan has no steps or mismatched q/w");
  require(envelopes.size() == E, "envelope table does not match the graph");
  for (std::size_t t = 0; t < T; ++t) {
    require(plan.q[t].size() == E, "flow vector does not match the edges");
    require(plan.w[t].size() == n, "driver vector does not match the nodes");
  }
  require(cert.mu.size() == T && !cert.lambda.empty(), "certificate does not match the plan horizon");
  for (std::size_t t = 0; t < T; ++t) require(cert.mu[t].size() == n, "mu does not match the nodes");
  if (plan.dynamic) {
    require(cert.nu.size() == T, "nu does not match the plan horizon");
    for (std::size_t t = 0; t < T; ++t) require(cert.nu[t].size() == n, "nu does not match the nodes");
  }

  KKTReport r;
  r.stationarity.assign(T, std::vector<double>(E, 0.0));
  auto primal = [&](double v) { r.primal_feasibility = std::max(r.primal_feasibility, v); };
  auto dualf = [&](double v) { r.dual_feasibility = std::max(r.dual_feasibility, v); };

  double scale = 1.0;  // for the gap tolerance

  if (!plan.dynamic) {
    const double lambda = cert.lambda.front();
    const auto& mu = cert.mu.front();
    const auto& q = plan.q.front();
    const auto& w = plan.w.front();
    double h_inner = 0.0;
    for (std::size_t e = 0; e < E; ++e) {
      const Edge& edge = g.edge(e);
      const auto& env = envelope_at(envelopes, inst, e, 0);
      const double weight = unified_weight(unified, e, false);
      const double x = lambda + mu[edge.from] - mu[edge.to];
      r.stationarity[0][e] = stationarity_gap(env, weight, q[e], x, tol.kink);
      r.primal_objective += weight * env.value(std::clamp(q[e], 0.0, env.max_throughput()));
      h_inner += edge_sup(env, weight, x, tol.stationarity);
      primal(std::max(0.0, -q[e]));
      primal(std::max(0.0, q[e] - env.max_throughput()));
      scale += env.max_throughput();
    }
    for (std::size_t v = 0; v < n; ++v) {
      double out = 0.0;
      double in = 0.0;
      for (std::size_t e : g.out_edges(v)) out += q[e];
      for (std::size_t e : g.in_edges(v)) in += q[e];
      primal(std::abs(out - in));
      primal(unified.map.is_virtual(v) ? std::abs(out - w[v]) : std::max(0.0, out - w[v]));
      primal(std::max(0.0, -w[v]));
    }
    primal(std::abs(sum(w) - 1.0));
    dualf(std::max(0.0, -lambda));
    r.slackness = std::abs(lambda * (sum(q) - 1.0));
    r.dual_function = -(lambda + h_inner);
    r.gap = std::abs(r.primal_objective + r.dual_function);
  } else {
    const bool total = supply.kind == SupplyKind::TotalAccumulated;
    const bool soft = supply.kind == SupplyKind::Soft;
    if (soft) require(plan.joined.size() == T && cert.lambda.size() == T, "SOFT plan lacks joins or per-step lambda");
    const double budget_dual = total ? cert.lambda.front() : 0.0;
    auto mu_at = [&](std::size_t t, std::size_t v) { return t < T ? cert.mu[t][v] : 0.0; };
    auto joined = [&](std::size_t t, std::size_t v) { return soft ? plan.joined[t][v] : 0.0; };

    double dual_value = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (total && !unified.map.is_virtual(v)) continue;
      dual_value += cert.mu[0][v] * (plan.w[0][v] - joined(0, v));
    }
    if (total) dual_value += budget_dual * supply.budget.value_or(static_cast<double>(T));

    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t e = 0; e < E; ++e) {
        const Edge& edge = g.edge(e);
        const auto& env = envelope_at(envelopes, inst, e, t);
        const double weight = unified_weight(unified, e, true);
        const double x = cert.nu[t][edge.from] + mu_at(t + 1, edge.from) - mu_at(t + 1, edge.to);
        const double qe = plan.q[t][e];
        r.stationarity[t][e] = stationarity_gap(env, weight, qe, x, tol.kink);
        if (weight > 0.0) {
          r.primal_objective += weight * env.value(std::clamp(qe, 0.0, env.max_throughput()));
          primal(std::max(0.0, qe - env.max_throughput()));
          scale += env.max_throughput();
        }
        primal(std::max(0.0, -qe));
        dual_value += edge_sup(env, weight, x, tol.stationarity);
      }
      double attracted = 0.0;
      for (std::size_t v = 0; v < n; ++v) {
        const bool virt = unified.map.is_virtual(v);
        const double w = plan.w[t][v];
        double out = 0.0;
        for (std::size_t e : g.out_edges(v)) out += plan.q[t][e];
        primal(virt ? std::abs(out - w) : std::max(0.0, out - w));
        primal(std::max(0.0, -w));
        if (!virt) {
          dualf(std::max(0.0, -cert.nu[t][v]));
          r.slackness = std::max(r.slackness, std::abs(cert.nu[t][v] * (w - out)));
        }
        // Driver column: mu_t - mu_{t+1} - nu_t (+ budget dual) >= 0, tight when w > 0.
        double c = mu_at(t, v) - mu_at(t + 1, v) - cert.nu[t][v] + budget_dual;
        if (total && !virt) c = budget_dual - cert.nu[t][v];
        dualf(w > tol.kink ? std::abs(c) : std::max(0.0, -c));
        if (c < -tol.stationarity) dual_value = kInf;

        const bool defined = !(total && !virt);
        if (defined && t > 0) {
          double in = 0.0;
          double prev_out = 0.0;
          for (std::size_t e : g.in_edges(v)) in += plan.q[t - 1][e];
          for (std::size_t e : g.out_edges(v)) prev_out += plan.q[t - 1][e];
          primal(std::abs(w - plan.w[t - 1][v] + prev_out - in - joined(t, v)));
        }
        if (soft && !virt) {
          const double a = plan.joined[t][v];
          const double ca = cert.lambda[t] - cert.mu[t][v];
          primal(std::max(0.0, -a));
          dualf(a > tol.kink ? std::abs(ca) : std::max(0.0, -ca));
          if (ca < -tol.stationarity) dual_value = kInf;
          attracted += a;
        }
      }
      if (supply.kind == SupplyKind::PerStep) primal(std::abs(sum(plan.w[t]) - 1.0));
      if (soft) {
        const Slopes mc = supply.marginal_cost(attracted);
        const double lam = cert.lambda[t];
        const double lo = attracted > tol.kink ? mc.left : -kInf;
        const double gap = lam > mc.right ? lam - mc.right : (lam < lo ? lo - lam : 0.0);
        r.max_stationarity = std::max(r.max_stationarity, gap);
        r.primal_objective -= supply.attraction_cost(attracted);
        // sup over A >= 0 of lambda A - cost(A), at a tier boundary.
        double best = 0.0;
        double amount = 0.0;
        double cost = 0.0;
        for (const auto& tier : supply.tiers) {
          if (std::isinf(tier.capacity)) {
            if (lam > tier.marginal_cost + tol.stationarity) best = kInf;
            break;
          }
          amount += tier.capacity;
          cost += tier.capacity * tier.marginal_cost;
          best = std::max(best, lam * amount - cost);
        }
        dual_value += best;
      }
    }
    if (total) {
      double used = 0.0;
      for (const auto& w : plan.w) used += sum(w);
      primal(std::abs(used - supply.budget.value_or(static_cast<double>(T))));
    }
    r.dual_function = -dual_value;
    r.gap = std::abs(r.primal_objective - dual_value);
  }

  for (const auto& row : r.stationarity) {
    for (double v : row) r.max_stationarity = std::max(r.max_stationarity, v);
  }

  std::ostringstream f;
  f << std::setprecision(3);
  if (r.max_stationarity > tol.stationarity) {
    f.str("");
    f << "stationarity residual " << r.max_stationarity << " exceeds " << tol.stationarity;
    r.failures.push_back(f.str());
  }
  if (r.dual_feasibility > tol.stationarity) {
    f.str("");
    f << "dual feasibility residual " << r.dual_feasibility << " exceeds " << tol.stationarity;
    r.failures.push_back(f.str());
  }
  if (r.slackness > tol.slackness) {
    f.str("");
    f << "complementary slackness residual " << r.slackness << " exceeds " << tol.slackness;
    r.failures.push_back(f.str());
  }
  if (r.primal_feasibility > tol.feasibility) {
    f.str("");
    f << "primal feasibility residual " << r.primal_feasibility << " exceeds " << tol.feasibility;
    r.failures.push_back(f.str());
  }
  const double gap_tol = tol.stationarity * scale;
  if (!(r.gap <= gap_tol)) {
    f.str("");
    f << "duality gap " << r.gap << " exceeds " << gap_tol;
    r.failures.push_back(f.str());
  }
  r.passed = r.failures.empty();
  return r;
}

std::string marginal_report(const DualCertificate& cert, const CityGraph& graph, double tol) {
  std::ostringstream out;
  out << std::setprecision(6);
  if (cert.lambda.empty() || cert.mu.empty()) return "empty certificate\n";
  const double lambda = cert.lambda.front();
  if (cert.mu.size() == 1) {
    out << "lambda = " << lambda << " per unit of drivers per step\n";
    if (lambda <= tol) {
      out << "lambda is zero: some drivers are idle, so more drivers would not raise the objective\n";
    } else {
      out << "lambda is positive: all drivers are busy; one more unit of drivers is worth " << lambda
          << " per step\n";
    }
  } else {
    double lo = cert.lambda.front();
    double hi = lo;
    for (double l : cert.lambda) {
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
    out << "lambda over " << cert.lambda.size() << " entries ranges in [" << lo << ", " << hi << "]\n";
  }

  const auto& mu = cert.mu.front();
  const std::size_t n = std::min(mu.size(), graph.node_count());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mu[a] > mu[b]; });
  if (n == 0) return out.str();
  const double spread = mu[order.front()] - mu[order.back()];
  if (spread <= tol) {
    out << "mu is uniform: all nodes are equally supply-starved\n";
  } else {
    out << "node marginal contributions mu (an extra driver appearing there is worth more the higher mu is):\n";
    for (std::size_t v : order) out << "  " << graph.nodes()[v] << "  " << mu[v] << "\n";
  }
  return out.str();
}

}  // namespace fleetflow
