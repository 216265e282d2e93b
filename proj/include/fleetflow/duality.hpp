#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fleetflow/solver.hpp"

namespace fleetflow {

struct KKTTolerances {
  double stationarity = 1e-5;
  double slackness = 1e-6;
  double feasibility = 1e-7;
  /// Flows within this distance of an envelope breakpoint sit on its kink.
  double kink = 1e-9;
};

struct KKTReport {
  /// Distance of the edge's dual price to the subgradient of its objective,
  /// [step][edge].
  std::vector<std::vector<double>> stationarity;
  double max_stationarity = 0.0;
  /// Driver-column conditions (dynamic) or the sign of lambda (static).
  double dual_feasibility = 0.0;
  double slackness = 0.0;
  double primal_feasibility = 0.0;
  double primal_objective = 0.0;
  /// h(lambda, mu) of the minimization form; weak duality reads
  /// primal <= -h.
  double dual_function = 0.0;
  double gap = 0.0;
  bool passed = false;
  std::vector<std::string> failures;

  nlohmann::json to_json() const;
  std::string summary() const;
};

/// Checks a static plan in the aggregated form: for each edge,
/// lambda + mu_s - mu_t must lie in the subgradient of the weighted
/// envelope at q(e) (one-sided at q = 0 and q = D(0)), plus
/// lambda (sum q - 1) = 0, lambda >= 0 and primal feasibility.
///
/// Dynamic plans are checked against the per-step program: nu_s +
/// mu_{t+1,s} - mu_{t+1,t'} in the subgradient of the launch objective,
/// the driver-column conditions, complementary slackness of the node
/// capacities and, for SOFT supply, the attraction-cost conditions.
KKTReport kkt_check(const ExpandedInstance& unified, const EnvelopeTable& envelopes, const FlowPlan& plan,
                    const DualCertificate& cert, const SupplyConstraint& supply = {},
                    const KKTTolerances& tol = {});

/// Objective weight of edge x of a unified instance. Static plans split a
/// trip's objective evenly along its chain; dynamic plans put all of it on
/// the launch piece.
double unified_weight(const ExpandedInstance& unified, std::size_t edge, bool dynamic);

/// Plain-language reading of the multipliers.
std::string marginal_report(const DualCertificate& cert, const CityGraph& graph, double tol = 1e-9);

}  // namespace fleetflow
