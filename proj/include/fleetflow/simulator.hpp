#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fleetflow/instance.hpp"
#include "fleetflow/ironing.hpp"
#include "fleetflow/solver.hpp"
#include "fleetflow/transform.hpp"

namespace fleetflow {

/// Constant per-minute price alpha.
struct FixedPolicy {
  double alpha = 0.5117;
};

/// Per-origin multiplier on the fixed price, the smallest in
/// [beta_min, beta_max] that clears the local market.
struct SurgePolicy {
  double alpha = 0.5117;
  double beta_min = 1.0;
  double beta_max = 5.0;
};

/// Executes planned launch flows with randomized prices.
struct DynamPolicy {
  /// q[step][edge] on the original graph; a single row is repeated forever.
  std::vector<std::vector<double>> q;
  /// envelopes[edge][period] the plan was solved with.
  EnvelopeTable envelopes;
  std::string source;
};

using Policy = std::variant<FixedPolicy, SurgePolicy, DynamPolicy>;

std::string policy_name(const Policy& policy);

/// Parsed command-line policy: "fixed:alpha=0.5117",
/// "surge:alpha=0.5117,beta=1..5" or "dynam:plan=path".
struct PolicySpec {
  enum class Kind { Fixed, Surge, Dynam } kind = Kind::Fixed;
  double alpha = 0.5117;
  double beta_min = 1.0;
  double beta_max = 5.0;
  std::string plan_path;
};
PolicySpec parse_policy_spec(const std::string& text);

DynamPolicy dynam_from_solution(const Solution& solution, const Instance& original);
/// Rebuilds the policy from a plan document written by plan_to_json.
DynamPolicy dynam_from_plan(const nlohmann::json& plan, const Instance& original);

struct SimConfig {
  std::size_t steps = 96;
  /// Realize one mixture draw and a noisy demand per edge and step instead
  /// of expectations.
  bool sampled = false;
  std::uint64_t seed = 0;
  double demand_noise = 0.1;
};

struct SimStep {
  double revenue = 0.0;
  /// Drivers before dispatch.
  std::vector<double> available;
  std::vector<std::vector<double>> in_transit;
  std::vector<double> accepted;    ///< per edge
  std::vector<double> mean_price;  ///< per edge, throughput weighted; NaN if nothing served
  std::vector<double> demand;      ///< induced passenger demand per node
  std::vector<std::optional<double>> supply_ratio;
  double mass = 0.0;
};

struct SimTrace {
  std::string policy;
  std::vector<SimStep> steps;

  double total_revenue() const;
  double time_average_revenue() const;
  /// Mean |ratio - 1| over every (step, node) with positive demand.
  double supply_deviation() const;
  double max_mass_error() const;

  /// Wide CSV: one row per step.
  std::string to_csv(const Instance& instance) const;
  nlohmann::json summary(const Instance& instance) const;
};

/// Fluid simulation on the original graph. Throws std::invalid_argument
/// when the start state does not hold unit mass or has negative entries.
SimTrace run_simulation(const Instance& instance, const Policy& policy, const DriverState& start,
                        const SimConfig& config = {});

/// Smallest beta with sum over OUT(v) of D(alpha * beta * minutes(e)) <= available.
double surge_multiplier(const Instance& instance, std::size_t node, double available, std::size_t step, double alpha,
                        double beta_min, double beta_max);

struct PolicyComparison {
  std::vector<SimTrace> traces;
  nlohmann::json to_json(const Instance& instance) const;
  /// Per-step revenue columns, one per policy.
  std::string to_csv() const;
};

PolicyComparison compare_policies(const Instance& instance, const std::vector<Policy>& policies,
                                  const DriverState& start, const SimConfig& config = {});

/// Passenger demand at a quoted price, leaving out the zero-value padding
/// that normalization adds at price 0.
double real_demand(const DemandCurve& curve, double price);

}  // namespace fleetflow
