#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetflow/instance.hpp"
#include "fleetflow/ironing.hpp"
#include "fleetflow/lp.hpp"
#include "fleetflow/transform.hpp"

namespace fleetflow {

/// envelopes[e][period] for every edge of an instance.
using EnvelopeTable = std::vector<std::vector<IronedObjective>>;

EnvelopeTable build_envelopes(const Instance& instance, std::size_t grid_size = 1000);

/// Envelope table of an expanded instance, computed once per original edge
/// and shared along its chain.
EnvelopeTable build_envelopes(const Instance& original, const ExpandedInstance& expanded, std::size_t grid_size);

enum class SupplyKind { PerStep, TotalAccumulated, Soft };

/// One tier of the driver attraction cost: up to `capacity` extra drivers
/// per step at `marginal_cost` each.
struct SupplyTier {
  double capacity = 0.0;
  double marginal_cost = 0.0;
};

struct SupplyConstraint {
  SupplyKind kind = SupplyKind::PerStep;
  /// TOTAL_ACCUMULATED: driver-steps available over the horizon; defaults
  /// to the horizon length (one unit of drivers per step).
  std::optional<double> budget;
  /// SOFT: tiers with non-decreasing marginal cost.
  std::vector<SupplyTier> tiers;

  static SupplyConstraint per_step() { return {}; }
  static SupplyConstraint total(std::optional<double> budget = std::nullopt);
  static SupplyConstraint soft(std::vector<SupplyTier> tiers);
  /// "per_step", "total[:budget]" or "soft:cap@cost,cap@cost,..."
  static SupplyConstraint parse(const std::string& text);
  std::string name() const;
  /// Total attraction cost of `amount` extra drivers in one step.
  double attraction_cost(double amount) const;
  /// Left and right marginal cost at `amount`.
  Slopes marginal_cost(double amount) const;
};

/// Primal output. Static plans have a single step.
struct FlowPlan {
  bool dynamic = false;
  std::size_t horizon = 1;
  /// q[step][edge], w[step][node]: available drivers before dispatch.
  std::vector<std::vector<double>> q;
  std::vector<std::vector<double>> w;
  /// SOFT only: drivers joining per [step][node].
  std::vector<std::vector<double>> joined;
  /// Objective per step (static: the stationary per-step value).
  std::vector<double> step_objective;
  double objective = 0.0;
  SupplyKind supply = SupplyKind::PerStep;
};

/// Dual output. Static: one entry per vector. Dynamic: per step.
struct DualCertificate {
  std::vector<double> lambda;
  std::vector<std::vector<double>> mu;
  std::vector<std::vector<double>> nu;
};

struct SolverConfig {
  std::size_t grid_size = 1000;
  double feasibility_tol = 1e-7;
  double stationarity_tol = 1e-5;
  double slackness_tol = 1e-6;
  std::size_t max_pivots = 100000;
};

/// A built linear program plus the index maps needed to read it back.
struct Program {
  bool dynamic = false;
  std::size_t horizon = 1;
  SupplyConstraint supply;
  LinearProgram lp;
  std::vector<std::vector<std::ptrdiff_t>> q_col;     // [step][edge]
  std::vector<std::vector<std::ptrdiff_t>> w_col;     // static and TOTAL: [step][node]
  std::vector<std::vector<std::ptrdiff_t>> idle_col;  // dynamic PER_STEP/SOFT: [step][node]
  std::vector<std::vector<std::ptrdiff_t>> join_col;  // SOFT: [step][node]
  std::vector<std::ptrdiff_t> attract_col;            // SOFT: [step]
  std::vector<std::ptrdiff_t> mass_row;               // static mass, TOTAL budget, SOFT joins: [step] or [0]
  std::vector<std::vector<std::ptrdiff_t>> balance_row;  // [step][node]
  std::vector<std::vector<std::ptrdiff_t>> cap_row;      // [step][node]
  /// Dynamic: initial node masses on the unified graph.
  std::vector<double> w1;
  std::vector<std::size_t> edge_to;
  std::size_t nodes = 0;
  std::size_t edges = 0;
};

/// Stationary program on a unified (travel time 1) instance. Virtual nodes
/// must forward every driver they hold.
Program build_static_program(const ExpandedInstance& unified, const EnvelopeTable& envelopes);

/// Finite-horizon program over steps 0..T-1 with w_0 = w1 fixed (PER_STEP and
/// SOFT). The launch step of a trip carries the whole trip objective.
Program build_dynamic_program(const ExpandedInstance& unified, const EnvelopeTable& envelopes, std::size_t horizon,
                              const std::vector<double>& w1, const SupplyConstraint& supply);

struct SolveResult {
  FlowPlan plan;
  DualCertificate cert;
  LpStatus status = LpStatus::IterationLimit;
  double primal_residual = 0.0;
  std::size_t pivots = 0;
  std::size_t breakpoint_steps = 0;
};

SolveResult solve(const Program& program, const SolverConfig& config = {});

/// Everything produced by solving an instance end to end.
struct Solution {
  ExpandedInstance unified;
  EnvelopeTable envelopes;
  std::size_t grid_size = 0;
  SupplyConstraint supply;
  SolveResult result;
  /// Launch flows per original edge, [step][edge].
  std::vector<std::vector<double>> original_q;
  /// Driver state on the original graph at each step.
  std::vector<DriverState> original_state;
  double stationarity_residual = 0.0;
  double slackness_residual = 0.0;
  bool certified = false;
  std::vector<std::string> notes;
};

Solution solve_static(const Instance& instance, const SolverConfig& config = {});
Solution solve_dynamic(const Instance& instance, std::size_t horizon, const DriverState& start,
                       const SupplyConstraint& supply = {}, const SolverConfig& config = {});

nlohmann::json supply_to_json(const SupplyConstraint& supply);
SupplyConstraint supply_from_json(const nlohmann::json& doc);

nlohmann::json plan_to_json(const Solution& solution, const Instance& original);
nlohmann::json certificate_to_json(const Solution& solution);

/// Reads the unified-graph plan and certificate back; `unified` supplies
/// node and edge names.
FlowPlan plan_from_json(const nlohmann::json& doc, const CityGraph& unified);
DualCertificate certificate_from_json(const nlohmann::json& doc, const CityGraph& unified);

}  // namespace fleetflow
