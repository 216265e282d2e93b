#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "fleetflow/demand.hpp"
#include "fleetflow/objective.hpp"

namespace fleetflow {

struct Breakpoint {
  double q = 0.0;
  double value = 0.0;
};

struct Slopes {
  double left = 0.0;
  double right = 0.0;
};

/// Sampled edge objective g(q|e) and its smallest concave majorant.
///
/// The envelope is the upper convex hull of the samples: piecewise linear
/// between `breakpoints`, which are a subset of the samples where the
/// envelope touches g. Breakpoint slopes are strictly decreasing.
class IronedObjective {
 public:
  IronedObjective() = default;
  /// Builds the hull of arbitrary samples; `q` must be strictly increasing
  /// and start at 0.
  IronedObjective(std::vector<double> q, std::vector<double> g, double cost, ObjectiveKind kind);

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& raw_values() const { return raw_; }
  const std::vector<Breakpoint>& breakpoints() const { return breakpoints_; }
  /// Slope of segment i, between breakpoints i and i + 1.
  const std::vector<double>& segment_slopes() const { return slopes_; }
  double max_throughput() const { return grid_.empty() ? 0.0 : grid_.back(); }
  double cost() const { return cost_; }
  const ObjectiveKind& kind() const { return kind_; }

  double value(double q) const;
  /// Left and right derivatives; q within `tol` of a breakpoint counts as
  /// sitting on the kink. One-sided slopes are repeated at both ends.
  Slopes slopes(double q, double tol = -1.0) const;
  /// Index of the breakpoint within `tol` of q, if any.
  std::ptrdiff_t breakpoint_at(double q, double tol = -1.0) const;
  /// Maximal intervals where the envelope lies strictly above g on the grid.
  std::vector<std::pair<double, double>> ironed_intervals() const;

  nlohmann::json to_json() const;

 private:
  double default_tol() const;

  std::vector<double> grid_;
  std::vector<double> raw_;
  std::vector<Breakpoint> breakpoints_;
  std::vector<double> slopes_;
  double cost_ = 0.0;
  ObjectiveKind kind_ = ObjectiveKind::revenue();
};

/// Samples g on a uniform grid of `grid_size` intervals over [0, D(0)],
/// plus every kink of the curve, and returns the concave envelope.
IronedObjective iron(const DemandCurve& curve, double cost, const ObjectiveKind& kind, std::size_t grid_size = 1000);

double envelope_value(const IronedObjective& env, double q);
Slopes envelope_derivative(const IronedObjective& env, double q);

struct PriceEntry {
  double price = 0.0;  ///< +infinity means "reject every request"
  double probability = 0.0;
  double throughput = 0.0;  ///< flow served when this price is drawn
};

/// Randomized posted price with at most two support points.
struct PriceMixture {
  std::vector<PriceEntry> entries;
  double target = 0.0;

  /// E[D(price)] over the mixture.
  double expected_demand(const DemandCurve& curve) const;
  /// E[g] where each draw serves its entry throughput at its entry price.
  double expected_objective(const DemandCurve& curve, double cost, const ObjectiveKind& kind) const;
  /// E[(price - cost) * throughput].
  double expected_revenue(double cost) const;
  /// Throughput-weighted mean price.
  double mean_price() const;

  nlohmann::json to_json() const;
  static PriceMixture from_json(const nlohmann::json& doc);
};

/// Prices attaining the envelope value at throughput q_bar.
PriceMixture price_mixture(const IronedObjective& env, const DemandCurve& curve, double q_bar);

/// Concave piecewise-linear pieces of an envelope, filled greedily.
struct PwlSegment {
  double length = 0.0;
  double marginal = 0.0;
};

struct PwlObjective {
  std::vector<PwlSegment> segments;
  /// False when the envelope had more pieces than allowed and was coarsened.
  bool exact = true;

  double value(double q) const;
};

/// Splits the envelope into at most `max_segments` pieces. With enough
/// pieces allowed the reconstruction is exact.
PwlObjective pwl_discretize(const IronedObjective& env, std::size_t max_segments = static_cast<std::size_t>(-1));

}  // namespace fleetflow
