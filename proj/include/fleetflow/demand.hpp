#pragma once

#include <optional>
#include <variant>
#include <vector>

namespace fleetflow {

/// D(p) = clamp(intercept - slope * p, 0, cap).
struct LinearDemand {
  double intercept = 1.0;
  double slope = 1.0;
  double cap = 1.0;
};

/// A finite set of passenger values, each carrying a request mass.
struct ValueAtom {
  double value = 0.0;
  double mass = 0.0;
};

/// D(p) = sum of masses whose value is at least p. Atoms are kept sorted
/// by decreasing value with positive masses.
struct StepDemand {
  std::vector<ValueAtom> atoms;
};

/// Passenger values are lognormal; D(p) = volume * P(x >= p).
struct LogNormalDemand {
  double mu_log = 0.0;
  double sigma_log = 1.0;
  double volume = 1.0;
};

using DemandShape = std::variant<LinearDemand, StepDemand, LogNormalDemand>;

/// Non-increasing price -> throughput map for one edge (and one period).
///
/// An optional ceiling models the driver-mass normalization: throughput is
/// truncated at the ceiling and, when the raw volume falls short of it, the
/// gap is filled with zero-value requests so that D(0) equals the ceiling.
/// Instances are normalized with a ceiling of 1.
class DemandCurve {
 public:
  static DemandCurve linear(double intercept, double slope, std::optional<double> cap = std::nullopt);
  static DemandCurve step(std::vector<ValueAtom> atoms);
  static DemandCurve lognormal(double mu_log, double sigma_log, double volume);

  /// D(p); throws std::domain_error for negative prices.
  double operator()(double price) const;
  double eval(double price) const { return (*this)(price); }

  /// Largest price whose demand is at least q. Valid for 0 < q <= max_throughput().
  double inverse(double q) const;

  /// Integral of D^{-1}(u) du over [0, q]: gross value of the q
  /// highest-value requests.
  double gross_value(double q) const;

  /// D(0) of the underlying shape, ignoring the ceiling.
  double raw_volume() const;
  /// D(0) including the ceiling; upper end of the throughput domain.
  double max_throughput() const;

  /// Throughputs where D^{-1} has a jump or a slope change.
  std::vector<double> kinks() const;

  /// Divides request volume by `factor` (driver-mass normalization).
  DemandCurve scaled(double factor) const;
  DemandCurve with_ceiling(double ceiling) const;
  std::optional<double> ceiling() const { return ceiling_; }

  const DemandShape& shape() const { return shape_; }

 private:
  explicit DemandCurve(DemandShape shape) : shape_(std::move(shape)) {}
  double raw_eval(double price) const;
  double raw_inverse(double q) const;
  double raw_gross_value(double q) const;

  DemandShape shape_;
  std::optional<double> ceiling_;
};

/// Standard normal survival function P(Z >= z).
double normal_survival(double z);
/// Inverse of normal_survival for u in (0, 1).
double normal_survival_inverse(double u);

}  // namespace fleetflow
