#pragma once

#include <string>

#include "fleetflow/demand.hpp"

namespace fleetflow {

/// theta * REVENUE + (1 - theta) * WELFARE. REVENUE is theta = 1,
/// WELFARE is theta = 0.
class ObjectiveKind {
 public:
  enum class Type { Revenue, Welfare, Mix };

  static ObjectiveKind revenue() { return ObjectiveKind(Type::Revenue, 1.0); }
  static ObjectiveKind welfare() { return ObjectiveKind(Type::Welfare, 0.0); }
  static ObjectiveKind mix(double theta);

  Type type() const { return type_; }
  double theta() const { return theta_; }
  std::string name() const;

  /// Accepts "revenue", "welfare" or "mix" (the latter with theta).
  static ObjectiveKind parse(const std::string& kind, double theta = 0.5);

 private:
  ObjectiveKind(Type type, double theta) : type_(type), theta_(theta) {}
  Type type_;
  double theta_;
};

/// g(q|e) under the deterministic price D^{-1}(q). g(0) = 0.
double raw_edge_objective(const DemandCurve& curve, double cost, const ObjectiveKind& kind, double q);

}  // namespace fleetflow
