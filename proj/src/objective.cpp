#include "fleetflow/objective.hpp"

#include <stdexcept>

namespace fleetflow {

ObjectiveKind ObjectiveKind::mix(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("objective mix theta must lie in [0, 1]");
  return ObjectiveKind(Type::Mix, theta);
}

std::string ObjectiveKind::name() const {
  switch (type_) {
    case Type::Revenue:
      return "revenue";
    case Type::Welfare:
      return "welfare";
    case Type::Mix:
      return "mix";
  }
  return "mix";
}

ObjectiveKind ObjectiveKind::parse(const std::string& kind, double theta) {
  if (kind == "revenue") return revenue();
  if (kind == "welfare") return welfare();
  if (kind == "mix") return mix(theta);
  throw std::invalid_argument("unknown objective kind '" + kind + "'");
}

double raw_edge_objective(const DemandCurve& curve, double cost, const ObjectiveKind& kind, double q) {
  const double top = curve.max_throughput();
  if (!(q >= 0.0) || q > top * (1.0 + 1e-12) + 1e-12) {
    throw std::domain_error("edge objective evaluated outside [0, D(0)]");
  }
  if (q == 0.0) return 0.0;
  const double theta = kind.theta();
  double value = 0.0;
  if (theta > 0.0) value += theta * (curve.inverse(q) - cost) * q;
  if (theta < 1.0) value += (1.0 - theta) * (curve.gross_value(q) - cost * q);
  return value;
}

}  // namespace fleetflow
