#include "fleetflow/demand.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/erf.hpp>

namespace fleetflow {

namespace {

constexpr double kRelTol = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double linear_volume(const LinearDemand& d) { return std::min(d.cap, d.intercept); }

double step_volume(const StepDemand& d) {
  double total = 0.0;
  for (const auto& atom : d.atoms) total += atom.mass;
  return total;
}

}  // namespace

double normal_survival(double z) { return 0.5 * boost::math::erfc(z / std::sqrt(2.0)); }

double normal_survival_inverse(double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("normal_survival_inverse: u must lie in (0, 1)");
  return std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

DemandCurve DemandCurve::linear(double intercept, double slope, std::optional<double> cap) {
  if (!(slope > 0.0) || !(intercept >= 0.0)) {
    throw std::invalid_argument("linear demand needs slope > 0 and intercept >= 0");
  }
  const double c = cap.value_or(intercept);
  if (!(c >= 0.0)) throw std::invalid_argument("linear demand cap must be non-negative");
  return DemandCurve(LinearDemand{intercept, slope, c});
}

DemandCurve DemandCurve::step(std::vector<ValueAtom> atoms) {
  std::vector<ValueAtom> kept;
  for (const auto& atom : atoms) {
    if (!(atom.value >= 0.0) || !(atom.mass >= 0.0)) {
      throw std::invalid_argument("step demand atoms need non-negative value and mass");
    }
    if (atom.mass > 0.0) kept.push_back(atom);
  }
  std::sort(kept.begin(), kept.end(), [](const ValueAtom& a, const ValueAtom& b) { return a.value > b.value; });
  // merge atoms that share a value
  std::vector<ValueAtom> merged;
  for (const auto& atom : kept) {
    if (!merged.empty() && merged.back().value == atom.value) {
      merged.back().mass += atom.mass;
    } else {
      merged.push_back(atom);
    }
  }
  return DemandCurve(StepDemand{std::move(merged)});
}

DemandCurve DemandCurve::lognormal(double mu_log, double sigma_log, double volume) {
  if (!(sigma_log > 0.0) || !std::isfinite(mu_log) || !(volume >= 0.0)) {
    throw std::invalid_argument("lognormal demand needs sigma_log > 0 and volume >= 0");
  }
  return DemandCurve(LogNormalDemand{mu_log, sigma_log, volume});
}

double DemandCurve::raw_volume() const {
  return std::visit(overloaded{[](const LinearDemand& d) { return linear_volume(d); },
                               [](const StepDemand& d) { return step_volume(d); },
                               [](const LogNormalDemand& d) { return d.volume; }},
                    shape_);
}

double DemandCurve::max_throughput() const { return ceiling_ ? *ceiling_ : raw_volume(); }

double DemandCurve::raw_eval(double price) const {
  return std::visit(
      overloaded{[price](const LinearDemand& d) {
                   return std::clamp(d.intercept - d.slope * price, 0.0, d.cap);
                 },
                 [price](const StepDemand& d) {
                   double total = 0.0;
                   for (const auto& atom : d.atoms) {
                     if (atom.value >= price) total += atom.mass;
                   }
                   return total;
                 },
                 [price](const LogNormalDemand& d) {
                   if (price <= 0.0) return d.volume;
                   if (std::isinf(price)) return 0.0;
                   return d.volume * normal_survival((std::log(price) - d.mu_log) / d.sigma_log);
                 }},
      shape_);
}

double DemandCurve::operator()(double price) const {
  if (std::isnan(price) || price < 0.0) throw std::domain_error("demand evaluated at a negative price");
  if (!ceiling_) return raw_eval(price);
  if (price == 0.0) return *ceiling_;
  return std::min(raw_eval(price), *ceiling_);
}

double DemandCurve::raw_inverse(double q) const {
  return std::visit(
      overloaded{[q](const LinearDemand& d) { return std::max(0.0, (d.intercept - q) / d.slope); },
                 [q](const StepDemand& d) {
                   const double tol = kRelTol * std::max(1.0, step_volume(d));
                   double cumulative = 0.0;
                   for (const auto& atom : d.atoms) {
                     cumulative += atom.mass;
                     if (cumulative >= q - tol) return atom.value;
                   }
                   return d.atoms.empty() ? 0.0 : d.atoms.back().value;
                 },
                 [q](const LogNormalDemand& d) {
                   const double u = q / d.volume;
                   if (u >= 1.0) return 0.0;
                   return std::exp(d.mu_log + d.sigma_log * normal_survival_inverse(u));
                 }},
      shape_);
}

double DemandCurve::inverse(double q) const {
  const double top = max_throughput();
  if (!(q > 0.0) || q > top * (1.0 + kRelTol) + kRelTol) {
    throw std::domain_error("inverse demand needs 0 < q <= D(0), got q = " + std::to_string(q));
  }
  const double volume = raw_volume();
  if (q > volume * (1.0 + kRelTol)) return 0.0;  // only zero-value padding requests left
  return raw_inverse(std::min(q, volume));
}

double DemandCurve::raw_gross_value(double q) const {
  return std::visit(
      overloaded{[q](const LinearDemand& d) { return (d.intercept * q - 0.5 * q * q) / d.slope; },
                 [q](const StepDemand& d) {
                   double remaining = q;
                   double total = 0.0;
                   for (const auto& atom : d.atoms) {
                     if (remaining <= 0.0) break;
                     const double take = std::min(atom.mass, remaining);
                     total += atom.value * take;
                     remaining -= take;
                   }
                   return total;
                 },
                 [q](const LogNormalDemand& d) {
                   const double mean = std::exp(d.mu_log + 0.5 * d.sigma_log * d.sigma_log);
                   const double u = q / d.volume;
                   if (u >= 1.0) return d.volume * mean;
                   const double s = normal_survival_inverse(u);
                   // E[x; x >= p] with ln p = mu + sigma * s
                   return d.volume * mean * normal_survival(s - d.sigma_log);
                 }},
      shape_);
}

double DemandCurve::gross_value(double q) const {
  if (q <= 0.0) return 0.0;
  return raw_gross_value(std::min(q, raw_volume()));
}

std::vector<double> DemandCurve::kinks() const {
  std::vector<double> out;
  const double top = max_throughput();
  if (const auto* step = std::get_if<StepDemand>(&shape_)) {
    double cumulative = 0.0;
    for (const auto& atom : step->atoms) {
      cumulative += atom.mass;
      if (cumulative < top) out.push_back(cumulative);
    }
  }
  const double volume = raw_volume();
  if (volume > 0.0 && volume < top) out.push_back(volume);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

DemandCurve DemandCurve::scaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("demand scale factor must be positive");
  DemandShape shape = std::visit(
      overloaded{[factor](const LinearDemand& d) -> DemandShape {
                   return LinearDemand{d.intercept / factor, d.slope / factor, d.cap / factor};
                 },
                 [factor](const StepDemand& d) -> DemandShape {
                   StepDemand out = d;
                   for (auto& atom : out.atoms) atom.mass /= factor;
                   return out;
                 },
                 [factor](const LogNormalDemand& d) -> DemandShape {
                   return LogNormalDemand{d.mu_log, d.sigma_log, d.volume / factor};
                 }},
      shape_);
  DemandCurve out(std::move(shape));
  if (ceiling_) out.ceiling_ = *ceiling_ / factor;
  return out;
}

DemandCurve DemandCurve::with_ceiling(double ceiling) const {
  if (!(ceiling > 0.0)) throw std::invalid_argument("demand ceiling must be positive");
  DemandCurve out = *this;
  out.ceiling_ = ceiling;
  return out;
}

}  // namespace fleetflow
