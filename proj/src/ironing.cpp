#include "fleetflow/ironing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fleetflow {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double magnitude(const std::vector<double>& values) {
  double m = 1.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

IronedObjective::IronedObjective(std::vector<double> q, std::vector<double> g, double cost, ObjectiveKind kind)
    : grid_(std::move(q)), raw_(std::move(g)), cost_(cost), kind_(kind) {
  if (grid_.empty() || grid_.size() != raw_.size()) throw std::invalid_argument("envelope samples are malformed");
  if (grid_.front() != 0.0) throw std::invalid_argument("envelope samples must start at q = 0");
  for (std::size_t i = 1; i < grid_.size(); ++i) {
    if (!(grid_[i] > grid_[i - 1])) throw std::invalid_argument("envelope grid must be strictly increasing");
  }

  // Upper hull by a monotone-chain scan. A point is dropped when it does not
  // rise above the chord of its neighbours by more than the collinearity
  // tolerance, so collinear runs keep only their endpoints.
  const double tol = 1e-13 * magnitude(raw_);
  std::vector<std::size_t> hull;
  hull.reserve(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    while (hull.size() >= 2) {
      const std::size_t o = hull[hull.size() - 2];
      const std::size_t a = hull.back();
      const double chord = raw_[o] + (raw_[i] - raw_[o]) * (grid_[a] - grid_[o]) / (grid_[i] - grid_[o]);
      if (raw_[a] <= chord + tol) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(i);
  }
  for (std::size_t idx : hull) breakpoints_.push_back({grid_[idx], raw_[idx]});
  for (std::size_t j = 0; j + 1 < breakpoints_.size(); ++j) {
    const auto& a = breakpoints_[j];
    const auto& b = breakpoints_[j + 1];
    slopes_.push_back((b.value - a.value) / (b.q - a.q));
  }
}

double IronedObjective::default_tol() const { return 1e-12 * std::max(1.0, max_throughput()); }

std::ptrdiff_t IronedObjective::breakpoint_at(double q, double tol) const {
  if (tol < 0.0) tol = default_tol();
  auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), q,
                             [](const Breakpoint& b, double x) { return b.q < x; });
  std::ptrdiff_t best = -1;
  double best_gap = kInf;
  for (auto cand : {it, it == breakpoints_.begin() ? it : std::prev(it)}) {
    if (cand == breakpoints_.end()) continue;
    const double gap = std::abs(cand->q - q);
    if (gap <= tol && gap < best_gap) {
      best = cand - breakpoints_.begin();
      best_gap = gap;
    }
  }
  return best;
}

double IronedObjective::value(double q) const {
  const double top = max_throughput();
  if (!(q >= -default_tol()) || q > top + default_tol()) {
    throw std::domain_error("envelope evaluated outside [0, D(0)]");
  }
  if (breakpoints_.size() < 2) return breakpoints_.empty() ? 0.0 : breakpoints_.front().value;
  q = std::clamp(q, 0.0, top);
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), q,
                             [](double x, const Breakpoint& b) { return x < b.q; });
  std::size_t k = it == breakpoints_.begin() ? 0 : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  k = std::min(k, slopes_.size() - 1);
  return breakpoints_[k].value + slopes_[k] * (q - breakpoints_[k].q);
}

Slopes IronedObjective::slopes(double q, double tol) const {
  if (slopes_.empty()) return {0.0, 0.0};
  const std::ptrdiff_t j = breakpoint_at(q, tol);
  if (j >= 0) {
    const auto last = static_cast<std::ptrdiff_t>(slopes_.size());
    const double left = j > 0 ? slopes_[j - 1] : slopes_.front();
    const double right = j < last ? slopes_[j] : slopes_.back();
    return {left, right};
  }
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), q,
                             [](double x, const Breakpoint& b) { return x < b.q; });
  std::size_t k = it == breakpoints_.begin() ? 0 : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  k = std::min(k, slopes_.size() - 1);
  return {slopes_[k], slopes_[k]};
}

std::vector<std::pair<double, double>> IronedObjective::ironed_intervals() const {
  std::vector<std::pair<double, double>> out;
  const double tol = 1e-12 * magnitude(raw_);
  std::size_t i = 0;
  for (std::size_t j = 0; j + 1 < breakpoints_.size(); ++j) {
    const double lo = breakpoints_[j].q;
    const double hi = breakpoints_[j + 1].q;
    while (i < grid_.size() && grid_[i] <= lo) ++i;
    bool ironed = false;
    for (; i < grid_.size() && grid_[i] < hi; ++i) {
      const double env = breakpoints_[j].value + slopes_[j] * (grid_[i] - lo);
      if (env - raw_[i] > tol) ironed = true;
    }
    if (ironed) out.emplace_back(lo, hi);
  }
  return out;
}

json IronedObjective::to_json() const {
  json bps = json::array();
  for (const auto& b : breakpoints_) bps.push_back({b.q, b.value});
  json intervals = json::array();
  for (const auto& [lo, hi] : ironed_intervals()) intervals.push_back({lo, hi});
  return {{"max_throughput", max_throughput()},
          {"grid_points", grid_.size()},
          {"breakpoints", bps},
          {"slopes", slopes_},
          {"ironed_intervals", intervals}};
}

IronedObjective iron(const DemandCurve& curve, double cost, const ObjectiveKind& kind, std::size_t grid_size) {
  if (grid_size < 2) throw std::invalid_argument("ironing grid needs at least 2 intervals");
  const double top = curve.max_throughput();
  if (!(top > 0.0)) return IronedObjective({0.0}, {0.0}, cost, kind);

  std::vector<double> q;
  q.reserve(grid_size + 8);
  for (std::size_t i = 0; i <= grid_size; ++i) {
    q.push_back(static_cast<double>(i) * top / static_cast<double>(grid_size));
  }
  for (double k : curve.kinks()) {
    if (k > 0.0 && k < top) q.push_back(k);
  }
  std::sort(q.begin(), q.end());
  const double merge = 1e-14 * top;
  std::vector<double> grid;
  grid.reserve(q.size());
  for (double x : q) {
    if (grid.empty() || x - grid.back() > merge) grid.push_back(x);
  }
  grid.back() = top;

  std::vector<double> g(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) g[i] = raw_edge_objective(curve, cost, kind, grid[i]);
  return IronedObjective(std::move(grid), std::move(g), cost, kind);
}

double envelope_value(const IronedObjective& env, double q) { return env.value(q); }

Slopes envelope_derivative(const IronedObjective& env, double q) {
  if (!(q >= 0.0) || q > env.max_throughput() * (1.0 + 1e-12) + 1e-12) {
    throw std::domain_error("envelope derivative evaluated outside [0, D(0)]");
  }
  return env.slopes(q);
}

double PriceMixture::expected_demand(const DemandCurve& curve) const {
  double total = 0.0;
  for (const auto& e : entries) {
    if (!std::isinf(e.price)) total += e.probability * curve(e.price);
  }
  return total;
}

double PriceMixture::expected_objective(const DemandCurve& curve, double cost, const ObjectiveKind& kind) const {
  double total = 0.0;
  for (const auto& e : entries) {
    if (e.throughput > 0.0) total += e.probability * raw_edge_objective(curve, cost, kind, e.throughput);
  }
  return total;
}

double PriceMixture::expected_revenue(double cost) const {
  double total = 0.0;
  for (const auto& e : entries) {
    if (e.throughput > 0.0) total += e.probability * (e.price - cost) * e.throughput;
  }
  return total;
}

double PriceMixture::mean_price() const {
  double paid = 0.0;
  double served = 0.0;
  for (const auto& e : entries) {
    if (e.throughput > 0.0) {
      paid += e.probability * e.price * e.throughput;
      served += e.probability * e.throughput;
    }
  }
  return served > 0.0 ? paid / served : 0.0;
}

json PriceMixture::to_json() const {
  json list = json::array();
  for (const auto& e : entries) {
    json price = std::isinf(e.price) ? json(nullptr) : json(e.price);
    list.push_back({{"price", price}, {"probability", e.probability}, {"throughput", e.throughput}});
  }
  return {{"target", target}, {"entries", list}};
}

PriceMixture PriceMixture::from_json(const json& doc) {
  PriceMixture m;
  m.target = doc.at("target").get<double>();
  for (const auto& e : doc.at("entries")) {
    PriceEntry entry;
    entry.price = e.at("price").is_null() ? kInf : e.at("price").get<double>();
    entry.probability = e.at("probability").get<double>();
    entry.throughput = e.at("throughput").get<double>();
    m.entries.push_back(entry);
  }
  return m;
}

PriceMixture price_mixture(const IronedObjective& env, const DemandCurve& curve, double q_bar) {
  const double top = env.max_throughput();
  if (!(q_bar > 0.0) || q_bar > top * (1.0 + 1e-12) + 1e-12) {
    throw std::domain_error("price mixture target must lie in (0, D(0)]");
  }
  q_bar = std::min(q_bar, top);
  PriceMixture mix;
  mix.target = q_bar;

  const auto& bps = env.breakpoints();
  const std::ptrdiff_t at = env.breakpoint_at(q_bar);
  if (at >= 0 || bps.size() < 2) {
    const double q = at >= 0 ? bps[static_cast<std::size_t>(at)].q : q_bar;
    mix.entries.push_back({q > 0.0 ? curve.inverse(q) : kInf, 1.0, q});
    return mix;
  }
  // One price only works when it sells exactly q_bar; on flat stretches of
  // D (atoms, caps) the segment endpoints are mixed instead.
  const double price = curve.inverse(q_bar);
  const bool clears = std::abs(curve(price) - q_bar) <= 1e-9 * std::max(1.0, q_bar);
  const double raw = raw_edge_objective(curve, env.cost(), env.kind(), q_bar);
  const double tol = 1e-12 * std::max(1.0, std::abs(raw));
  if (clears && std::abs(raw - env.value(q_bar)) <= tol) {
    mix.entries.push_back({price, 1.0, q_bar});
    return mix;
  }

  auto it = std::upper_bound(bps.begin(), bps.end(), q_bar, [](double x, const Breakpoint& b) { return x < b.q; });
  const std::size_t k = static_cast<std::size_t>(it - bps.begin()) - 1;
  const Breakpoint& lo = bps[k];
  const Breakpoint& hi = bps[k + 1];
  const double lambda = (hi.q - q_bar) / (hi.q - lo.q);
  const double lo_price = lo.q > 0.0 ? curve.inverse(lo.q) : kInf;
  mix.entries.push_back({lo_price, lambda, lo.q});
  mix.entries.push_back({curve.inverse(hi.q), 1.0 - lambda, hi.q});
  return mix;
}

double PwlObjective::value(double q) const {
  double remaining = q;
  double total = 0.0;
  for (const auto& s : segments) {
    if (remaining <= 0.0) break;
    const double take = std::min(s.length, remaining);
    total += s.marginal * take;
    remaining -= take;
  }
  return total;
}

PwlObjective pwl_discretize(const IronedObjective& env, std::size_t max_segments) {
  if (max_segments < 1) throw std::invalid_argument("pwl_discretize needs at least one segment");
  const auto& bps = env.breakpoints();
  PwlObjective out;
  if (bps.size() < 2) return out;

  std::vector<std::size_t> keep;
  const std::size_t pieces = bps.size() - 1;
  if (pieces <= max_segments) {
    for (std::size_t j = 0; j < bps.size(); ++j) keep.push_back(j);
  } else {
    out.exact = false;
    for (std::size_t i = 0; i <= max_segments; ++i) keep.push_back(i * pieces / max_segments);
  }
  for (std::size_t i = 0; i + 1 < keep.size(); ++i) {
    const auto& a = bps[keep[i]];
    const auto& b = bps[keep[i + 1]];
    out.segments.push_back({b.q - a.q, (b.value - a.value) / (b.q - a.q)});
  }
  return out;
}

}  // namespace fleetflow
