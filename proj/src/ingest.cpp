#include "fleetflow/ingest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace fleetflow {

using nlohmann::json;

namespace {

const std::vector<std::string> kColumns = {"order", "driver", "user", "origin", "dest", "price", "timestamp"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Comma split with double-quoted fields.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string edge_key(const std::string& o, const std::string& d) { return o + "->" + d; }

std::int64_t day_of(std::int64_t ts) {
  return ts >= 0 ? ts / 86400 : -((-ts + 86399) / 86400);
}

double minute_of_day(std::int64_t ts) { return static_cast<double>(ts - day_of(ts) * 86400) / 60.0; }

int parse_int(const std::string& s, std::size_t pos, std::size_t len) {
  if (pos + len > s.size()) throw std::invalid_argument("truncated timestamp '" + s + "'");
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("bad timestamp '" + s + "'");
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::int64_t parse_timestamp(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':' ||
      s[16] != ':') {
    throw std::invalid_argument("bad timestamp '" + s + "'");
  }
  const int y = parse_int(s, 0, 4);
  const int mo = parse_int(s, 5, 2);
  const int d = parse_int(s, 8, 2);
  const int h = parse_int(s, 11, 2);
  const int mi = parse_int(s, 14, 2);
  const int se = parse_int(s, 17, 2);
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 60) throw std::invalid_argument("bad timestamp '" + s + "'");
  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  std::int64_t offset = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      pos = s.size();
    } else if ((s[pos] == '+' || s[pos] == '-') && s.size() == pos + 6 && s[pos + 3] == ':') {
      offset = (parse_int(s, pos + 1, 2) * 60 + parse_int(s, pos + 4, 2)) * 60;
      if (s[pos] == '-') offset = -offset;
    } else {
      throw std::invalid_argument("bad timestamp '" + s + "'");
    }
  }
  const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
  return days * 86400 + h * 3600 + mi * 60 + se - offset;
}

std::string format_timestamp(std::int64_t seconds) {
  using namespace std::chrono;
  const std::int64_t d = day_of(seconds);
  const year_month_day ymd{sys_days{days{d}}};
  const std::int64_t rest = seconds - d * 86400;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rest / 3600),
                static_cast<int>(rest / 60 % 60), static_cast<int>(rest % 60));
  return buf;
}

ParsedOrders parse_orders(std::istream& in, const std::vector<std::string>& regions) {
  ParsedOrders out;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("order log is empty (no header)");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);
  const auto header = split_csv(line);
  std::vector<std::size_t> col(kColumns.size());
  std::vector<std::string> missing;
  for (std::size_t k = 0; k < kColumns.size(); ++k) {
    const auto it = std::find(header.begin(), header.end(), kColumns[k]);
    if (it == header.end()) {
      missing.push_back(kColumns[k]);
    } else {
      col[k] = static_cast<std::size_t>(it - header.begin());
    }
  }
  if (!missing.empty()) {
    std::string msg = "order log is missing column(s):";
    for (const auto& m : missing) msg += " " + m;
    throw std::invalid_argument(msg);
  }
  const std::set<std::string> known(regions.begin(), regions.end());
  std::set<std::string> seen_ids;

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    auto reject = [&](const std::string& why) { out.rejected.push_back({lineno, why}); };
    if (f.size() < header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()));
      continue;
    }
    OrderRecord r;
    r.line = lineno;
    r.order_id = f[col[0]];
    if (!f[col[1]].empty()) r.driver_id = f[col[1]];
    r.user_id = f[col[2]];
    r.origin = f[col[3]];
    r.dest = f[col[4]];
    if (r.order_id.empty()) {
      reject("empty order id");
      continue;
    }
    if (r.origin.empty() || r.dest.empty()) {
      reject("empty origin or destination");
      continue;
    }
    if (!known.empty() && (!known.count(r.origin) || !known.count(r.dest))) {
      reject("unknown region in " + r.origin + " -> " + r.dest);
      continue;
    }
    try {
      std::size_t used = 0;
      r.price = std::stod(f[col[5]], &used);
      if (used != f[col[5]].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      reject("price '" + f[col[5]] + "' is not a number");
      continue;
    }
    if (!(r.price >= 0.0) || !std::isfinite(r.price)) {
      reject("negative price " + f[col[5]]);
      continue;
    }
    try {
      r.timestamp = parse_timestamp(f[col[6]]);
    } catch (const std::invalid_argument& err) {
      reject(err.what());
      continue;
    }
    if (!seen_ids.insert(r.order_id).second) {
      reject("duplicate order id " + r.order_id);
      continue;
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

ParsedOrders parse_orders(const std::filesystem::path& path, const std::vector<std::string>& regions) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open order log " + path.string());
  return parse_orders(in, regions);
}

void attach_durations(std::vector<OrderRecord>& records) {
  std::map<std::string, std::vector<std::size_t>> by_driver;
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].duration_minutes.reset();
    if (records[i].driver_id) by_driver[*records[i].driver_id].push_back(i);
  }
  for (auto& [driver, idx] : by_driver) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return records[a].timestamp < records[b].timestamp; });
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
      records[idx[k]].duration_minutes =
          static_cast<double>(records[idx[k + 1]].timestamp - records[idx[k]].timestamp) / 60.0;
    }
  }
}

double sample_quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

FilterResult filter_abnormal(const std::vector<OrderRecord>& records, double lower_quantile, double upper_quantile,
                             std::size_t min_group) {
  if (!(0.0 <= lower_quantile && lower_quantile <= upper_quantile && upper_quantile <= 1.0)) {
    throw std::invalid_argument("quantile bounds must satisfy 0 <= lower <= upper <= 1");
  }
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : records) {
    if (r.duration_minutes) groups[edge_key(r.origin, r.dest)].push_back(*r.duration_minutes);
  }
  std::map<std::string, std::pair<double, double>> bounds;
  FilterResult out;
  for (auto& [key, d] : groups) {
    if (d.size() < min_group) {
      out.small_groups.push_back(key);
      continue;
    }
    std::sort(d.begin(), d.end());
    bounds[key] = {sample_quantile(d, lower_quantile), sample_quantile(d, upper_quantile)};
  }
  for (const auto& r : records) {
    if (!r.duration_minutes) {
      ++out.without_duration;
      out.kept.push_back(r);
      continue;
    }
    const auto it = bounds.find(edge_key(r.origin, r.dest));
    if (it == bounds.end()) {
      out.kept.push_back(r);
      continue;
    }
    const double d = *r.duration_minutes;
    if (d < it->second.first || d > it->second.second) {
      std::ostringstream why;
      why << std::setprecision(6) << "duration " << d << " min outside [" << it->second.first << ", "
          << it->second.second << "] for " << it->first;
      out.rejected.push_back({r.line, why.str()});
    } else {
      out.kept.push_back(r);
    }
  }
  return out;
}

TimePriceFit fit_time_price(const std::vector<OrderRecord>& records) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& r : records) {
    if (r.duration_minutes) {
      x.push_back(*r.duration_minutes);
      y.push_back(r.price);
    }
  }
  if (x.size() < 2) throw std::invalid_argument("time/price fit needs at least two timed requests");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 1e-12 * std::max(1.0, mx * mx) * static_cast<double>(x.size()))) {
    throw std::invalid_argument("time/price fit is degenerate: every duration is the same");
  }
  TimePriceFit fit;
  fit.samples = x.size();
  fit.alpha = sxy / sxx;
  fit.intercept = my - fit.alpha * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.alpha * x[i];
    sse += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  fit.residual_sd = x.size() > 2 ? std::sqrt(sse / static_cast<double>(x.size() - 2)) : 0.0;
  return fit;
}

LognormalFit fit_lognormal(const std::vector<double>& prices) {
  LognormalFit fit;
  std::vector<double> logs;
  logs.reserve(prices.size());
  for (double p : prices) {
    if (p > 0.0) {
      logs.push_back(std::log(p));
    } else {
      ++fit.skipped_nonpositive;
    }
  }
  if (logs.empty()) throw std::invalid_argument("lognormal fit needs positive prices");
  fit.samples = logs.size();
  fit.mu_log = mean_of(logs);
  double ss = 0.0;
  for (double l : logs) ss += (l - fit.mu_log) * (l - fit.mu_log);
  fit.sigma_log = std::sqrt(ss / static_cast<double>(logs.size()));
  if (!(fit.sigma_log > 1e-12)) throw std::invalid_argument("lognormal fit is degenerate: all prices are equal");
  return fit;
}

DayFilter parse_day_filter(const std::string& text) {
  if (text == "all") return DayFilter::All;
  if (text == "weekdays") return DayFilter::Weekdays;
  if (text == "weekends") return DayFilter::Weekends;
  throw std::invalid_argument("day filter must be all, weekdays or weekends");
}

bool day_selected(DayFilter filter, std::int64_t timestamp) {
  if (filter == DayFilter::All) return true;
  using namespace std::chrono;
  const unsigned wd = weekday{sys_days{days{day_of(timestamp)}}}.c_encoding();
  const bool weekend = wd == 0 || wd == 6;
  return filter == DayFilter::Weekends ? weekend : !weekend;
}

namespace {

std::size_t period_count(const EstimateConfig& config) {
  if (!config.hourly) return 1;
  const double n = 1440.0 / config.period_minutes;
  if (!(config.period_minutes > 0.0) || std::abs(n - std::round(n)) > 1e-9) {
    throw std::invalid_argument("period length must divide the day");
  }
  return static_cast<std::size_t>(std::lround(n));
}

std::size_t period_of(const EstimateConfig& config, std::int64_t ts) {
  return std::min(period_count(config) - 1, static_cast<std::size_t>(minute_of_day(ts) / config.period_minutes));
}

}  // namespace

CellEstimate estimate_demand(const std::vector<OrderRecord>& records, const std::string& origin,
                             const std::string& dest, std::optional<std::size_t> period, const EstimateConfig& config,
                             std::size_t days) {
  if (days == 0) throw std::invalid_argument("estimation needs at least one observed day");
  if (period && !config.hourly) throw std::invalid_argument("a period index needs hourly estimation");
  std::vector<double> cell;
  std::vector<double> edge_all;
  std::vector<double> from_origin;
  for (const auto& r : records) {
    if (r.origin != origin) continue;
    from_origin.push_back(r.price);
    if (r.dest != dest) continue;
    edge_all.push_back(r.price);
    if (!period || period_of(config, r.timestamp) == *period) cell.push_back(r.price);
  }
  const double covered = period ? config.period_minutes : 1440.0;
  CellEstimate est;
  est.samples = cell.size();
  est.volume = static_cast<double>(cell.size()) / (static_cast<double>(days) * covered / config.step_minutes);
  const std::vector<double>* source = &cell;
  if (cell.size() < config.min_records) {
    est.fallback = true;
    source = period && edge_all.size() >= config.min_records ? &edge_all : &from_origin;
    if (source->size() < config.min_records) source = nullptr;
  }
  if (source == nullptr) {
    std::vector<double> every;
    for (const auto& r : records) every.push_back(r.price);
    if (every.size() < config.min_records) {
      throw std::invalid_argument("too few requests to estimate " + edge_key(origin, dest));
    }
    const auto fit = fit_lognormal(every);
    est.mu_log = fit.mu_log;
    est.sigma_log = fit.sigma_log;
    return est;
  }
  const auto fit = fit_lognormal(*source);
  est.mu_log = fit.mu_log;
  est.sigma_log = fit.sigma_log;
  return est;
}

EstimationResult estimate(const std::vector<OrderRecord>& all, const EstimateConfig& config) {
  if (!(config.step_minutes > 0.0)) throw std::invalid_argument("step length must be positive");
  const DayFilter days_filter = config.days.value_or(config.hourly ? DayFilter::Weekdays : DayFilter::All);
  std::vector<OrderRecord> records;
  for (const auto& r : all) {
    if (day_selected(days_filter, r.timestamp)) records.push_back(r);
  }
  if (records.empty()) throw std::invalid_argument("no requests left after the day filter");

  EstimationResult res;
  res.step_minutes = config.step_minutes;
  res.period_minutes = config.hourly ? config.period_minutes : 0.0;
  std::set<std::int64_t> day_set;
  std::set<std::string> region_set;
  std::map<std::string, std::vector<double>> minutes;
  double busy = 0.0;
  std::size_t timed = 0;
  for (const auto& r : records) {
    day_set.insert(day_of(r.timestamp));
    region_set.insert(r.origin);
    region_set.insert(r.dest);
    if (r.duration_minutes) {
      minutes[edge_key(r.origin, r.dest)].push_back(*r.duration_minutes);
      busy += *r.duration_minutes;
      ++timed;
    }
  }
  res.days = day_set.size();
  res.regions.assign(region_set.begin(), region_set.end());
  res.time_price = fit_time_price(records);
  if (!(res.time_price.alpha > 0.0)) {
    throw std::invalid_argument("fitted per-minute rate is not positive");
  }

  std::vector<double> every_minute;
  for (const auto& [key, m] : minutes) every_minute.insert(every_minute.end(), m.begin(), m.end());
  if (every_minute.empty()) throw std::invalid_argument("no request carries a duration");
  const double global_minutes = mean_of(every_minute);

  std::set<std::string> observed;
  for (const auto& r : records) observed.insert(edge_key(r.origin, r.dest));
  for (const auto& o : res.regions) {
    for (const auto& d : res.regions) {
      const std::string key = edge_key(o, d);
      if (o == d && !observed.count(key)) continue;
      EstimatedEdge e;
      e.id = key;
      e.origin = o;
      e.dest = d;
      e.observed = observed.count(key) > 0;
      if (minutes.count(key)) {
        e.minutes = mean_of(minutes.at(key));
      } else if (minutes.count(edge_key(d, o))) {
        e.minutes = mean_of(minutes.at(edge_key(d, o)));
        res.flags.push_back(key + ": travel time taken from the reverse direction");
      } else {
        e.minutes = global_minutes;
        res.flags.push_back(key + ": travel time taken from the global mean");
      }
      e.travel_time = std::max(1, static_cast<int>(std::lround(e.minutes / config.step_minutes)));
      res.edges.push_back(e);
    }
  }

  const std::size_t periods = period_count(config);
  for (const auto& e : res.edges) {
    std::vector<CellEstimate> row;
    if (!e.observed) {
      row.assign(periods, CellEstimate{});
      res.cells.push_back(row);
      continue;
    }
    for (std::size_t p = 0; p < periods; ++p) {
      const auto period = config.hourly ? std::optional<std::size_t>(p) : std::nullopt;
      row.push_back(estimate_demand(records, e.origin, e.dest, period, config, res.days));
      if (row.back().fallback) {
        res.flags.push_back(e.id + (config.hourly ? " period " + std::to_string(p) : std::string()) + ": only " +
                            std::to_string(row.back().samples) + " requests, parameters borrowed");
      }
    }
    res.cells.push_back(row);
  }

  if (config.driver_mass) {
    if (!(*config.driver_mass > 0.0)) throw std::invalid_argument("driver mass must be positive");
    res.driver_mass = *config.driver_mass;
  } else {
    // Untimed requests are assumed to last as long as the timed ones.
    const double scaled = busy * static_cast<double>(records.size()) / static_cast<double>(timed);
    res.driver_mass = scaled / (static_cast<double>(res.days) * 1440.0);
  }
  return res;
}

json EstimationResult::to_instance_json() const {
  json doc;
  doc["nodes"] = regions;
  doc["edges"] = json::array();
  json demand = json::object();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& edge = edges[e];
    doc["edges"].push_back({{"id", edge.id},
                            {"from", edge.origin},
                            {"to", edge.dest},
                            {"travel_time", edge.travel_time},
                            {"minutes", edge.minutes},
                            {"cost", 0.0}});
    if (!edge.observed) continue;
    json list = json::array();
    for (const auto& c : cells[e]) {
      list.push_back({{"kind", "lognormal"}, {"mu_log", c.mu_log}, {"sigma_log", c.sigma_log}, {"volume", c.volume}});
    }
    demand[edge.id] = list.size() == 1 ? list.front() : list;
  }
  doc["demand"] = demand;
  doc["step_minutes"] = step_minutes;
  if (period_minutes > 0.0) doc["steps_per_period"] = static_cast<int>(std::lround(period_minutes / step_minutes));
  doc["driver_mass"] = driver_mass;
  doc["objective"] = {{"kind", "revenue"}};
  doc["estimation"] = {{"alpha", time_price.alpha},
                       {"intercept", time_price.intercept},
                       {"r_squared", time_price.r_squared},
                       {"timed_requests", time_price.samples},
                       {"days", days},
                       {"flags", flags}};
  return doc;
}

SynthConfig SynthConfig::from_json(const json& doc) {
  SynthConfig c;
  c.regions = doc.at("regions").get<std::vector<std::string>>();
  for (const auto& e : doc.at("edges")) {
    SynthEdge s;
    s.origin = e.at("origin").get<std::string>();
    s.dest = e.at("dest").get<std::string>();
    s.mu_log = e.at("mu_log").get<double>();
    s.sigma_log = e.at("sigma_log").get<double>();
    s.orders = e.at("orders").get<std::size_t>();
    if (!(s.sigma_log > 0.0)) throw std::invalid_argument("sigma_log must be positive");
    c.edges.push_back(s);
  }
  c.alpha = doc.value("alpha", c.alpha);
  c.duration_jitter = doc.value("duration_jitter", c.duration_jitter);
  c.cancel_rate = doc.value("cancel_rate", c.cancel_rate);
  c.empty_driver_rate = doc.value("empty_driver_rate", c.empty_driver_rate);
  c.orders_per_shift = doc.value("orders_per_shift", c.orders_per_shift);
  c.days = doc.value("days", c.days);
  c.start_date = doc.value("start_date", c.start_date);
  if (!(c.alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  if (c.orders_per_shift < 2 || c.days < 1) throw std::invalid_argument("need at least two orders per shift and a day");
  const std::set<std::string> known(c.regions.begin(), c.regions.end());
  for (const auto& e : c.edges) {
    if (!known.count(e.origin) || !known.count(e.dest)) {
      throw std::invalid_argument("synthetic edge " + e.origin + " -> " + e.dest + " uses an unknown region");
    }
  }
  return c;
}

json SynthConfig::to_json() const {
  json e = json::array();
  for (const auto& s : edges) {
    e.push_back(
        {{"origin", s.origin}, {"dest", s.dest}, {"mu_log", s.mu_log}, {"sigma_log", s.sigma_log}, {"orders", s.orders}});
  }
  return {{"regions", regions},
          {"edges", e},
          {"alpha", alpha},
          {"duration_jitter", duration_jitter},
          {"cancel_rate", cancel_rate},
          {"empty_driver_rate", empty_driver_rate},
          {"orders_per_shift", orders_per_shift},
          {"days", days},
          {"start_date", start_date}};
}

SynthConfig SynthConfig::five_region(std::size_t n) {
  SynthConfig c;
  c.regions = {"C", "N", "E", "S", "W"};
  // Ring order N, E, S, W around the center C.
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      if (i == j) continue;
      SynthEdge s;
      s.origin = c.regions[i];
      s.dest = c.regions[j];
      if (i == 0 || j == 0) {
        s.mu_log = 2.4 + 0.05 * static_cast<double>(i + j);
        s.sigma_log = 0.45;
        // Inbound trips to the center outnumber outbound ones.
        s.orders = j == 0 ? 3 * n : n;
      } else {
        const std::size_t gap = (i > j ? i - j : j - i);
        const bool across = gap == 2;
        s.mu_log = across ? 3.2 : 2.85;
        s.sigma_log = across ? 0.55 : 0.5;
        s.orders = n;
      }
      c.edges.push_back(s);
    }
  }
  return c;
}

void synth_generate(const SynthConfig& config, std::uint64_t seed, std::ostream& out) {
  boost::random::mt19937_64 rng(seed);
  boost::random::uniform_01<double> unit;
  boost::random::normal_distribution<double> normal;

  struct Draft {
    std::size_t edge;
    double price;
    double minutes;
    bool cancelled;
  };
  std::vector<Draft> drafts;
  for (std::size_t e = 0; e < config.edges.size(); ++e) {
    const auto& s = config.edges[e];
    // Trip minutes center on the mean fare divided by the per-minute rate.
    const double mean_minutes = std::exp(s.mu_log + 0.5 * s.sigma_log * s.sigma_log) / config.alpha;
    for (std::size_t k = 0; k < s.orders; ++k) {
      Draft d;
      d.edge = e;
      d.price = std::round(std::exp(s.mu_log + s.sigma_log * normal(rng)) * 100.0) / 100.0;
      d.cancelled = unit(rng) < config.cancel_rate;
      d.minutes = d.cancelled ? 1.0 + 2.0 * unit(rng)
                              : mean_minutes * (1.0 + config.duration_jitter * (2.0 * unit(rng) - 1.0));
      drafts.push_back(d);
    }
  }
  for (std::size_t i = drafts.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(unit(rng) * static_cast<double>(i));
    std::swap(drafts[i - 1], drafts[std::min(j, i - 1)]);
  }

  const std::int64_t start_day = parse_timestamp(config.start_date + "T00:00:00") / 86400;
  // Weekday calendar: skip Saturdays and Sundays.
  std::vector<std::int64_t> calendar;
  for (std::int64_t d = start_day; calendar.size() < config.days; ++d) {
    if (day_selected(DayFilter::Weekdays, d * 86400)) calendar.push_back(d);
  }

  out << "order,driver,user,origin,dest,price,timestamp\n";
  out << std::fixed;
  const std::size_t per_shift = config.orders_per_shift;
  std::size_t next_order = 0;
  for (std::size_t begin = 0, shift = 0; begin < drafts.size(); begin += per_shift, ++shift) {
    // Each driver works two consecutive weekdays, one shift a day.
    const std::size_t driver = shift / 2;
    const std::int64_t day = calendar[(driver + shift % 2) % calendar.size()];
    double clock = 360.0 + 120.0 * unit(rng);  // minutes after midnight
    char driver_id[32];
    std::snprintf(driver_id, sizeof driver_id, "d%06zu", driver);
    const std::size_t end = std::min(drafts.size(), begin + per_shift);
    for (std::size_t k = begin; k < end; ++k) {
      const Draft& d = drafts[k];
      const auto& s = config.edges[d.edge];
      const bool empty_driver = unit(rng) < config.empty_driver_rate;
      const auto user = static_cast<std::size_t>(unit(rng) * 1e6);
      const auto ts = day * 86400 + static_cast<std::int64_t>(std::llround(clock * 60.0));
      char order_id[32];
      std::snprintf(order_id, sizeof order_id, "o%09zu", next_order++);
      out << order_id << "," << (empty_driver ? "" : driver_id) << ",u" << std::setw(6) << std::setfill('0') << user
          << std::setfill(' ') << "," << s.origin << "," << s.dest << "," << std::setprecision(2) << d.price << ","
          << format_timestamp(ts) << "\n";
      clock += d.minutes;
    }
  }
}

std::string synth_generate(const SynthConfig& config, std::uint64_t seed) {
  std::ostringstream out;
  synth_generate(config, seed, out);
  return out.str();
}

}  // namespace fleetflow
