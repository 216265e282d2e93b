#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fleetflow/demand.hpp"

namespace fleetflow {

/// One row of the order log.
struct OrderRecord {
  std::string order_id;
  std::optional<std::string> driver_id;
  std::string user_id;
  std::string origin;
  std::string dest;
  double price = 0.0;
  /// Seconds since the Unix epoch, UTC.
  std::int64_t timestamp = 0;
  std::size_t line = 0;
  /// Gap to the same driver's next request; absent for the driver's last
  /// request and for rows without a driver.
  std::optional<double> duration_minutes;
};

struct RowIssue {
  std::size_t line = 0;
  std::string message;
};

struct ParsedOrders {
  std::vector<OrderRecord> records;
  std::vector<RowIssue> rejected;
};

/// Header must contain order,driver,user,origin,dest,price,timestamp (any
/// order, extra columns ignored). Missing columns throw
/// std::invalid_argument; bad rows are reported and skipped. When
/// `regions` is non-empty, unknown origins or destinations are rejected.
ParsedOrders parse_orders(std::istream& in, const std::vector<std::string>& regions = {});
ParsedOrders parse_orders(const std::filesystem::path& path, const std::vector<std::string>& regions = {});

/// "2016-11-07T08:15:00", optional fraction, "Z" or +hh:mm offset; a space
/// may replace the T. Throws std::invalid_argument.
std::int64_t parse_timestamp(const std::string& text);
std::string format_timestamp(std::int64_t seconds);

/// Fills duration_minutes from consecutive requests of each driver.
void attach_durations(std::vector<OrderRecord>& records);

/// Linear-interpolation sample quantile; `sorted` must be ascending.
double sample_quantile(const std::vector<double>& sorted, double p);

struct FilterResult {
  std::vector<OrderRecord> kept;
  std::vector<RowIssue> rejected;
  /// "origin->dest" groups too small to filter, passed through as is.
  std::vector<std::string> small_groups;
  std::size_t without_duration = 0;
};

/// Per (origin, dest) group, keeps durations inside the group's
/// [lower, upper] quantile range. Rows without a duration are kept.
FilterResult filter_abnormal(const std::vector<OrderRecord>& records, double lower_quantile = 0.05,
                             double upper_quantile = 0.95, std::size_t min_group = 5);

struct TimePriceFit {
  double alpha = 0.0;  ///< money per minute
  double intercept = 0.0;
  double r_squared = 0.0;
  double residual_sd = 0.0;
  std::size_t samples = 0;
};

/// OLS of price on duration over rows that carry a duration.
TimePriceFit fit_time_price(const std::vector<OrderRecord>& records);

struct LognormalFit {
  double mu_log = 0.0;
  double sigma_log = 0.0;
  std::size_t samples = 0;
  std::size_t skipped_nonpositive = 0;
};

/// Maximum likelihood on log prices. Throws std::invalid_argument when no
/// positive price is left or the logs have zero spread.
LognormalFit fit_lognormal(const std::vector<double>& prices);

enum class DayFilter { All, Weekdays, Weekends };
DayFilter parse_day_filter(const std::string& text);
bool day_selected(DayFilter filter, std::int64_t timestamp);

struct EstimateConfig {
  double step_minutes = 15.0;
  /// Per-hour-of-day cells when set; otherwise one static cell per edge.
  bool hourly = false;
  double period_minutes = 60.0;
  std::size_t min_records = 10;
  /// Driver mass that request volume is measured against; by default the
  /// mean number of drivers busy with kept requests.
  std::optional<double> driver_mass;
  /// Defaults to weekdays for hourly estimates and all days otherwise.
  std::optional<DayFilter> days;
};

struct CellEstimate {
  double mu_log = 0.0;
  double sigma_log = 0.0;
  /// Requests per step, before division by the driver mass.
  double volume = 0.0;
  std::size_t samples = 0;
  bool fallback = false;

  DemandCurve curve() const { return DemandCurve::lognormal(mu_log, sigma_log, volume); }
};

struct EstimatedEdge {
  std::string id;
  std::string origin;
  std::string dest;
  double minutes = 0.0;
  int travel_time = 1;
  bool observed = false;
};

struct EstimationResult {
  std::vector<std::string> regions;
  std::vector<EstimatedEdge> edges;
  /// cells[edge][period]
  std::vector<std::vector<CellEstimate>> cells;
  TimePriceFit time_price;
  double driver_mass = 1.0;
  double step_minutes = 15.0;
  double period_minutes = 0.0;
  std::size_t days = 0;
  std::vector<std::string> flags;

  /// Instance document accepted by parse_instance.
  nlohmann::json to_instance_json() const;
};

/// Lognormal fit and volume for one (edge, period) cell; period is an
/// index into the day when `config.hourly` is set. Cells below
/// `min_records` borrow the parameters of the edge's all-day cell, or of
/// every request from the origin when that is also too thin.
CellEstimate estimate_demand(const std::vector<OrderRecord>& records, const std::string& origin,
                             const std::string& dest, std::optional<std::size_t> period, const EstimateConfig& config,
                             std::size_t days);

/// Complete pipeline on filtered records.
EstimationResult estimate(const std::vector<OrderRecord>& records, const EstimateConfig& config = {});

struct SynthEdge {
  std::string origin;
  std::string dest;
  double mu_log = 2.5;
  double sigma_log = 0.5;
  std::size_t orders = 0;
};

struct SynthConfig {
  std::vector<std::string> regions;
  std::vector<SynthEdge> edges;
  double alpha = 0.5117;
  /// Relative spread of trip minutes around the edge mean.
  double duration_jitter = 0.02;
  double cancel_rate = 0.02;
  double empty_driver_rate = 0.01;
  std::size_t orders_per_shift = 20;
  std::size_t days = 20;
  /// First day, a Monday; only weekdays are generated.
  std::string start_date = "2016-11-07";

  static SynthConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
  /// Five regions with demand flowing mostly toward the center.
  static SynthConfig five_region(std::size_t orders_per_edge);
};

/// Writes a reproducible order log for `config`.
void synth_generate(const SynthConfig& config, std::uint64_t seed, std::ostream& out);
std::string synth_generate(const SynthConfig& config, std::uint64_t seed);

}  // namespace fleetflow
