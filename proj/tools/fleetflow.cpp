// fleetflow command-line driver.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>
#include <openssl/opensslv.h>
#include <boost/version.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "fleetflow/duality.hpp"
#include "fleetflow/ingest.hpp"
#include "fleetflow/instance.hpp"
#include "fleetflow/ironing.hpp"
#include "fleetflow/simulator.hpp"
#include "fleetflow/solver.hpp"
#include "fleetflow/transform.hpp"

#ifndef FLEETFLOW_VERSION
#define FLEETFLOW_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fleetflow;

namespace {

enum Exit { kOk = 0, kFailure = 1, kValidation = 2, kNotCertified = 3, kKktFailed = 4 };

/// Bad input: unreadable file, malformed document, invalid instance.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Global {
  std::string out_dir = ".";
  std::size_t grid = 1000;
  std::uint64_t seed = 0;
  double step_minutes = 15.0;
  std::size_t steps = 96;
  double stationarity_tol = 1e-5;
  double slackness_tol = 1e-6;
  double feasibility_tol = 1e-7;
  std::size_t max_pivots = 100000;
  std::string manifest;
};

/// Files read and written by one run, for the manifest.
struct RunLog {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json config = json::object();
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "";
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

std::string read_text(const fs::path& path, RunLog& log) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  log.inputs.push_back(path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path, RunLog& log) {
  const std::string text = read_text(path, log);
  try {
    return json::parse(text);
  } catch (const json::parse_error& err) {
    throw ValidationError(path.string() + ": " + err.what());
  }
}

void write_text(const fs::path& path, const std::string& text, RunLog& log) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  out.close();
  log.outputs.push_back(path.string());
  spdlog::info("wrote {}", path.string());
}

void write_json(const fs::path& path, const json& doc, RunLog& log) { write_text(path, doc.dump(2) + "\n", log); }

fs::path in_out_dir(const Global& g, const std::string& name) {
  const fs::path p(name);
  return p.is_absolute() || p.has_parent_path() ? p : fs::path(g.out_dir) / p;
}

Instance load_checked(const fs::path& path, RunLog& log) {
  const json doc = read_json(path, log);
  Instance inst;
  try {
    inst = parse_instance(doc);
  } catch (const std::exception& err) {
    throw ValidationError(path.string() + ": " + err.what());
  }
  const auto problems = validate_instance(inst);
  if (!problems.empty()) {
    std::string msg = path.string() + " is not a valid instance:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
  return inst;
}

SolverConfig solver_config(const Global& g) {
  SolverConfig c;
  c.grid_size = g.grid;
  c.stationarity_tol = g.stationarity_tol;
  c.slackness_tol = g.slackness_tol;
  c.feasibility_tol = g.feasibility_tol;
  c.max_pivots = g.max_pivots;
  return c;
}

/// {"available": {node: mass}, "in_transit": {edge: [slot, ...]}}
DriverState state_from_json(const json& doc, const Instance& inst) {
  const CityGraph& g = inst.graph;
  DriverState s;
  s.available.assign(g.node_count(), 0.0);
  s.in_transit.resize(g.edge_count());
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    s.in_transit[e].assign(static_cast<std::size_t>(g.edge(e).travel_time - 1), 0.0);
  }
  for (const auto& [name, mass] : doc.at("available").items()) {
    const auto v = g.find_node(name);
    if (!v) throw ValidationError("start state names unknown node " + name);
    s.available[*v] = mass.get<double>();
  }
  if (doc.contains("in_transit")) {
    for (const auto& [id, slots] : doc.at("in_transit").items()) {
      const auto e = g.find_edge(id);
      if (!e) throw ValidationError("start state names unknown edge " + id);
      auto v = slots.get<std::vector<double>>();
      if (v.size() != s.in_transit[*e].size()) throw ValidationError("pipeline of " + id + " has the wrong length");
      s.in_transit[*e] = v;
    }
  }
  return s;
}

/// State at step 0 of a plan document.
DriverState state_from_plan(const json& plan, const Instance& inst) {
  const json& view = plan.at("original");
  json doc = {{"available", json::object()}, {"in_transit", json::object()}};
  const auto nodes = view.at("nodes").get<std::vector<std::string>>();
  const auto available = view.at("available").at(0).get<std::vector<double>>();
  for (std::size_t v = 0; v < nodes.size(); ++v) doc["available"][nodes[v]] = available.at(v);
  for (const auto& [id, steps] : view.at("in_transit").items()) doc["in_transit"][id] = steps.at(0);
  return state_from_json(doc, inst);
}

DriverState default_state(const Instance& inst) {
  return DriverState::at_nodes(inst.graph, initial_distribution_or_uniform(inst));
}

DriverState resolve_start(const Instance& inst, const std::string& start, const std::string& start_plan,
                          RunLog& log) {
  if (!start.empty() && !start_plan.empty()) throw ValidationError("give either --start or --start-plan");
  if (!start.empty()) return state_from_json(read_json(start, log), inst);
  if (!start_plan.empty()) return state_from_plan(read_json(start_plan, log), inst);
  return default_state(inst);
}

int finish_solve(const Global& g, const Solution& s, const Instance& inst, const std::string& plan_name,
                 const std::string& cert_name, const std::string& mapping, RunLog& log) {
  write_json(in_out_dir(g, plan_name), plan_to_json(s, inst), log);
  write_json(in_out_dir(g, cert_name), certificate_to_json(s), log);
  if (!mapping.empty()) write_json(in_out_dir(g, mapping), s.unified.map.to_json(inst.graph, s.unified.instance.graph), log);
  std::cout << std::setprecision(10) << "status      " << to_string(s.result.status) << "\n"
            << "objective   " << s.result.plan.objective << "\n"
            << "pivots      " << s.result.pivots << "\n"
            << "certified   " << (s.certified ? "yes" : "no") << "\n";
  std::cout << marginal_report(s.result.cert, s.unified.instance.graph);
  for (const auto& n : s.notes) spdlog::warn("{}", n);
  return s.certified ? kOk : kNotCertified;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

/// Trace CSV columns by header name.
std::map<std::string, std::vector<std::string>> read_columns(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(source + " is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  std::map<std::string, std::vector<std::string>> cols;
  for (const auto& h : header) cols[h];
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != header.size()) throw ValidationError(source + ": ragged row");
    for (std::size_t i = 0; i < header.size(); ++i) cols[header[i]].push_back(cells[i]);
  }
  if (!cols.count("step") || !cols.count("revenue")) throw ValidationError(source + " is not a simulation trace");
  return cols;
}

json versions() {
  return {{"fleetflow", FLEETFLOW_VERSION},
          {"compiler", __VERSION__},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"spdlog", std::to_string(SPDLOG_VER_MAJOR) + "." + std::to_string(SPDLOG_VER_MINOR) + "." +
                         std::to_string(SPDLOG_VER_PATCH)},
          {"openssl", OPENSSL_VERSION_TEXT}};
}

void setup_logging() {
  static bool done = false;
  if (done) return;
  done = true;
  auto logger = spdlog::stderr_color_mt("fleetflow");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FLEETFLOW_LOG")) {
    const auto level = spdlog::level::from_str(lower(env));
    if (level == spdlog::level::off && lower(env) != "off") {
      spdlog::warn("FLEETFLOW_LOG={} is not a level; keeping warn", env);
    } else {
      spdlog::set_level(level);
    }
  }
}

int run(const std::vector<std::string>& args);

int cmd_replay(const std::string& manifest_path) {
  RunLog scratch;
  const json manifest = read_json(manifest_path, scratch);
  for (const auto& [path, digest] : manifest.at("inputs").items()) {
    if (sha256_file(path) != digest.get<std::string>()) {
      throw ValidationError("input " + path + " changed since the recorded run");
    }
  }
  const auto argv = manifest.at("argv").get<std::vector<std::string>>();
  std::cout << "replaying:";
  for (const auto& a : argv) std::cout << " " << a;
  std::cout << "\n";
  const int code = run(argv);
  if (code != manifest.value("exit_code", 0)) {
    std::cout << "exit code " << code << " differs from recorded " << manifest.value("exit_code", 0) << "\n";
    return kFailure;
  }
  bool same = true;
  for (const auto& [path, digest] : manifest.at("outputs").items()) {
    const bool match = sha256_file(path) == digest.get<std::string>();
    std::cout << (match ? "same     " : "CHANGED  ") << path << "\n";
    same = same && match;
  }
  std::cout << (same ? "reproduced bit-identically\n" : "outputs differ\n");
  return same ? kOk : kFailure;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Flow-based pricing and dispatch for ride-hailing markets", "fleetflow"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--out-dir", g.out_dir, "Directory for outputs given as bare file names");
  app.add_option("--grid", g.grid, "Grid intervals per envelope")->check(CLI::Range(2, 10000000));
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--step-minutes", g.step_minutes, "Length of one step")->check(CLI::PositiveNumber);
  app.add_option("--steps", g.steps, "Simulation steps")->check(CLI::Range(1, 100000000));
  app.add_option("--stationarity-tol", g.stationarity_tol)->check(CLI::PositiveNumber);
  app.add_option("--slackness-tol", g.slackness_tol)->check(CLI::PositiveNumber);
  app.add_option("--feasibility-tol", g.feasibility_tol)->check(CLI::PositiveNumber);
  app.add_option("--max-pivots", g.max_pivots, "Simplex pivot budget")->check(CLI::PositiveNumber);
  app.add_option("--manifest", g.manifest, "Manifest path (default <out-dir>/<command>.manifest.json)");

  // estimate
  std::string orders;
  std::string instance_out = "instance.json";
  double lower_q = 0.05;
  double upper_q = 0.95;
  bool hourly = false;
  double period_minutes = 60.0;
  double driver_mass = 0.0;
  std::string days;
  std::vector<std::string> regions;
  std::string rejects;
  auto* est = app.add_subcommand("estimate", "Fit an instance from an order log");
  est->add_option("orders", orders, "Order CSV")->required();
  est->add_option("-o,--output", instance_out, "Instance file");
  est->add_option("--lower-quantile", lower_q)->check(CLI::Range(0.0, 1.0));
  est->add_option("--upper-quantile", upper_q)->check(CLI::Range(0.0, 1.0));
  est->add_flag("--hourly", hourly, "One demand curve per period of the day");
  est->add_option("--period-minutes", period_minutes)->check(CLI::PositiveNumber);
  est->add_option("--driver-mass", driver_mass, "Driver supply normalizer (default: mean busy drivers)")
      ->check(CLI::PositiveNumber);
  est->add_option("--days", days, "all, weekdays or weekends")->check(CLI::IsMember({"all", "weekdays", "weekends"}));
  est->add_option("--regions", regions, "Known region ids; other rows are rejected");
  est->add_option("--rejects", rejects, "CSV of rejected rows with reasons");

  // solve-static / solve-dynamic
  std::string instance_path;
  std::string plan_name = "plan.json";
  std::string cert_name = "cert.json";
  std::string mapping;
  auto* ss = app.add_subcommand("solve-static", "Stationary flow plan with dual certificate");
  ss->add_option("instance", instance_path)->required()->check(CLI::ExistingFile);
  ss->add_option("--plan", plan_name);
  ss->add_option("--cert", cert_name);
  ss->add_option("--emit-mapping", mapping, "Write the expansion map");

  std::size_t horizon = 0;
  std::string start;
  std::string start_plan;
  std::string supply_text = "per_step";
  auto* sd = app.add_subcommand("solve-dynamic", "Finite-horizon flow plan");
  sd->add_option("instance", instance_path)->required()->check(CLI::ExistingFile);
  sd->add_option("--horizon", horizon, "Number of steps")->required()->check(CLI::Range(1, 1000000));
  sd->add_option("--start", start, "Start state JSON");
  sd->add_option("--start-plan", start_plan, "Start from step 0 of a plan");
  sd->add_option("--supply", supply_text, "per_step, total[:B] or soft:cap@cost,...");
  sd->add_option("--plan", plan_name);
  sd->add_option("--cert", cert_name);
  sd->add_option("--emit-mapping", mapping, "Write the expansion map");

  // kkt-check
  std::string plan_path;
  std::string cert_path;
  std::string report_out;
  auto* kk = app.add_subcommand("kkt-check", "Verify a plan against its certificate");
  kk->add_option("instance", instance_path)->required()->check(CLI::ExistingFile);
  kk->add_option("plan", plan_path)->required()->check(CLI::ExistingFile);
  kk->add_option("cert", cert_path)->required()->check(CLI::ExistingFile);
  kk->add_option("--report", report_out, "Write the report as JSON");

  // simulate
  std::vector<std::string> policies;
  bool sampled = false;
  std::string summary_name = "summary.json";
  auto* sim = app.add_subcommand("simulate", "Run pricing policies on the fluid model");
  sim->add_option("instance", instance_path)->required()->check(CLI::ExistingFile);
  sim->add_option("--policy", policies, "fixed:alpha=A | surge:alpha=A,beta=LO..HI | dynam:plan=PATH")->required();
  sim->add_option("--start", start, "Start state JSON");
  sim->add_option("--start-plan", start_plan, "Start from step 0 of a plan (default for dynam)");
  sim->add_flag("--sampled", sampled, "Draw prices and demand instead of expectations");
  sim->add_option("--summary", summary_name);

  // report
  std::vector<std::string> traces;
  std::string report_name = "report.csv";
  auto* rep = app.add_subcommand("report", "Compare simulation traces");
  rep->add_option("traces", traces, "Trace CSVs from simulate")->required()->check(CLI::ExistingFile);
  rep->add_option("-o,--output", report_name);

  // synth
  std::string synth_config;
  std::size_t five_region = 0;
  std::string synth_out = "orders.csv";
  auto* syn = app.add_subcommand("synth", "Generate a synthetic order log");
  syn->add_option("--config", synth_config, "Synthetic market JSON")->check(CLI::ExistingFile);
  syn->add_option("--five-region", five_region, "Built-in five-region market with N orders per edge");
  syn->add_option("-o,--output", synth_out);

  // inspect
  std::string edge_filter;
  std::string inspect_out;
  auto* ins = app.add_subcommand("inspect", "Validate an instance and show its ironed envelopes");
  ins->add_option("instance", instance_path)->required()->check(CLI::ExistingFile);
  ins->add_option("--edge", edge_filter, "Only this edge");
  ins->add_option("-o,--output", inspect_out, "Write JSON here instead of stdout");

  // replay
  std::string manifest_path;
  auto* rp = app.add_subcommand("replay", "Re-run a recorded command and compare outputs");
  rp->add_option("manifest", manifest_path)->required()->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  if (rp->parsed()) return cmd_replay(manifest_path);

  RunLog log;
  CLI::App* cmd = app.get_subcommands().front();
  int code = kOk;

  if (est->parsed()) {
    auto parsed = [&] {
      std::istringstream in(read_text(orders, log));
      return parse_orders(in, regions);
    }();
    for (std::size_t i = 0; i < parsed.rejected.size() && i < 20; ++i) {
      spdlog::warn("line {}: {}", parsed.rejected[i].line, parsed.rejected[i].message);
    }
    if (parsed.rejected.size() > 20) spdlog::warn("{} more rejected rows", parsed.rejected.size() - 20);
    attach_durations(parsed.records);
    const FilterResult filtered = filter_abnormal(parsed.records, lower_q, upper_q);
    for (const auto& grp : filtered.small_groups) spdlog::warn("{}: too few timed requests to filter", grp);
    EstimateConfig cfg;
    cfg.step_minutes = g.step_minutes;
    cfg.hourly = hourly;
    cfg.period_minutes = period_minutes;
    if (driver_mass > 0.0) cfg.driver_mass = driver_mass;
    if (!days.empty()) cfg.days = parse_day_filter(days);
    const EstimationResult res = estimate(filtered.kept, cfg);
    for (const auto& f : res.flags) spdlog::info("{}", f);
    json doc = res.to_instance_json();
    doc["estimation"]["parsed_rows"] = parsed.records.size();
    doc["estimation"]["malformed_rows"] = parsed.rejected.size();
    doc["estimation"]["filtered_rows"] = filtered.rejected.size();
    doc["estimation"]["small_groups"] = filtered.small_groups;
    write_json(in_out_dir(g, instance_out), doc, log);
    if (!rejects.empty()) {
      std::ostringstream csv;
      csv << "line,stage,reason\n";
      for (const auto& r : parsed.rejected) csv << r.line << ",parse,\"" << r.message << "\"\n";
      for (const auto& r : filtered.rejected) csv << r.line << ",filter,\"" << r.message << "\"\n";
      write_text(in_out_dir(g, rejects), csv.str(), log);
    }
    std::cout << std::setprecision(6) << "requests    " << parsed.records.size() << " (" << parsed.rejected.size()
              << " malformed, " << filtered.rejected.size() << " filtered)\n"
              << "alpha       " << res.time_price.alpha << " per minute (R^2 " << res.time_price.r_squared << ")\n"
              << "driver mass " << res.driver_mass << "\n"
              << "edges       " << res.edges.size() << "\n";
    log.config = {{"lower_quantile", lower_q}, {"upper_quantile", upper_q}, {"hourly", hourly},
                  {"period_minutes", period_minutes}, {"driver_mass", driver_mass > 0 ? json(driver_mass) : json()},
                  {"days", days}, {"regions", regions}};
  } else if (ss->parsed()) {
    const Instance inst = load_checked(instance_path, log);
    if (!inst.is_static()) throw ValidationError("solve-static needs a single-period instance");
    const Solution s = solve_static(inst, solver_config(g));
    code = finish_solve(g, s, inst, plan_name, cert_name, mapping, log);
  } else if (sd->parsed()) {
    const Instance inst = load_checked(instance_path, log);
    const DriverState st = resolve_start(inst, start, start_plan, log);
    SupplyConstraint supply;
    try {
      supply = SupplyConstraint::parse(supply_text);
    } catch (const std::invalid_argument& err) {
      throw ValidationError(err.what());
    }
    const Solution s = solve_dynamic(inst, horizon, st, supply, solver_config(g));
    code = finish_solve(g, s, inst, plan_name, cert_name, mapping, log);
    log.config = {{"horizon", horizon}, {"supply", supply_text}};
  } else if (kk->parsed()) {
    const Instance inst = load_checked(instance_path, log);
    const json plan_doc = read_json(plan_path, log);
    const json cert_doc = read_json(cert_path, log);
    const ExpandedInstance unified = expand(inst);
    FlowPlan plan;
    DualCertificate cert;
    try {
      plan = plan_from_json(plan_doc, unified.instance.graph);
      cert = certificate_from_json(cert_doc, unified.instance.graph);
    } catch (const std::exception& err) {
      throw ValidationError(std::string("plan or certificate does not fit the instance: ") + err.what());
    }
    const std::size_t grid = plan_doc.value("grid_size", g.grid);
    const EnvelopeTable env = build_envelopes(inst, unified, grid);
    const SupplyConstraint supply =
        plan_doc.contains("supply") ? supply_from_json(plan_doc.at("supply")) : SupplyConstraint::per_step();
    KKTTolerances tol;
    tol.stationarity = g.stationarity_tol;
    tol.slackness = g.slackness_tol;
    tol.feasibility = g.feasibility_tol;
    const KKTReport report = kkt_check(unified, env, plan, cert, supply, tol);
    std::cout << report.summary();
    if (!report_out.empty()) write_json(in_out_dir(g, report_out), report.to_json(), log);
    code = report.passed ? kOk : kKktFailed;
  } else if (sim->parsed()) {
    const Instance inst = load_checked(instance_path, log);
    std::vector<Policy> list;
    std::string first_plan;
    for (const auto& text : policies) {
      PolicySpec spec;
      try {
        spec = parse_policy_spec(text);
      } catch (const std::invalid_argument& err) {
        throw ValidationError(err.what());
      }
      switch (spec.kind) {
        case PolicySpec::Kind::Fixed:
          list.emplace_back(FixedPolicy{spec.alpha});
          break;
        case PolicySpec::Kind::Surge:
          list.emplace_back(SurgePolicy{spec.alpha, spec.beta_min, spec.beta_max});
          break;
        case PolicySpec::Kind::Dynam:
          try {
            list.emplace_back(dynam_from_plan(read_json(spec.plan_path, log), inst));
          } catch (const std::invalid_argument& err) {
            throw ValidationError(spec.plan_path + ": " + err.what());
          }
          if (first_plan.empty()) first_plan = spec.plan_path;
          break;
      }
    }
    // Policies share one start; a DYNAM plan's own start state by default.
    const std::string from_plan = start.empty() && start_plan.empty() ? first_plan : start_plan;
    const DriverState st = resolve_start(inst, start, from_plan, log);
    SimConfig cfg;
    cfg.steps = g.steps;
    cfg.sampled = sampled;
    cfg.seed = g.seed;
    const PolicyComparison cmp = compare_policies(inst, list, st, cfg);
    json summary = {{"instance", instance_path}, {"steps", g.steps}, {"sampled", sampled}, {"policies", json::array()}};
    std::map<std::string, int> seen;
    for (const auto& trace : cmp.traces) {
      std::string name = lower(trace.policy);
      if (seen[name]++ > 0) name += "_" + std::to_string(seen[name]);
      const std::string file = "trace_" + name + ".csv";
      write_text(in_out_dir(g, file), trace.to_csv(inst), log);
      json s = trace.summary(inst);
      s["trace"] = in_out_dir(g, file).string();
      summary["policies"].push_back(s);
      std::cout << std::setprecision(8) << std::left << std::setw(8) << trace.policy << " time-average revenue "
                << trace.time_average_revenue() << "  supply deviation " << trace.supply_deviation() << "\n";
    }
    write_json(in_out_dir(g, summary_name), summary, log);
    log.config = {{"policies", policies}, {"sampled", sampled}, {"start", start}, {"start_plan", from_plan}};
  } else if (rep->parsed()) {
    std::vector<std::string> labels;
    std::vector<std::vector<std::string>> revenue;
    json out = json::array();
    std::size_t rows = 0;
    for (const auto& path : traces) {
      const auto cols = read_columns(read_text(path, log), path);
      std::string label = fs::path(path).stem().string();
      if (label.rfind("trace_", 0) == 0) label = label.substr(6);
      labels.push_back(label);
      revenue.push_back(cols.at("revenue"));
      rows = std::max(rows, cols.at("revenue").size());
      double total = 0.0;
      for (const auto& r : cols.at("revenue")) total += std::stod(r);
      double dev = 0.0;
      std::size_t count = 0;
      for (const auto& [name, values] : cols) {
        if (name.rfind("supply_ratio_", 0) != 0) continue;
        for (const auto& v : values) {
          if (v.empty()) continue;
          dev += std::abs(std::stod(v) - 1.0);
          ++count;
        }
      }
      const double steps = static_cast<double>(cols.at("revenue").size());
      out.push_back({{"trace", path},
                     {"label", label},
                     {"steps", cols.at("revenue").size()},
                     {"time_average_revenue", steps > 0 ? total / steps : 0.0},
                     {"supply_deviation", count ? dev / static_cast<double>(count) : 0.0}});
      std::cout << std::setprecision(8) << std::left << std::setw(12) << label << " time-average revenue "
                << (steps > 0 ? total / steps : 0.0) << "\n";
    }
    std::ostringstream csv;
    csv << "step";
    for (const auto& l : labels) csv << "," << l << "_revenue";
    csv << "\n";
    for (std::size_t i = 0; i < rows; ++i) {
      csv << i;
      for (const auto& r : revenue) csv << "," << (i < r.size() ? r[i] : "");
      csv << "\n";
    }
    const fs::path csv_path = in_out_dir(g, report_name);
    write_text(csv_path, csv.str(), log);
    fs::path json_path = csv_path;
    json_path.replace_extension(".json");
    write_json(json_path, {{"traces", out}}, log);
  } else if (syn->parsed()) {
    SynthConfig cfg;
    if (!synth_config.empty()) {
      try {
        cfg = SynthConfig::from_json(read_json(synth_config, log));
      } catch (const nlohmann::json::exception& err) {
        throw ValidationError(synth_config + ": " + err.what());
      }
    } else if (five_region > 0) {
      cfg = SynthConfig::five_region(five_region);
    } else {
      throw ValidationError("synth needs --config or --five-region");
    }
    write_text(in_out_dir(g, synth_out), synth_generate(cfg, g.seed), log);
    log.config = {{"market", cfg.to_json()}};
  } else if (ins->parsed()) {
    const json doc = read_json(instance_path, log);
    Instance inst;
    try {
      inst = parse_instance(doc);
    } catch (const std::exception& err) {
      throw ValidationError(instance_path + ": " + err.what());
    }
    const auto problems = validate_instance(inst);
    json out = {{"nodes", inst.graph.nodes()},
                {"valid", problems.empty()},
                {"problems", problems},
                {"objective", inst.objective.name()},
                {"scale", inst.scale},
                {"periods", inst.periods()},
                {"edges", json::array()}};
    for (std::size_t e = 0; e < inst.graph.edge_count(); ++e) {
      const Edge& edge = inst.graph.edge(e);
      if (!edge_filter.empty() && edge.id != edge_filter) continue;
      json envs = json::array();
      for (const auto& curve : inst.demand[e]) envs.push_back(iron(curve, edge.cost, inst.objective, g.grid).to_json());
      out["edges"].push_back({{"id", edge.id},
                              {"from", inst.graph.nodes()[edge.from]},
                              {"to", inst.graph.nodes()[edge.to]},
                              {"travel_time", edge.travel_time},
                              {"minutes", inst.edge_minutes(e)},
                              {"cost", edge.cost},
                              {"envelopes", envs}});
    }
    if (!edge_filter.empty() && out["edges"].empty()) throw ValidationError("no edge named " + edge_filter);
    if (inspect_out.empty()) {
      std::cout << out.dump(2) << "\n";
    } else {
      write_json(in_out_dir(g, inspect_out), out, log);
    }
    if (!problems.empty()) code = kValidation;
  }

  json inputs = json::object();
  for (const auto& p : log.inputs) inputs[p] = sha256_file(p);
  json outputs = json::object();
  for (const auto& p : log.outputs) outputs[p] = sha256_file(p);
  json manifest = {{"command", cmd->get_name()},
                   {"argv", args},
                   {"global",
                    {{"out_dir", g.out_dir},
                     {"grid", g.grid},
                     {"seed", g.seed},
                     {"step_minutes", g.step_minutes},
                     {"steps", g.steps},
                     {"stationarity_tol", g.stationarity_tol},
                     {"slackness_tol", g.slackness_tol},
                     {"feasibility_tol", g.feasibility_tol},
                     {"max_pivots", g.max_pivots}}},
                   {"config", log.config},
                   {"versions", versions()},
                   {"inputs", inputs},
                   {"outputs", outputs},
                   {"exit_code", code}};
  const fs::path manifest_path_out =
      g.manifest.empty() ? fs::path(g.out_dir) / (cmd->get_name() + ".manifest.json") : fs::path(g.manifest);
  RunLog ignore;
  write_json(manifest_path_out, manifest, ignore);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  const std::vector<std::string> args(argv, argv + argc);
  try {
    return run(args);
  } catch (const ValidationError& err) {
    spdlog::error("{}", err.what());
    return kValidation;
  } catch (const std::invalid_argument& err) {
    spdlog::error("{}", err.what());
    return kValidation;
  } catch (const nlohmann::json::exception& err) {
    spdlog::error("malformed document: {}", err.what());
    return kValidation;
  } catch (const std::exception& err) {
    spdlog::error("{}", err.what());
    return kFailure;
  }
}
