#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vponsim/error.hpp"
#include "vponsim/simulator.hpp"
#include "vponsim/stats.hpp"

namespace vponsim {

inline constexpr const char* kVersion = "1.0.0";

inline constexpr const char* kResultsCsvHeader =
    "scenario,mode,vpon,class,flow_id,packets,mean_ns,p50_ns,p99_ns,p999_ns,max_ns,quiet_window_hits,"
    "residual_queued";

struct ResultRow {
  std::string scenario;
  std::string mode;
  std::string vpon;
  std::string service_class;
  std::string flow;  // flow id, or "all" for the per-(vpon, class) aggregate
  LatencySummary latency;
  std::uint64_t quiet_window_hits = 0;
  std::uint64_t residual_queued = 0;
};

/// Per-flow rows followed by one aggregate row per (vpon, class).
inline std::vector<ResultRow> result_rows(RunResult& r) {
  std::vector<ResultRow> rows;
  struct Agg {
    LatencyRecorder latency = LatencyRecorder();
    std::uint64_t hits = 0;
    std::uint64_t residual = 0;
  };
  std::map<std::pair<VponIndex, int>, Agg> agg;
  for (auto& [key, cell] : r.stats.cells()) {
    ResultRow row{r.scenario_name, to_string(r.mode), r.vpons[key.vpon].vpon_id, to_string(key.service_class),
                  std::to_string(key.flow_id), cell.latency.summary(), cell.quiet_window_hits, cell.residual_queued};
    rows.push_back(row);
    auto& a = agg.try_emplace({key.vpon, static_cast<int>(key.service_class)}, Agg{}).first->second;
    a.hits += cell.quiet_window_hits;
    a.residual += cell.residual_queued;
  }
  for (const auto& p : r.packets)
    if (p.delivered_ns) agg.at({p.vpon, static_cast<int>(p.service_class)}).latency.add(*p.delivered_ns - p.created_ns);
  for (auto& [k, a] : agg)
    rows.push_back(ResultRow{r.scenario_name, to_string(r.mode), r.vpons[k.first].vpon_id,
                             to_string(static_cast<ServiceClass>(k.second)), "all", a.latency.summary(), a.hits,
                             a.residual});
  return rows;
}

inline std::string format_mean(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline void write_row(std::ostream& os, const ResultRow& row) {
  os << row.scenario << ',' << row.mode << ',' << row.vpon << ',' << row.service_class << ',' << row.flow << ','
     << row.latency.count << ',' << format_mean(row.latency.mean_ns) << ',' << row.latency.p50_ns << ','
     << row.latency.p99_ns << ',' << row.latency.p999_ns << ',' << row.latency.max_ns << ',' << row.quiet_window_hits
     << ',' << row.residual_queued << '\n';
}

inline void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kResultsCsvHeader << '\n';
  for (const auto& r : rows) write_row(os, r);
}

inline std::string results_csv(RunResult& r) {
  std::ostringstream os;
  write_results_csv(os, result_rows(r));
  return os.str();
}

inline nlohmann::json feasibility_json(const ScenarioCheck& c, const Scenario& s) {
  nlohmann::json f;
  f["pn_count"] = c.pn_count;
  if (const auto* iv = std::get_if<DbInterval>(&c.penalty))
    f["penalty_db"] = {iv->lo, iv->hi};
  else
    f["penalty_db"] = "requires_thresholder";
  f["verdict"] = describe(c.feasibility);
  if (const auto* ok = std::get_if<Feasible>(&c.feasibility)) f["margin_db"] = ok->margin_db;
  if (const auto* t = std::get_if<ThresholderFeasible>(&c.feasibility)) f["margin_db"] = t->margin_db;
  if (const auto* bad = std::get_if<Infeasible>(&c.feasibility)) f["deficit_db"] = bad->deficit_db;
  f["forced"] = c.forced;
  f["thresholder_enabled"] = s.thresholder_enabled;
  f["post_thresholder_penalty_db"] = s.penalties.post_thresholder_penalty_db;
  f["post_thresholder_penalty_is_assumption"] = true;
  return f;
}

/// Results plus run metadata and a parameter echo.
inline nlohmann::json results_json(const Scenario& s, RunResult& r) {
  nlohmann::json j;
  auto& m = j["metadata"];
  m["version"] = kVersion;
  m["scenario"] = r.scenario_name;
  m["mode"] = to_string(r.mode);
  m["seed"] = r.seed;
  bool exact = true;
  for (auto& [k, c] : r.stats.cells()) exact = exact && c.latency.exact();
  m["latency_resolution"] = exact ? "exact" : "100ns histogram";
  m["feasibility"] = feasibility_json(r.check, s);
  m["events_processed"] = r.events_processed;
  m["discovery_windows"] = r.discovery_windows.size();
  m["registration_collisions"] = r.collisions;
  auto& p = m["parameters"];
  p["sim_duration_ns"] = s.sim_duration_ns;
  p["line_rate_bps"] = s.line_rate_bps;
  p["quiet_window_ns"] = r.check.quiet_window_ns;
  p["discovery_period_ns"] = s.discovery.period_ns;
  p["discovery_domain"] = r.vpons[r.check.discovery_domain].vpon_id;
  p["t_proc_ns"] = s.discovery.t_proc_ns;
  p["dba"] = {{"policy", to_string(s.dba.policy)}, {"w_max_bytes", s.dba.w_max_bytes}, {"guard_ns", s.dba.guard_ns}};
  p["codes"] = {{"length", s.codes.length}, {"weight", s.codes.weight}, {"lambda", s.codes.lambda}};
  p["onus"] = s.topology.onus.size();
  p["flows"] = s.flows.size();
  auto& vp = p["vpons"];
  vp = nlohmann::json::array();
  for (const auto& v : r.vpons) {
    const auto& cw = r.check.codes.codewords.at(v.code_index);
    vp.push_back({{"vpon_id", v.vpon_id}, {"class", to_string(v.vpon_class)}, {"codeword", cw.positions()},
                  {"members", v.members.size()}});
  }
  auto& rows = j["rows"];
  rows = nlohmann::json::array();
  for (const auto& row : result_rows(r))
    rows.push_back({{"vpon", row.vpon},
                    {"class", row.service_class},
                    {"flow_id", row.flow},
                    {"packets", row.latency.count},
                    {"mean_ns", row.latency.mean_ns},
                    {"p50_ns", row.latency.p50_ns},
                    {"p99_ns", row.latency.p99_ns},
                    {"p999_ns", row.latency.p999_ns},
                    {"max_ns", row.latency.max_ns},
                    {"quiet_window_hits", row.quiet_window_hits},
                    {"residual_queued", row.residual_queued}});
  return j;
}

/// Writes to a sibling temporary file and renames it over `path`.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename onto " + path);
  }
}

}  // namespace vponsim
