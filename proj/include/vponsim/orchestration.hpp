#pragma once

// Baseline-vs-virtual comparison and offered-load sweeps built on run().

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <future>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vponsim/results_io.hpp"
#include "vponsim/simulator.hpp"

namespace vponsim {

struct ClassComparison {
  ServiceClass service_class = ServiceClass::time_critical;
  LatencySummary baseline;
  LatencySummary virtualized;
  std::uint64_t baseline_hits = 0;
  std::uint64_t virtual_hits = 0;
};

struct ComparisonReport {
  std::string scenario;
  std::uint64_t seed = 0;
  Nanos quiet_window_ns = 0;
  std::vector<ClassComparison> classes;
  ScenarioCheck virtual_check;
  bool traffic_identical = false;  // per-flow creation times match across modes
};

/// Per-class latency summary over every VPON and flow of a run.
inline std::map<ServiceClass, std::pair<LatencySummary, std::uint64_t>> class_summaries(const RunResult& r) {
  std::map<ServiceClass, LatencyRecorder> rec;
  std::map<ServiceClass, std::uint64_t> hits;
  for (const auto& p : r.packets) {
    auto& x = rec[p.service_class];
    if (p.delivered_ns) x.add(*p.delivered_ns - p.created_ns);
  }
  for (const auto& [k, c] : r.stats.cells()) hits[k.service_class] += c.quiet_window_hits;
  std::map<ServiceClass, std::pair<LatencySummary, std::uint64_t>> out;
  for (auto& [cls, x] : rec) out[cls] = {x.summary(), hits[cls]};
  return out;
}

inline bool same_traffic(const RunResult& a, const RunResult& b) {
  if (a.packets.size() != b.packets.size()) return false;
  for (std::size_t i = 0; i < a.packets.size(); ++i)
    if (a.packets[i].flow_id != b.packets[i].flow_id || a.packets[i].created_ns != b.packets[i].created_ns ||
        a.packets[i].size_bytes != b.packets[i].size_bytes)
      return false;
  return true;
}

/// Runs both modes with the scenario's seed and flows (concurrently) and diffs per-class latency.
inline ComparisonReport compare(const Scenario& s, bool force = false) {
  auto base = std::async(std::launch::async, [&] { return run(s, Mode::baseline, {force, nullptr}); });
  RunResult virt = run(s, Mode::virtual_pon, {force, nullptr});
  RunResult b = base.get();

  ComparisonReport rep;
  rep.scenario = s.name;
  rep.seed = s.seed;
  rep.quiet_window_ns = virt.check.quiet_window_ns;
  rep.virtual_check = virt.check;
  rep.traffic_identical = same_traffic(b, virt);
  const auto bs = class_summaries(b);
  const auto vs = class_summaries(virt);
  for (auto cls : {ServiceClass::time_critical, ServiceClass::best_effort}) {
    if (!bs.contains(cls) && !vs.contains(cls)) continue;
    ClassComparison c;
    c.service_class = cls;
    if (bs.contains(cls)) std::tie(c.baseline, c.baseline_hits) = bs.at(cls);
    if (vs.contains(cls)) std::tie(c.virtualized, c.virtual_hits) = vs.at(cls);
    rep.classes.push_back(c);
  }
  return rep;
}

inline std::vector<std::pair<std::string, double>> metrics_of(const LatencySummary& s) {
  return {{"mean_ns", s.mean_ns},
          {"p50_ns", static_cast<double>(s.p50_ns)},
          {"p99_ns", static_cast<double>(s.p99_ns)},
          {"p999_ns", static_cast<double>(s.p999_ns)},
          {"max_ns", static_cast<double>(s.max_ns)}};
}

inline constexpr const char* kComparisonCsvHeader = "scenario,class,metric,baseline,virtual,delta";

/// delta = baseline - virtual. Hit counts appear as metric quiet_window_hits.
inline std::string comparison_csv(const ComparisonReport& rep) {
  std::ostringstream os;
  os << kComparisonCsvHeader << '\n';
  for (const auto& c : rep.classes) {
    const auto b = metrics_of(c.baseline);
    const auto v = metrics_of(c.virtualized);
    os << rep.scenario << ',' << to_string(c.service_class) << ",packets," << c.baseline.count << ','
       << c.virtualized.count << ','
       << static_cast<std::int64_t>(c.baseline.count) - static_cast<std::int64_t>(c.virtualized.count) << '\n';
    for (std::size_t i = 0; i < b.size(); ++i)
      os << rep.scenario << ',' << to_string(c.service_class) << ',' << b[i].first << ',' << format_mean(b[i].second)
         << ',' << format_mean(v[i].second) << ',' << format_mean(b[i].second - v[i].second) << '\n';
    os << rep.scenario << ',' << to_string(c.service_class) << ",quiet_window_hits," << c.baseline_hits << ','
       << c.virtual_hits << ','
       << static_cast<std::int64_t>(c.baseline_hits) - static_cast<std::int64_t>(c.virtual_hits) << '\n';
  }
  return os.str();
}

inline void print_comparison(std::ostream& os, const ComparisonReport& rep) {
  os << "scenario " << rep.scenario << "  seed " << rep.seed << "  quiet window " << rep.quiet_window_ns / 1000.0
     << " us\n";
  const auto& c = rep.virtual_check;
  os << "virtual PONs: " << c.pn_count << "  ";
  if (const auto* iv = std::get_if<DbInterval>(&c.penalty))
    os << "penalty " << iv->lo << "-" << iv->hi << " dB  ";
  else
    os << "penalty: thresholder required  ";
  os << describe(c.feasibility) << "\n\n";
  os << std::left << std::setw(15) << "class" << std::setw(10) << "metric" << std::right << std::setw(14)
     << "baseline us" << std::setw(14) << "virtual us" << std::setw(14) << "delta us" << '\n';
  os << std::fixed << std::setprecision(3);
  for (const auto& cc : rep.classes) {
    const auto b = metrics_of(cc.baseline);
    const auto v = metrics_of(cc.virtualized);
    for (std::size_t i = 0; i < b.size(); ++i)
      os << std::left << std::setw(15) << to_string(cc.service_class) << std::setw(10)
         << b[i].first.substr(0, b[i].first.size() - 3) << std::right << std::setw(14) << b[i].second / 1000.0
         << std::setw(14) << v[i].second / 1000.0 << std::setw(14) << (b[i].second - v[i].second) / 1000.0 << '\n';
    os << std::left << std::setw(15) << to_string(cc.service_class) << std::setw(10) << "qw_hits" << std::right
       << std::setw(14) << cc.baseline_hits << std::setw(14) << cc.virtual_hits << '\n';
  }
  os.unsetf(std::ios::fixed);
}

/// Rescales upstream best-effort flows so they jointly offer `load` x line
/// rate. Load 0 removes them.
inline Scenario with_best_effort_load(const Scenario& s, double load) {
  if (load < 0.0) throw ConfigError("/flows", "offered load must be >= 0");
  Scenario out = s;
  auto is_be = [](const FlowSpec& f) {
    return f.service_class == ServiceClass::best_effort && f.direction == FlowDirection::up;
  };
  if (load == 0.0) {
    std::erase_if(out.flows, is_be);
    return out;
  }
  double current = 0.0;
  std::size_t n = 0;
  for (const auto& f : s.flows)
    if (is_be(f)) {
      current += f.offered_bps();
      ++n;
    }
  if (n == 0) throw ConfigError("/flows", "no upstream best_effort flows to scale");
  const double factor = load * static_cast<double>(s.line_rate_bps) / current;
  for (auto& f : out.flows)
    if (is_be(f)) f = f.scaled(factor);
  return out;
}

/// Parses "A:B:STEP" into an inclusive grid.
inline std::vector<double> parse_load_grid(const std::string& spec) {
  const auto c1 = spec.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : spec.find(':', c1 + 1);
  if (c2 == std::string::npos) throw ConfigError("--load", "expected A:B:STEP");
  double a, b, step;
  try {
    std::size_t used = 0;
    a = std::stod(spec.substr(0, c1), &used);
    b = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    step = std::stod(spec.substr(c2 + 1));
  } catch (const std::exception&) {
    throw ConfigError("--load", "expected numbers in A:B:STEP");
  }
  if (!(step > 0.0)) throw ConfigError("--load", "STEP must be positive");
  if (!(a > 0.0) || b > 1.0 + 1e-12 || a > b) throw ConfigError("--load", "grid must lie within (0, 1] with A <= B");
  std::vector<double> out;
  for (std::size_t i = 0;; ++i) {
    const double x = a + static_cast<double>(i) * step;
    if (x > b + 1e-9) break;
    out.push_back(std::round(x * 1e9) / 1e9);
  }
  return out;
}

struct SweepPoint {
  double load = 0.0;
  std::vector<ResultRow> rows;
  std::vector<Grant> low_latency_grants;  // grants of every low_latency VPON, concatenated
};

inline std::size_t sweep_threads() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("VPONSIM_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) n = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return n;
}

/// One independent run per load point; points are distributed over worker
/// threads and results are returned in grid order.
inline std::vector<SweepPoint> sweep(const Scenario& s, const std::vector<double>& loads, bool force = false,
                                     std::size_t threads = sweep_threads()) {
  std::vector<Scenario> scenarios;
  for (double l : loads) scenarios.push_back(with_best_effort_load(s, l));
  std::vector<SweepPoint> out(loads.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < loads.size(); i = next++) {
      RunResult r = run(scenarios[i], s.mode, {force, nullptr});
      out[i].load = loads[i];
      out[i].rows = result_rows(r);
      for (std::size_t v = 0; v < r.vpons.size(); ++v)
        if (r.vpons[v].vpon_class == VponClass::low_latency && r.mode == Mode::virtual_pon)
          out[i].low_latency_grants.insert(out[i].low_latency_grants.end(), r.grants[v].begin(), r.grants[v].end());
    }
  };
  std::vector<std::future<void>> pool;
  const std::size_t n = std::min(std::max<std::size_t>(threads, 1), std::max<std::size_t>(loads.size(), 1));
  for (std::size_t t = 1; t < n; ++t) pool.push_back(std::async(std::launch::async, worker));
  worker();
  for (auto& f : pool) f.get();
  return out;
}

inline std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream os;
  os << "load," << kResultsCsvHeader << '\n';
  for (const auto& p : points)
    for (const auto& row : p.rows) {
      os << format_mean(p.load) << ',';
      write_row(os, row);
    }
  return os.str();
}

}  // namespace vponsim
