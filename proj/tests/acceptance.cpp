// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"

using namespace vponsim;
namespace ts = testsupport;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (failures_.size() < 5) failures_.push_back(what);
    }
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  Outcome outcome() const {
    std::string d = notes_;
    for (const auto& f : failures_) d += (d.empty() ? "" : "; ") + std::string("FAILED ") + f;
    return {pass_, d};
  }

 private:
  bool pass_ = true;
  std::vector<std::string> failures_;
  std::string notes_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome quiet_window_endpoints() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const Nanos a = quiet_window({20'000, 50'000});
  const Nanos b = quiet_window({40'000, 50'000});
  const double dt = seconds_since(t0);
  c.expect(a == 250'000, "20 km gave " + std::to_string(a));
  c.expect(b == 450'000, "40 km gave " + std::to_string(b));
  c.expect(dt < 1e-3, "took " + fmt("%.6f s", dt));
  c.note("20 km -> " + std::to_string(a) + " ns, 40 km -> " + std::to_string(b) + " ns");
  return c.outcome();
}

Outcome quiet_window_elimination() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = parse_scenario_text(read_file(ts::scenario_path("reference.json")));
  c.expect(s.topology.onus.size() == 16, "reference scenario must have 16 ONUs");
  c.expect(s.topology.max_reach_m() == 20'000, "max reach must be 20 km");
  c.expect(s.sim_duration_ns == 2'000'000'000, "duration must be 2 s");
  c.expect(s.discovery.period_ns == 500'000'000, "discovery period must be 500 ms");
  const auto rep = compare(s);
  const Nanos wq = rep.quiet_window_ns;
  c.expect(wq == 250'000, "W_q = " + std::to_string(wq));
  c.expect(rep.traffic_identical, "modes consumed different traffic");
  const ClassComparison* tc = nullptr;
  for (const auto& k : rep.classes)
    if (k.service_class == ServiceClass::time_critical) tc = &k;
  if (!tc) {
    c.expect(false, "no time-critical traffic");
    return c.outcome();
  }
  const Nanos delta = tc->baseline.max_ns - tc->virtualized.max_ns;
  const double dt = seconds_since(t0);
  c.expect(delta * 10 >= 8 * wq, "max-latency delta " + std::to_string(delta) + " ns < 0.8 W_q");
  c.expect(tc->virtual_hits == 0, "virtual LLV hits = " + std::to_string(tc->virtual_hits));
  c.expect(tc->baseline_hits > 0, "baseline hits = 0");
  c.expect(dt < 10.0, "took " + fmt("%.2f s", dt));
  c.note("delta max " + std::to_string(delta) + " ns (>= " + std::to_string(wq * 8 / 10) + "), hits baseline " +
         std::to_string(tc->baseline_hits) + " virtual " + std::to_string(tc->virtual_hits) + ", " +
         fmt("%.2f s", dt));
  return c.outcome();
}

Outcome dba_isolation() {
  Check c;
  auto s = parse_scenario_text(read_file(ts::scenario_path("isolation.json")));
  c.expect(s.discovery.period_ns == 0, "isolation scenario must disable discovery");
  const std::vector<double> loads{0.0, 0.3, 0.6, 0.9};
  const auto pts = sweep(s, loads, false);
  double lo = 1e300, hi = 0;
  std::string p99s;
  for (const auto& p : pts) {
    const auto* llv = ts::find_row(p.rows, "LLV", "all");
    if (!llv) {
      c.expect(false, "no LLV row at load " + fmt("%.1f", p.load));
      continue;
    }
    lo = std::min(lo, static_cast<double>(llv->latency.p99_ns));
    hi = std::max(hi, static_cast<double>(llv->latency.p99_ns));
    p99s += (p99s.empty() ? "" : "/") + std::to_string(llv->latency.p99_ns);
    c.expect(ts::grants_bytes(p.low_latency_grants) == ts::grants_bytes(pts.front().low_latency_grants),
             "LLV grants differ at load " + fmt("%.1f", p.load));
    c.expect(!p.low_latency_grants.empty(), "no LLV grants");
  }
  const double spread = hi > 0 ? (hi - lo) / lo : 1.0;
  c.expect(spread < 0.05, "LLV p99 spread " + fmt("%.4f", spread));
  c.note("LLV p99 " + p99s + " ns, spread " + fmt("%.4f", spread) + ", grant schedules identical");
  return c.outcome();
}

Outcome penalty_table() {
  Check c;
  const auto two = penalty_interval(2);
  const auto three = penalty_interval(3);
  c.expect(std::holds_alternative<DbInterval>(two) && std::get<DbInterval>(two).lo == 4.0 &&
               std::get<DbInterval>(two).hi == 5.0,
           "2 PNs");
  c.expect(std::holds_alternative<DbInterval>(three) && std::get<DbInterval>(three).lo == 8.0 &&
               std::get<DbInterval>(three).hi == 10.0,
           "3 PNs");
  c.expect(std::holds_alternative<RequiresThresholder>(penalty_interval(4)), "4 PNs");
  double prev = -1;
  for (std::size_t k = 1; k <= 3; ++k) {
    const double h = std::get<DbInterval>(penalty_interval(k)).hi;
    c.expect(h >= prev, "upper bound not monotone at " + std::to_string(k));
    prev = h;
  }
  c.note("2 -> [4,5] dB, 3 -> [8,10] dB, 4 -> thresholder");
  return c.outcome();
}

Outcome code_correctness() {
  Check c;
  std::size_t checked = 0;
  for (std::size_t w : {2u, 3u})
    for (std::size_t n = w + 1; n <= 20; ++n) {
      const std::size_t best = ts::oracle_max_ooc(n, w);
      for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        if (best > 0) {
          try {
            const auto cs = generate_ooc(n, w, 1, best, seed);
            c.expect(cs.codewords.size() == best && ts::oracle_code_set_ok(cs),
                     "(" + std::to_string(n) + "," + std::to_string(w) + ") invalid or short");
            ++checked;
          } catch (const CapacityExceeded&) {
            c.expect(false, "(" + std::to_string(n) + "," + std::to_string(w) + ") missed oracle size " +
                                std::to_string(best));
          }
        }
        bool over = false;
        try {
          generate_ooc(n, w, 1, best + 1, seed);
        } catch (const CapacityExceeded&) {
          over = true;
        }
        c.expect(over, "(" + std::to_string(n) + "," + std::to_string(w) + ") exceeded oracle size");
      }
    }
  std::mt19937_64 rng(99);
  for (int i = 0; i < 40; ++i) {
    const std::size_t w = 2 + rng() % 3;
    const std::size_t n = w * (w - 1) + 1 + rng() % (64 - w * (w - 1));
    const std::size_t k = 1 + rng() % std::max<std::size_t>(1, johnson_bound(n, w) / 2);
    const auto cs = generate_ooc(n, w, 1, k, rng());
    c.expect(ts::oracle_code_set_ok(cs), "random (" + std::to_string(n) + "," + std::to_string(w) + ")");
    ++checked;
  }
  c.expect(johnson_bound(13, 3, 1) == 2, "johnson_bound(13,3,1)");
  c.expect(ts::oracle_max_ooc(13, 3) == 2, "oracle says (13,3) admits 3 codewords");
  bool three_fails = false;
  try {
    generate_ooc(13, 3, 1, 3, 1);
  } catch (const CapacityExceeded&) {
    three_fails = true;
  }
  c.expect(three_fails, "(13,3,1) returned 3 codewords");
  c.note(std::to_string(checked) + " generated sets validated; n<=20 sizes match oracle; J(13,3,1)=2, 3 unreachable");
  return c.outcome();
}

Outcome mai_model() {
  Check c;
  const double v = mai_ber(32, 4, 5);
  c.expect(std::abs(v - 1.953125e-3) <= 1e-12, "mai_ber(32,4,5) = " + fmt("%.15g", v));
  c.expect(std::abs(v - static_cast<double>(ts::oracle_mai_ber(32, 4, 5))) <= 1e-12, "oracle mismatch");
  for (auto [n, w] : std::vector<std::pair<std::size_t, std::size_t>>{{32, 4}, {13, 3}, {64, 5}, {8, 2}, {200, 7}}) {
    double prev = 0;
    for (std::size_t k = 1; k <= 64; ++k) {
      const double b = mai_ber(n, w, k);
      if (k - 1 < w) c.expect(b == 0.0, "non-zero below threshold");
      c.expect(b >= prev, "not monotone at K=" + std::to_string(k));
      c.expect(b >= 0 && b <= 0.5, "out of [0, 0.5]");
      prev = b;
    }
  }
  c.note("mai_ber(32,4,5) = " + fmt("%.10e", v));
  return c.outcome();
}

Outcome ranging_exactness() {
  Check c;
  std::mt19937_64 rng(4242);
  std::size_t ranged = 0;
  double worst = 0;
  for (int trial = 0; trial < 12; ++trial) {
    Scenario s;
    s.name = "ranging";
    s.seed = rng();
    s.sim_duration_ns = 40'000'000;
    s.topology.feeder_m = 20'000;
    s.topology.split_ratio = 16;
    s.topology.propagation_mps = trial % 3 == 0 ? 2.0e8 : std::uniform_real_distribution<double>(1.9e8, 2.1e8)(rng);
    s.budget.tx_power_dbm = 10;
    s.budget.rx_sensitivity_dbm = -30;
    const int n = 2 + static_cast<int>(rng() % 7);
    VponSpec llv{"LLV", VponClass::low_latency, 0, {}, std::nullopt};
    VponSpec hlv{"HLV", VponClass::high_latency, 1, {}, std::nullopt};
    for (int i = 0; i < n; ++i) {
      const OnuId id = static_cast<OnuId>(i + 1);
      s.topology.onus.push_back({id, std::uniform_real_distribution<double>(0, 20'000)(rng)});
      s.unregistered_at_start.insert(id);
      llv.members.push_back(id);
      hlv.members.push_back(id);
    }
    s.vpons = {llv, hlv};
    s.discovery.period_ns = 2'000'000;
    s.discovery.max_reach_m = 40'000;
    auto r = run(s);
    for (const auto& o : s.topology.onus) {
      if (!r.registry.contains(o.onu_id)) {
        c.expect(false, "ONU never registered");
        continue;
      }
      const auto& e = r.registry.at(o.onu_id);
      const double exact = ts::exact_rtt_ns(s.topology.feeder_m + o.drop_m, s.topology.propagation_mps);
      const double err = std::abs(static_cast<double>(e.rtt_ns) - exact);
      worst = std::max(worst, err);
      c.expect(err <= 1.0, "measured " + std::to_string(e.rtt_ns) + " vs " + fmt("%.3f", exact));
      c.expect(e.measurements == 1, "ONU ranged " + std::to_string(e.measurements) + " times");
      ++ranged;
    }
  }
  c.note(std::to_string(ranged) + " ONUs ranged over 20-40 km, worst error " + fmt("%.3f ns", worst));
  return c.outcome();
}

Outcome kernel_properties() {
  Check c;
  constexpr int kScenarios = 24;
  std::size_t packets = 0;
  for (int i = 1; i <= kScenarios; ++i) {
    const auto s = ts::random_scenario(1000 + i);
    auto r = run(s, {true, nullptr});
    packets += r.packets.size();
    for (const auto& b : ts::kernel_property_violations(s, r)) c.expect(false, s.name + ": " + b);
    auto again = run(s, {true, nullptr});
    c.expect(results_csv(r) == results_csv(again), s.name + ": CSV differs between identical runs");
  }
  c.note(std::to_string(kScenarios) + " random scenarios, " + std::to_string(packets) +
         " packets: conservation, FIFO, lower bound, percentiles, byte-identical CSV");
  return c.outcome();
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"quiet-window endpoints", quiet_window_endpoints},
      {"quiet-window elimination", quiet_window_elimination},
      {"DBA isolation", dba_isolation},
      {"penalty table fidelity", penalty_table},
      {"code correctness", code_correctness},
      {"MAI model point check", mai_model},
      {"ranging exactness", ranging_exactness},
      {"kernel properties", kernel_properties},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
