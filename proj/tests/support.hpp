#pragma once

// Test-side scenario builders, independent oracles and property checks shared
// by the unit suites and the acceptance runner.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vponsim/vponsim.hpp"

#ifndef VPONSIM_SCENARIO_DIR
#define VPONSIM_SCENARIO_DIR "scenarios"
#endif

namespace testsupport {

using namespace vponsim;

inline std::string scenario_path(const std::string& name) { return std::string(VPONSIM_SCENARIO_DIR) + "/" + name; }

// ---------------------------------------------------------------- builders

inline FlowSpec cbr_flow(std::uint64_t id, OnuId onu, ServiceClass cls, Nanos period_ns, std::int64_t size) {
  FlowSpec f;
  f.flow_id = id;
  f.onu_id = onu;
  f.service_class = cls;
  f.arrival = CbrArrivals{period_ns};
  f.sizes = {size};
  return f;
}

inline FlowSpec poisson_flow(std::uint64_t id, OnuId onu, ServiceClass cls, double rate_pps,
                             std::vector<std::int64_t> sizes) {
  FlowSpec f;
  f.flow_id = id;
  f.onu_id = onu;
  f.service_class = cls;
  f.arrival = PoissonArrivals{rate_pps};
  f.sizes = std::move(sizes);
  return f;
}

/// Two-VPON scenario, every ONU a member of both, feeder 15 km.
inline Scenario two_vpon_scenario(std::size_t onus, double max_drop_m, Nanos duration_ns) {
  Scenario s;
  s.name = "test";
  s.seed = 7;
  s.sim_duration_ns = duration_ns;
  s.topology.feeder_m = 15'000;
  s.topology.split_ratio = 32;
  for (std::size_t i = 0; i < onus; ++i) {
    const double drop = onus > 1 ? max_drop_m * static_cast<double>(i) / static_cast<double>(onus - 1) : max_drop_m;
    s.topology.onus.push_back({static_cast<OnuId>(i + 1), std::round(drop)});
  }
  VponSpec llv{"LLV", VponClass::low_latency, 0, {}, std::nullopt};
  VponSpec hlv{"HLV", VponClass::high_latency, 1, {}, std::nullopt};
  for (const auto& o : s.topology.onus) {
    llv.members.push_back(o.onu_id);
    hlv.members.push_back(o.onu_id);
  }
  s.vpons = {llv, hlv};
  return s;
}

// ----------------------------------------------------------------- oracles

/// Bitmask form of a codeword.
inline std::uint64_t mask_of(const std::vector<std::size_t>& pos) {
  std::uint64_t m = 0;
  for (auto p : pos) m |= std::uint64_t{1} << p;
  return m;
}

inline std::uint64_t rotate(std::uint64_t m, std::size_t s, std::size_t n) {
  const std::uint64_t full = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  s %= n;
  if (s == 0) return m;
  return ((m << s) | (m >> (n - s))) & full;
}

/// Correlation peak by AND-ing rotated bitmasks; `skip_zero` for autocorrelation sidelobes.
inline int mask_peak(std::uint64_t a, std::uint64_t b, std::size_t n, bool skip_zero) {
  int worst = 0;
  for (std::size_t s = skip_zero ? 1 : 0; s < n; ++s) worst = std::max(worst, std::popcount(a & rotate(b, s, n)));
  return worst;
}

/// Independent check of a code set: every shift of every codeword and pair.
inline bool oracle_code_set_ok(const CodeSet& cs) {
  std::vector<std::uint64_t> m;
  for (const auto& c : cs.codewords) {
    if (c.length() != cs.length_chips || c.weight() != cs.weight) return false;
    m.push_back(mask_of(c.positions()));
  }
  const int lambda = static_cast<int>(cs.lambda_max);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (mask_peak(m[i], m[i], cs.length_chips, true) > lambda) return false;
    for (std::size_t j = i + 1; j < m.size(); ++j)
      if (mask_peak(m[i], m[j], cs.length_chips, false) > lambda) return false;
  }
  return true;
}

/// Largest (n, w, 1) OOC by exhaustive max-clique over cyclic-shift classes.
inline std::size_t oracle_max_ooc(std::size_t n, std::size_t w) {
  std::vector<std::uint64_t> reps;
  const std::uint64_t limit = std::uint64_t{1} << n;
  for (std::uint64_t m = 1; m < limit; ++m) {
    if (static_cast<std::size_t>(std::popcount(m)) != w) continue;
    bool canonical = true;
    for (std::size_t s = 1; s < n && canonical; ++s) canonical = rotate(m, s, n) >= m;
    if (!canonical) continue;
    if (mask_peak(m, m, n, true) <= 1) reps.push_back(m);
  }
  const std::size_t k = reps.size();
  std::vector<std::vector<char>> ok(k, std::vector<char>(k, 0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) ok[i][j] = ok[j][i] = mask_peak(reps[i], reps[j], n, false) <= 1;
  std::size_t best = 0;
  std::vector<std::size_t> clique;
  auto grow = [&](auto&& self, std::vector<std::size_t> cand) -> void {
    best = std::max(best, clique.size());
    if (clique.size() + cand.size() <= best) return;
    while (!cand.empty()) {
      if (clique.size() + cand.size() <= best) return;
      const std::size_t v = cand.back();
      cand.pop_back();
      std::vector<std::size_t> next;
      for (auto u : cand)
        if (ok[v][u]) next.push_back(u);
      clique.push_back(v);
      self(self, next);
      clique.pop_back();
    }
  };
  std::vector<std::size_t> all(k);
  for (std::size_t i = 0; i < k; ++i) all[i] = i;
  grow(grow, all);
  return best;
}

/// Hit-model BER by direct summation with an integer binomial.
inline long double oracle_mai_ber(std::size_t n, std::size_t w, std::size_t k) {
  const long double q = static_cast<long double>(w * w) / (2.0L * static_cast<long double>(n));
  const std::size_t m = k - 1;
  long double total = 0;
  for (std::size_t i = w; i <= m; ++i) {
    long double c = 1;
    for (std::size_t j = 1; j <= i; ++j) c = c * static_cast<long double>(m - i + j) / static_cast<long double>(j);
    long double term = c;
    for (std::size_t j = 0; j < i; ++j) term *= q;
    for (std::size_t j = 0; j < m - i; ++j) term *= (1 - q);
    total += term;
  }
  return total / 2;
}

/// Round trip in ns for `reach_m`, from first principles.
inline double exact_rtt_ns(double reach_m, double v_mps) { return 2.0 * reach_m / v_mps * 1e9; }

/// Nearest-rank percentile of a sample.
inline Nanos oracle_percentile(std::vector<Nanos> v, double p) {
  std::sort(v.begin(), v.end());
  std::size_t rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
  rank = std::max<std::size_t>(rank, 1);
  return v[rank - 1];
}

// ------------------------------------------------------ random scenarios

/// Random but valid scenario: 2-8 ONUs, either mode, mixed flows, optional
/// discovery with some ONUs starting unregistered.
inline Scenario random_scenario(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };

  Scenario s;
  s.name = "random" + std::to_string(seed);
  s.seed = seed * 7919 + 3;
  s.sim_duration_ns = pick(60, 160) * 1'000'000LL;
  s.mode = pick(0, 1) ? Mode::virtual_pon : Mode::baseline;
  s.line_rate_bps = pick(0, 3) == 0 ? 2'500'000'000LL : 1'000'000'000LL;
  s.topology.feeder_m = std::round(uni(0, 10'000));
  s.topology.split_ratio = 16;
  const int n = pick(2, 8);
  for (int i = 0; i < n; ++i) s.topology.onus.push_back({static_cast<OnuId>(10 + i), std::round(uni(0, 10'000))});
  s.budget.tx_power_dbm = 6;
  s.budget.rx_sensitivity_dbm = -28;

  const DbaPolicy policies[] = {DbaPolicy::limited, DbaPolicy::gated, DbaPolicy::fixed};
  s.dba.policy = policies[pick(0, 2)];
  s.dba.w_max_bytes = pick(4, 16) * 1000;
  s.dba.guard_ns = pick(0, 2000);

  VponSpec llv{"LLV", VponClass::low_latency, 0, {}, std::nullopt};
  VponSpec hlv{"HLV", VponClass::high_latency, 1, {}, std::nullopt};
  for (const auto& o : s.topology.onus) {
    llv.members.push_back(o.onu_id);
    hlv.members.push_back(o.onu_id);
  }
  if (pick(0, 1)) hlv.dba = DbaConfig{DbaPolicy::gated, 20'000, 500};
  s.vpons = {llv, hlv};

  if (pick(0, 2) == 0) {
    s.discovery.period_ns = 0;
  } else {
    s.discovery.period_ns = pick(5, 30) * 1'000'000LL;
    for (const auto& o : s.topology.onus)
      if (pick(0, 3) == 0) s.unregistered_at_start.insert(o.onu_id);
  }

  std::uint64_t fid = 1;
  const double line = static_cast<double>(s.line_rate_bps);
  for (const auto& o : s.topology.onus) {
    const int kinds = pick(1, 3);
    for (int k = 0; k < kinds; ++k) {
      FlowSpec f;
      f.flow_id = fid++;
      f.onu_id = o.onu_id;
      f.service_class = pick(0, 1) ? ServiceClass::time_critical : ServiceClass::best_effort;
      f.sizes = pick(0, 1) ? std::vector<std::int64_t>{pick(64, 1518)}
                           : std::vector<std::int64_t>{64, static_cast<std::int64_t>(pick(65, 1518)), 1518};
      const double share = uni(0.01, 0.7) / (n * 2.0);
      const double rate = share * line / (8.0 * f.mean_size_bytes());
      switch (pick(0, 2)) {
        case 0: f.arrival = PoissonArrivals{rate}; break;
        case 1: f.arrival = CbrArrivals{std::max<Nanos>(1000, std::llround(1e9 / rate))}; break;
        default: f.arrival = OnOffArrivals{uni(1e5, 2e6), uni(1e5, 4e6), rate * 2}; break;
      }
      if (pick(0, 5) == 0) f.direction = FlowDirection::down;
      s.flows.push_back(f);
    }
  }
  return s;
}

// --------------------------------------------------------- run properties

/// Returns a list of violated kernel properties; empty when all hold.
inline std::vector<std::string> kernel_property_violations(const Scenario& s, RunResult& r) {
  std::vector<std::string> bad;
  auto fail = [&](const std::string& what) {
    if (bad.size() < 20) bad.push_back(what);
  };
  std::map<std::uint64_t, const FlowSpec*> spec;
  for (const auto& f : s.flows) spec[f.flow_id] = &f;

  // conservation: generated = delivered + residual, per flow
  std::map<std::uint64_t, std::uint64_t> generated, delivered_cells, residual_cells;
  for (const auto& p : r.packets) ++generated[p.flow_id];
  for (auto& [k, c] : r.stats.cells()) {
    delivered_cells[k.flow_id] += c.latency.count();
    residual_cells[k.flow_id] += c.residual_queued;
  }
  for (const auto& [flow, g] : generated)
    if (g != delivered_cells[flow] + residual_cells[flow])
      fail("conservation flow " + std::to_string(flow) + ": generated " + std::to_string(g) + " delivered " +
           std::to_string(delivered_cells[flow]) + " residual " + std::to_string(residual_cells[flow]));

  // FIFO and latency lower bound
  std::map<std::uint64_t, Nanos> last_delivery;
  std::map<std::uint64_t, bool> seen_residual;
  for (const auto& p : r.packets) {
    const auto& f = *spec.at(p.flow_id);
    if (!p.delivered_ns) {
      seen_residual[p.flow_id] = true;
      continue;
    }
    if (seen_residual[p.flow_id]) fail("FIFO flow " + std::to_string(p.flow_id) + ": delivered after an older packet");
    auto it = last_delivery.find(p.flow_id);
    if (it != last_delivery.end() && *p.delivered_ns <= it->second)
      fail("FIFO flow " + std::to_string(p.flow_id) + ": packet " + std::to_string(p.packet_id) + " out of order");
    last_delivery[p.flow_id] = *p.delivered_ns;

    const double reach = s.topology.feeder_m + s.topology.onu(f.onu_id).drop_m;
    const double one_way = exact_rtt_ns(reach, s.topology.propagation_mps) / 2.0;
    const double tx = std::ceil(static_cast<double>(p.size_bytes) * 8e9 / static_cast<double>(s.line_rate_bps));
    const double bound = tx + std::floor(one_way);
    if (static_cast<double>(*p.delivered_ns - p.created_ns) < bound)
      fail("lower bound packet " + std::to_string(p.packet_id) + ": latency " +
           std::to_string(*p.delivered_ns - p.created_ns) + " < " + std::to_string(bound));
  }

  // percentiles: ordered, and equal to nearest-rank over the raw samples
  std::map<StatsKey, std::vector<Nanos>> samples;
  for (const auto& p : r.packets)
    if (p.delivered_ns) samples[{p.vpon, p.service_class, p.flow_id}].push_back(*p.delivered_ns - p.created_ns);
  for (auto& [k, c] : r.stats.cells()) {
    const auto sm = c.latency.summary();
    if (sm.count == 0) continue;
    if (!(sm.p50_ns <= sm.p99_ns && sm.p99_ns <= sm.p999_ns && sm.p999_ns <= sm.max_ns))
      fail("percentile order flow " + std::to_string(k.flow_id));
    const auto& v = samples[k];
    if (oracle_percentile(v, 0.5) != sm.p50_ns || oracle_percentile(v, 0.99) != sm.p99_ns ||
        oracle_percentile(v, 0.999) != sm.p999_ns || *std::max_element(v.begin(), v.end()) != sm.max_ns)
      fail("percentile value flow " + std::to_string(k.flow_id));
  }
  return bad;
}

inline std::string grants_bytes(const std::vector<Grant>& gs) {
  std::ostringstream os;
  for (const auto& g : gs) os << g.onu_id << ' ' << g.start_ns << ' ' << g.length_ns << ' ' << g.vpon << '\n';
  return os.str();
}

inline const ResultRow* find_row(const std::vector<ResultRow>& rows, const std::string& vpon, const std::string& flow) {
  for (const auto& r : rows)
    if (r.vpon == vpon && r.flow == flow) return &r;
  return nullptr;
}

}  // namespace testsupport
