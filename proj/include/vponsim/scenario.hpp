#pragma once

// In-memory scenario and its load-time checks. JSON parsing lives in scenario_io.hpp.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vponsim/dba_scheduler.hpp"
#include "vponsim/error.hpp"
#include "vponsim/mpcp_protocol.hpp"
#include "vponsim/ocdma_codes.hpp"
#include "vponsim/topology_power.hpp"
#include "vponsim/traffic.hpp"

namespace vponsim {

enum class Mode { baseline, virtual_pon };

inline const char* to_string(Mode m) { return m == Mode::baseline ? "baseline" : "virtual"; }

enum class VponClass { low_latency, high_latency };

inline const char* to_string(VponClass c) { return c == VponClass::low_latency ? "low_latency" : "high_latency"; }

struct VponSpec {
  std::string vpon_id;
  VponClass vpon_class = VponClass::high_latency;
  std::size_t code_index = 0;
  std::vector<OnuId> members;
  std::optional<DbaConfig> dba;  // per-VPON override
};

struct CodeParams {
  std::size_t length = 13;
  std::size_t weight = 3;
  std::size_t lambda = 1;
  std::uint64_t seed = 1;
};

struct DiscoveryConfig {
  Nanos period_ns = 500'000'000;  // 0 disables discovery
  Nanos t_proc_ns = 50'000;
  std::string domain;             // VPON id; empty selects the first high-latency VPON
  std::optional<double> max_reach_m;
};

struct Scenario {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  Nanos sim_duration_ns = 1'000'000'000;
  Mode mode = Mode::virtual_pon;
  std::int64_t line_rate_bps = 1'000'000'000;
  Topology topology;
  PowerBudget budget;
  WavelengthPlan wavelengths;
  std::vector<VponSpec> vpons;
  CodeParams codes;
  DbaConfig dba;
  DiscoveryConfig discovery;
  bool thresholder_enabled = false;
  PenaltyTable penalties;
  std::vector<FlowSpec> flows;
  std::set<OnuId> unregistered_at_start;
  std::size_t exact_latency_limit = 10'000'000;
};

inline constexpr const char* kBaselineVponId = "PON";

/// The VPONs a run actually instantiates: the configured list in virtual
/// mode, one VPON holding every ONU in baseline mode.
inline std::vector<VponSpec> effective_vpons(const Scenario& s, Mode mode) {
  if (mode == Mode::virtual_pon) return s.vpons;
  VponSpec all;
  all.vpon_id = kBaselineVponId;
  all.vpon_class = VponClass::high_latency;
  all.code_index = 0;
  for (const auto& o : s.topology.onus) all.members.push_back(o.onu_id);
  return {all};
}

inline std::size_t discovery_domain_index(const Scenario& s, const std::vector<VponSpec>& vpons, Mode mode) {
  if (mode == Mode::baseline) return 0;
  if (s.discovery.domain.empty()) {
    for (std::size_t i = 0; i < vpons.size(); ++i)
      if (vpons[i].vpon_class == VponClass::high_latency) return i;
    throw ConfigError("/discovery/domain", "no high_latency VPON to host discovery");
  }
  for (std::size_t i = 0; i < vpons.size(); ++i)
    if (vpons[i].vpon_id == s.discovery.domain) return i;
  throw ConfigError("/discovery/domain", "names unknown VPON '" + s.discovery.domain + "'");
}

inline bool vpon_has_member(const VponSpec& v, OnuId onu) {
  return std::find(v.members.begin(), v.members.end(), onu) != v.members.end();
}

/// time_critical flows go to a low-latency VPON, best_effort to a
/// high-latency one; a per-flow override wins. Baseline maps everything to
/// the single VPON.
inline std::size_t segmentation_policy(const FlowSpec& flow, const std::vector<VponSpec>& vpons, Mode mode,
                                       const std::string& path = "/flows") {
  if (mode == Mode::baseline) return 0;
  if (flow.vpon_override) {
    for (std::size_t i = 0; i < vpons.size(); ++i)
      if (vpons[i].vpon_id == *flow.vpon_override) {
        if (!vpon_has_member(vpons[i], flow.onu_id))
          throw ConfigError(path + "/vpon", "ONU " + std::to_string(flow.onu_id) + " is not a member of VPON '" +
                                                *flow.vpon_override + "'");
        return i;
      }
    throw ConfigError(path + "/vpon", "unknown VPON '" + *flow.vpon_override + "'");
  }
  const VponClass wanted =
      flow.service_class == ServiceClass::time_critical ? VponClass::low_latency : VponClass::high_latency;
  for (std::size_t i = 0; i < vpons.size(); ++i)
    if (vpons[i].vpon_class == wanted && vpon_has_member(vpons[i], flow.onu_id)) return i;
  throw ConfigError(path, "ONU " + std::to_string(flow.onu_id) + " belongs to no " + to_string(wanted) +
                              " VPON for its " + to_string(flow.service_class) + " flow");
}

inline Nanos discovery_window_ns(const Scenario& s) {
  QuietWindowParams q;
  q.max_reach_m = s.discovery.max_reach_m.value_or(s.topology.max_reach_m());
  q.t_proc_ns = s.discovery.t_proc_ns;
  return quiet_window(q, s.topology.propagation_mps);
}

/// Everything derived while validating a scenario for one mode.
struct ScenarioCheck {
  std::vector<VponSpec> vpons;
  std::vector<std::size_t> flow_vpon;  // segmentation result per flow
  std::size_t discovery_domain = 0;
  CodeSet codes;
  std::size_t pn_count = 1;
  PenaltyLookup penalty;
  FeasibilityVerdict feasibility;
  Nanos quiet_window_ns = 0;
  bool forced = false;
};

/// Validates every scenario invariant for `mode`. Throws ConfigError (with a
/// JSON pointer) or, unless `force`, FeasibilityError.
inline ScenarioCheck check_scenario(const Scenario& s, Mode mode, bool force = false) {
  auto wrap = [](const std::string& path, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(path, e.what());
    }
  };
  if (s.sim_duration_ns <= 0) throw ConfigError("/sim_duration_ns", "must be positive");
  if (s.line_rate_bps <= 0) throw ConfigError("/line_rate_bps", "must be positive");
  wrap("/topology", [&] { s.topology.validate(); });
  if (s.topology.onus.empty()) throw ConfigError("/topology/onus", "at least one ONU required");
  wrap("/budget", [&] { s.budget.validate(); });
  wrap("/wavelengths", [&] { s.wavelengths.validate(); });
  wrap("/penalties", [&] { s.penalties.validate(); });
  if (s.dba.w_max_bytes <= 0) throw ConfigError("/dba/w_max_bytes", "must be positive");
  if (s.dba.guard_ns < 0) throw ConfigError("/dba/guard_ns", "must be >= 0");

  ScenarioCheck out;
  if (mode == Mode::virtual_pon) {
    if (s.vpons.size() < 2) throw ConfigError("/vpons", "virtual mode needs at least two VPONs");
    const auto count = [&](VponClass c) {
      return std::count_if(s.vpons.begin(), s.vpons.end(), [c](const auto& v) { return v.vpon_class == c; });
    };
    if (count(VponClass::low_latency) < 1 || count(VponClass::high_latency) < 1)
      throw ConfigError("/vpons", "virtual mode needs a low_latency and a high_latency VPON");
    std::set<std::string> ids;
    std::set<std::size_t> codes;
    for (std::size_t i = 0; i < s.vpons.size(); ++i) {
      const auto& v = s.vpons[i];
      const std::string p = "/vpons/" + std::to_string(i);
      if (v.vpon_id.empty()) throw ConfigError(p + "/vpon_id", "must be non-empty");
      if (!ids.insert(v.vpon_id).second) throw ConfigError(p + "/vpon_id", "duplicate VPON id '" + v.vpon_id + "'");
      if (!codes.insert(v.code_index).second) throw ConfigError(p + "/code_index", "codeword already used");
      if (v.members.empty()) throw ConfigError(p + "/members", "VPON has no members");
      for (std::size_t m = 0; m < v.members.size(); ++m) {
        try {
          s.topology.onu(v.members[m]);
        } catch (const NotFound& e) {
          throw ConfigError(p + "/members/" + std::to_string(m), e.what());
        }
      }
      if (v.dba && (v.dba->w_max_bytes <= 0 || v.dba->guard_ns < 0))
        throw ConfigError(p + "/dba", "w_max_bytes must be positive and guard_ns >= 0");
    }
  }
  out.vpons = effective_vpons(s, mode);
  out.discovery_domain = discovery_domain_index(s, out.vpons, mode);
  out.pn_count = out.vpons.size();

  std::size_t needed = 0;
  for (const auto& v : out.vpons) needed = std::max(needed, v.code_index + 1);
  try {
    out.codes = generate_ooc(s.codes.length, s.codes.weight, s.codes.lambda, needed, s.codes.seed);
  } catch (const CapacityExceeded& e) {
    throw ConfigError("/codes", std::string("cannot build enough codewords: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError("/codes", e.what());
  }
  if (!validate_code_set(out.codes).ok) throw ConfigError("/codes", "generated code set failed validation");

  if (s.discovery.period_ns < 0) throw ConfigError("/discovery/period_ns", "must be >= 0");
  if (s.discovery.t_proc_ns < 0) throw ConfigError("/discovery/t_proc_ns", "must be >= 0");
  const Nanos frame = control_frame_ns(s.line_rate_bps);
  if (s.discovery.period_ns > 0 && s.discovery.t_proc_ns < frame)
    throw ConfigError("/discovery/t_proc_ns", "must cover one control frame (" + std::to_string(frame) + " ns)");
  if (s.discovery.max_reach_m && *s.discovery.max_reach_m + 1e-9 < s.topology.max_reach_m())
    throw ConfigError("/discovery/max_reach_m", "shorter than the farthest ONU");
  wrap("/discovery", [&] { out.quiet_window_ns = discovery_window_ns(s); });
  Nanos max_rtt = 0;
  for (const auto& o : s.topology.onus) max_rtt = std::max(max_rtt, rtt(s.topology, o.onu_id));
  if (out.quiet_window_ns < max_rtt) throw ConfigError("/discovery", "quiet window shorter than the largest RTT");
  if (s.discovery.period_ns > 0 && s.discovery.period_ns <= out.quiet_window_ns)
    throw ConfigError("/discovery/period_ns", "period must exceed the quiet window");

  std::set<std::uint64_t> flow_ids;
  for (std::size_t i = 0; i < s.flows.size(); ++i) {
    const auto& f = s.flows[i];
    const std::string p = "/flows/" + std::to_string(i);
    if (!flow_ids.insert(f.flow_id).second) throw ConfigError(p + "/flow_id", "duplicate flow id");
    wrap(p, [&] { f.validate(); });
    try {
      s.topology.onu(f.onu_id);
    } catch (const NotFound& e) {
      throw ConfigError(p + "/onu_id", e.what());
    }
    out.flow_vpon.push_back(segmentation_policy(f, out.vpons, mode, p));
  }
  for (auto onu : s.unregistered_at_start) {
    try {
      s.topology.onu(onu);
    } catch (const NotFound& e) {
      throw ConfigError("/topology/onus", e.what());
    }
  }

  out.penalty = penalty_interval(out.pn_count, s.penalties);
  out.feasibility = vpon_feasibility(s.topology, s.budget, out.pn_count, s.thresholder_enabled, s.penalties);
  if (!is_feasible(out.feasibility)) {
    if (!force) {
      const double deficit = std::get<Infeasible>(out.feasibility).deficit_db;
      throw FeasibilityError(deficit, std::to_string(out.pn_count) + " code channels: " + describe(out.feasibility));
    }
    out.forced = true;
  }
  return out;
}

}  // namespace vponsim
