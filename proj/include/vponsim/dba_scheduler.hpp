#pragma once

// One IPACT-style grant scheduler per virtual PON. Grant start times are on
// the OLT receive timeline: the ONU transmits one upstream leg earlier.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vponsim/error.hpp"
#include "vponsim/mpcp_protocol.hpp"

namespace vponsim {

enum class DbaPolicy { limited, gated, fixed };

inline const char* to_string(DbaPolicy p) {
  switch (p) {
    case DbaPolicy::limited: return "limited";
    case DbaPolicy::gated: return "gated";
    case DbaPolicy::fixed: return "fixed";
  }
  return "?";
}

struct DbaConfig {
  DbaPolicy policy = DbaPolicy::limited;
  std::int64_t w_max_bytes = 15'000;
  Nanos guard_ns = 1'000;
};

struct QuietWindow {
  Nanos start_ns = 0;
  Nanos end_ns = 0;
};

struct CycleSchedule {
  Nanos gate_send_ns = 0;
  std::vector<Grant> grants;
  std::vector<Gate> gates;  // one GATE per grant
};

class DbaInstance {
 public:
  DbaInstance(VponIndex vpon, DbaConfig cfg, std::int64_t line_rate_bps, bool discovery_domain = false)
      : vpon_(vpon), cfg_(cfg), line_rate_bps_(line_rate_bps), discovery_domain_(discovery_domain) {
    if (cfg_.w_max_bytes <= 0) throw ValidationError("w_max_bytes must be positive");
    if (cfg_.guard_ns < 0) throw ValidationError("guard_ns must be >= 0");
    if (line_rate_bps_ <= 0) throw ValidationError("line rate must be positive");
  }

  VponIndex vpon() const { return vpon_; }
  const DbaConfig& config() const { return cfg_; }
  bool discovery_domain() const { return discovery_domain_; }
  Nanos t_avail() const { return t_avail_; }
  const std::map<OnuId, Nanos>& roster() const { return roster_; }
  const std::map<OnuId, std::int64_t>& last_reports() const { return last_reports_; }
  const std::vector<QuietWindow>& quiet_windows() const { return quiet_windows_; }

  // Membership is static configuration; roster holds members that are ranged.
  void add_member(OnuId onu) { members_.insert(onu); }
  bool has_member(OnuId onu) const { return members_.contains(onu); }
  const std::set<OnuId>& members() const { return members_; }

  void admit(OnuId onu, Nanos rtt_ns) {
    if (!has_member(onu)) throw ContractViolation("ONU " + std::to_string(onu) + " is not a member of this VPON");
    roster_[onu] = rtt_ns;
    last_reports_.try_emplace(onu, 0);
  }

  void on_report(const Report& r) {
    if (!roster_.contains(r.onu_id)) throw NotFound("REPORT from ONU " + std::to_string(r.onu_id) + " not in roster");
    if (r.queued_bytes < 0) throw ValidationError("negative queue report");
    last_reports_[r.onu_id] = r.queued_bytes;
  }

  std::int64_t grant_bytes(std::int64_t report) const {
    switch (cfg_.policy) {
      case DbaPolicy::limited: return std::min(report, cfg_.w_max_bytes) + kControlFrameBytes;
      case DbaPolicy::gated: return report + kControlFrameBytes;
      case DbaPolicy::fixed: return cfg_.w_max_bytes + kControlFrameBytes;
    }
    return kControlFrameBytes;
  }

  /// One round-robin pass over the roster. Every ONU gets a grant sized from
  /// its last REPORT plus room for the piggybacked REPORT; idle ONUs get a
  /// 64-byte polling grant. The starting ONU rotates by one per cycle.
  CycleSchedule schedule_cycle(Nanos now) {
    CycleSchedule out;
    out.gate_send_ns = now;
    if (roster_.empty()) return out;
    const Nanos gate_ns = control_frame_ns(line_rate_bps_);
    std::vector<OnuId> order;
    order.reserve(roster_.size());
    for (const auto& [onu, rtt] : roster_) order.push_back(onu);
    std::rotate(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(rotation_ % order.size()), order.end());
    ++rotation_;

    for (OnuId onu : order) {
      const Nanos rtt = roster_.at(onu);
      const std::int64_t bytes = grant_bytes(last_reports_.at(onu));
      Grant g;
      g.onu_id = onu;
      g.vpon = vpon_;
      g.length_ns = transmission_ns(bytes, line_rate_bps_);
      // GATE must reach the ONU before it starts sending one upstream leg ahead.
      g.start_ns = std::max(t_avail_, now + gate_ns + rtt);
      t_avail_ = g.start_ns + g.length_ns + cfg_.guard_ns;
      out.grants.push_back(g);
      out.gates.push_back(Gate{vpon_, {g}});
    }
    return out;
  }

  void reserve_quiet_window(const QuietWindow& w) {
    if (!discovery_domain_)
      throw ContractViolation("quiet window reserved on VPON " + std::to_string(vpon_) +
                              ", which is not the discovery domain");
    if (w.start_ns < t_avail_ - cfg_.guard_ns)
      throw ContractViolation("quiet window overlaps grants already issued");
    quiet_windows_.push_back(w);
    t_avail_ = std::max(t_avail_, w.end_ns);
  }

  bool overlaps_quiet_window(Nanos from, Nanos to) const {
    for (const auto& w : quiet_windows_)
      if (from < w.end_ns && w.start_ns < to) return true;
    return false;
  }

 private:
  VponIndex vpon_;
  DbaConfig cfg_;
  std::int64_t line_rate_bps_;
  bool discovery_domain_;
  Nanos t_avail_ = 0;
  std::size_t rotation_ = 0;
  std::set<OnuId> members_;
  std::map<OnuId, Nanos> roster_;
  std::map<OnuId, std::int64_t> last_reports_;
  std::vector<QuietWindow> quiet_windows_;
};

}  // namespace vponsim
