#pragma once

// MPCP-style control plane: GATE/REPORT, discovery gates, registration and the
// ranging registry that every virtual PON reads from.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "vponsim/error.hpp"
#include "vponsim/rng.hpp"
#include "vponsim/topology_power.hpp"

namespace vponsim {

using VponIndex = std::size_t;
using Llid = std::uint32_t;

inline constexpr std::int64_t kControlFrameBytes = 64;

/// Time to serialise `bytes` at `line_rate_bps`, rounded up.
inline Nanos transmission_ns(std::int64_t bytes, std::int64_t line_rate_bps) {
  const auto bits = static_cast<__int128>(bytes) * 8 * 1'000'000'000;
  return static_cast<Nanos>((bits + line_rate_bps - 1) / line_rate_bps);
}

inline Nanos control_frame_ns(std::int64_t line_rate_bps) {
  return transmission_ns(kControlFrameBytes, line_rate_bps);
}

struct Grant {
  OnuId onu_id = 0;
  Nanos start_ns = 0;   // first bit arrives at the OLT
  Nanos length_ns = 0;
  VponIndex vpon = 0;

  Nanos end_ns() const { return start_ns + length_ns; }
  friend bool operator==(const Grant&, const Grant&) = default;
};

struct Gate {
  VponIndex vpon = 0;
  std::vector<Grant> grants;
};
struct Report {
  VponIndex vpon = 0;
  OnuId onu_id = 0;
  std::int64_t queued_bytes = 0;
};
struct DiscoveryGate {
  Nanos emission_ns = 0;
  Nanos window_start_ns = 0;
  Nanos window_len_ns = 0;

  Nanos window_end_ns() const { return window_start_ns + window_len_ns; }
};
struct RegisterReq {
  OnuId onu_id = 0;
  Nanos applied_delay_ns = 0;
};
struct Register {
  OnuId onu_id = 0;
  Nanos measured_rtt_ns = 0;
  Llid llid = 0;
};
struct RegisterAck {
  OnuId onu_id = 0;
};

using MpcpMessage = std::variant<Gate, Report, DiscoveryGate, RegisterReq, Register, RegisterAck>;

inline const char* message_kind(const MpcpMessage& m) {
  static constexpr const char* names[] = {"GATE", "REPORT", "DISCOVERY_GATE", "REGISTER_REQ", "REGISTER", "REGISTER_ACK"};
  return names[m.index()];
}

struct Unregistered {};
struct Registering {
  std::uint32_t attempt = 0;
};
struct Registered {
  Llid llid = 0;
  Nanos rtt_ns = 0;
};
using Registration = std::variant<Unregistered, Registering, Registered>;

/// FIFO of packet ids with a running byte count.
class ByteQueue {
 public:
  struct Item {
    std::uint64_t packet_id;
    std::int64_t size_bytes;
  };

  void push(std::uint64_t packet_id, std::int64_t size_bytes) {
    items_.push_back({packet_id, size_bytes});
    bytes_ += size_bytes;
  }
  const Item& front() const { return items_.front(); }
  Item pop() {
    Item it = items_.front();
    items_.pop_front();
    bytes_ -= it.size_bytes;
    return it;
  }
  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  std::int64_t bytes() const { return bytes_; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::deque<Item> items_;
  std::int64_t bytes_ = 0;
};

struct OnuState {
  OnuId onu_id = 0;
  Registration registration = Unregistered{};
  std::vector<VponIndex> memberships;
  std::map<VponIndex, ByteQueue> queues;  // one per membership
  std::uint32_t discovery_attempts = 0;

  bool registered() const { return std::holds_alternative<Registered>(registration); }
  bool member_of(VponIndex v) const {
    return std::find(memberships.begin(), memberships.end(), v) != memberships.end();
  }
};

/// Ranging results shared by every virtual PON.
class RangingRegistry {
 public:
  struct Entry {
    Nanos rtt_ns = 0;
    Llid llid = 0;
    std::uint32_t measurements = 0;  // ranging exchanges, 0 for provisioned entries
  };

  Llid record_measurement(OnuId onu, Nanos rtt_ns) {
    auto& e = entries_[onu];
    e.rtt_ns = rtt_ns;
    if (e.llid == 0) e.llid = next_llid_++;
    ++e.measurements;
    return e.llid;
  }

  // ONUs registered before the run starts; RTT comes from the provisioned topology.
  Llid provision(OnuId onu, Nanos rtt_ns) {
    auto& e = entries_[onu];
    e.rtt_ns = rtt_ns;
    if (e.llid == 0) e.llid = next_llid_++;
    return e.llid;
  }

  void forget(OnuId onu) { entries_.erase(onu); }

  bool contains(OnuId onu) const { return entries_.contains(onu); }
  const Entry& at(OnuId onu) const {
    auto it = entries_.find(onu);
    if (it == entries_.end()) throw NotFound("ONU " + std::to_string(onu) + " has not been ranged");
    return it->second;
  }
  const std::map<OnuId, Entry>& entries() const { return entries_; }

 private:
  std::map<OnuId, Entry> entries_;
  Llid next_llid_ = 1;
};

struct DiscoveryParams {
  Nanos period_ns = 500'000'000;  // 0 disables discovery
  Nanos window_ns = 250'000;
  Nanos t_proc_ns = 50'000;
  Nanos control_frame_ns = 512;
};

/// Periodic discovery on the designated VPON.
class DiscoveryScheduler {
 public:
  explicit DiscoveryScheduler(DiscoveryParams p) : params_(p) {}

  const DiscoveryParams& params() const { return params_; }
  bool enabled() const { return params_.period_ns > 0; }

  // Time of the k-th periodic request (k >= 1).
  Nanos request_time(std::uint64_t k) const { return static_cast<Nanos>(k) * params_.period_ns; }

  /// Places the next window no earlier than `channel_free_ns` on the discovery
  /// VPON's upstream channel. Returns nullopt if the previous window is still open.
  std::optional<DiscoveryGate> olt_start_discovery(Nanos now, Nanos channel_free_ns) {
    if (open_ && now < last_.window_end_ns()) return std::nullopt;
    DiscoveryGate g;
    g.window_start_ns = std::max(now + params_.control_frame_ns, channel_free_ns);
    g.emission_ns = g.window_start_ns - params_.control_frame_ns;
    g.window_len_ns = params_.window_ns;
    last_ = g;
    open_ = true;
    return g;
  }

  std::optional<DiscoveryGate> last() const { return open_ ? std::optional(last_) : std::nullopt; }

 private:
  DiscoveryParams params_;
  DiscoveryGate last_{};
  bool open_ = false;
};

struct ScheduledRegisterReq {
  RegisterReq msg;
  Nanos send_ns = 0;  // leaves the ONU
};

/// Unregistered ONUs answer a discovery gate after a random delay in
/// [0, t_proc - T_msg]; registered ONUs stay silent.
inline std::optional<ScheduledRegisterReq> onu_on_discovery_gate(OnuState& state, const DiscoveryGate& gate,
                                                                 RngStream& rng, Nanos downstream_ns,
                                                                 const DiscoveryParams& params) {
  if (state.registered()) return std::nullopt;
  state.registration = Registering{++state.discovery_attempts};
  const Nanos max_delay = std::max<Nanos>(0, params.t_proc_ns - params.control_frame_ns);
  const Nanos delay = rng.uniform_int(0, max_delay);
  return ScheduledRegisterReq{{state.onu_id, delay}, gate.window_start_ns + downstream_ns + delay};
}

struct RegisterReqArrival {
  RegisterReq msg;
  Nanos arrival_ns = 0;
};

/// Indices of requests whose bursts overlap another request at the OLT.
inline std::set<std::size_t> colliding_requests(const std::vector<RegisterReqArrival>& reqs, Nanos burst_ns) {
  std::set<std::size_t> hit;
  for (std::size_t i = 0; i < reqs.size(); ++i)
    for (std::size_t j = i + 1; j < reqs.size(); ++j) {
      const Nanos a = reqs[i].arrival_ns, b = reqs[j].arrival_ns;
      if (a < b + burst_ns && b < a + burst_ns) {
        hit.insert(i);
        hit.insert(j);
      }
    }
  return hit;
}

/// RTT = arrival - gate emission - applied delay - gate transmission time.
inline Register olt_on_register_req(Nanos gate_emission_ns, Nanos arrival_ns, const RegisterReq& msg,
                                    Nanos control_frame_ns, RangingRegistry& registry) {
  const Nanos measured = arrival_ns - gate_emission_ns - msg.applied_delay_ns - control_frame_ns;
  if (measured < 0) throw ContractViolation("negative ranging measurement for ONU " + std::to_string(msg.onu_id));
  const Llid llid = registry.record_measurement(msg.onu_id, measured);
  return Register{msg.onu_id, measured, llid};
}

/// Admits a ranged ONU to every VPON it belongs to, with the registry's RTT.
/// `Vpons` is a range of objects exposing has_member(OnuId) and admit(OnuId, Nanos).
template <typename Vpons>
std::size_t share_ranging(const RangingRegistry& registry, OnuId onu, Vpons& vpons) {
  const auto& entry = registry.at(onu);
  std::size_t admitted = 0;
  for (auto& v : vpons) {
    if (!v.has_member(onu)) continue;
    v.admit(onu, entry.rtt_ns);
    ++admitted;
  }
  return admitted;
}

}  // namespace vponsim
