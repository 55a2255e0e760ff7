#pragma once

// Single-threaded discrete-event run of one scenario in one mode.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "vponsim/dba_scheduler.hpp"
#include "vponsim/event_queue.hpp"
#include "vponsim/mpcp_protocol.hpp"
#include "vponsim/scenario.hpp"
#include "vponsim/stats.hpp"
#include "vponsim/traffic.hpp"

namespace vponsim {

namespace ev {
struct PacketArrival { std::size_t flow; };
struct GateAtOnu { VponIndex vpon; std::size_t grant; };
struct GrantStartAtOnu { VponIndex vpon; std::size_t grant; };
struct BurstStartAtOlt { VponIndex vpon; std::size_t grant; };
struct BurstEndAtOlt { VponIndex vpon; std::size_t grant; };
struct ReportAtOlt { VponIndex vpon; OnuId onu; std::int64_t bytes; };
struct DiscoveryTimer { std::uint64_t k; };
struct DiscoveryGateAtOnu { OnuId onu; };
struct DiscoveryWindowStart {};
struct DiscoveryWindowEnd {};
struct RegisterReqAtOlt { RegisterReq msg; };
struct DbaCycleTimer { VponIndex vpon; };
struct DownstreamDelivery { std::uint64_t packet; };
struct SimEnd {};
}  // namespace ev

using EventPayload =
    std::variant<ev::PacketArrival, ev::GateAtOnu, ev::GrantStartAtOnu, ev::BurstStartAtOlt, ev::BurstEndAtOlt,
                 ev::ReportAtOlt, ev::DiscoveryTimer, ev::DiscoveryGateAtOnu, ev::DiscoveryWindowStart,
                 ev::DiscoveryWindowEnd, ev::RegisterReqAtOlt, ev::DbaCycleTimer, ev::DownstreamDelivery, ev::SimEnd>;

struct RunOptions {
  bool force = false;
  std::ostream* trace = nullptr;  // MPCP trace, tab separated
};

struct RunResult {
  std::string scenario_name;
  Mode mode = Mode::virtual_pon;
  std::uint64_t seed = 0;
  std::vector<VponSpec> vpons;
  ScenarioCheck check;
  LatencyStats stats;
  std::vector<Packet> packets;                 // every packet generated, in creation order
  std::vector<std::vector<Grant>> grants;      // per VPON, in issue order
  std::vector<std::vector<QuietWindow>> quiet_windows;
  std::vector<DiscoveryGate> discovery_windows;
  std::uint64_t discovery_rejections = 0;
  std::uint64_t collisions = 0;
  RangingRegistry registry;
  std::map<OnuId, Registration> final_registration;
  std::uint64_t events_processed = 0;
  Nanos end_ns = 0;

  std::uint64_t generated(std::uint64_t flow) const {
    std::uint64_t n = 0;
    for (const auto& p : packets) n += p.flow_id == flow;
    return n;
  }
};

class Simulator {
 public:
  Simulator(const Scenario& s, Mode mode, RunOptions opts = {})
      : s_(s), opts_(opts), frame_ns_(control_frame_ns(s.line_rate_bps)) {
    result_.check = check_scenario(s, mode, opts.force);
    result_.scenario_name = s.name;
    result_.mode = mode;
    result_.seed = s.seed;
    result_.vpons = result_.check.vpons;
    result_.stats = LatencyStats(s.exact_latency_limit);
    const auto& vpons = result_.vpons;
    for (std::size_t v = 0; v < vpons.size(); ++v) {
      dbas_.emplace_back(v, vpons[v].dba.value_or(s.dba), s.line_rate_bps, v == result_.check.discovery_domain);
      for (auto m : vpons[v].members) dbas_.back().add_member(m);
    }
    runtime_.resize(vpons.size());
    result_.grants.resize(vpons.size());
    result_.quiet_windows.resize(vpons.size());
    ds_free_.assign(vpons.size(), 0);
    olt_busy_until_.assign(vpons.size(), 0);
    outstanding_.assign(vpons.size(), 0);
    cycle_pending_.assign(vpons.size(), false);
    for (const auto& o : s.topology.onus) {
      OnuState st;
      st.onu_id = o.onu_id;
      for (std::size_t v = 0; v < vpons.size(); ++v)
        if (vpon_has_member(vpons[v], o.onu_id)) {
          st.memberships.push_back(v);
          st.queues[v];
        }
      onus_.emplace(o.onu_id, std::move(st));
      rtt_.emplace(o.onu_id, rtt(s.topology, o.onu_id));
    }
    DiscoveryParams dp;
    dp.period_ns = s.discovery.period_ns;
    dp.window_ns = result_.check.quiet_window_ns;
    dp.t_proc_ns = s.discovery.t_proc_ns;
    dp.control_frame_ns = frame_ns_;
    discovery_.emplace(dp);
  }

  RunResult run() {
    queue_.push(s_.sim_duration_ns, ev::SimEnd{});
    for (auto& [id, st] : onus_) {
      if (s_.unregistered_at_start.contains(id)) continue;
      const Llid llid = result_.registry.provision(id, rtt_.at(id));
      st.registration = Registered{llid, rtt_.at(id)};
      share_ranging(result_.registry, id, dbas_);
    }
    for (std::size_t v = 0; v < dbas_.size(); ++v)
      if (!dbas_[v].roster().empty()) arm_cycle(v, 0);
    for (std::size_t f = 0; f < s_.flows.size(); ++f) {
      gens_.emplace_back(s_.flows[f], s_.seed);
      if (gens_.back().peek() < s_.sim_duration_ns) queue_.push(gens_.back().peek(), ev::PacketArrival{f});
    }
    if (discovery_->enabled() && discovery_->request_time(1) < s_.sim_duration_ns)
      queue_.push(discovery_->request_time(1), ev::DiscoveryTimer{1});

    bool done = false;
    while (!done && !queue_.empty()) {
      auto e = queue_.pop();
      ++result_.events_processed;
      now_ = e.time;
      std::visit([&](auto& p) { done = handle(p); }, e.payload);
    }
    finish();
    return std::move(result_);
  }

 private:
  template <typename... T>
  void trace(Nanos t, VponIndex v, const char* dir, const char* kind, OnuId onu, const T&... detail) {
    if (!opts_.trace) return;
    auto& os = *opts_.trace;
    os << t << '\t' << (v < result_.vpons.size() ? result_.vpons[v].vpon_id : std::string("-")) << '\t' << dir << '\t'
       << kind << '\t' << onu << '\t';
    ((os << detail), ...);
    os << '\n';
  }

  void arm_cycle(VponIndex v, Nanos at) {
    if (cycle_pending_[v] || outstanding_[v] > 0) return;
    cycle_pending_[v] = true;
    queue_.push(at, ev::DbaCycleTimer{v});
  }

  bool handle(const ev::SimEnd&) { return true; }

  bool handle(const ev::PacketArrival& a) {
    auto& gen = gens_[a.flow];
    const auto& spec = gen.spec();
    Packet p;
    p.packet_id = result_.packets.size();
    p.flow_id = spec.flow_id;
    p.service_class = spec.service_class;
    p.created_ns = gen.next();
    p.size_bytes = gen.next_size();
    p.vpon = result_.check.flow_vpon[a.flow];
    result_.packets.push_back(p);
    if (spec.direction == FlowDirection::up) {
      onus_.at(spec.onu_id).queues.at(p.vpon).push(p.packet_id, p.size_bytes);
    } else {
      const Nanos start = std::max(now_, ds_free_[p.vpon]);
      ds_free_[p.vpon] = start + transmission_ns(p.size_bytes, s_.line_rate_bps);
      queue_.push(ds_free_[p.vpon] + downstream_leg(rtt_.at(spec.onu_id)), ev::DownstreamDelivery{p.packet_id});
    }
    if (gen.peek() < s_.sim_duration_ns) queue_.push(gen.peek(), ev::PacketArrival{a.flow});
    return false;
  }

  bool handle(const ev::DownstreamDelivery& d) {
    result_.stats.record_delivery(result_.packets[d.packet], now_, false);
    return false;
  }

  struct GrantRuntime {
    Grant grant;
    std::int64_t granted_bytes = 0;
    std::vector<std::pair<std::uint64_t, Nanos>> packets;  // id, last bit at OLT
    std::int64_t report_bytes = 0;
  };

  bool handle(const ev::DbaCycleTimer& t) {
    const VponIndex v = t.vpon;
    cycle_pending_[v] = false;
    auto& dba = dbas_[v];
    if (dba.roster().empty() || outstanding_[v] > 0) return false;
    const auto sched = dba.schedule_cycle(now_);
    for (const auto& g : sched.grants) {
      GrantRuntime gr;
      gr.grant = g;
      gr.granted_bytes = dba.grant_bytes(dba.last_reports().at(g.onu_id));
      runtime_[v].push_back(std::move(gr));
      result_.grants[v].push_back(g);
      ++outstanding_[v];
      trace(now_, v, "down", "GATE", g.onu_id, "start=", g.start_ns, " len=", g.length_ns);
      queue_.push(now_ + frame_ns_ + downstream_leg(rtt_.at(g.onu_id)), ev::GateAtOnu{v, runtime_[v].size() - 1});
    }
    return false;
  }

  bool handle(const ev::GateAtOnu& g) {
    const auto& gr = runtime_[g.vpon][g.grant];
    const auto& onu = onus_.at(gr.grant.onu_id);
    if (!onu.registered() || !onu.member_of(g.vpon))
      throw ContractViolation("GATE addressed to ONU " + std::to_string(onu.onu_id) + " which cannot use it");
    const Nanos tx = gr.grant.start_ns - upstream_leg(rtt_.at(onu.onu_id));
    if (tx < now_) throw ContractViolation("GATE reached ONU " + std::to_string(onu.onu_id) + " after grant start");
    queue_.push(tx, ev::GrantStartAtOnu{g.vpon, g.grant});
    return false;
  }

  bool handle(const ev::GrantStartAtOnu& g) {
    auto& gr = runtime_[g.vpon][g.grant];
    auto& q = onus_.at(gr.grant.onu_id).queues.at(g.vpon);
    std::int64_t budget = gr.granted_bytes - kControlFrameBytes;
    std::int64_t sent = 0;
    while (!q.empty() && q.front().size_bytes <= budget) {
      const auto item = q.pop();
      budget -= item.size_bytes;
      sent += item.size_bytes;
      auto& p = result_.packets[item.packet_id];
      p.grant_start_ns = gr.grant.start_ns;
      gr.packets.emplace_back(item.packet_id, gr.grant.start_ns + transmission_ns(sent, s_.line_rate_bps));
    }
    gr.report_bytes = q.bytes();
    queue_.push(gr.grant.start_ns, ev::BurstStartAtOlt{g.vpon, g.grant});
    queue_.push(gr.grant.end_ns(), ev::BurstEndAtOlt{g.vpon, g.grant});
    queue_.push(gr.grant.end_ns(), ev::ReportAtOlt{g.vpon, gr.grant.onu_id, gr.report_bytes});
    return false;
  }

  bool handle(const ev::BurstStartAtOlt& b) {
    const auto& gr = runtime_[b.vpon][b.grant].grant;
    if (now_ != gr.start_ns) throw ContractViolation("burst arrived outside its grant");
    if (now_ < olt_busy_until_[b.vpon]) throw ContractViolation("overlapping upstream bursts on one VPON");
    if (dbas_[b.vpon].overlaps_quiet_window(gr.start_ns, gr.end_ns()))
      throw ContractViolation("data burst inside a quiet window");
    olt_busy_until_[b.vpon] = gr.end_ns();
    return false;
  }

  bool handle(const ev::BurstEndAtOlt& b) {
    auto& gr = runtime_[b.vpon][b.grant];
    const auto& dba = dbas_[b.vpon];
    for (const auto& [id, at] : gr.packets) {
      auto& p = result_.packets[id];
      result_.stats.record_delivery(p, at, dba.overlaps_quiet_window(p.created_ns, *p.grant_start_ns));
    }
    gr.packets.clear();
    gr.packets.shrink_to_fit();
    return false;
  }

  bool handle(const ev::ReportAtOlt& r) {
    dbas_[r.vpon].on_report(Report{r.vpon, r.onu, r.bytes});
    trace(now_, r.vpon, "up", "REPORT", r.onu, "queued=", r.bytes);
    if (--outstanding_[r.vpon] == 0) arm_cycle(r.vpon, now_);
    return false;
  }

  bool handle(const ev::DiscoveryTimer& t) {
    const VponIndex dv = result_.check.discovery_domain;
    auto& dba = dbas_[dv];
    const auto next = discovery_->request_time(t.k + 1);
    if (next < s_.sim_duration_ns) queue_.push(next, ev::DiscoveryTimer{t.k + 1});
    auto gate = discovery_->olt_start_discovery(now_, dba.t_avail());
    if (!gate) {
      ++result_.discovery_rejections;
      return false;
    }
    dba.reserve_quiet_window({gate->window_start_ns, gate->window_end_ns()});
    window_ = *gate;
    window_reqs_.clear();
    result_.discovery_windows.push_back(*gate);
    trace(gate->emission_ns, dv, "down", "DISCOVERY_GATE", 0, "window_start=", gate->window_start_ns,
          " window_len=", gate->window_len_ns);
    queue_.push(gate->window_start_ns, ev::DiscoveryWindowStart{});
    for (const auto& [id, st] : onus_)
      if (!st.registered()) queue_.push(gate->window_start_ns + downstream_leg(rtt_.at(id)), ev::DiscoveryGateAtOnu{id});
    queue_.push(gate->window_end_ns(), ev::DiscoveryWindowEnd{});
    return false;
  }

  bool handle(const ev::DiscoveryWindowStart&) { return false; }

  bool handle(const ev::DiscoveryGateAtOnu& g) {
    auto& st = onus_.at(g.onu);
    auto [it, inserted] = discovery_rng_.try_emplace(g.onu, s_.seed, g.onu, kDiscoveryStreams);
    auto req = onu_on_discovery_gate(st, window_, it->second, downstream_leg(rtt_.at(g.onu)),
                                     discovery_->params());
    if (!req) return false;
    queue_.push(req->send_ns + upstream_leg(rtt_.at(g.onu)), ev::RegisterReqAtOlt{req->msg});
    return false;
  }

  bool handle(const ev::RegisterReqAtOlt& r) {
    if (now_ < window_.window_start_ns || now_ + frame_ns_ > window_.window_end_ns())
      throw ContractViolation("REGISTER_REQ from ONU " + std::to_string(r.msg.onu_id) + " outside the quiet window");
    window_reqs_.push_back({r.msg, now_});
    trace(now_, result_.check.discovery_domain, "up", "REGISTER_REQ", r.msg.onu_id, "delay=", r.msg.applied_delay_ns);
    return false;
  }

  bool handle(const ev::DiscoveryWindowEnd&) {
    const VponIndex dv = result_.check.discovery_domain;
    const auto hit = colliding_requests(window_reqs_, frame_ns_);
    for (std::size_t i = 0; i < window_reqs_.size(); ++i) {
      const auto& req = window_reqs_[i];
      if (hit.contains(i)) {
        ++result_.collisions;
        onus_.at(req.msg.onu_id).registration = Unregistered{};
        trace(now_, dv, "up", "COLLISION", req.msg.onu_id, "arrival=", req.arrival_ns);
        continue;
      }
      const auto reg = olt_on_register_req(window_.emission_ns, req.arrival_ns, req.msg, frame_ns_, result_.registry);
      onus_.at(reg.onu_id).registration = Registered{reg.llid, reg.measured_rtt_ns};
      trace(now_, dv, "down", "REGISTER", reg.onu_id, "rtt=", reg.measured_rtt_ns, " llid=", reg.llid);
      trace(now_, dv, "up", "REGISTER_ACK", reg.onu_id, "");
      share_ranging(result_.registry, reg.onu_id, dbas_);
    }
    window_reqs_.clear();
    for (std::size_t v = 0; v < dbas_.size(); ++v)
      if (!dbas_[v].roster().empty()) arm_cycle(v, now_);
    return false;
  }

  void finish() {
    result_.end_ns = now_;
    for (auto& p : result_.packets) {
      auto& c = result_.stats.cell({p.vpon, p.service_class, p.flow_id});
      if (!p.delivered_ns) ++c.residual_queued;
    }
    for (std::size_t v = 0; v < dbas_.size(); ++v) result_.quiet_windows[v] = dbas_[v].quiet_windows();
    for (const auto& [id, st] : onus_) result_.final_registration.emplace(id, st.registration);
  }

  const Scenario& s_;
  RunOptions opts_;
  Nanos frame_ns_;
  Nanos now_ = 0;
  RunResult result_;
  EventQueue<EventPayload> queue_;
  std::vector<DbaInstance> dbas_;
  std::vector<std::vector<GrantRuntime>> runtime_;
  std::vector<Nanos> ds_free_;
  std::vector<Nanos> olt_busy_until_;
  std::vector<std::size_t> outstanding_;
  std::vector<bool> cycle_pending_;
  std::map<OnuId, OnuState> onus_;
  std::map<OnuId, Nanos> rtt_;
  std::vector<FlowGenerator> gens_;
  std::optional<DiscoveryScheduler> discovery_;
  std::map<OnuId, RngStream> discovery_rng_;
  DiscoveryGate window_{};
  std::vector<RegisterReqArrival> window_reqs_;
};

/// Runs `scenario` in `mode`. Identical (scenario, mode) inputs give identical results.
inline RunResult run(const Scenario& scenario, Mode mode, RunOptions opts = {}) {
  Simulator sim(scenario, mode, opts);
  return sim.run();
}

inline RunResult run(const Scenario& scenario, RunOptions opts = {}) { return run(scenario, scenario.mode, opts); }

}  // namespace vponsim
