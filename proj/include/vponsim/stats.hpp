#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "vponsim/error.hpp"
#include "vponsim/mpcp_protocol.hpp"
#include "vponsim/traffic.hpp"

namespace vponsim {

struct Packet {
  std::uint64_t packet_id = 0;
  std::uint64_t flow_id = 0;
  std::int64_t size_bytes = 0;
  ServiceClass service_class = ServiceClass::best_effort;
  Nanos created_ns = 0;
  std::optional<Nanos> delivered_ns;
  VponIndex vpon = 0;
  std::optional<Nanos> grant_start_ns;  // upstream only
};

struct LatencySummary {
  std::uint64_t count = 0;
  double mean_ns = 0.0;
  Nanos p50_ns = 0;
  Nanos p99_ns = 0;
  Nanos p999_ns = 0;
  Nanos max_ns = 0;
};

/// Exact latency samples, folded into a 100 ns histogram once the sample
/// count passes `exact_limit`.
class LatencyRecorder {
 public:
  static constexpr Nanos kHistogramResolutionNs = 100;

  explicit LatencyRecorder(std::size_t exact_limit = 10'000'000) : exact_limit_(exact_limit) {}

  void add(Nanos latency) {
    ++count_;
    sum_ += static_cast<long double>(latency);
    max_ = std::max(max_, latency);
    if (!histogram_mode_) {
      samples_.push_back(latency);
      if (samples_.size() > exact_limit_) fold();
      sorted_ = false;
    } else {
      ++buckets_[latency / kHistogramResolutionNs];
    }
  }

  bool exact() const { return !histogram_mode_; }
  std::uint64_t count() const { return count_; }

  // Nearest-rank percentile, p in (0, 1].
  Nanos percentile(double p) {
    if (count_ == 0) return 0;
    const auto rank = static_cast<std::uint64_t>(std::ceil(p * static_cast<double>(count_)));
    const auto idx = std::max<std::uint64_t>(rank, 1) - 1;
    if (!histogram_mode_) {
      if (!sorted_) {
        std::sort(samples_.begin(), samples_.end());
        sorted_ = true;
      }
      return samples_[idx];
    }
    std::uint64_t seen = 0;
    for (const auto& [bucket, n] : buckets_) {
      seen += n;
      if (seen > idx) return std::min(max_, (bucket + 1) * kHistogramResolutionNs);
    }
    return max_;
  }

  LatencySummary summary() {
    LatencySummary s;
    s.count = count_;
    if (count_ == 0) return s;
    s.mean_ns = static_cast<double>(sum_ / static_cast<long double>(count_));
    s.p50_ns = percentile(0.50);
    s.p99_ns = percentile(0.99);
    s.p999_ns = percentile(0.999);
    s.max_ns = max_;
    return s;
  }

 private:
  void fold() {
    for (auto v : samples_) ++buckets_[v / kHistogramResolutionNs];
    samples_.clear();
    samples_.shrink_to_fit();
    histogram_mode_ = true;
  }

  std::size_t exact_limit_;
  std::uint64_t count_ = 0;
  long double sum_ = 0;
  Nanos max_ = 0;
  bool histogram_mode_ = false;
  bool sorted_ = false;
  std::vector<Nanos> samples_;
  std::map<Nanos, std::uint64_t> buckets_;
};

struct StatsKey {
  VponIndex vpon = 0;
  ServiceClass service_class = ServiceClass::best_effort;
  std::uint64_t flow_id = 0;

  friend auto operator<=>(const StatsKey& a, const StatsKey& b) {
    return std::tuple(a.vpon, static_cast<int>(a.service_class), a.flow_id) <=>
           std::tuple(b.vpon, static_cast<int>(b.service_class), b.flow_id);
  }
  friend bool operator==(const StatsKey&, const StatsKey&) = default;
};

struct FlowCell {
  LatencyRecorder latency;
  std::uint64_t quiet_window_hits = 0;
  std::uint64_t residual_queued = 0;
};

class LatencyStats {
 public:
  explicit LatencyStats(std::size_t exact_limit = 10'000'000) : exact_limit_(exact_limit) {}

  FlowCell& cell(const StatsKey& k) { return cells_.try_emplace(k, FlowCell{LatencyRecorder(exact_limit_)}).first->second; }

  /// Records `packet` as delivered at `now`. `quiet_hit` marks packets whose
  /// wait [created, grant start) overlapped a quiet window on their VPON.
  void record_delivery(Packet& packet, Nanos now, bool quiet_hit) {
    if (packet.delivered_ns) throw ContractViolation("packet " + std::to_string(packet.packet_id) + " delivered twice");
    if (now < packet.created_ns) throw ContractViolation("packet delivered before it was created");
    packet.delivered_ns = now;
    auto& c = cell({packet.vpon, packet.service_class, packet.flow_id});
    c.latency.add(now - packet.created_ns);
    if (quiet_hit) ++c.quiet_window_hits;
  }

  std::map<StatsKey, FlowCell>& cells() { return cells_; }
  const std::map<StatsKey, FlowCell>& cells() const { return cells_; }
  bool empty() const { return cells_.empty(); }

 private:
  std::size_t exact_limit_;
  std::map<StatsKey, FlowCell> cells_;
};

}  // namespace vponsim
