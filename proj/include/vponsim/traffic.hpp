#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vponsim/error.hpp"
#include "vponsim/rng.hpp"
#include "vponsim/topology_power.hpp"

namespace vponsim {

enum class ServiceClass { time_critical, best_effort };

inline const char* to_string(ServiceClass c) {
  return c == ServiceClass::time_critical ? "time_critical" : "best_effort";
}

enum class FlowDirection { up, down };

struct PoissonArrivals {
  double rate_pps = 0.0;
};
struct CbrArrivals {
  Nanos period_ns = 0;
};
struct OnOffArrivals {
  double mean_on_ns = 0.0;
  double mean_off_ns = 0.0;
  double rate_pps = 0.0;  // constant rate while ON
};
using ArrivalProcess = std::variant<PoissonArrivals, CbrArrivals, OnOffArrivals>;

struct FlowSpec {
  std::uint64_t flow_id = 0;
  OnuId onu_id = 0;
  ServiceClass service_class = ServiceClass::best_effort;
  ArrivalProcess arrival = PoissonArrivals{1.0};
  std::vector<std::int64_t> sizes{64};  // one entry = fixed size; several = uniform pick
  std::optional<std::string> vpon_override;
  FlowDirection direction = FlowDirection::up;

  double mean_size_bytes() const {
    return std::accumulate(sizes.begin(), sizes.end(), 0.0) / static_cast<double>(sizes.size());
  }

  // Long-run packet rate.
  double mean_rate_pps() const {
    if (auto* p = std::get_if<PoissonArrivals>(&arrival)) return p->rate_pps;
    if (auto* c = std::get_if<CbrArrivals>(&arrival)) return 1e9 / static_cast<double>(c->period_ns);
    const auto& o = std::get<OnOffArrivals>(arrival);
    return o.rate_pps * o.mean_on_ns / (o.mean_on_ns + o.mean_off_ns);
  }

  double offered_bps() const { return mean_rate_pps() * mean_size_bytes() * 8.0; }

  void validate() const {
    if (sizes.empty()) throw ValidationError("flow " + std::to_string(flow_id) + ": no packet sizes");
    for (auto s : sizes)
      if (s < 64 || s > 1518) throw ValidationError("flow " + std::to_string(flow_id) + ": size outside [64, 1518]");
    std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, PoissonArrivals>) {
            if (!(a.rate_pps > 0.0)) throw ValidationError("flow " + std::to_string(flow_id) + ": rate must be positive");
          } else if constexpr (std::is_same_v<T, CbrArrivals>) {
            if (a.period_ns <= 0) throw ValidationError("flow " + std::to_string(flow_id) + ": period must be positive");
          } else {
            if (!(a.rate_pps > 0.0) || !(a.mean_on_ns > 0.0) || !(a.mean_off_ns > 0.0))
              throw ValidationError("flow " + std::to_string(flow_id) + ": on/off parameters must be positive");
          }
        },
        arrival);
  }

  // Same flow with its packet rate multiplied by `factor` (> 0).
  FlowSpec scaled(double factor) const {
    FlowSpec f = *this;
    std::visit(
        [&](auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, CbrArrivals>)
            a.period_ns = std::max<Nanos>(1, std::llround(static_cast<double>(a.period_ns) / factor));
          else
            a.rate_pps *= factor;
        },
        f.arrival);
    return f;
  }
};

/// Arrival-time and size stream of one flow, drawn from rng_stream(seed, flow_id).
class FlowGenerator {
 public:
  FlowGenerator(const FlowSpec& spec, std::uint64_t seed) : spec_(spec), rng_(rng_stream(seed, spec.flow_id)) {
    std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, PoissonArrivals>) {
            clock_ = rng_.exponential(1e9 / a.rate_pps);
          } else if constexpr (std::is_same_v<T, CbrArrivals>) {
            clock_ = static_cast<double>(rng_.uniform_int(0, a.period_ns - 1));
          } else {
            clock_ = rng_.exponential(a.mean_off_ns);
            on_until_ = clock_ + rng_.exponential(a.mean_on_ns);
          }
        },
        spec_.arrival);
  }

  Nanos peek() const { return std::llround(clock_); }

  /// Returns the current arrival time and advances to the next one.
  Nanos next() {
    const Nanos t = peek();
    std::visit(
        [&](const auto& a) {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, PoissonArrivals>) {
            clock_ += rng_.exponential(1e9 / a.rate_pps);
          } else if constexpr (std::is_same_v<T, CbrArrivals>) {
            clock_ += static_cast<double>(a.period_ns);
          } else {
            clock_ += 1e9 / a.rate_pps;
            while (clock_ >= on_until_) {
              clock_ = on_until_ + rng_.exponential(a.mean_off_ns);
              on_until_ = clock_ + rng_.exponential(a.mean_on_ns);
            }
          }
        },
        spec_.arrival);
    return t;
  }

  std::int64_t next_size() {
    if (spec_.sizes.size() == 1) return spec_.sizes.front();
    return spec_.sizes[static_cast<std::size_t>(rng_.uniform_int(0, static_cast<std::int64_t>(spec_.sizes.size()) - 1))];
  }

  const FlowSpec& spec() const { return spec_; }

 private:
  FlowSpec spec_;
  RngStream rng_;
  double clock_ = 0.0;
  double on_until_ = 0.0;
};

}  // namespace vponsim
