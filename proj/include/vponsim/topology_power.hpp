#pragma once

// Physical tree: one feeder, one logical 1:N splitter, per-ONU drops.
// All times are integer nanoseconds.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "vponsim/error.hpp"
#include "vponsim/ocdma_codes.hpp"

namespace vponsim {

using OnuId = std::uint32_t;
using Nanos = std::int64_t;

inline constexpr double kMaxReachM = 40'000.0;

struct WavelengthPlan {
  double upstream_nm = 1260.0;
  double downstream_nm = 1490.0;

  void validate() const {
    if (!(upstream_nm > 0.0) || !(downstream_nm > 0.0)) throw ValidationError("wavelengths must be positive");
    if (upstream_nm == downstream_nm) throw ValidationError("upstream and downstream wavelengths must differ");
  }
};

struct OnuPlacement {
  OnuId onu_id = 0;
  double drop_m = 0.0;
};

enum class Direction { up, down };

struct Topology {
  double feeder_m = 0.0;
  std::uint32_t split_ratio = 1;
  std::vector<OnuPlacement> onus;
  double propagation_mps = 2.0e8;

  void validate() const {
    if (feeder_m < 0.0) throw ValidationError("feeder length must be >= 0");
    if (split_ratio == 0 || !std::has_single_bit(split_ratio))
      throw ValidationError("split ratio must be a power of two");
    if (!(propagation_mps > 0.0)) throw ValidationError("propagation speed must be positive");
    std::set<OnuId> ids;
    for (const auto& o : onus) {
      if (o.drop_m < 0.0) throw ValidationError("ONU " + std::to_string(o.onu_id) + ": drop length must be >= 0");
      if (feeder_m + o.drop_m > kMaxReachM)
        throw ValidationError("ONU " + std::to_string(o.onu_id) + ": reach exceeds 40 km");
      if (!ids.insert(o.onu_id).second) throw ValidationError("duplicate ONU id " + std::to_string(o.onu_id));
    }
    if (onus.size() > split_ratio) throw ValidationError("more ONUs than splitter ports");
  }

  const OnuPlacement& onu(OnuId id) const {
    auto it = std::find_if(onus.begin(), onus.end(), [id](const auto& o) { return o.onu_id == id; });
    if (it == onus.end()) throw NotFound("unknown ONU " + std::to_string(id));
    return *it;
  }

  double reach_m(OnuId id) const { return feeder_m + onu(id).drop_m; }

  double max_reach_m() const {
    double r = 0.0;
    for (const auto& o : onus) r = std::max(r, feeder_m + o.drop_m);
    return r;
  }
};

struct PowerBudget {
  double tx_power_dbm = 4.0;
  double rx_sensitivity_dbm = -25.0;
  double fiber_loss_db_per_km_up = 0.35;
  double fiber_loss_db_per_km_down = 0.25;
  double splitter_excess_db_per_stage = 0.3;

  double budget_db() const { return tx_power_dbm - rx_sensitivity_dbm; }

  void validate() const {
    if (!(budget_db() > 0.0)) throw ValidationError("power budget (tx - rx sensitivity) must be positive");
  }
};

struct QuietWindowParams {
  double max_reach_m = 20'000.0;
  Nanos t_proc_ns = 50'000;

  void validate() const {
    if (max_reach_m < 0.0 || max_reach_m > kMaxReachM) throw ValidationError("quiet-window reach outside [0, 40 km]");
    if (t_proc_ns < 0) throw ValidationError("t_proc must be >= 0");
  }
};

/// Round trip over `reach_m` metres, rounded to the nearest nanosecond.
inline Nanos round_trip_ns(double reach_m, double propagation_mps = 2.0e8) {
  return std::llround(2.0 * reach_m * 1e9 / propagation_mps);
}

inline Nanos rtt(const Topology& topo, OnuId id) {
  return round_trip_ns(topo.reach_m(id), topo.propagation_mps);
}

// Downstream and upstream legs of a round trip; they always sum to the round trip.
inline Nanos downstream_leg(Nanos round_trip) { return round_trip / 2; }
inline Nanos upstream_leg(Nanos round_trip) { return round_trip - round_trip / 2; }

inline Nanos quiet_window(const QuietWindowParams& params, double propagation_mps = 2.0e8) {
  params.validate();
  return round_trip_ns(params.max_reach_m, propagation_mps) + params.t_proc_ns;
}

inline double path_loss_db(const Topology& topo, const PowerBudget& budget, OnuId id, Direction dir) {
  const double km = topo.reach_m(id) / 1000.0;
  const double coeff = dir == Direction::up ? budget.fiber_loss_db_per_km_up : budget.fiber_loss_db_per_km_down;
  const double n = static_cast<double>(topo.split_ratio);
  return coeff * km + 10.0 * std::log10(n) + budget.splitter_excess_db_per_stage * std::log2(n);
}

/// Feasibility of `pn_count` code channels at the worst upstream path loss.
inline FeasibilityVerdict vpon_feasibility(const Topology& topo, const PowerBudget& budget, std::size_t pn_count,
                                           bool thresholder_enabled, const PenaltyTable& table = {}) {
  if (topo.onus.empty()) throw ValidationError("topology has no ONUs");
  double worst = 0.0;
  for (const auto& o : topo.onus) worst = std::max(worst, path_loss_db(topo, budget, o.onu_id, Direction::up));
  return feasibility_check(budget.budget_db(), worst, pn_count, thresholder_enabled, table);
}

}  // namespace vponsim
