#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace vponsim {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Stream namespaces keep discovery draws apart from traffic draws.
inline constexpr std::uint64_t kTrafficStreams = 0;
inline constexpr std::uint64_t kDiscoveryStreams = 0xD15C0BE7ULL;

/// Deterministic substream keyed on (seed, stream id).
///
/// The engine seed is splitmix64(seed ^ splitmix64(stream_id ^ ns)), so adding
/// or removing a stream never shifts the draws of any other stream. Variates
/// are derived from raw 64-bit outputs here rather than through <random>
/// distributions, whose algorithms differ between standard libraries.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t ns = kTrafficStreams)
      : engine_(splitmix64(seed ^ splitmix64(stream_id ^ (ns << 32)))) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi], rejection-sampled.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi <= lo) return lo;
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  double exponential(double mean) { return -std::log1p(-uniform01()) * mean; }

 private:
  std::mt19937_64 engine_;
};

inline RngStream rng_stream(std::uint64_t seed, std::uint64_t flow_id) { return RngStream(seed, flow_id); }

}  // namespace vponsim
