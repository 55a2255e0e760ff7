#pragma once

// Optical orthogonal codes: construction, exhaustive correlation checks,
// a chip-synchronous MAI error model and the measured power-penalty table
// that gates how many code-separated private networks a PON budget can carry.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vponsim/error.hpp"

namespace vponsim {

/// A binary chip sequence of length `n` stored as its set of 1-chip positions.
class Codeword {
 public:
  Codeword(std::size_t length_chips, std::vector<std::size_t> positions)
      : length_(length_chips), positions_(std::move(positions)) {
    if (length_ == 0) throw ValidationError("codeword length must be positive");
    if (positions_.empty()) throw ValidationError("codeword weight must be at least 1");
    std::sort(positions_.begin(), positions_.end());
    if (std::adjacent_find(positions_.begin(), positions_.end()) != positions_.end())
      throw ValidationError("codeword positions must be distinct");
    if (positions_.back() >= length_)
      throw ValidationError("codeword position " + std::to_string(positions_.back()) +
                            " outside [0, " + std::to_string(length_) + ")");
  }

  std::size_t length() const noexcept { return length_; }
  std::size_t weight() const noexcept { return positions_.size(); }
  const std::vector<std::size_t>& positions() const noexcept { return positions_; }

  bool contains(std::size_t chip) const {
    return std::binary_search(positions_.begin(), positions_.end(), chip);
  }

  friend bool operator==(const Codeword&, const Codeword&) = default;

 private:
  std::size_t length_;
  std::vector<std::size_t> positions_;
};

struct CodeSet {
  std::size_t length_chips = 0;
  std::size_t weight = 0;
  std::size_t lambda_max = 1;
  std::vector<Codeword> codewords;
};

struct CodeSetReport {
  std::size_t max_auto_sidelobe = 0;
  std::size_t max_cross = 0;
  bool ok = false;
};

/// Periodic correlation: |{t in a : (t + shift) mod n in b}|.
inline std::size_t cross_correlation(const Codeword& a, const Codeword& b, std::int64_t shift) {
  if (a.length() != b.length())
    throw ValidationError("correlation of codewords with different lengths (" +
                          std::to_string(a.length()) + " vs " + std::to_string(b.length()) + ")");
  const auto n = static_cast<std::int64_t>(a.length());
  const auto s = static_cast<std::size_t>(((shift % n) + n) % n);
  std::size_t hits = 0;
  for (auto t : a.positions())
    if (b.contains((t + s) % a.length())) ++hits;
  return hits;
}

inline std::size_t max_auto_sidelobe(const Codeword& c) {
  std::size_t worst = 0;
  for (std::size_t s = 1; s < c.length(); ++s)
    worst = std::max(worst, cross_correlation(c, c, static_cast<std::int64_t>(s)));
  return worst;
}

inline std::size_t max_cross_correlation(const Codeword& a, const Codeword& b) {
  std::size_t worst = 0;
  for (std::size_t s = 0; s < a.length(); ++s)
    worst = std::max(worst, cross_correlation(a, b, static_cast<std::int64_t>(s)));
  return worst;
}

/// Exhaustive scan over every shift of every codeword and every pair.
inline CodeSetReport validate_code_set(const CodeSet& cs) {
  if (cs.codewords.empty()) throw ValidationError("code set is empty");
  for (std::size_t i = 0; i < cs.codewords.size(); ++i) {
    const auto& c = cs.codewords[i];
    if (c.length() != cs.length_chips || c.weight() != cs.weight)
      throw ValidationError("codeword " + std::to_string(i) + " has (n, w) = (" +
                            std::to_string(c.length()) + ", " + std::to_string(c.weight()) +
                            "), set declares (" + std::to_string(cs.length_chips) + ", " +
                            std::to_string(cs.weight) + ")");
  }
  CodeSetReport report;
  for (std::size_t i = 0; i < cs.codewords.size(); ++i) {
    report.max_auto_sidelobe = std::max(report.max_auto_sidelobe, max_auto_sidelobe(cs.codewords[i]));
    for (std::size_t j = i + 1; j < cs.codewords.size(); ++j)
      report.max_cross =
          std::max(report.max_cross, max_cross_correlation(cs.codewords[i], cs.codewords[j]));
  }
  report.ok = report.max_auto_sidelobe <= cs.lambda_max && report.max_cross <= cs.lambda_max;
  return report;
}

/// Upper bound on the size of an (n, w, 1) optical orthogonal code.
inline std::size_t johnson_bound(std::size_t n, std::size_t w, std::size_t lambda = 1) {
  if (lambda != 1) throw UnsupportedParameters("johnson_bound supports lambda = 1 only");
  if (w < 2) throw UnsupportedParameters("johnson_bound requires weight >= 2");
  if (n <= w) throw UnsupportedParameters("johnson_bound requires length > weight");
  return (n - 1) / (w * (w - 1));
}

namespace detail {

// Candidate enumeration is capped so that a typo'd (n, w) cannot exhaust memory.
inline constexpr std::size_t kMaxCandidates = 2'000'000;
inline constexpr std::size_t kMaxSearchSteps = 20'000'000;

inline std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * static_cast<long double>(n - k + i) / static_cast<long double>(i);
    if (r > static_cast<long double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(std::llround(r));
}

// All weight-w subsets of [0, n) that contain chip 0, in lexicographic order.
inline std::vector<std::vector<std::size_t>> candidates_with_origin(std::size_t n, std::size_t w) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur{0};
  auto rec = [&](auto&& self, std::size_t next) -> void {
    if (cur.size() == w) {
      out.push_back(cur);
      return;
    }
    for (std::size_t p = next; p + (w - cur.size()) <= n; ++p) {
      cur.push_back(p);
      self(self, p + 1);
      cur.pop_back();
    }
  };
  rec(rec, 1);
  return out;
}

// Ordered cyclic differences (p_i - p_j) mod n for i != j.
inline std::vector<std::size_t> cyclic_differences(const std::vector<std::size_t>& pos, std::size_t n) {
  std::vector<std::size_t> d;
  d.reserve(pos.size() * (pos.size() - 1));
  for (auto a : pos)
    for (auto b : pos)
      if (a != b) d.push_back((a + n - b) % n);
  return d;
}

}  // namespace detail

/// Builds an (n, w, lambda) code set of exactly `target_count` codewords.
///
/// Candidates containing chip 0 are visited in seeded-shuffled lexicographic
/// order. For lambda = 1 a candidate is accepted when its cyclic differences
/// are pairwise distinct and unused so far; for lambda > 1 when the grown set
/// still validates. The first path tried is the plain greedy packing; the
/// search backtracks only when greedy dead-ends, so any size reachable at all
/// is found.
inline CodeSet generate_ooc(std::size_t n, std::size_t w, std::size_t lambda,
                            std::size_t target_count, std::uint64_t seed) {
  if (target_count == 0) throw UnsupportedParameters("target_count must be at least 1");
  if (w == 0 || n < w) throw UnsupportedParameters("need 1 <= weight <= length");
  if (lambda == 0) throw UnsupportedParameters("lambda must be at least 1");

  CodeSet out{n, w, lambda, {}};
  std::size_t goal = target_count;
  if (lambda == 1 && w >= 2 && n > w) goal = std::min(goal, johnson_bound(n, w));

  if (detail::binomial_capped(n - 1, w - 1, detail::kMaxCandidates) > detail::kMaxCandidates)
    throw UnsupportedParameters("(n, w) = (" + std::to_string(n) + ", " + std::to_string(w) +
                                ") has too many candidate codewords to search");
  auto cands = detail::candidates_with_origin(n, w);
  std::mt19937_64 rng(seed);
  std::shuffle(cands.begin(), cands.end(), rng);

  std::vector<std::size_t> chosen;
  std::vector<std::size_t> best;
  std::vector<char> used(n, 0);
  std::size_t steps = 0;
  bool exhausted_budget = false;

  auto admissible = [&](const std::vector<std::size_t>& pos) {
    if (lambda == 1) {
      auto d = detail::cyclic_differences(pos, n);
      std::vector<char> seen(n, 0);
      for (auto x : d) {
        if (used[x] || seen[x]) return false;
        seen[x] = 1;
      }
      return true;
    }
    Codeword cand(n, pos);
    if (max_auto_sidelobe(cand) > lambda) return false;
    for (auto idx : chosen)
      if (max_cross_correlation(Codeword(n, cands[idx]), cand) > lambda) return false;
    return true;
  };
  auto mark = [&](const std::vector<std::size_t>& pos, char v) {
    if (lambda != 1) return;
    for (auto x : detail::cyclic_differences(pos, n)) used[x] = v;
  };

  auto search = [&](auto&& self, std::size_t from) -> bool {
    if (chosen.size() > best.size()) best = chosen;
    if (chosen.size() == goal) return true;
    for (std::size_t i = from; i < cands.size(); ++i) {
      if (++steps > detail::kMaxSearchSteps) {
        exhausted_budget = true;
        return false;
      }
      if (cands.size() - i < goal - chosen.size()) return false;
      if (!admissible(cands[i])) continue;
      chosen.push_back(i);
      mark(cands[i], 1);
      if (self(self, i + 1)) return true;
      mark(cands[i], 0);
      chosen.pop_back();
      if (exhausted_budget) return false;
    }
    return false;
  };

  const bool found = search(search, 0);
  if (!found || goal < target_count) throw CapacityExceeded(best.size(), target_count);
  for (auto idx : chosen) out.codewords.emplace_back(n, cands[idx]);
  return out;
}

/// Chip-synchronous hit model: each interferer hits a given mark chip with
/// probability q = w^2 / (2n); a zero is misread once at least `threshold`
/// hits accumulate.
inline double mai_ber(std::size_t n, std::size_t w, std::size_t active_users,
                      std::optional<std::size_t> threshold = std::nullopt) {
  if (active_users == 0) throw UnsupportedParameters("active user count must be at least 1");
  if (w == 0) throw UnsupportedParameters("weight must be at least 1");
  if (n < 2 * w) throw UnsupportedParameters("hit model needs n >= 2w");
  const std::size_t th = threshold.value_or(w);
  const std::size_t interferers = active_users - 1;
  if (interferers < th) return 0.0;
  const double q = static_cast<double>(w * w) / (2.0 * static_cast<double>(n));
  double sum = 0.0;
  for (std::size_t i = th; i <= interferers; ++i) {
    const double log_binom = std::lgamma(static_cast<double>(interferers) + 1) -
                             std::lgamma(static_cast<double>(i) + 1) -
                             std::lgamma(static_cast<double>(interferers - i) + 1);
    sum += std::exp(log_binom) * std::pow(q, static_cast<double>(i)) *
           std::pow(1.0 - q, static_cast<double>(interferers - i));
  }
  return std::clamp(0.5 * sum, 0.0, 0.5);
}

struct DbInterval {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const DbInterval&, const DbInterval&) = default;
};

struct RequiresThresholder {
  std::size_t pn_count = 0;
  friend bool operator==(const RequiresThresholder&, const RequiresThresholder&) = default;
};

using PenaltyLookup = std::variant<DbInterval, RequiresThresholder>;

/// Measured MAI power penalties at BER 1e-9, indexed by private-network count.
struct PenaltyTable {
  std::map<std::size_t, DbInterval> entries{{1, {0.0, 0.0}}, {2, {4.0, 5.0}}, {3, {8.0, 10.0}}};
  std::size_t thresholder_threshold = 3;
  // Flat penalty assumed once a thresholder is fitted. Not a measured value.
  double post_thresholder_penalty_db = 5.0;

  void validate() const {
    if (entries.empty() || !entries.contains(1)) throw ValidationError("penalty table needs an entry for 1 PN");
    double prev_lo = -1e300, prev_hi = -1e300;
    for (const auto& [k, iv] : entries) {
      if (iv.lo > iv.hi) throw ValidationError("penalty interval for " + std::to_string(k) + " PNs has lo > hi");
      if (iv.lo < prev_lo || iv.hi < prev_hi)
        throw ValidationError("penalty table is not monotone at " + std::to_string(k) + " PNs");
      prev_lo = iv.lo;
      prev_hi = iv.hi;
    }
  }
};

inline PenaltyLookup penalty_interval(std::size_t pn_count, const PenaltyTable& table = {}) {
  if (pn_count == 0) throw ValidationError("PN count must be at least 1");
  if (pn_count > table.thresholder_threshold) return RequiresThresholder{pn_count};
  auto it = table.entries.find(pn_count);
  if (it == table.entries.end())
    throw ValidationError("penalty table has no entry for " + std::to_string(pn_count) + " PNs");
  return it->second;
}

struct Feasible {
  double margin_db = 0.0;
};
struct ThresholderFeasible {
  double margin_db = 0.0;  // margin with the thresholder enabled
};
struct Infeasible {
  double deficit_db = 0.0;
  bool thresholder_required = false;
};

using FeasibilityVerdict = std::variant<Feasible, ThresholderFeasible, Infeasible>;

inline bool is_feasible(const FeasibilityVerdict& v) { return !std::holds_alternative<Infeasible>(v); }

inline std::string describe(const FeasibilityVerdict& v) {
  char buf[96];
  if (auto* f = std::get_if<Feasible>(&v)) {
    std::snprintf(buf, sizeof buf, "feasible (margin %.3f dB)", f->margin_db);
  } else if (auto* t = std::get_if<ThresholderFeasible>(&v)) {
    std::snprintf(buf, sizeof buf, "requires thresholder (margin %.3f dB with thresholder)", t->margin_db);
  } else {
    const auto& i = std::get<Infeasible>(v);
    std::snprintf(buf, sizeof buf, "infeasible (deficit %.3f dB%s)", i.deficit_db,
                  i.thresholder_required ? ", thresholder required" : "");
  }
  return buf;
}

/// Margin against the worst-case penalty for `pn_count` code channels.
inline FeasibilityVerdict feasibility_check(double budget_db, double topology_losses_db,
                                            std::size_t pn_count, bool thresholder_enabled,
                                            const PenaltyTable& table = {}) {
  const auto penalty = penalty_interval(pn_count, table);
  if (const auto* iv = std::get_if<DbInterval>(&penalty)) {
    const double margin = budget_db - topology_losses_db - iv->hi;
    if (margin >= 0.0) return Feasible{margin};
    return Infeasible{-margin, false};
  }
  const double margin = budget_db - topology_losses_db - table.post_thresholder_penalty_db;
  if (thresholder_enabled) {
    if (margin >= 0.0) return ThresholderFeasible{margin};
    return Infeasible{-margin, true};
  }
  return Infeasible{std::max(0.0, -margin), true};
}

}  // namespace vponsim
