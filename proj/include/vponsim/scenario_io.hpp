#pragma once

// Scenario JSON reader. Every schema violation surfaces as a ConfigError
// carrying the JSON pointer of the offending value. See docs/scenario_schema.md.

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "vponsim/error.hpp"
#include "vponsim/scenario.hpp"

namespace vponsim {

namespace detail {

using nlohmann::json;

class JsonReader {
 public:
  JsonReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return j_; }
  std::string at_path(const std::string& key) const { return path_ + "/" + key; }

  JsonReader object(const std::string& key) const {
    const auto& v = require(key);
    if (!v.is_object()) throw ConfigError(at_path(key), "expected an object");
    return {v, at_path(key)};
  }
  std::optional<JsonReader> optional_object(const std::string& key) const {
    if (!j_.contains(key)) return std::nullopt;
    return object(key);
  }
  const json& array(const std::string& key) const {
    const auto& v = require(key);
    if (!v.is_array()) throw ConfigError(at_path(key), "expected an array");
    return v;
  }
  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key) const { return as_number(require(key), at_path(key)); }
  double number(const std::string& key, double def) const { return has(key) ? number(key) : def; }

  std::int64_t integer(const std::string& key) const { return as_integer(require(key), at_path(key)); }
  std::int64_t integer(const std::string& key, std::int64_t def) const { return has(key) ? integer(key) : def; }

  std::uint64_t unsigned_integer(const std::string& key) const {
    const auto v = integer(key);
    if (v < 0) throw ConfigError(at_path(key), "must be non-negative");
    return static_cast<std::uint64_t>(v);
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) const {
    return has(key) ? unsigned_integer(key) : def;
  }

  bool boolean(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(at_path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) const {
    const auto& v = require(key);
    if (!v.is_string()) throw ConfigError(at_path(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& def) const { return has(key) ? string(key) : def; }

  // Keys starting with '_' are comments.
  void allow_only(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items())
      if (!k.starts_with('_') && !ok.contains(k)) throw ConfigError(at_path(k), "unknown key");
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path, "must be finite");
    return d;
  }
  static std::int64_t as_integer(const json& v, const std::string& path) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::isfinite(d) && std::floor(d) == d && std::fabs(d) < 9.0e18) return static_cast<std::int64_t>(d);
    }
    throw ConfigError(path, "expected an integer");
  }

 private:
  const json& require(const std::string& key) const {
    if (!j_.contains(key)) throw ConfigError(at_path(key), "required key missing");
    return j_.at(key);
  }

  const json& j_;
  std::string path_;
};

inline DbaConfig parse_dba(const JsonReader& r, const DbaConfig& base) {
  r.allow_only({"policy", "w_max_bytes", "guard_ns"});
  DbaConfig c = base;
  if (r.has("policy")) {
    const auto p = r.string("policy");
    if (p == "limited") c.policy = DbaPolicy::limited;
    else if (p == "gated") c.policy = DbaPolicy::gated;
    else if (p == "fixed") c.policy = DbaPolicy::fixed;
    else throw ConfigError(r.at_path("policy"), "expected limited, gated or fixed");
  }
  c.w_max_bytes = r.integer("w_max_bytes", c.w_max_bytes);
  c.guard_ns = r.integer("guard_ns", c.guard_ns);
  if (c.w_max_bytes <= 0) throw ConfigError(r.at_path("w_max_bytes"), "must be positive");
  if (c.guard_ns < 0) throw ConfigError(r.at_path("guard_ns"), "must be >= 0");
  return c;
}

inline ServiceClass parse_class(const JsonReader& r, const std::string& key) {
  const auto c = r.string(key);
  if (c == "time_critical") return ServiceClass::time_critical;
  if (c == "best_effort") return ServiceClass::best_effort;
  throw ConfigError(r.at_path(key), "expected time_critical or best_effort");
}

inline FlowSpec parse_flow(const JsonReader& r, std::int64_t line_rate_bps) {
  r.allow_only({"flow_id", "onu_id", "class", "arrival", "size", "vpon", "direction"});
  FlowSpec f;
  f.flow_id = r.unsigned_integer("flow_id");
  f.onu_id = static_cast<OnuId>(r.unsigned_integer("onu_id"));
  f.service_class = parse_class(r, "class");
  if (r.has("vpon")) f.vpon_override = r.string("vpon");
  if (r.has("direction")) {
    const auto d = r.string("direction");
    if (d == "up") f.direction = FlowDirection::up;
    else if (d == "down") f.direction = FlowDirection::down;
    else throw ConfigError(r.at_path("direction"), "expected up or down");
  }

  const auto& size = r.raw().contains("size") ? r.raw().at("size") : json();
  const std::string size_path = r.at_path("size");
  if (size.is_null()) throw ConfigError(size_path, "required key missing");
  f.sizes.clear();
  if (size.is_array()) {
    if (size.empty()) throw ConfigError(size_path, "size list is empty");
    for (std::size_t i = 0; i < size.size(); ++i)
      f.sizes.push_back(JsonReader::as_integer(size[i], size_path + "/" + std::to_string(i)));
  } else {
    f.sizes.push_back(JsonReader::as_integer(size, size_path));
  }
  for (std::size_t i = 0; i < f.sizes.size(); ++i)
    if (f.sizes[i] < 64 || f.sizes[i] > 1518)
      throw ConfigError(size.is_array() ? size_path + "/" + std::to_string(i) : size_path, "size outside [64, 1518]");

  const auto a = r.object("arrival");
  const auto type = a.string("type");
  auto positive = [&](const std::string& key, double v) {
    if (!(v > 0.0)) throw ConfigError(a.at_path(key), "must be positive");
    return v;
  };
  if (type == "poisson") {
    a.allow_only({"type", "rate_pps", "load"});
    if (a.has("rate_pps") == a.has("load")) throw ConfigError(a.path(), "give exactly one of rate_pps or load");
    double rate;
    if (a.has("load")) {
      const double load = positive("load", a.number("load"));
      rate = load * static_cast<double>(line_rate_bps) / (8.0 * f.mean_size_bytes());
    } else {
      rate = positive("rate_pps", a.number("rate_pps"));
    }
    f.arrival = PoissonArrivals{rate};
  } else if (type == "cbr") {
    a.allow_only({"type", "period_ns", "rate_pps"});
    if (a.has("period_ns") == a.has("rate_pps")) throw ConfigError(a.path(), "give exactly one of period_ns or rate_pps");
    Nanos period = a.has("period_ns") ? a.integer("period_ns")
                                      : std::llround(1e9 / positive("rate_pps", a.number("rate_pps")));
    if (period <= 0) throw ConfigError(a.at_path(a.has("period_ns") ? "period_ns" : "rate_pps"), "period must be positive");
    f.arrival = CbrArrivals{period};
  } else if (type == "onoff") {
    a.allow_only({"type", "mean_on_ns", "mean_off_ns", "rate_pps"});
    f.arrival = OnOffArrivals{positive("mean_on_ns", a.number("mean_on_ns")),
                              positive("mean_off_ns", a.number("mean_off_ns")),
                              positive("rate_pps", a.number("rate_pps"))};
  } else {
    throw ConfigError(a.at_path("type"), "expected poisson, cbr or onoff");
  }
  return f;
}

}  // namespace detail

/// Parses a scenario document. Only schema checks happen here; call
/// check_scenario() (or load_scenario()) for the cross-field invariants.
inline Scenario parse_scenario(const nlohmann::json& doc) {
  using detail::JsonReader;
  if (!doc.is_object()) throw ConfigError("", "scenario must be a JSON object");
  JsonReader root(doc, "");
  root.allow_only({"name", "seed", "sim_duration_ns", "mode", "line_rate_bps", "topology", "budget", "wavelengths",
                   "codes", "thresholder", "penalties", "vpons", "dba", "discovery", "flows", "exact_latency_limit"});
  Scenario s;
  s.name = root.string("name", s.name);
  s.seed = root.unsigned_integer("seed", s.seed);
  s.sim_duration_ns = root.integer("sim_duration_ns");
  if (s.sim_duration_ns <= 0) throw ConfigError("/sim_duration_ns", "must be positive");
  const auto mode = root.string("mode", "virtual");
  if (mode == "baseline") s.mode = Mode::baseline;
  else if (mode == "virtual") s.mode = Mode::virtual_pon;
  else throw ConfigError("/mode", "expected baseline or virtual");
  s.line_rate_bps = root.integer("line_rate_bps", s.line_rate_bps);
  if (s.line_rate_bps <= 0) throw ConfigError("/line_rate_bps", "must be positive");
  s.exact_latency_limit = root.unsigned_integer("exact_latency_limit", s.exact_latency_limit);

  {
    const auto t = root.object("topology");
    t.allow_only({"feeder_m", "split_ratio", "propagation_mps", "onus"});
    s.topology.feeder_m = t.number("feeder_m");
    if (s.topology.feeder_m < 0) throw ConfigError("/topology/feeder_m", "must be >= 0");
    const auto split = t.integer("split_ratio");
    if (split <= 0 || (split & (split - 1)) != 0) throw ConfigError("/topology/split_ratio", "must be a power of two");
    s.topology.split_ratio = static_cast<std::uint32_t>(split);
    s.topology.propagation_mps = t.number("propagation_mps", s.topology.propagation_mps);
    if (!(s.topology.propagation_mps > 0)) throw ConfigError("/topology/propagation_mps", "must be positive");
    const auto& onus = t.array("onus");
    std::set<OnuId> seen;
    for (std::size_t i = 0; i < onus.size(); ++i) {
      const std::string p = "/topology/onus/" + std::to_string(i);
      if (!onus[i].is_object()) throw ConfigError(p, "expected an object");
      JsonReader o(onus[i], p);
      o.allow_only({"onu_id", "drop_m", "registered_at_start"});
      OnuPlacement pl;
      pl.onu_id = static_cast<OnuId>(o.unsigned_integer("onu_id"));
      pl.drop_m = o.number("drop_m");
      if (pl.drop_m < 0) throw ConfigError(p + "/drop_m", "must be >= 0");
      if (s.topology.feeder_m + pl.drop_m > kMaxReachM) throw ConfigError(p + "/drop_m", "reach exceeds 40 km");
      if (!seen.insert(pl.onu_id).second) throw ConfigError(p + "/onu_id", "duplicate ONU id");
      if (!o.boolean("registered_at_start", true)) s.unregistered_at_start.insert(pl.onu_id);
      s.topology.onus.push_back(pl);
    }
    if (s.topology.onus.empty()) throw ConfigError("/topology/onus", "at least one ONU required");
    if (s.topology.onus.size() > s.topology.split_ratio) throw ConfigError("/topology/onus", "more ONUs than splitter ports");
  }

  {
    const auto b = root.object("budget");
    b.allow_only({"tx_power_dbm", "rx_sensitivity_dbm", "fiber_loss_db_per_km_up", "fiber_loss_db_per_km_down",
                  "splitter_excess_db_per_stage"});
    s.budget.tx_power_dbm = b.number("tx_power_dbm");
    s.budget.rx_sensitivity_dbm = b.number("rx_sensitivity_dbm");
    s.budget.fiber_loss_db_per_km_up = b.number("fiber_loss_db_per_km_up", s.budget.fiber_loss_db_per_km_up);
    s.budget.fiber_loss_db_per_km_down = b.number("fiber_loss_db_per_km_down", s.budget.fiber_loss_db_per_km_down);
    s.budget.splitter_excess_db_per_stage =
        b.number("splitter_excess_db_per_stage", s.budget.splitter_excess_db_per_stage);
    if (!(s.budget.budget_db() > 0)) throw ConfigError("/budget", "tx_power_dbm - rx_sensitivity_dbm must be positive");
  }

  if (auto w = root.optional_object("wavelengths")) {
    w->allow_only({"upstream_nm", "downstream_nm"});
    s.wavelengths.upstream_nm = w->number("upstream_nm", s.wavelengths.upstream_nm);
    s.wavelengths.downstream_nm = w->number("downstream_nm", s.wavelengths.downstream_nm);
    if (!(s.wavelengths.upstream_nm > 0) || !(s.wavelengths.downstream_nm > 0) ||
        s.wavelengths.upstream_nm == s.wavelengths.downstream_nm)
      throw ConfigError("/wavelengths", "wavelengths must be positive and distinct");
  }

  if (auto c = root.optional_object("codes")) {
    c->allow_only({"length", "weight", "lambda", "seed"});
    auto pos = [&](const char* k, std::size_t def) {
      const auto v = c->integer(k, static_cast<std::int64_t>(def));
      if (v <= 0) throw ConfigError(c->at_path(k), "must be positive");
      return static_cast<std::size_t>(v);
    };
    s.codes.length = pos("length", s.codes.length);
    s.codes.weight = pos("weight", s.codes.weight);
    s.codes.lambda = pos("lambda", s.codes.lambda);
    s.codes.seed = c->unsigned_integer("seed", s.codes.seed);
  }

  if (auto t = root.optional_object("thresholder")) {
    t->allow_only({"enabled", "post_penalty_db"});
    s.thresholder_enabled = t->boolean("enabled", false);
    s.penalties.post_thresholder_penalty_db = t->number("post_penalty_db", s.penalties.post_thresholder_penalty_db);
    if (s.penalties.post_thresholder_penalty_db < 0) throw ConfigError("/thresholder/post_penalty_db", "must be >= 0");
  }

  if (root.has("penalties")) {
    const auto p = root.object("penalties");
    p.allow_only({"table", "thresholder_threshold"});
    if (p.has("table")) {
      const auto& tab = p.array("table");
      s.penalties.entries.clear();
      for (std::size_t i = 0; i < tab.size(); ++i) {
        const std::string ip = "/penalties/table/" + std::to_string(i);
        if (!tab[i].is_object()) throw ConfigError(ip, "expected an object");
        JsonReader e(tab[i], ip);
        e.allow_only({"pn_count", "lo_db", "hi_db"});
        const auto k = e.unsigned_integer("pn_count");
        s.penalties.entries[k] = DbInterval{e.number("lo_db"), e.number("hi_db")};
      }
    }
    s.penalties.thresholder_threshold = p.unsigned_integer("thresholder_threshold", s.penalties.thresholder_threshold);
    try {
      s.penalties.validate();
    } catch (const Error& e) {
      throw ConfigError("/penalties", e.what());
    }
  }

  if (auto d = root.optional_object("dba")) s.dba = detail::parse_dba(*d, s.dba);

  if (auto d = root.optional_object("discovery")) {
    d->allow_only({"period_ns", "t_proc_ns", "domain", "max_reach_m"});
    s.discovery.period_ns = d->integer("period_ns", s.discovery.period_ns);
    s.discovery.t_proc_ns = d->integer("t_proc_ns", s.discovery.t_proc_ns);
    s.discovery.domain = d->string("domain", s.discovery.domain);
    if (d->has("max_reach_m")) {
      s.discovery.max_reach_m = d->number("max_reach_m");
      if (*s.discovery.max_reach_m < 0 || *s.discovery.max_reach_m > kMaxReachM)
        throw ConfigError("/discovery/max_reach_m", "must be within [0, 40000]");
    }
    if (s.discovery.period_ns < 0) throw ConfigError("/discovery/period_ns", "must be >= 0");
    if (s.discovery.t_proc_ns < 0) throw ConfigError("/discovery/t_proc_ns", "must be >= 0");
  }

  if (root.has("vpons")) {
    const auto& vp = root.array("vpons");
    for (std::size_t i = 0; i < vp.size(); ++i) {
      const std::string p = "/vpons/" + std::to_string(i);
      if (!vp[i].is_object()) throw ConfigError(p, "expected an object");
      JsonReader v(vp[i], p);
      v.allow_only({"vpon_id", "class", "code_index", "members", "dba"});
      VponSpec spec;
      spec.vpon_id = v.string("vpon_id");
      const auto cls = v.string("class");
      if (cls == "low_latency") spec.vpon_class = VponClass::low_latency;
      else if (cls == "high_latency") spec.vpon_class = VponClass::high_latency;
      else throw ConfigError(p + "/class", "expected low_latency or high_latency");
      spec.code_index = v.unsigned_integer("code_index");
      const auto& members = vp[i].contains("members") ? vp[i].at("members") : nlohmann::json();
      if (members.is_string() && members.get<std::string>() == "all") {
        for (const auto& o : s.topology.onus) spec.members.push_back(o.onu_id);
      } else if (members.is_array()) {
        for (std::size_t m = 0; m < members.size(); ++m) {
          const auto id = JsonReader::as_integer(members[m], p + "/members/" + std::to_string(m));
          if (id < 0) throw ConfigError(p + "/members/" + std::to_string(m), "must be non-negative");
          spec.members.push_back(static_cast<OnuId>(id));
        }
      } else {
        throw ConfigError(p + "/members", "expected an array of ONU ids or \"all\"");
      }
      if (v.has("dba")) spec.dba = detail::parse_dba(v.object("dba"), s.dba);
      s.vpons.push_back(std::move(spec));
    }
  }

  if (root.has("flows")) {
    const auto& fl = root.array("flows");
    for (std::size_t i = 0; i < fl.size(); ++i) {
      const std::string p = "/flows/" + std::to_string(i);
      if (!fl[i].is_object()) throw ConfigError(p, "expected an object");
      s.flows.push_back(detail::parse_flow(JsonReader(fl[i], p), s.line_rate_bps));
    }
  }
  return s;
}

inline Scenario parse_scenario_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return ss.str();
}

/// Reads, parses and validates a scenario for its configured mode.
inline Scenario load_scenario(const std::string& path, bool force = false) {
  Scenario s = parse_scenario_text(read_file(path));
  check_scenario(s, s.mode, force);
  return s;
}

}  // namespace vponsim
