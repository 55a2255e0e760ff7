// vponsim command line: run, compare, sweep, codes.

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vponsim/vponsim.hpp"

namespace {

using namespace vponsim;

enum Exit : int { kOk = 0, kInternal = 1, kIo = 2, kFeasibility = 3, kConfig = 4 };

std::string json_sibling(const std::string& out) {
  std::filesystem::path p(out);
  auto j = p;
  j.replace_extension(".json");
  if (j == p) j += ".json";
  return j.string();
}

int cmd_run(const std::string& config, const std::string& out, bool json, const std::string& trace, bool force) {
  const Scenario s = load_scenario(config, force);
  std::ostringstream trace_buf;
  RunResult r = run(s, {force, trace.empty() ? nullptr : &trace_buf});
  write_atomic(out, results_csv(r));
  if (json) write_atomic(json_sibling(out), results_json(s, r).dump(2) + "\n");
  if (!trace.empty()) write_atomic(trace, trace_buf.str());
  if (r.check.forced) std::cerr << "warning: infeasible configuration forced: " << describe(r.check.feasibility) << '\n';
  return kOk;
}

int cmd_compare(const std::string& config, const std::string& out, bool force) {
  const Scenario s = parse_scenario_text(read_file(config));
  const ComparisonReport rep = compare(s, force);
  write_atomic(out, comparison_csv(rep));
  print_comparison(std::cout, rep);
  return kOk;
}

int cmd_sweep(const std::string& config, const std::string& grid, const std::string& out, bool force) {
  const auto loads = parse_load_grid(grid);
  const Scenario s = load_scenario(config, force);
  write_atomic(out, sweep_csv(sweep(s, loads, force)));
  return kOk;
}

nlohmann::json code_set_json(const CodeSet& cs) {
  nlohmann::json words = nlohmann::json::array();
  for (const auto& c : cs.codewords) words.push_back(c.positions());
  return {{"n", cs.length_chips}, {"w", cs.weight}, {"lambda", cs.lambda_max}, {"codewords", words}};
}

CodeSet code_set_from_json(const nlohmann::json& j) {
  try {
    CodeSet cs;
    cs.length_chips = j.at("n").get<std::size_t>();
    cs.weight = j.at("w").get<std::size_t>();
    cs.lambda_max = j.value("lambda", std::size_t{1});
    for (const auto& w : j.at("codewords")) cs.codewords.emplace_back(cs.length_chips, w.get<std::vector<std::size_t>>());
    return cs;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("", std::string("bad code set: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError("/codewords", e.what());
  }
}

int cmd_codes(std::size_t n, std::size_t w, std::size_t lambda, std::size_t count, std::uint64_t seed,
              const std::string& validate) {
  CodeSet cs;
  if (!validate.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(validate));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    cs = code_set_from_json(j);
  } else {
    cs = generate_ooc(n, w, lambda, count, seed);
  }
  const CodeSetReport rep = validate_code_set(cs);
  nlohmann::json report = {{"max_auto_sidelobe", rep.max_auto_sidelobe},
                           {"max_cross_correlation", rep.max_cross},
                           {"lambda", cs.lambda_max},
                           {"ok", rep.ok}};
  if (cs.lambda_max == 1 && cs.weight >= 2 && cs.length_chips > cs.weight)
    report["johnson_bound"] = johnson_bound(cs.length_chips, cs.weight);
  std::cout << code_set_json(cs).dump() << '\n' << report.dump() << '\n';
  return rep.ok ? kOk : kConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GE-PON / virtual PON discrete-event simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", vponsim::kVersion);

  std::string config, out, trace, grid, validate;
  bool json = false, force = false;
  std::size_t n = 13, w = 3, lambda = 1, count = 2;
  std::uint64_t seed = 1;

  auto* run = app.add_subcommand("run", "simulate one scenario in its configured mode");
  run->add_option("--config", config, "scenario JSON")->required();
  run->add_option("--out", out, "results CSV")->required();
  run->add_flag("--json", json, "also write a JSON mirror next to --out");
  run->add_option("--trace", trace, "MPCP trace file");
  run->add_flag("--force", force, "run even if the power budget is infeasible");

  auto* cmp = app.add_subcommand("compare", "baseline vs virtual with identical traffic");
  cmp->add_option("--config", config, "scenario JSON")->required();
  cmp->add_option("--out", out, "comparison CSV")->required();
  cmp->add_flag("--force", force, "run even if the power budget is infeasible");

  auto* swp = app.add_subcommand("sweep", "scale best-effort load over a grid");
  swp->add_option("--config", config, "scenario JSON")->required();
  swp->add_option("--load", grid, "A:B:STEP within (0, 1]")->required();
  swp->add_option("--out", out, "sweep CSV")->required();
  swp->add_flag("--force", force, "run even if the power budget is infeasible");

  auto* codes = app.add_subcommand("codes", "generate or validate an optical orthogonal code set");
  codes->add_option("--length", n, "chips per codeword");
  codes->add_option("--weight", w, "marks per codeword");
  codes->add_option("--lambda", lambda, "correlation bound");
  codes->add_option("--count", count, "codewords wanted");
  codes->add_option("--seed", seed, "search seed");
  codes->add_option("--validate", validate, "validate a code set JSON instead of generating");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }

  try {
    if (*run) return cmd_run(config, out, json, trace, force);
    if (*cmp) return cmd_compare(config, out, force);
    if (*swp) return cmd_sweep(config, grid, out, force);
    if (*codes) return cmd_codes(n, w, lambda, count, seed, validate);
  } catch (const vponsim::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const vponsim::FeasibilityError& e) {
    std::cerr << "infeasible: " << e.what() << "; use --force to run anyway\n";
    return kFeasibility;
  } catch (const vponsim::ContractViolation& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  } catch (const vponsim::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
  return kInternal;
}
