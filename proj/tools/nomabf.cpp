// SPDX-License-Identifier: Apache-2.0
//
// nomabf command-line tool: solve one instance, run scenario batches,
// run the invariant suites, or dump a conic program for cross-checking.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "nomabf/checks.hpp"
#include "nomabf/experiments.hpp"
#include "nomabf/io.hpp"
#include "nomabf/ipm.hpp"
#include "nomabf/sca.hpp"
#include "nomabf/sdp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nomabf;

namespace {

enum Exit { kOk = 0, kFailed = 1, kInfeasible = 2, kMaxIters = 3, kConfig = 4, kCapability = 5 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string backend;
  std::optional<int> trials;
  std::optional<int> threads;
  int verbose = 0;
};

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("--config", "cannot open '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", "'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << text;
}

int exit_for(StopReason r) {
  switch (r) {
    case StopReason::Converged: return kOk;
    case StopReason::MaxIters: return kMaxIters;
    case StopReason::RestrictionInfeasible: return kInfeasible;
    case StopReason::NumericalFailure: return kFailed;
  }
  return kFailed;
}

json error_json(const std::string& status, const std::string& message, int code) {
  return {{"status", status}, {"message", message}, {"exit_code", code}};
}

// ---------------------------------------------------------------------------

int cmd_solve(const Options& o) {
  const fs::path out = fs::path(o.out) / "result.json";
  json result;
  int code = kOk;
  try {
    if (o.config.empty()) throw ConfigError("--config", "required");
    const json j = read_json(o.config);
    const std::uint64_t seed = o.seed.value_or(j.value("seed", std::uint64_t{1}));
    io::SolveRequest req = io::solve_request_from_json(j, seed);
    const auto backend = make_backend(o.backend.empty() ? j.value("backend", std::string("reference")) : o.backend);
    const HsdPsdBackend psd;
    req.sca.backend = backend.get();
    req.sca.relaxation_backend = &psd;
    const RngStream rng{seed, 1};
    ScaResult res;
    switch (req.variant) {
      case io::Variant::AlphaMin: res = run_alpha(req.instance, req.sca, rng); break;
      case io::Variant::Secure: res = run_secure(req.instance, req.sca, rng); break;
      default: res = run(req.instance, req.sca, rng); break;
    }
    code = exit_for(res.trace.stop_reason);
    result["status"] = stop_reason_name(res.trace.stop_reason);
    result["variant"] = io::variant_name(req.variant);
    result["seed"] = seed;
    result["objective"] = res.solution ? json(res.objective) : json(nullptr);
    result["trace"] = io::trace_to_json(res.trace);
    if (res.solution) {
      const BeamformerSet& w = *res.solution;
      result["total_power_w"] = total_power(w);
      std::vector<double> ant;
      for (int k = 0; k < req.instance.num_antennas(); ++k) ant.push_back(per_antenna_power(w, k));
      result["antenna_powers"] = ant;
      result["beamformers"] = io::beamformers_to_json(w);
      std::vector<double> s;
      for (std::size_t m = 0; m < req.instance.num_users(); ++m) s.push_back(sinr(req.instance, w, m, m));
      result["sinr"] = s;
      if (!req.instance.eavesdroppers.empty()) {
        std::vector<double> leak;
        for (const auto& e : req.instance.eavesdroppers) leak.push_back(eavesdropper_leakage(w, e.channel));
        result["leakage"] = leak;
      }
    }
    result["exit_code"] = code;
    if (o.verbose)
      std::cerr << "solve: " << result["status"].get<std::string>() << ", " << res.trace.iterations()
                << " iterations\n";
  } catch (const ConfigError& e) {
    code = kConfig;
    result = error_json("config_error", e.what(), code);
    result["field"] = e.field;
  } catch (const UnsupportedCone& e) {
    code = kCapability;
    result = error_json("capability_error", e.what(), code);
  }
  try {
    write_text(out, result.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "nomabf: " << e.what() << "\n";
    if (code == kOk) code = kFailed;
  }
  if (code == kConfig || code == kCapability) std::cerr << "nomabf: " << result["message"].get<std::string>() << "\n";
  std::cout << result.value("status", "") << "\n";
  return code;
}

// ---------------------------------------------------------------------------

int cmd_experiment(const Options& o, const std::string& name, bool fig1) {
  ScenarioSpec spec;
  if (!o.config.empty()) {
    if (!name.empty()) throw ConfigError("preset", "give either a preset name or --config, not both");
    spec = scenario_from_json(read_json(o.config));
  } else {
    if (name.empty()) throw ConfigError("preset", "need a preset name or --config");
    spec = preset(name);
  }
  if (o.seed) spec.seed = *o.seed;
  if (o.trials) spec.num_trials = *o.trials;
  if (o.threads) spec.threads = *o.threads;
  if (!o.backend.empty()) spec.backend = o.backend;
  spec.validate();
  const ScenarioResult res = run_scenario(spec);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  emit_csv(res.trials, (dir / (spec.name + ".csv")).string());
  write_text(dir / (spec.name + "_summary.json"), summary_to_json(res).dump(2) + "\n");
  if (fig1) {
    std::string csv = "trial,uncapped_ratio,capped_ratio,uncapped_objective_w,capped_objective_w\n";
    for (const auto& r : fig1_table(spec))
      csv += std::to_string(r.trial) + "," + detail::num(r.uncapped) + "," + detail::num(r.capped) + "," +
             detail::num(r.uncapped_objective) + "," + detail::num(r.capped_objective) + "\n";
    write_text(dir / (spec.name + "_fig1.csv"), csv);
  }
  for (const auto& row : res.summary) {
    std::cout << "K=" << row.point.num_antennas << " M=" << row.point.num_users;
    if (row.point.gamma) std::cout << " gamma=" << *row.point.gamma;
    std::cout << " feasible=" << row.feasible << "/" << row.trials << " mean_w=" << detail::num(row.mean_objective);
    if (row.sdp_solved) std::cout << " median_gap=" << detail::num(row.median_gap);
    std::cout << "\n";
  }
  if (o.verbose) std::cerr << "experiment: " << res.trials.size() << " trials\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_check(const Options& o, const std::string& suite) {
  const std::uint64_t seed = o.seed.value_or(1);
  std::vector<checks::CheckReport> reports;
  const bool all = suite == "all";
  if (all || suite == "eq7") reports.push_back(checks::check_eq7(seed, o.trials.value_or(10000)));
  if (all || suite == "monotone") {
    const auto backend = make_backend(o.backend.empty() ? "reference" : o.backend);
    reports.push_back(checks::check_monotone(seed, o.trials.value_or(100), backend.get()));
  }
  if (all || suite == "tightness") {
    const auto backend = make_backend(o.backend.empty() ? "hsd-psd" : o.backend);
    if (!backend->capability().supports_psd) throw UnsupportedCone("psd (backend " + backend->name() + ")");
    reports.push_back(checks::check_tightness(seed, *backend, o.trials.value_or(50)));
  }
  if (reports.empty()) throw ConfigError("suite", "unknown suite '" + suite + "' (available: eq7, monotone, tightness, all)");
  bool ok = true;
  for (const auto& r : reports) {
    ok = ok && r.passed();
    std::cout << (r.passed() ? "PASS " : "FAIL ") << r.name << ": " << r.cases << " cases, " << r.failures
              << " failures, " << r.skipped << " skipped\n";
    if (o.verbose)
      for (const auto& [k, v] : r.metrics) std::cout << "  " << k << " = " << v << "\n";
    for (const auto& line : r.log) std::cout << "  " << line << "\n";
  }
  return ok ? kOk : kFailed;
}

// ---------------------------------------------------------------------------

int cmd_dump(const Options& o, const std::string& what) {
  if (o.config.empty()) throw ConfigError("--config", "required");
  const json j = read_json(o.config);
  const std::uint64_t seed = o.seed.value_or(j.value("seed", std::uint64_t{1}));
  const io::SolveRequest req = io::solve_request_from_json(j, seed);
  ConicProgram prog;
  if (what == "restriction") {
    const BeamformerSet w0 = initialize(req.instance, req.sca.init_strategy, RngStream{seed, 1}.substream(1000),
                                        req.sca.initial_point);
    prog = req.variant == io::Variant::AlphaMin ? build_alpha_restriction(req.instance, w0, req.sca.denom_guard).program
                                                : build_restriction(req.instance, w0, req.sca.denom_guard).program;
  } else if (what == "sdp") {
    prog = build_sdp(req.instance).program;
  } else {
    throw ConfigError("--program", "expected restriction or sdp");
  }
  const std::string text = to_json(prog).dump(2) + "\n";
  if (o.out == "-") {
    std::cout << text;
  } else {
    const fs::path path = fs::path(o.out) / (what + ".json");
    write_text(path, text);
    std::cout << path.string() << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NOMA downlink beamforming with per-antenna power caps"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON input file");
    sub->add_option("--seed", o.seed, "seed override");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--backend", o.backend, "conic backend (reference, hsd-psd)");
    sub->add_option("--trials", o.trials, "trial / case count override")->check(CLI::PositiveNumber);
    sub->add_flag("-v,--verbose", o.verbose, "progress on stderr");
  };

  auto* solve = app.add_subcommand("solve", "solve one instance with successive SOCP restrictions");
  add_common(solve);

  std::string preset_name;
  bool fig1 = false;
  auto* exp = app.add_subcommand("experiment", "run a preset or a scenario file");
  add_common(exp);
  exp->add_option("preset", preset_name, "example1, example2 or example3");
  exp->add_option("--threads", o.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  exp->add_flag("--fig1", fig1, "also write the antenna-1 power table");

  std::string suite = "all";
  auto* check = app.add_subcommand("check", "run the invariant suites");
  add_common(check);
  check->add_option("suite", suite, "eq7, monotone, tightness or all")->capture_default_str();

  std::string what = "restriction";
  auto* dump = app.add_subcommand("dump", "write a conic program as JSON ('--out -' for stdout)");
  add_common(dump);
  dump->add_option("--program", what, "restriction (at the initial point) or sdp")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (solve->parsed()) return cmd_solve(o);
    if (exp->parsed()) return cmd_experiment(o, preset_name, fig1);
    if (check->parsed()) return cmd_check(o, suite);
    if (dump->parsed()) return cmd_dump(o, what);
  } catch (const ConfigError& e) {
    std::cerr << "nomabf: config error: " << e.what() << "\n";
    return kConfig;
  } catch (const UnsupportedCone& e) {
    std::cerr << "nomabf: " << e.what() << "\n";
    return kCapability;
  } catch (const std::exception& e) {
    std::cerr << "nomabf: " << e.what() << "\n";
    return kFailed;
  }
  return kFailed;
}
