// SPDX-License-Identifier: Apache-2.0
//
// nomabf: NOMA downlink beamforming with per-antenna power constraints
// Copyright (C) 2026 The nomabf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "nomabf/channel.hpp"
#include "nomabf/io.hpp"
#include "nomabf/ipm.hpp"
#include "nomabf/problem.hpp"
#include "nomabf/sca.hpp"
#include "nomabf/sdp.hpp"

namespace nomabf {

/// 10 log10(P / noise).
inline double power_db(double watts, double noise_watts = 1.0) { return 10.0 * std::log10(watts / noise_watts); }

enum class CapRule { None, Fixed, FromAlpha };

inline const char* cap_rule_name(CapRule r) {
  switch (r) {
    case CapRule::None: return "none";
    case CapRule::Fixed: return "fixed";
    case CapRule::FromAlpha: return "from-alpha";
  }
  return "?";
}

struct EavesdropperSpec {
  UserGeometry geometry;
  double max_leakage = 0.0;
};

/// One Monte-Carlo scenario, possibly swept over antenna counts, served-user
/// prefixes and a common SINR target.
///
/// Cap rules: Fixed uses cap_watts on every antenna. FromAlpha first solves
/// the min-max problem with base caps cap_watts, then runs the power-min
/// solve with caps alpha* cap_watts (1 + cap_margin), starting from the
/// min-max solution.
struct ScenarioSpec {
  static constexpr int kSchemaVersion = 1;

  std::string name = "custom";
  int num_antennas = 8;
  double spacing_over_wavelength = 0.5;
  std::vector<UserGeometry> users;
  double noise_power = 1.0;
  std::vector<double> sinr_targets;  // per user, in the order of `users`
  CapRule cap_rule = CapRule::Fixed;
  double cap_watts = 1.0;
  double cap_margin = 0.0;
  io::Variant variant = io::Variant::PowerMin;
  bool run_sca = true;
  bool run_sdp = false;
  int num_trials = 100;
  int sdp_trials = -1;  // < 0: SDP on every trial
  std::uint64_t seed = 1;
  std::vector<int> antenna_values;
  std::vector<std::size_t> user_counts;
  std::vector<double> gamma_values;
  std::vector<EavesdropperSpec> eavesdroppers;
  ScaConfig sca;
  std::string backend = "reference";
  std::string sdp_backend = "hsd-psd";
  int threads = 1;

  std::vector<int> antenna_axis() const { return antenna_values.empty() ? std::vector<int>{num_antennas} : antenna_values; }
  std::vector<std::size_t> user_axis() const {
    return user_counts.empty() ? std::vector<std::size_t>{users.size()} : user_counts;
  }

  void validate() const {
    if (users.empty()) throw ConfigError("users", "need at least one user");
    if (num_trials < 1) throw ConfigError("num_trials", "must be >= 1");
    if (gamma_values.empty() && sinr_targets.size() != users.size() && sinr_targets.size() != 1)
      throw ConfigError("sinr_targets", "need one target per user (or one common value)");
    for (double g : sinr_targets)
      if (!(g > 0.0)) throw ConfigError("sinr_targets", "targets must be > 0");
    for (double g : gamma_values)
      if (!(g > 0.0)) throw ConfigError("gamma_values", "targets must be > 0");
    for (int k : antenna_axis())
      if (k < 1) throw ConfigError("antenna_values", "antenna counts must be >= 1");
    for (std::size_t m : user_axis())
      if (m < 1 || m > users.size()) throw ConfigError("user_counts", "counts must lie in [1, number of users]");
    if (cap_rule != CapRule::None && !(cap_watts > 0.0)) throw ConfigError("cap_watts", "must be > 0");
    if (!(cap_margin >= 0.0)) throw ConfigError("cap_margin", "must be >= 0");
    if (variant == io::Variant::AlphaMin && cap_rule == CapRule::None)
      throw ConfigError("cap_rule", "alpha-min needs caps");
    if (variant == io::Variant::Secure && eavesdroppers.empty())
      throw ConfigError("eavesdroppers", "secure needs at least one eavesdropper");
    if (!run_sca) throw ConfigError("solvers", "the SCA solver is always run");
    if (threads < 0) throw ConfigError("threads", "must be >= 0");
    try {
      sca.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("solver", e.what());
    }
  }
};

struct SweepPoint {
  int num_antennas = 0;
  std::size_t num_users = 0;
  std::optional<double> gamma;  // common target; empty: per-user targets
};

inline std::vector<SweepPoint> sweep_points(const ScenarioSpec& spec) {
  std::vector<SweepPoint> pts;
  for (int k : spec.antenna_axis())
    for (std::size_t m : spec.user_axis()) {
      if (spec.gamma_values.empty())
        pts.push_back({k, m, std::nullopt});
      else
        for (double g : spec.gamma_values) pts.push_back({k, m, g});
    }
  return pts;
}

struct TrialResult {
  std::string scenario;
  std::size_t point = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  int num_antennas = 0;
  std::size_t num_users = 0;
  double gamma = std::numeric_limits<double>::quiet_NaN();
  io::Variant variant = io::Variant::PowerMin;
  std::string status;
  bool feasible = false;
  double objective = std::numeric_limits<double>::quiet_NaN();  // watts (alpha for alpha-min)
  double alpha = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> caps;
  std::vector<double> antenna_powers;
  int iterations = 0;
  int restarts = 0;
  bool monotone = true;
  bool iterates_feasible = true;
  std::vector<double> trace;
  std::string sdp_status;
  double sdp_objective = std::numeric_limits<double>::quiet_NaN();
  double gap = std::numeric_limits<double>::quiet_NaN();  // (sca - sdp) / sdp
  std::vector<double> rank_ratios;
  std::optional<TightnessReport> tightness;
  std::optional<BeamformerSet> solution;
  double wall_time_s = 0.0;
};

struct SummaryRow {
  SweepPoint point;
  int trials = 0;
  int feasible = 0;
  double feasibility_rate = 0.0;
  double mean_objective = std::numeric_limits<double>::quiet_NaN();
  double median_objective = std::numeric_limits<double>::quiet_NaN();
  double mean_iterations = std::numeric_limits<double>::quiet_NaN();
  int sdp_solved = 0;
  double mean_gap = std::numeric_limits<double>::quiet_NaN();
  double median_gap = std::numeric_limits<double>::quiet_NaN();
};

struct ScenarioResult {
  ScenarioSpec spec;
  std::vector<SweepPoint> points;
  std::vector<TrialResult> trials;  // ordered by (point, trial)
  std::vector<SummaryRow> summary;
  double wall_time_s = 0.0;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Instance for one point of one trial. Users are the first M of the
/// spec's list; each user's draw depends only on (seed, trial, user).
inline BeamformingInstance trial_instance(const ScenarioSpec& spec, const SweepPoint& pt, const RngStream& rng) {
  const std::vector<UserGeometry> geoms(spec.users.begin(),
                                        spec.users.begin() + static_cast<std::ptrdiff_t>(pt.num_users));
  const UlaConfig ula{pt.num_antennas, spec.spacing_over_wavelength};
  BeamformingInstance inst;
  inst.channel = draw_realization(geoms, ula, spec.noise_power, rng);
  for (std::size_t pos = 0; pos < pt.num_users; ++pos) {
    const std::size_t u = inst.channel.decode_order[pos];
    inst.sinr_targets.push_back(pt.gamma ? *pt.gamma
                                         : spec.sinr_targets.size() == 1 ? spec.sinr_targets.front()
                                                                         : spec.sinr_targets[u]);
  }
  if (spec.cap_rule != CapRule::None && spec.variant != io::Variant::CapsOff)
    inst.per_antenna_caps = std::vector<double>(static_cast<std::size_t>(pt.num_antennas), spec.cap_watts);
  for (std::size_t r = 0; r < spec.eavesdroppers.size(); ++r) {
    const auto& e = spec.eavesdroppers[r];
    inst.eavesdroppers.push_back({draw_rician_channel(e.geometry, ula, rng.substream(500 + r)), e.max_leakage});
  }
  return inst;
}

inline void record_sca(TrialResult& tr, const ScaResult& res) {
  tr.iterations += res.trace.iterations();
  tr.restarts += res.trace.restarts_used;
  tr.monotone = tr.monotone && res.trace.monotone;
  for (bool ok : res.trace.iterate_feasible) tr.iterates_feasible = tr.iterates_feasible && ok;
  tr.trace = res.trace.values;
  tr.status = stop_reason_name(res.trace.stop_reason);
}

inline TrialResult run_trial(const ScenarioSpec& spec, const SweepPoint& pt, std::size_t point_index, int trial,
                             const ConicBackend& socp, const ConicBackend* psd) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialResult tr;
  tr.scenario = spec.name;
  tr.point = point_index;
  tr.trial = trial;
  tr.seed = spec.seed;
  tr.num_antennas = pt.num_antennas;
  tr.num_users = pt.num_users;
  if (pt.gamma) tr.gamma = *pt.gamma;
  tr.variant = spec.variant;

  const RngStream rng{spec.seed, static_cast<std::uint64_t>(trial)};
  BeamformingInstance inst = trial_instance(spec, pt, rng);
  ScaConfig cfg = spec.sca;
  cfg.backend = &socp;
  const RngStream sca_rng = rng.substream(900);

  ScaResult res;
  if (spec.variant == io::Variant::AlphaMin || (spec.cap_rule == CapRule::FromAlpha && inst.per_antenna_caps)) {
    const ScaResult a = run_alpha(inst, cfg, sca_rng);
    record_sca(tr, a);
    if (!a.solution) {
      tr.status = std::string("alpha_") + tr.status;
      tr.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return tr;
    }
    tr.alpha = a.objective;
    if (spec.variant == io::Variant::AlphaMin) {
      res = a;
      for (double& p : *inst.per_antenna_caps) p *= a.objective;
    } else {
      for (double& p : *inst.per_antenna_caps) p *= a.objective * (1.0 + spec.cap_margin);
      cfg.init_strategy = InitStrategy::UserProvided;
      cfg.initial_point = *a.solution;
    }
  }
  if (spec.variant != io::Variant::AlphaMin) {
    res = spec.variant == io::Variant::Secure ? run_secure(inst, cfg, sca_rng) : run(inst, cfg, sca_rng);
    record_sca(tr, res);
  }
  if (inst.per_antenna_caps) tr.caps = *inst.per_antenna_caps;
  if (res.solution) {
    tr.solution = res.solution;
    tr.feasible = check_feasibility(inst, *res.solution, cfg.feasibility_tol).feasible;
    if (tr.feasible) tr.objective = res.objective;
    for (int k = 0; k < inst.num_antennas(); ++k) tr.antenna_powers.push_back(per_antenna_power(*res.solution, k));
  }

  const bool sdp_here = spec.run_sdp && spec.variant != io::Variant::AlphaMin &&
                        (spec.sdp_trials < 0 || trial < spec.sdp_trials);
  if (sdp_here) {
    if (!psd) throw UnsupportedCone("psd");
    const SdpSolution sdp = solve_sdp(inst, *psd);
    tr.sdp_status = status_name(sdp.status);
    if (sdp.status == SolveStatus::Optimal) {
      tr.sdp_objective = sdp.objective;
      if (tr.feasible) tr.gap = (tr.objective - sdp.objective) / sdp.objective;
      tr.rank_ratios = extract_rank_one(sdp).ratios;
      if (inst.num_users() == 2) tr.tightness = check_tightness_two_user(inst, sdp);
    }
  }
  tr.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return tr;
}

/// Runs job(i) for i in [0, n) on `threads` workers (0: hardware count).
template <class F>
void parallel_for(std::size_t n, int threads, F&& job) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

inline std::vector<SummaryRow> summarize(const std::vector<SweepPoint>& points, const std::vector<TrialResult>& trials) {
  std::vector<SummaryRow> rows(points.size());
  std::vector<std::vector<double>> obj(points.size()), iters(points.size()), gaps(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) rows[p].point = points[p];
  for (const auto& t : trials) {
    SummaryRow& r = rows[t.point];
    ++r.trials;
    if (t.feasible) {
      ++r.feasible;
      obj[t.point].push_back(t.objective);
      iters[t.point].push_back(t.iterations);
    }
    if (!std::isnan(t.sdp_objective)) ++r.sdp_solved;
    if (!std::isnan(t.gap)) gaps[t.point].push_back(t.gap);
  }
  for (std::size_t p = 0; p < points.size(); ++p) {
    SummaryRow& r = rows[p];
    r.feasibility_rate = r.trials ? static_cast<double>(r.feasible) / r.trials : 0.0;
    r.mean_objective = detail::mean(obj[p]);
    r.median_objective = detail::median(obj[p]);
    r.mean_iterations = detail::mean(iters[p]);
    r.mean_gap = detail::mean(gaps[p]);
    r.median_gap = detail::median(gaps[p]);
  }
  return rows;
}

/// Runs every (point, trial) pair. Results do not depend on `spec.threads`.
/// Per-trial failures are recorded in `status`; the batch never aborts,
/// except that a missing PSD backend for an SDP leg throws UnsupportedCone.
inline ScenarioResult run_scenario(const ScenarioSpec& spec) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const auto socp = make_backend(spec.backend);
  std::unique_ptr<ConicBackend> psd;
  if (spec.run_sdp) {
    psd = make_backend(spec.sdp_backend);
    if (!psd->capability().supports_psd) throw UnsupportedCone("psd (backend '" + spec.sdp_backend + "')");
  }
  ScenarioResult out;
  out.spec = spec;
  out.points = sweep_points(spec);
  const std::size_t per = static_cast<std::size_t>(spec.num_trials);
  out.trials.resize(out.points.size() * per);
  detail::parallel_for(out.trials.size(), spec.threads, [&](std::size_t i) {
    const std::size_t p = i / per;
    const int trial = static_cast<int>(i % per);
    try {
      out.trials[i] = detail::run_trial(spec, out.points[p], p, trial, *socp, psd.get());
    } catch (const std::exception& e) {
      TrialResult tr;
      tr.scenario = spec.name;
      tr.point = p;
      tr.trial = trial;
      tr.seed = spec.seed;
      tr.num_antennas = out.points[p].num_antennas;
      tr.num_users = out.points[p].num_users;
      if (out.points[p].gamma) tr.gamma = *out.points[p].gamma;
      tr.variant = spec.variant;
      tr.status = std::string("error: ") + e.what();
      out.trials[i] = tr;
    }
  });
  out.summary = summarize(out.points, out.trials);
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---------------------------------------------------------------------------
// Figure-level helpers

struct Fig1Row {
  int trial = 0;
  double uncapped = std::numeric_limits<double>::quiet_NaN();  // antenna-1 power / P_1, caps dropped
  double capped = std::numeric_limits<double>::quiet_NaN();    // antenna-1 power / P_1, caps kept
  double uncapped_objective = std::numeric_limits<double>::quiet_NaN();
  double capped_objective = std::numeric_limits<double>::quiet_NaN();
};

/// Antenna-1 power over P_1 per trial, with and without the caps, on the
/// same draws. Only the spec's first sweep point is used.
inline std::vector<Fig1Row> fig1_table(ScenarioSpec spec) {
  spec.antenna_values.clear();
  spec.user_counts.clear();
  spec.gamma_values.clear();
  spec.cap_rule = CapRule::Fixed;
  spec.variant = io::Variant::CapsOff;
  const ScenarioResult off = run_scenario(spec);
  spec.variant = io::Variant::PowerMin;
  const ScenarioResult on = run_scenario(spec);
  std::vector<Fig1Row> rows;
  for (int t = 0; t < spec.num_trials; ++t) {
    Fig1Row r;
    r.trial = t;
    const auto& a = off.trials[static_cast<std::size_t>(t)];
    const auto& b = on.trials[static_cast<std::size_t>(t)];
    if (a.feasible) {
      r.uncapped = a.antenna_powers[0] / spec.cap_watts;
      r.uncapped_objective = a.objective;
    }
    if (b.feasible) {
      r.capped = b.antenna_powers[0] / spec.cap_watts;
      r.capped_objective = b.objective;
    }
    rows.push_back(r);
  }
  return rows;
}

struct TrendCheck {
  int pairs = 0;
  int violations = 0;
  std::vector<std::string> log;

  double violation_rate() const { return pairs ? static_cast<double>(violations) / pairs : 0.0; }
};

enum class TrendAxis { Antennas, Users };

/// Paired comparison between neighbouring points of one axis (same trial,
/// other coordinates equal). Antennas: objective should not increase with K.
/// Users: objective should not decrease with M. Both feasible required.
inline TrendCheck paired_trend(const ScenarioResult& res, TrendAxis axis, double rel_tol = 1e-6) {
  using Key = std::tuple<int, std::size_t, double, int>;  // the fixed coordinates + trial
  std::map<Key, std::vector<const TrialResult*>> groups;
  for (const auto& t : res.trials) {
    const double g = std::isnan(t.gamma) ? -1.0 : t.gamma;
    const Key key = axis == TrendAxis::Antennas ? Key{0, t.num_users, g, t.trial} : Key{t.num_antennas, 0, g, t.trial};
    groups[key].push_back(&t);
  }
  TrendCheck out;
  for (auto& [key, v] : groups) {
    std::sort(v.begin(), v.end(), [&](const TrialResult* a, const TrialResult* b) {
      return axis == TrendAxis::Antennas ? a->num_antennas < b->num_antennas : a->num_users < b->num_users;
    });
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      const TrialResult& a = *v[i];
      const TrialResult& b = *v[i + 1];
      if (!a.feasible || !b.feasible) continue;
      ++out.pairs;
      const double tol = rel_tol * std::max(1.0, a.objective);
      const bool bad = axis == TrendAxis::Antennas ? b.objective > a.objective + tol : b.objective < a.objective - tol;
      if (bad) {
        ++out.violations;
        char buf[200];
        std::snprintf(buf, sizeof buf, "trial %d: K=%d M=%zu -> %.6g W, K=%d M=%zu -> %.6g W", a.trial,
                      a.num_antennas, a.num_users, a.objective, b.num_antennas, b.num_users, b.objective);
        out.log.emplace_back(buf);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

/// Column order of emit_csv. Wall time is kept out so files are reproducible.
inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "scenario", "trial",         "seed",       "K",        "M",     "gamma",       "variant",
      "status",   "feasible",      "objective_w", "alpha",   "iters", "restarts",    "sdp_status",
      "sdp_objective", "gap",      "rank_ratios", "antenna_powers"};
  return cols;
}

namespace detail {

inline std::string num(double x) {
  if (std::isnan(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string joined(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + num(v[i]);
  return s;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace detail

inline std::string to_csv(const std::vector<TrialResult>& results) {
  std::string out;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
  out += "\n";
  for (const auto& t : results) {
    const std::vector<std::string> f{t.scenario,
                                     std::to_string(t.trial),
                                     std::to_string(t.seed),
                                     std::to_string(t.num_antennas),
                                     std::to_string(t.num_users),
                                     detail::num(t.gamma),
                                     io::variant_name(t.variant),
                                     t.status,
                                     t.feasible ? "1" : "0",
                                     detail::num(t.objective),
                                     detail::num(t.alpha),
                                     std::to_string(t.iterations),
                                     std::to_string(t.restarts),
                                     t.sdp_status,
                                     detail::num(t.sdp_objective),
                                     detail::num(t.gap),
                                     detail::joined(t.rank_ratios),
                                     detail::joined(t.antenna_powers)};
    for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + detail::csv_field(f[i]);
    out += "\n";
  }
  return out;
}

inline void emit_csv(const std::vector<TrialResult>& results, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("emit_csv: cannot open '" + path + "' for writing");
  f << to_csv(results);
  if (!f) throw std::runtime_error("emit_csv: write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Scenario files

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  using io::get;
  using io::get_or;
  const std::string root = "$";
  const int version = get<int>(j, "schema_version", root);
  if (version != ScenarioSpec::kSchemaVersion)
    throw ConfigError(root + ".schema_version", "unsupported version " + std::to_string(version));
  ScenarioSpec s;
  s.name = get_or<std::string>(j, "name", root, s.name);
  s.num_antennas = get_or<int>(j, "num_antennas", root, s.num_antennas);
  s.spacing_over_wavelength = get_or<double>(j, "spacing_over_wavelength", root, s.spacing_over_wavelength);
  const auto& us = io::require(j, "users", root);
  if (!us.is_array()) throw ConfigError(root + ".users", "expected an array");
  for (std::size_t u = 0; u < us.size(); ++u)
    s.users.push_back(io::geometry_from_json(us[u], root + ".users[" + std::to_string(u) + "]"));
  s.noise_power = get_or<double>(j, "noise_power", root, s.noise_power);
  s.gamma_values = get_or<std::vector<double>>(j, "gamma_values", root, {});
  if (s.gamma_values.empty() || j.contains("sinr_targets") || j.contains("rates"))
    s.sinr_targets = io::targets_from_json(j, root, s.users.size());
  const std::string rule = get_or<std::string>(j, "cap_rule", root, "fixed");
  if (rule == "none")
    s.cap_rule = CapRule::None;
  else if (rule == "fixed")
    s.cap_rule = CapRule::Fixed;
  else if (rule == "from-alpha")
    s.cap_rule = CapRule::FromAlpha;
  else
    throw ConfigError(root + ".cap_rule", "expected none, fixed or from-alpha");
  s.cap_watts = get_or<double>(j, "cap_watts", root, s.cap_watts);
  s.cap_margin = get_or<double>(j, "cap_margin", root, s.cap_margin);
  s.variant = io::variant_from_string(get_or<std::string>(j, "variant", root, "power-min"), root + ".variant");
  const std::string solvers = get_or<std::string>(j, "solvers", root, "sca");
  if (solvers == "sca")
    s.run_sdp = false;
  else if (solvers == "both")
    s.run_sdp = true;
  else
    throw ConfigError(root + ".solvers", "expected sca or both");
  s.num_trials = get_or<int>(j, "num_trials", root, s.num_trials);
  s.sdp_trials = get_or<int>(j, "sdp_trials", root, s.sdp_trials);
  s.seed = get_or<std::uint64_t>(j, "seed", root, s.seed);
  s.antenna_values = get_or<std::vector<int>>(j, "antenna_values", root, {});
  s.user_counts = get_or<std::vector<std::size_t>>(j, "user_counts", root, {});
  if (j.contains("eavesdroppers")) {
    const auto& ev = j["eavesdroppers"];
    if (!ev.is_array()) throw ConfigError(root + ".eavesdroppers", "expected an array");
    for (std::size_t r = 0; r < ev.size(); ++r) {
      const std::string p = root + ".eavesdroppers[" + std::to_string(r) + "]";
      s.eavesdroppers.push_back({io::geometry_from_json(ev[r], p), get<double>(ev[r], "max_leakage", p)});
    }
  }
  s.sca = io::sca_config_from_json(j.value("solver", nlohmann::json::object()), root + ".solver");
  s.backend = get_or<std::string>(j, "backend", root, s.backend);
  s.sdp_backend = get_or<std::string>(j, "sdp_backend", root, s.sdp_backend);
  s.threads = get_or<int>(j, "threads", root, s.threads);
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(root + "." + e.field, e.reason);
  }
  return s;
}

inline nlohmann::json scenario_to_json(const ScenarioSpec& s) {
  nlohmann::json users = nlohmann::json::array();
  for (const auto& u : s.users) users.push_back(io::geometry_to_json(u));
  nlohmann::json j{{"schema_version", ScenarioSpec::kSchemaVersion},
                   {"name", s.name},
                   {"num_antennas", s.num_antennas},
                   {"spacing_over_wavelength", s.spacing_over_wavelength},
                   {"users", users},
                   {"noise_power", s.noise_power},
                   {"cap_rule", cap_rule_name(s.cap_rule)},
                   {"cap_watts", s.cap_watts},
                   {"cap_margin", s.cap_margin},
                   {"variant", io::variant_name(s.variant)},
                   {"solvers", s.run_sdp ? "both" : "sca"},
                   {"num_trials", s.num_trials},
                   {"sdp_trials", s.sdp_trials},
                   {"seed", s.seed},
                   {"antenna_values", s.antenna_values},
                   {"user_counts", s.user_counts},
                   {"gamma_values", s.gamma_values},
                   {"backend", s.backend},
                   {"sdp_backend", s.sdp_backend},
                   {"threads", s.threads},
                   {"solver",
                    {{"xi", s.sca.xi},
                     {"max_iters", s.sca.max_iters},
                     {"max_restarts", s.sca.max_restarts},
                     {"denom_guard", s.sca.denom_guard},
                     {"solver_tol", s.sca.solver_tol},
                     {"init", s.sca.init_strategy == InitStrategy::RandomGaussian ? "random" : "mrt"}}}};
  if (!s.sinr_targets.empty()) j["sinr_targets"] = s.sinr_targets;
  if (!s.eavesdroppers.empty()) {
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& e : s.eavesdroppers) {
      auto g = io::geometry_to_json(e.geometry);
      g["max_leakage"] = e.max_leakage;
      ev.push_back(g);
    }
    j["eavesdroppers"] = ev;
  }
  return j;
}

inline nlohmann::json summary_to_json(const ScenarioResult& r) {
  auto num = [](double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); };
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& row : r.summary) {
    pts.push_back({{"K", row.point.num_antennas},
                   {"M", row.point.num_users},
                   {"gamma", row.point.gamma ? nlohmann::json(*row.point.gamma) : nlohmann::json(nullptr)},
                   {"trials", row.trials},
                   {"feasible", row.feasible},
                   {"feasibility_rate", row.feasibility_rate},
                   {"mean_objective_w", num(row.mean_objective)},
                   {"median_objective_w", num(row.median_objective)},
                   {"mean_objective_db", std::isnan(row.mean_objective)
                                             ? nlohmann::json(nullptr)
                                             : nlohmann::json(power_db(row.mean_objective, r.spec.noise_power))},
                   {"mean_iterations", num(row.mean_iterations)},
                   {"sdp_solved", row.sdp_solved},
                   {"mean_gap", num(row.mean_gap)},
                   {"median_gap", num(row.median_gap)}});
  }
  return {{"metadata",
           {{"scenario", r.spec.name},
            {"seed", r.spec.seed},
            {"num_trials", r.spec.num_trials},
            {"sdp_trials", r.spec.run_sdp ? r.spec.sdp_trials : 0},
            {"backend", r.spec.backend},
            {"sdp_backend", r.spec.run_sdp ? r.spec.sdp_backend : ""},
            {"threads", r.spec.threads},
            {"wall_time_s", r.wall_time_s}}},
          {"spec", scenario_to_json(r.spec)},
          {"points", pts}};
}

// ---------------------------------------------------------------------------
// Presets

inline std::vector<std::string> preset_names() { return {"example1", "example2", "example3"}; }

namespace detail {

inline std::vector<UserGeometry> users_at(const std::vector<double>& d, double eta, RicianFactor r,
                                          const std::vector<double>& aod = {}) {
  std::vector<UserGeometry> g;
  for (std::size_t i = 0; i < d.size(); ++i) g.push_back({d[i], aod.empty() ? 0.0 : aod[i], eta, r});
  return g;
}

}  // namespace detail

/// example1: K = 8, four Rayleigh users, 6 W caps. example2: six users,
/// antenna sweep, served prefixes of 2/4/6 users, caps from alpha*.
/// example3: K = 20, Rician users with fixed AoDs, common-target sweep,
/// SCA and SDP, caps from alpha*.
inline ScenarioSpec preset(const std::string& name) {
  ScenarioSpec s;
  s.name = name;
  s.noise_power = 1.0;
  s.num_trials = 100;
  if (name == "example1") {
    s.num_antennas = 8;
    s.users = detail::users_at({15, 10, 5, 2}, 2.0, RicianFactor::rayleigh());
    s.sinr_targets = {0.05, 0.1, 0.5, 1.0};
    s.cap_rule = CapRule::Fixed;
    s.cap_watts = 6.0;
  } else if (name == "example2") {
    s.num_antennas = 8;
    s.users = detail::users_at({6, 5, 4, 3, 2, 1}, 1.0, RicianFactor::rayleigh());
    s.sinr_targets.assign(6, 1.0);
    s.cap_rule = CapRule::FromAlpha;
    s.cap_watts = 1.0;
    s.antenna_values = {6, 8, 10, 12};
    s.user_counts = {2, 4, 6};
    s.cap_margin = 1e-6;  // caps exactly at alpha* leave no interior
  } else if (name == "example3") {
    s.num_antennas = 20;
    s.users = detail::users_at({6, 5, 4, 3}, 1.0, RicianFactor::of(10.0), {30, 40, 50, 50});
    s.cap_rule = CapRule::FromAlpha;
    s.cap_watts = 1.0;
    s.cap_margin = 1e-6;
    s.gamma_values = {0.25, 0.5, 1.0, 2.0, 4.0};
    s.user_counts = {2, 3, 4};
    s.run_sdp = true;
    s.sdp_trials = 25;
  } else {
    std::string list;
    for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("preset", "unknown preset '" + name + "' (available: " + list + ")");
  }
  return s;
}

}  // namespace nomabf
