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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "nomabf/problem.hpp"
#include "nomabf/rng.hpp"
#include "nomabf/sca.hpp"
#include "nomabf/sdp.hpp"

// Randomized invariant suites shared by `nomabf check` and the acceptance
// binary. Each failure is logged with the seed and index that reproduce it.

namespace nomabf::checks {

struct CheckReport {
  std::string name;
  int cases = 0;
  int failures = 0;
  int skipped = 0;
  std::vector<std::string> log;
  std::map<std::string, double> metrics;
  double wall_time_s = 0.0;

  bool passed() const { return failures == 0 && cases > 0; }

  void fail(const std::string& msg) {
    ++failures;
    if (log.size() < 50) log.push_back(msg);
  }
};

namespace detail {

inline CVector gaussian(int k, const RngStream& rng) {
  CVector v(k);
  for (int i = 0; i < k; ++i) {
    const auto idx = static_cast<std::uint64_t>(i);
    v[i] = cd(rng.normal(2 * idx), rng.normal(2 * idx + 1)) / std::sqrt(2.0);
  }
  return v;
}

/// CN(0, I) channels sorted weakest first, unit noise.
inline BeamformingInstance random_instance(std::size_t users, int k, const RngStream& rng,
                                           const std::vector<double>& targets,
                                           std::optional<double> cap) {
  BeamformingInstance inst;
  std::vector<CVector> hs;
  for (std::size_t m = 0; m < users; ++m) hs.push_back(gaussian(k, rng.substream(m)));
  std::sort(hs.begin(), hs.end(), [](const CVector& a, const CVector& b) { return a.norm() < b.norm(); });
  for (std::size_t m = 0; m < users; ++m) {
    inst.channel.channels.push_back(hs[m]);
    inst.channel.noise_powers.push_back(1.0);
    inst.channel.decode_order.push_back(m);
  }
  inst.sinr_targets = targets;
  if (cap) inst.per_antenna_caps = std::vector<double>(static_cast<std::size_t>(k), *cap);
  inst.validate();
  return inst;
}

inline std::string tag(std::uint64_t seed, int index) {
  return "seed=" + std::to_string(seed) + " index=" + std::to_string(index);
}

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

}  // namespace detail

/// Linearization bound on random (h, w, w_ref), K in 1..8: the bound never
/// exceeds |h^H w| by more than 1e-10, and is exact at w = w_ref (1e-12,
/// relative to |h^H w_ref|).
inline CheckReport check_eq7(std::uint64_t seed, int trials = 10000) {
  detail::Timer timer;
  CheckReport r;
  r.name = "eq7";
  const RngStream rng{seed, 0x7e};
  double worst_slack = std::numeric_limits<double>::infinity();
  double worst_equal = 0.0;
  for (int t = 0; t < trials; ++t) {
    const RngStream s = rng.substream(static_cast<std::uint64_t>(t));
    const int k = 1 + static_cast<int>(s.uniform(0) * 8.0) % 8;
    const CVector h = detail::gaussian(k, s.substream(1));
    const CVector w = detail::gaussian(k, s.substream(2));
    const CVector wr = detail::gaussian(k, s.substream(3));
    ++r.cases;
    const double slack = std::abs(h.dot(w)) - linearized_lower_bound(w, wr, h);
    const double at_ref = std::abs(std::abs(h.dot(wr)) - linearized_lower_bound(wr, wr, h));
    const double rel = at_ref / std::max(1.0, std::abs(h.dot(wr)));
    worst_slack = std::min(worst_slack, slack);
    worst_equal = std::max(worst_equal, rel);
    if (slack < -1e-10 || rel > 1e-12) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s K=%d slack=%.3e equality_err=%.3e", detail::tag(seed, t).c_str(), k, slack,
                    rel);
      r.fail(buf);
    }
  }
  r.metrics["min_slack"] = worst_slack;
  r.metrics["max_equality_error"] = worst_equal;
  r.wall_time_s = timer.seconds();
  return r;
}

/// SCA traces on random instances (M in {2,3,4}, K in {4,8}, half with
/// caps): restriction optima never increase (relative 1e-8), and every
/// iterate is feasible for the original constraints at 1e-6.
inline CheckReport check_monotone(std::uint64_t seed, int instances = 100, const ConicBackend* backend = nullptr) {
  detail::Timer timer;
  CheckReport r;
  r.name = "monotone";
  const RngStream rng{seed, 0x30};
  int iterates = 0, bad_iterates = 0, rises = 0;
  double worst_rise = 0.0;
  for (int i = 0; i < instances; ++i) {
    const RngStream s = rng.substream(static_cast<std::uint64_t>(i));
    const std::size_t users = 2 + static_cast<std::size_t>(i % 3);
    const int k = (i / 3) % 2 ? 8 : 4;
    std::vector<double> targets;
    for (std::size_t m = 0; m < users; ++m) targets.push_back(0.5 + 1.5 * s.uniform(100 + m));
    const std::optional<double> cap = i % 2 ? std::optional<double>(4.0 + 8.0 * s.uniform(99)) : std::nullopt;
    const auto inst = detail::random_instance(users, k, s.substream(1), targets, cap);
    ScaConfig cfg;
    cfg.store_iterates = true;
    cfg.backend = backend;
    const auto res = run(inst, cfg, s.substream(2));
    ++r.cases;
    const auto& v = res.trace.values;
    if (!res.solution) {
      ++r.skipped;
      continue;
    }
    for (std::size_t l = 2; l < v.size(); ++l) {
      const double rise = (v[l] - v[l - 1]) / std::max(1.0, std::abs(v[l - 1]));
      worst_rise = std::max(worst_rise, rise);
      if (rise > 1e-8) {
        ++rises;
        char buf[200];
        std::snprintf(buf, sizeof buf, "%s M=%zu K=%d: v[%zu]=%.12g > v[%zu]=%.12g", detail::tag(seed, i).c_str(),
                      users, k, l, v[l], l - 1, v[l - 1]);
        r.fail(buf);
      }
    }
    // iterates[0] is the starting point, which need not be feasible
    for (std::size_t l = 1; l < res.trace.iterates.size(); ++l) {
      ++iterates;
      const auto rep = check_feasibility(inst, res.trace.iterates[l], 1e-6);
      if (!rep.feasible) {
        ++bad_iterates;
        r.fail(detail::tag(seed, i) + ": iterate " + std::to_string(l) + " infeasible");
      }
    }
  }
  r.metrics["iterates_checked"] = iterates;
  r.metrics["infeasible_iterates"] = bad_iterates;
  r.metrics["max_relative_rise"] = worst_rise;
  r.metrics["monotonicity_violations"] = rises;
  r.metrics["unsolved_instances"] = r.skipped;
  r.wall_time_s = timer.seconds();
  return r;
}

/// Two-user relaxation on random capped instances. Whenever one of the two
/// weaker-message slacks exceeds 1e-4, both matrices must be rank one
/// (eigenvalue ratio <= 1e-6) and the extracted beamformers feasible at
/// 1e-5. On every solved instance the strong-user constraint and at least
/// one weak-message constraint must be tight (1e-6).
inline CheckReport check_tightness(std::uint64_t seed, const ConicBackend& psd, int instances = 50) {
  detail::Timer timer;
  CheckReport r;
  r.name = "tightness";
  const RngStream rng{seed, 0x72};
  int conditioned = 0;
  for (int i = 0; i < instances; ++i) {
    const RngStream s = rng.substream(static_cast<std::uint64_t>(i));
    const int k = 2 + i % 3;
    const std::vector<double> targets{0.5 + 1.5 * s.uniform(0), 0.5 + 1.5 * s.uniform(1)};
    const double cap = 2.0 + 6.0 * s.uniform(2);
    const auto inst = detail::random_instance(2, k, s.substream(1), targets, cap);
    ++r.cases;
    const auto sol = solve_sdp(inst, psd);
    if (sol.status == SolveStatus::PrimalInfeasible) {
      ++r.skipped;
      continue;
    }
    if (sol.status != SolveStatus::Optimal) {
      r.fail(detail::tag(seed, i) + ": relaxation status " + status_name(sol.status));
      continue;
    }
    const auto t = check_tightness_two_user(inst, sol);
    char buf[240];
    if (t.slack_e > 1e-6 || std::min(t.slack_c, t.slack_d) > 1e-6) {
      std::snprintf(buf, sizeof buf, "%s: slacks c=%.3e d=%.3e e=%.3e", detail::tag(seed, i).c_str(), t.slack_c,
                    t.slack_d, t.slack_e);
      r.fail(buf);
    }
    if (!t.condition_met) continue;
    ++conditioned;
    if (!t.rank_one_observed) {
      std::snprintf(buf, sizeof buf, "%s: slack %.3e but ratios %.3e %.3e", detail::tag(seed, i).c_str(),
                    std::max(t.slack_c, t.slack_d), t.ratio_w1, t.ratio_w2);
      r.fail(buf);
      continue;
    }
    const auto ext = extract_rank_one(sol);
    if (!ext.beamformers || !check_feasibility(inst, *ext.beamformers, 1e-5).feasible)
      r.fail(detail::tag(seed, i) + ": extracted beamformers infeasible");
  }
  r.metrics["condition_met"] = conditioned;
  r.wall_time_s = timer.seconds();
  return r;
}

}  // namespace nomabf::checks
