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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nomabf/conic.hpp"
#include "nomabf/errors.hpp"
#include "nomabf/ipm.hpp"
#include "nomabf/problem.hpp"
#include "nomabf/rng.hpp"
#include "nomabf/sdp.hpp"

namespace nomabf {

enum class InitStrategy { MrtScaled, RandomGaussian, UserProvided };

struct ScaConfig {
  double xi = 1e-6;  // stop when v_{l-1} - v_l <= xi (absolute)
  int max_iters = 100;
  InitStrategy init_strategy = InitStrategy::MrtScaled;
  std::optional<BeamformerSet> initial_point;  // for UserProvided
  int max_restarts = 10;
  double denom_guard = 1e-12;
  double feasibility_tol = kDefaultFeasibilityTol;
  double solver_tol = 1e-8;
  bool store_iterates = false;
  const ConicBackend* backend = nullptr;  // null: reference SOCP backend
  /// Optional PSD-capable backend used only to tell infeasible targets apart
  /// from an infeasible restriction after all restarts fail.
  const ConicBackend* relaxation_backend = nullptr;

  void validate() const {
    if (!(xi > 0.0)) throw std::invalid_argument("ScaConfig: xi must be > 0");
    if (!(denom_guard > 0.0)) throw std::invalid_argument("ScaConfig: denom_guard must be > 0");
    if (max_iters < 1 || max_restarts < 0) throw std::invalid_argument("ScaConfig: bad iteration limits");
  }
};

enum class StopReason { Converged, MaxIters, RestrictionInfeasible, NumericalFailure };

inline const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::Converged: return "converged";
    case StopReason::MaxIters: return "max_iters";
    case StopReason::RestrictionInfeasible: return "restriction_infeasible";
    case StopReason::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

/// values[0] is the initial point's objective; values[l] for l >= 1 are the
/// restriction optima. iterate_slack[l-1] / iterate_feasible[l-1] record the
/// check of iterate l against the original (non-restricted) constraints.
struct ScaTrace {
  std::vector<double> values;
  std::vector<BeamformerSet> iterates;
  std::vector<double> iterate_slack;
  std::vector<bool> iterate_feasible;
  std::vector<int> solver_iterations;
  StopReason stop_reason = StopReason::NumericalFailure;
  int restarts_used = 0;
  std::vector<std::string> restart_log;
  bool monotone = true;
  /// Set when the SDP relaxation proved the targets themselves infeasible.
  bool problem_infeasible = false;

  int iterations() const { return values.empty() ? 0 : static_cast<int>(values.size()) - 1; }
};

struct ScaResult {
  std::optional<BeamformerSet> solution;
  ScaTrace trace;
  double objective = std::numeric_limits<double>::quiet_NaN();  // power, or alpha for run_alpha
};

/// Re(w^H h h^H w_ref) / |h^H w_ref|, a lower bound on |h^H w| that is tight
/// at w = w_ref.
inline double linearized_lower_bound(const CVector& w, const CVector& w_ref, const CVector& h,
                                     double denom_guard = 1e-12) {
  const cd c = h.dot(w_ref);
  const double mag = std::abs(c);
  if (!(mag > denom_guard)) throw ReferenceInNullspace(0, 0);
  return (std::conj(h.dot(w)) * c).real() / mag;
}

/// Nudges w_ref_n toward h_m whenever |h_m^H w_ref_n| is under the guard;
/// throws ReferenceInNullspace if that does not help.
inline BeamformerSet guard_reference(const BeamformingInstance& inst, BeamformerSet w_ref, double guard) {
  const std::size_t users = inst.num_users();
  for (std::size_t m = 0; m < users; ++m) {
    for (std::size_t n = 0; n <= m; ++n) {
      if (std::abs(inst.h(m).dot(w_ref[n])) > guard) continue;
      const double hn = inst.h(m).norm();
      if (hn > 0.0) w_ref[n] += 1e-6 * std::max(1.0, w_ref[n].norm()) * inst.h(m) / hn;
      if (!(std::abs(inst.h(m).dot(w_ref[n])) > guard)) throw ReferenceInNullspace(m, n);
    }
  }
  return w_ref;
}

struct RestrictionProgram {
  ConicProgram program;
  ComplexLayout layout;
  int objective_var = -1;  // epigraph t (power) or alpha
  BeamformerSet reference;  // after guarding

  BeamformerSet beamformers(const Eigen::VectorXd& x) const { return BeamformerSet{layout.lift(x)}; }
};

namespace detail {

inline void add_sinr_blocks(const BeamformingInstance& inst, const BeamformerSet& ref, const ComplexLayout& layout,
                            ConicProgram& prog) {
  // For every n <= m:
  //   Re(conj(c) h_m^H w_n)/|c| >= || sqrt(g_n) (h_m^H w_i)_{i>n}, sqrt(g_n) sigma_m ||,
  // c = h_m^H w_ref_n.
  const std::size_t users = inst.num_users();
  for (std::size_t m = 0; m < users; ++m) {
    for (std::size_t n = 0; n <= m; ++n) {
      const cd c = inst.h(m).dot(ref[n]);
      const double sg = std::sqrt(inst.sinr_targets[n]);
      std::vector<AffineRow> rows;
      rows.push_back(layout.real_projection(inst.h(m), static_cast<int>(n), c / std::abs(c)));
      for (std::size_t i = n + 1; i < users; ++i) {
        const auto parts = layout.inner(inst.h(m), static_cast<int>(i));
        rows.push_back(parts[0].scaled(sg));
        rows.push_back(parts[1].scaled(sg));
      }
      rows.emplace_back(sg * std::sqrt(inst.noise(m)));
      prog.add_block(Cone::soc(static_cast<int>(rows.size())), rows,
                     "sinr(" + std::to_string(m + 1) + "," + std::to_string(n + 1) + ")");
    }
  }
}

inline std::vector<AffineRow> antenna_rows(const BeamformingInstance& inst, const ComplexLayout& layout, int k) {
  std::vector<AffineRow> rows;
  for (std::size_t m = 0; m < inst.num_users(); ++m) {
    rows.push_back(AffineRow().add(layout.re(static_cast<int>(m), k), 1.0));
    rows.push_back(AffineRow().add(layout.im(static_cast<int>(m), k), 1.0));
  }
  return rows;
}

inline void add_leakage_blocks(const BeamformingInstance& inst, const ComplexLayout& layout, ConicProgram& prog) {
  for (std::size_t r = 0; r < inst.eavesdroppers.size(); ++r) {
    const auto& e = inst.eavesdroppers[r];
    std::vector<AffineRow> rows{AffineRow(std::sqrt(e.max_leakage))};
    for (std::size_t m = 0; m < inst.num_users(); ++m) {
      const auto parts = layout.inner(e.channel, static_cast<int>(m));
      rows.push_back(parts[0]);
      rows.push_back(parts[1]);
    }
    prog.add_block(Cone::soc(static_cast<int>(rows.size())), rows, "leak(" + std::to_string(r + 1) + ")");
  }
}

inline ComplexLayout beamformer_layout(const BeamformingInstance& inst) {
  ComplexLayout layout;
  for (std::size_t m = 0; m < inst.num_users(); ++m) layout.add_vector(inst.num_antennas());
  return layout;
}

}  // namespace detail

/// SOCP restriction around w_ref: minimize t with t >= ||(w_1..w_M)||,
/// per-antenna caps as SOC blocks, one SINR block per (m, n <= m), and one
/// leakage block per eavesdropper. Power is t^2.
inline RestrictionProgram build_restriction(const BeamformingInstance& inst, const BeamformerSet& w_ref,
                                            double denom_guard = 1e-12) {
  RestrictionProgram rp;
  rp.reference = guard_reference(inst, w_ref, denom_guard);
  rp.layout = detail::beamformer_layout(inst);
  const int n_w = rp.layout.num_real();
  rp.objective_var = rp.layout.add_scalar();
  rp.program = ConicProgram(rp.layout.num_real());
  ConicProgram& prog = rp.program;
  prog.objective[rp.objective_var] = 1.0;

  std::vector<AffineRow> epi{AffineRow().add(rp.objective_var, 1.0)};
  for (int j = 0; j < n_w; ++j) epi.push_back(AffineRow().add(j, 1.0));
  prog.add_block(Cone::soc(static_cast<int>(epi.size())), epi, "epigraph");

  if (inst.per_antenna_caps) {
    for (int k = 0; k < inst.num_antennas(); ++k) {
      std::vector<AffineRow> rows{AffineRow(std::sqrt((*inst.per_antenna_caps)[static_cast<std::size_t>(k)]))};
      const auto ant = detail::antenna_rows(inst, rp.layout, k);
      rows.insert(rows.end(), ant.begin(), ant.end());
      prog.add_block(Cone::soc(static_cast<int>(rows.size())), rows, "cap(" + std::to_string(k + 1) + ")");
    }
  }
  detail::add_sinr_blocks(inst, rp.reference, rp.layout, prog);
  detail::add_leakage_blocks(inst, rp.layout, prog);
  return rp;
}

/// Restriction of the min-max cap problem: minimize alpha with
/// sum_m |w_m[k]|^2 <= alpha P_k as rotated cones (alpha, P_k/2, entries).
inline RestrictionProgram build_alpha_restriction(const BeamformingInstance& inst, const BeamformerSet& w_ref,
                                                  double denom_guard = 1e-12) {
  if (!inst.per_antenna_caps) throw std::invalid_argument("build_alpha_restriction: instance has no antenna caps");
  RestrictionProgram rp;
  rp.reference = guard_reference(inst, w_ref, denom_guard);
  rp.layout = detail::beamformer_layout(inst);
  rp.objective_var = rp.layout.add_scalar();
  rp.program = ConicProgram(rp.layout.num_real());
  ConicProgram& prog = rp.program;
  // alpha enters as alpha * p_ref so the cone rows stay O(power)
  const auto& caps = *inst.per_antenna_caps;
  const double p_ref = *std::max_element(caps.begin(), caps.end());
  prog.objective[rp.objective_var] = p_ref;
  for (int k = 0; k < inst.num_antennas(); ++k) {
    std::vector<AffineRow> rows{AffineRow().add(rp.objective_var, p_ref),
                                AffineRow(0.5 * caps[static_cast<std::size_t>(k)] / p_ref)};
    const auto ant = detail::antenna_rows(inst, rp.layout, k);
    rows.insert(rows.end(), ant.begin(), ant.end());
    prog.add_block(Cone::rsoc(static_cast<int>(rows.size())), rows, "cap(" + std::to_string(k + 1) + ")");
  }
  detail::add_sinr_blocks(inst, rp.reference, rp.layout, prog);
  detail::add_leakage_blocks(inst, rp.layout, prog);
  return rp;
}

/// Starting point for the iteration.
///  - MrtScaled: w_n = c_n h_n/|h_n|, with c_n set in reverse decoding
///    order (n = M..1) so every SINR_m^n, m >= n, is met at twice its target
///    (3 dB) given the interference of the w_i, i > n, already fixed.
///  - RandomGaussian: unit-norm complex Gaussian directions drawn from rng.
inline BeamformerSet initialize(const BeamformingInstance& inst, InitStrategy strategy, const RngStream& rng,
                                const std::optional<BeamformerSet>& provided = std::nullopt) {
  const std::size_t users = inst.num_users();
  const int k_ant = inst.num_antennas();
  BeamformerSet w = BeamformerSet::zeros(users, k_ant);
  switch (strategy) {
    case InitStrategy::UserProvided:
      if (!provided || provided->size() != users) throw std::invalid_argument("initialize: no initial point given");
      return *provided;
    case InitStrategy::RandomGaussian:
      for (std::size_t n = 0; n < users; ++n) {
        const RngStream s = rng.substream(n);
        for (int k = 0; k < k_ant; ++k) {
          const auto i = static_cast<std::uint64_t>(k);
          w[n][k] = cd(s.normal(2 * i), s.normal(2 * i + 1));
        }
        w[n] /= w[n].norm();
      }
      return w;
    case InitStrategy::MrtScaled:
      for (std::size_t n = users; n-- > 0;) {
        const CVector u = inst.h(n) / inst.h(n).norm();
        double c2 = 0.0;
        for (std::size_t m = n; m < users; ++m) {
          double interference = 0.0;
          for (std::size_t i = n + 1; i < users; ++i) interference += std::norm(inst.h(m).dot(w[i]));
          const double gain = std::max(std::norm(inst.h(m).dot(u)), 1e-300);
          c2 = std::max(c2, 2.0 * inst.sinr_targets[n] * (interference + inst.noise(m)) / gain);
        }
        w[n] = std::sqrt(c2) * u;
      }
      return w;
  }
  return w;
}

namespace detail {

enum class Variant { Power, Alpha };

inline double max_cap_ratio(const BeamformingInstance& inst, const BeamformerSet& w) {
  double a = 0.0;
  for (int k = 0; k < inst.num_antennas(); ++k)
    a = std::max(a, per_antenna_power(w, k) / (*inst.per_antenna_caps)[static_cast<std::size_t>(k)]);
  return a;
}

inline FeasibilityReport check_iterate(const BeamformingInstance& inst, const BeamformerSet& w, Variant variant,
                                       double alpha, double tol) {
  if (variant == Variant::Power) return check_feasibility(inst, w, tol);
  BeamformingInstance scaled = inst;
  for (double& p : *scaled.per_antenna_caps) p *= alpha;
  return check_feasibility(scaled, w, tol);
}

/// One pass of the iteration from w0; returns true if the first restriction
/// was solvable (otherwise the caller restarts).
inline bool iterate(const BeamformingInstance& inst, const ScaConfig& cfg, Variant variant, const BeamformerSet& w0,
                    ScaResult& out, std::string& failure) {
  static const ReferenceSocpBackend reference_backend;
  const ConicBackend& backend = cfg.backend ? *cfg.backend : reference_backend;
  ScaTrace& tr = out.trace;
  tr.values.assign(1, variant == Variant::Power ? total_power(w0) : max_cap_ratio(inst, w0));
  tr.iterates.clear();
  tr.iterate_slack.clear();
  tr.iterate_feasible.clear();
  tr.solver_iterations.clear();
  tr.monotone = true;
  if (cfg.store_iterates) tr.iterates.push_back(w0);

  BeamformerSet w_ref = w0;
  for (int l = 1;; ++l) {
    RestrictionProgram rp;
    try {
      rp = variant == Variant::Power ? build_restriction(inst, w_ref, cfg.denom_guard)
                                     : build_alpha_restriction(inst, w_ref, cfg.denom_guard);
    } catch (const ReferenceInNullspace& e) {
      failure = e.what();
      if (l == 1) return false;
      tr.stop_reason = StopReason::NumericalFailure;
      return true;
    }
    const ConicSolution sol = solve(rp.program, backend, cfg.solver_tol);
    tr.solver_iterations.push_back(sol.iterations);
    if (sol.status != SolveStatus::Optimal) {
      failure = std::string("restriction solve at l=") + std::to_string(l) + ": " + status_name(sol.status);
      if (l == 1) return false;
      // Restrictions only grow after l = 1; anything but Optimal here is numerical.
      tr.stop_reason = StopReason::NumericalFailure;
      return true;
    }
    BeamformerSet w = rp.beamformers(sol.x);
    const double alpha = variant == Variant::Alpha ? sol.x[rp.objective_var] : 0.0;
    const double v = variant == Variant::Power ? total_power(w) : alpha;
    const FeasibilityReport rep = check_iterate(inst, w, variant, alpha, cfg.feasibility_tol);
    tr.iterate_slack.push_back(std::min({rep.worst_sinr_slack, rep.worst_power_slack, rep.worst_leak_slack}));
    tr.iterate_feasible.push_back(rep.feasible);
    if (l >= 2 && v > tr.values.back() + 1e-8 * std::max(1.0, tr.values.back())) tr.monotone = false;
    tr.values.push_back(v);
    if (cfg.store_iterates) tr.iterates.push_back(w);
    out.solution = w;
    out.objective = v;
    // v_0 is treated as "large": the first comparison is between two restriction optima.
    if (l >= 2 && tr.values[static_cast<std::size_t>(l - 1)] - v <= cfg.xi) {
      tr.stop_reason = StopReason::Converged;
      return true;
    }
    if (l >= cfg.max_iters) {
      tr.stop_reason = StopReason::MaxIters;
      return true;
    }
    w_ref = std::move(w);
  }
}

inline ScaResult run_variant(const BeamformingInstance& inst, const ScaConfig& cfg, const RngStream& rng,
                             Variant variant) {
  inst.validate();
  cfg.validate();
  ScaResult out;
  for (int attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    const InitStrategy strategy = attempt == 0 ? cfg.init_strategy : InitStrategy::RandomGaussian;
    const BeamformerSet w0 =
        initialize(inst, strategy, rng.substream(1000 + static_cast<std::uint64_t>(attempt)), cfg.initial_point);
    std::string failure;
    out.solution.reset();
    out.objective = std::numeric_limits<double>::quiet_NaN();
    if (iterate(inst, cfg, variant, w0, out, failure)) {
      out.trace.restarts_used = attempt;
      if (!failure.empty()) out.trace.restart_log.push_back(failure);
      return out;
    }
    out.trace.restart_log.push_back("attempt " + std::to_string(attempt) + ": " + failure);
  }
  out.solution.reset();
  out.trace.stop_reason = StopReason::RestrictionInfeasible;
  out.trace.restarts_used = cfg.max_restarts;
  if (cfg.relaxation_backend) out.trace.problem_infeasible = nomabf::relaxation_infeasible(inst, *cfg.relaxation_backend);
  return out;
}

}  // namespace detail

/// Successive SOCP restrictions for the total-power problem (with leakage
/// constraints when the instance has eavesdroppers).
inline ScaResult run(const BeamformingInstance& inst, const ScaConfig& cfg, const RngStream& rng) {
  return detail::run_variant(inst, cfg, rng, detail::Variant::Power);
}

/// Same iteration for the min-max cap problem; objective is alpha*.
inline ScaResult run_alpha(const BeamformingInstance& inst, const ScaConfig& cfg, const RngStream& rng) {
  if (!inst.per_antenna_caps) throw std::invalid_argument("run_alpha: instance has no antenna caps");
  return detail::run_variant(inst, cfg, rng, detail::Variant::Alpha);
}

inline ScaResult run_secure(const BeamformingInstance& inst, const ScaConfig& cfg, const RngStream& rng) {
  if (inst.eavesdroppers.empty()) throw std::invalid_argument("run_secure: instance has no eavesdroppers");
  return detail::run_variant(inst, cfg, rng, detail::Variant::Power);
}

}  // namespace nomabf
