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
#include <optional>
#include <string>
#include <vector>

#include "nomabf/conic.hpp"
#include "nomabf/ipm.hpp"
#include "nomabf/problem.hpp"

// SDP relaxation: w_m w_m^H -> W_m (Hermitian PSD), rank dropped.
//
// Each Hermitian K x K matrix W = X + jY is parametrized by K^2 reals:
// X_kk, X_ij (i > j) and Y_ij (i > j). The PSD constraint is imposed on the
// real embedding [[X, -Y], [Y, X]] (2K x 2K), whose eigenvalues are those of
// W, each twice. Hence tr(embed(W)) = 2 tr(W) and
// <embed(C), embed(W)> = 2 Re tr(C W); linear functionals below are written
// directly as Re tr(C W) on the parameters, never through the embedding.

namespace nomabf {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;

class HermitianParam {
 public:
  explicit HermitianParam(int k) : k_(k) {}

  int size() const { return k_ * k_; }
  int side() const { return k_; }

  /// Index of X_ij (i >= j).
  int sym(int i, int j) const { return ipm::svec_index(i, j, k_); }
  /// Index of Y_ij (i > j).
  int anti(int i, int j) const { return k_ * (k_ + 1) / 2 + ipm::svec_index(i, j, k_) - (j + 1); }

  /// Coefficients of the real functional W -> Re tr(C W), C Hermitian.
  Eigen::VectorXd trace_functional(const MatrixXcd& C) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(size());
    for (int j = 0; j < k_; ++j) {
      a[sym(j, j)] = C(j, j).real();
      for (int i = j + 1; i < k_; ++i) {
        a[sym(i, j)] = 2.0 * C(i, j).real();
        a[anti(i, j)] = 2.0 * C(i, j).imag();
      }
    }
    return a;
  }

  MatrixXcd matrix(const Eigen::Ref<const Eigen::VectorXd>& p) const {
    MatrixXcd W(k_, k_);
    for (int j = 0; j < k_; ++j) {
      W(j, j) = p[sym(j, j)];
      for (int i = j + 1; i < k_; ++i) {
        W(i, j) = cd(p[sym(i, j)], p[anti(i, j)]);
        W(j, i) = std::conj(W(i, j));
      }
    }
    return W;
  }

  Eigen::VectorXd params(const MatrixXcd& W) const {
    Eigen::VectorXd p(size());
    for (int j = 0; j < k_; ++j) {
      p[sym(j, j)] = W(j, j).real();
      for (int i = j + 1; i < k_; ++i) {
        p[sym(i, j)] = W(i, j).real();
        p[anti(i, j)] = W(i, j).imag();
      }
    }
    return p;
  }

 private:
  int k_;
};

/// Real symmetric embedding [[Re W, -Im W], [Im W, Re W]].
inline MatrixXd embed_hermitian(const MatrixXcd& W) {
  const auto k = W.rows();
  MatrixXd E(2 * k, 2 * k);
  E.topLeftCorner(k, k) = W.real();
  E.bottomRightCorner(k, k) = W.real();
  E.topRightCorner(k, k) = -W.imag();
  E.bottomLeftCorner(k, k) = W.imag();
  return E;
}

/// Rows of svec(embed(W)) as affine functions of the parameters at `offset`.
inline std::vector<AffineRow> embedded_psd_rows(const HermitianParam& hp, int offset) {
  const int k = hp.side();
  const int n = 2 * k;
  std::vector<AffineRow> rows(static_cast<std::size_t>(n * (n + 1) / 2));
  const double r2 = std::sqrt(2.0);
  auto put = [&](int i, int j, int var, double coef) {  // embedded entry (i, j), any order
    if (i < j) std::swap(i, j);
    rows[static_cast<std::size_t>(ipm::svec_index(i, j, n))].add(offset + var, i == j ? coef : r2 * coef);
  };
  for (int j = 0; j < k; ++j) {
    put(j, j, hp.sym(j, j), 1.0);
    put(k + j, k + j, hp.sym(j, j), 1.0);
    for (int i = j + 1; i < k; ++i) {
      put(i, j, hp.sym(i, j), 1.0);          // X block
      put(k + i, k + j, hp.sym(i, j), 1.0);  // X block
      put(k + i, j, hp.anti(i, j), 1.0);     // Y_ij in lower-left
      put(k + j, i, hp.anti(i, j), -1.0);    // Y_ji = -Y_ij
    }
  }
  return rows;
}

struct SdpProgram {
  ConicProgram program;
  HermitianParam param{1};
  std::size_t num_users = 0;
  std::vector<std::size_t> sinr_blocks;  // order (m, n) with n <= m, m ascending
  std::vector<std::size_t> cap_blocks;

  int offset(std::size_t m) const { return static_cast<int>(m) * param.size(); }
};

namespace detail {

inline MatrixXcd outer(const CVector& h) { return h * h.adjoint(); }

inline MatrixXcd unit_outer(int k, int idx) {
  MatrixXcd E = MatrixXcd::Zero(k, k);
  E(idx, idx) = 1.0;
  return E;
}

inline AffineRow functional_row(const Eigen::VectorXd& coef, int offset, double scale) {
  AffineRow r;
  for (int j = 0; j < coef.size(); ++j)
    if (coef[j] != 0.0) r.add(offset + j, scale * coef[j]);
  return r;
}

}  // namespace detail

/// minimize sum tr W_m  s.t.  caps, lifted SINR constraints, W_m psd.
inline SdpProgram build_sdp(const BeamformingInstance& inst) {
  inst.validate();
  SdpProgram sp;
  const int k = inst.num_antennas();
  const std::size_t users = inst.num_users();
  sp.param = HermitianParam(k);
  sp.num_users = users;
  sp.program = ConicProgram(static_cast<int>(users) * sp.param.size());
  ConicProgram& prog = sp.program;
  const Eigen::VectorXd tr = sp.param.trace_functional(MatrixXcd::Identity(k, k));
  for (std::size_t m = 0; m < users; ++m) prog.objective.segment(sp.offset(m), sp.param.size()) = tr;

  if (inst.per_antenna_caps) {
    for (int a = 0; a < k; ++a) {
      const Eigen::VectorXd e = sp.param.trace_functional(detail::unit_outer(k, a));
      AffineRow row((*inst.per_antenna_caps)[static_cast<std::size_t>(a)]);
      for (std::size_t m = 0; m < users; ++m) row += detail::functional_row(e, sp.offset(m), -1.0);
      sp.cap_blocks.push_back(prog.blocks.size());
      prog.add_block(Cone::nonneg(1), {row}, "cap(" + std::to_string(a + 1) + ")");
    }
  }
  for (std::size_t m = 0; m < users; ++m) {
    const Eigen::VectorXd hh = sp.param.trace_functional(detail::outer(inst.h(m)));
    for (std::size_t n = 0; n <= m; ++n) {
      const double g = inst.sinr_targets[n];
      AffineRow row(-g * inst.noise(m));
      row += detail::functional_row(hh, sp.offset(n), 1.0);
      for (std::size_t i = n + 1; i < users; ++i) row += detail::functional_row(hh, sp.offset(i), -g);
      sp.sinr_blocks.push_back(prog.blocks.size());
      prog.add_block(Cone::nonneg(1), {row}, "sinr(" + std::to_string(m + 1) + "," + std::to_string(n + 1) + ")");
    }
  }
  for (std::size_t r = 0; r < inst.eavesdroppers.size(); ++r) {
    const auto& e = inst.eavesdroppers[r];
    const Eigen::VectorXd ff = sp.param.trace_functional(detail::outer(e.channel));
    AffineRow row(e.max_leakage);
    for (std::size_t m = 0; m < users; ++m) row += detail::functional_row(ff, sp.offset(m), -1.0);
    prog.add_block(Cone::nonneg(1), {row}, "leak(" + std::to_string(r + 1) + ")");
  }
  for (std::size_t m = 0; m < users; ++m)
    prog.add_block(Cone::psd(2 * k), embedded_psd_rows(sp.param, sp.offset(m)), "W" + std::to_string(m + 1));
  return sp;
}

struct SdpSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<MatrixXcd> matrices;
  double objective = 0.0;
  std::vector<double> sinr_duals;  // y per (m, n) in build order
  std::vector<double> cap_duals;   // x_k
  std::vector<Eigen::VectorXd> eigen_summaries;  // descending
};

inline Eigen::VectorXd descending_eigenvalues(const MatrixXcd& W) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(W, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

inline SdpSolution solve_sdp(const BeamformingInstance& inst, const ConicBackend& backend, double tol = 1e-9) {
  const SdpProgram sp = build_sdp(inst);
  const ConicSolution cs = solve(sp.program, backend, tol);
  SdpSolution out;
  out.status = cs.status;
  if (cs.status != SolveStatus::Optimal) return out;
  out.objective = cs.primal_objective;
  for (std::size_t m = 0; m < sp.num_users; ++m) {
    out.matrices.push_back(sp.param.matrix(cs.x.segment(sp.offset(m), sp.param.size())));
    out.eigen_summaries.push_back(descending_eigenvalues(out.matrices.back()));
  }
  for (auto b : sp.sinr_blocks) out.sinr_duals.push_back(cs.duals[b][0]);
  for (auto b : sp.cap_blocks) out.cap_duals.push_back(cs.duals[b][0]);
  return out;
}

struct TwoUserDual {
  SolveStatus status = SolveStatus::NumericalFailure;
  double y1 = 0.0, y2 = 0.0, y3 = 0.0;
  std::vector<double> x;  // per-antenna multipliers (empty without caps)
  double objective = 0.0;
  MatrixXcd Z1, Z2;  // the two dual slack matrices
};

/// The explicit dual of the two-user relaxation, solved as its own conic
/// program: maximize y1 g1 s1 + y2 g1 s2 + y3 g2 s2 - sum x_k P_k with
///   I - y1 h1h1^H - y2 h2h2^H + sum x_k e_k e_k^H          psd
///   I + g1 y1 h1h1^H + g1 y2 h2h2^H - y3 h2h2^H + sum x_k E_k psd
/// and all multipliers nonnegative.
inline TwoUserDual solve_dual_two_user(const BeamformingInstance& inst, const ConicBackend& backend,
                                       double tol = 1e-9) {
  inst.validate();
  if (inst.num_users() != 2) throw std::invalid_argument("solve_dual_two_user: needs exactly two users");
  const int k = inst.num_antennas();
  const bool caps = inst.per_antenna_caps.has_value();
  const int nx = caps ? k : 0;
  const double g1 = inst.sinr_targets[0], g2 = inst.sinr_targets[1];
  const double s1 = inst.noise(0), s2 = inst.noise(1);
  ConicProgram prog(3 + nx);
  prog.objective[0] = -g1 * s1;
  prog.objective[1] = -g1 * s2;
  prog.objective[2] = -g2 * s2;
  for (int a = 0; a < nx; ++a) prog.objective[3 + a] = (*inst.per_antenna_caps)[static_cast<std::size_t>(a)];
  std::vector<AffineRow> nonneg;
  for (int v = 0; v < 3 + nx; ++v) nonneg.push_back(AffineRow().add(v, 1.0));
  prog.add_block(Cone::nonneg(3 + nx), nonneg, "multipliers");

  const MatrixXcd H1 = detail::outer(inst.h(0)), H2 = detail::outer(inst.h(1));
  auto lmi = [&](const std::vector<MatrixXcd>& coefs, const std::string& label) {
    // rows of svec(embed(I + sum_v coef_v * var_v))
    const int n = 2 * k;
    const Eigen::VectorXd base = ipm::svec(embed_hermitian(MatrixXcd::Identity(k, k)));
    std::vector<AffineRow> rows(static_cast<std::size_t>(n * (n + 1) / 2));
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r].constant = base[static_cast<Eigen::Index>(r)];
    for (std::size_t v = 0; v < coefs.size(); ++v) {
      const Eigen::VectorXd cv = ipm::svec(embed_hermitian(coefs[v]));
      for (std::size_t r = 0; r < rows.size(); ++r) rows[r].add(static_cast<int>(v), cv[static_cast<Eigen::Index>(r)]);
    }
    prog.add_block(Cone::psd(n), rows, label);
  };
  std::vector<MatrixXcd> c1{-H1, -H2, MatrixXcd::Zero(k, k)};
  std::vector<MatrixXcd> c2{g1 * H1, g1 * H2, -H2};
  for (int a = 0; a < nx; ++a) {
    c1.push_back(detail::unit_outer(k, a));
    c2.push_back(detail::unit_outer(k, a));
  }
  lmi(c1, "Z1");
  lmi(c2, "Z2");

  const ConicSolution cs = solve(prog, backend, tol);
  TwoUserDual out;
  out.status = cs.status;
  if (cs.status != SolveStatus::Optimal) return out;
  out.y1 = cs.x[0];
  out.y2 = cs.x[1];
  out.y3 = cs.x[2];
  for (int a = 0; a < nx; ++a) out.x.push_back(cs.x[3 + a]);
  out.objective = -cs.primal_objective;
  MatrixXcd Z1 = MatrixXcd::Identity(k, k), Z2 = MatrixXcd::Identity(k, k);
  for (int v = 0; v < 3 + nx; ++v) {
    Z1 += cs.x[v] * c1[static_cast<std::size_t>(v)];
    Z2 += cs.x[v] * c2[static_cast<std::size_t>(v)];
  }
  out.Z1 = Z1;
  out.Z2 = Z2;
  return out;
}

struct RankExtraction {
  std::optional<BeamformerSet> beamformers;  // set when every W_m passes
  std::vector<double> ratios;                // lambda_2 / lambda_1 per matrix
  std::vector<std::size_t> high_rank;        // matrices failing the test
};

inline constexpr double kDefaultRankTol = 1e-6;

/// w_m = sqrt(lambda_1) u_1 when lambda_2/lambda_1 <= tol_rank. The
/// eigenvector phase is fixed so its largest-magnitude entry is real positive.
inline RankExtraction extract_rank_one(const std::vector<MatrixXcd>& matrices, double tol_rank = kDefaultRankTol) {
  RankExtraction out;
  BeamformerSet w;
  for (std::size_t m = 0; m < matrices.size(); ++m) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(matrices[m]);
    const auto k = matrices[m].rows();
    const double l1 = es.eigenvalues()[k - 1];
    const double l2 = k > 1 ? es.eigenvalues()[k - 2] : 0.0;
    const double ratio = l1 > 0.0 ? std::max(0.0, l2) / l1 : 0.0;
    out.ratios.push_back(ratio);
    if (ratio > tol_rank) out.high_rank.push_back(m);
    CVector u = es.eigenvectors().col(k - 1);
    Eigen::Index big = 0;
    u.cwiseAbs().maxCoeff(&big);
    if (std::abs(u[big]) > 0.0) u *= std::conj(u[big]) / std::abs(u[big]);
    w.vectors.push_back(std::sqrt(std::max(0.0, l1)) * u);
  }
  if (out.high_rank.empty()) out.beamformers = std::move(w);
  return out;
}

inline RankExtraction extract_rank_one(const SdpSolution& sol, double tol_rank = kDefaultRankTol) {
  return extract_rank_one(sol.matrices, tol_rank);
}

struct TightnessReport {
  double slack_c = 0.0;  // tr(h1h1^H (W1 - g1 W2)) - g1 s1
  double slack_d = 0.0;  // tr(h2h2^H (W1 - g1 W2)) - g1 s2
  double slack_e = 0.0;  // tr(h2h2^H W2) - g2 s2
  double ratio_w1 = 0.0;
  double ratio_w2 = 0.0;
  bool condition_met = false;      // one of slack_c / slack_d strictly positive
  bool rank_one_observed = false;  // both ratios <= tol_rank
  bool implication_holds = true;   // condition_met => rank_one_observed
};

inline TightnessReport check_tightness_two_user(const BeamformingInstance& inst, const SdpSolution& sol,
                                                double strict_threshold = 1e-4,
                                                double tol_rank = kDefaultRankTol) {
  if (inst.num_users() != 2 || sol.matrices.size() != 2)
    throw std::invalid_argument("check_tightness_two_user: needs a solved two-user relaxation");
  const double g1 = inst.sinr_targets[0], g2 = inst.sinr_targets[1];
  auto quad = [](const CVector& h, const MatrixXcd& W) { return (h.adjoint() * W * h)(0, 0).real(); };
  const MatrixXcd D = sol.matrices[0] - g1 * sol.matrices[1];
  TightnessReport t;
  t.slack_c = quad(inst.h(0), D) - g1 * inst.noise(0);
  t.slack_d = quad(inst.h(1), D) - g1 * inst.noise(1);
  t.slack_e = quad(inst.h(1), sol.matrices[1]) - g2 * inst.noise(1);
  const auto ext = extract_rank_one(sol, tol_rank);
  t.ratio_w1 = ext.ratios[0];
  t.ratio_w2 = ext.ratios[1];
  t.condition_met = std::max(t.slack_c, t.slack_d) > strict_threshold;
  t.rank_one_observed = t.ratio_w1 <= tol_rank && t.ratio_w2 <= tol_rank;
  t.implication_holds = !t.condition_met || t.rank_one_observed;
  return t;
}

/// True when the relaxation is certified infeasible, which also certifies
/// the original targets infeasible.
inline bool relaxation_infeasible(const BeamformingInstance& inst, const ConicBackend& backend) {
  return solve(build_sdp(inst).program, backend, 1e-8).status == SolveStatus::PrimalInfeasible;
}

}  // namespace nomabf
