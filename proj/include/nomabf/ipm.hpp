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
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nomabf/conic.hpp"

// Primal-dual interior-point method on the homogeneous self-dual embedding
//
//   minimize c^T x  s.t.  G x + s = h, A x = b, s in K
//
// with Nesterov-Todd scaling and a Mehrotra predictor-corrector. K is a
// product of nonnegative orthants, second-order cones and PSD cones (svec
// form). Rotated cones are mapped to second-order cones before solving.

namespace nomabf::ipm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct InternalCone {
  ConeKind kind;  // Nonneg, SecondOrder or PositiveSemidefinite
  int offset;
  int dim;
  int side;
};

inline int svec_index(int i, int j, int n) {
  // lower triangle, column major, i >= j
  return j * n - j * (j - 1) / 2 + (i - j);
}

inline MatrixXd smat(const Eigen::Ref<const VectorXd>& v, int n) {
  MatrixXd X(n, n);
  const double r = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < n; ++j) {
    X(j, j) = v[svec_index(j, j, n)];
    for (int i = j + 1; i < n; ++i) X(i, j) = X(j, i) = r * v[svec_index(i, j, n)];
  }
  return X;
}

inline void svec_into(const MatrixXd& X, Eigen::Ref<VectorXd> out) {
  const int n = static_cast<int>(X.rows());
  const double r = std::sqrt(2.0);
  for (int j = 0; j < n; ++j) {
    out[svec_index(j, j, n)] = X(j, j);
    for (int i = j + 1; i < n; ++i) out[svec_index(i, j, n)] = r * 0.5 * (X(i, j) + X(j, i));
  }
}

inline VectorXd svec(const MatrixXd& X) {
  VectorXd v(X.rows() * (X.rows() + 1) / 2);
  svec_into(X, v);
  return v;
}

/// The program in solver form plus the bookkeeping to map results back.
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct StandardForm {
  SparseRows G;
  MatrixXd A;
  VectorXd h, b, c;
  std::vector<InternalCone> cones;
  int degree = 0;

  struct BlockRef {
    bool equality;
    int offset;
    int dim;
    bool rotated;
  };
  std::vector<BlockRef> refs;

  // per cone: the columns of G it touches, its rows restricted to them,
  // and (for SOC) their Gram matrix
  struct ConeCols {
    std::vector<int> cols;
    MatrixXd Gc, gram;
  };
  std::vector<ConeCols> local;

  int n() const { return static_cast<int>(c.size()); }
  int m() const { return static_cast<int>(h.size()); }
  int p() const { return static_cast<int>(b.size()); }
};

inline StandardForm to_standard_form(const ConicProgram& prog) {
  StandardForm sf;
  const int n = prog.num_vars;
  int m = 0, p = 0;
  for (const auto& blk : prog.blocks) (blk.cone.kind == ConeKind::Zero ? p : m) += blk.cone.dim;
  sf.h = VectorXd::Zero(m);
  sf.A = MatrixXd::Zero(p, n);
  sf.b = VectorXd::Zero(p);
  sf.c = prog.objective;
  std::vector<Eigen::Triplet<double>> trip;
  int mo = 0, po = 0;
  const double r = 1.0 / std::sqrt(2.0);
  for (const auto& blk : prog.blocks) {
    const int d = blk.cone.dim;
    if (blk.cone.kind == ConeKind::Zero) {
      sf.A.middleRows(po, d) = MatrixXd(blk.A);
      sf.b.segment(po, d) = -blk.b;
      sf.refs.push_back({true, po, d, false});
      po += d;
      continue;
    }
    VectorXd hb = blk.b;
    ConeKind kind = blk.cone.kind;
    const bool rotated = kind == ConeKind::RotatedSecondOrder;
    for (int row = 0; row < d; ++row) {
      for (SparseRows::InnerIterator it(blk.A, row); it; ++it) {
        const int col = static_cast<int>(it.col());
        const double v = -it.value();
        if (rotated && row < 2) {
          // 2pq >= |u|^2  <=>  ((p+q)/sqrt2, (p-q)/sqrt2, u) in SOC
          trip.emplace_back(mo, col, r * v);
          trip.emplace_back(mo + 1, col, row == 0 ? r * v : -r * v);
        } else {
          trip.emplace_back(mo + row, col, v);
        }
      }
    }
    if (rotated) {
      const double h0 = hb[0], h1 = hb[1];
      hb[0] = r * (h0 + h1);
      hb[1] = r * (h0 - h1);
      kind = ConeKind::SecondOrder;
    }
    sf.h.segment(mo, d) = hb;
    sf.cones.push_back({kind, mo, d, blk.cone.side});
    sf.refs.push_back({false, mo, d, rotated});
    sf.degree += kind == ConeKind::Nonneg ? d : (kind == ConeKind::SecondOrder ? 1 : blk.cone.side);
    mo += d;
  }
  sf.G.resize(m, n);
  sf.G.setFromTriplets(trip.begin(), trip.end());
  sf.G.prune(0.0);
  for (const auto& k : sf.cones) {
    StandardForm::ConeCols cc;
    for (int row = k.offset; row < k.offset + k.dim; ++row)
      for (SparseRows::InnerIterator it(sf.G, row); it; ++it) cc.cols.push_back(static_cast<int>(it.col()));
    std::sort(cc.cols.begin(), cc.cols.end());
    cc.cols.erase(std::unique(cc.cols.begin(), cc.cols.end()), cc.cols.end());
    cc.Gc = MatrixXd::Zero(k.dim, static_cast<Eigen::Index>(cc.cols.size()));
    for (int row = 0; row < k.dim; ++row)
      for (SparseRows::InnerIterator it(sf.G, k.offset + row); it; ++it) {
        const auto pos = std::lower_bound(cc.cols.begin(), cc.cols.end(), static_cast<int>(it.col())) - cc.cols.begin();
        cc.Gc(row, pos) = it.value();
      }
    if (k.kind == ConeKind::SecondOrder && k.dim > 1) cc.gram = cc.Gc.transpose() * cc.Gc;
    sf.local.push_back(std::move(cc));
  }
  return sf;
}

// ---------------------------------------------------------------------------
// Jordan-algebra primitives, cone by cone.

inline VectorXd identity_element(const StandardForm& sf) {
  VectorXd e = VectorXd::Zero(sf.m());
  for (const auto& k : sf.cones) {
    if (k.kind == ConeKind::Nonneg) e.segment(k.offset, k.dim).setOnes();
    else if (k.kind == ConeKind::SecondOrder) e[k.offset] = 1.0;
    else
      for (int j = 0; j < k.side; ++j) e[k.offset + svec_index(j, j, k.side)] = 1.0;
  }
  return e;
}

/// u o v
inline VectorXd jordan_product(const StandardForm& sf, const VectorXd& u, const VectorXd& v) {
  VectorXd out(u.size());
  for (const auto& k : sf.cones) {
    auto us = u.segment(k.offset, k.dim);
    auto vs = v.segment(k.offset, k.dim);
    if (k.kind == ConeKind::Nonneg) {
      out.segment(k.offset, k.dim) = us.cwiseProduct(vs);
    } else if (k.kind == ConeKind::SecondOrder) {
      out[k.offset] = us.dot(vs);
      if (k.dim > 1) out.segment(k.offset + 1, k.dim - 1) = us[0] * vs.tail(k.dim - 1) + vs[0] * us.tail(k.dim - 1);
    } else {
      const MatrixXd U = smat(us, k.side), V = smat(vs, k.side);
      svec_into(0.5 * (U * V + V * U), out.segment(k.offset, k.dim));
    }
  }
  return out;
}

/// Solves lambda o x = v for x. For PSD cones lambda must be diagonal.
inline VectorXd jordan_divide(const StandardForm& sf, const VectorXd& lambda, const VectorXd& v) {
  VectorXd out(v.size());
  for (const auto& k : sf.cones) {
    auto ls = lambda.segment(k.offset, k.dim);
    auto vs = v.segment(k.offset, k.dim);
    if (k.kind == ConeKind::Nonneg) {
      out.segment(k.offset, k.dim) = vs.cwiseQuotient(ls);
    } else if (k.kind == ConeKind::SecondOrder) {
      const double l0 = ls[0];
      if (k.dim == 1) {
        out[k.offset] = vs[0] / l0;
        continue;
      }
      const auto l1 = ls.tail(k.dim - 1);
      const auto v1 = vs.tail(k.dim - 1);
      const double n1 = l1.norm();
      const double det = (l0 - n1) * (l0 + n1);
      const double l1v1 = l1.dot(v1);
      out[k.offset] = (l0 * vs[0] - l1v1) / det;
      out.segment(k.offset + 1, k.dim - 1) = -vs[0] / det * l1 + v1 / l0 + (l1v1 / (l0 * det)) * l1;
    } else {
      const int n = k.side;
      for (int j = 0; j < n; ++j) {
        const double lj = ls[svec_index(j, j, n)];
        for (int i = j; i < n; ++i) {
          const double li = ls[svec_index(i, i, n)];
          const int idx = svec_index(i, j, n);
          out[k.offset + idx] = 2.0 * vs[idx] / (li + lj);
        }
      }
    }
  }
  return out;
}

/// Largest t with v + t e on the boundary, i.e. minus the smallest
/// Jordan eigenvalue of v (maximized over cones).
inline double min_eig_shift(const StandardForm& sf, const VectorXd& v) {
  double t = -std::numeric_limits<double>::infinity();
  for (const auto& k : sf.cones) {
    auto vs = v.segment(k.offset, k.dim);
    if (k.kind == ConeKind::Nonneg) {
      t = std::max(t, -vs.minCoeff());
    } else if (k.kind == ConeKind::SecondOrder) {
      t = std::max(t, -(vs[0] - (k.dim > 1 ? vs.tail(k.dim - 1).norm() : 0.0)));
    } else {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(smat(vs, k.side), Eigen::EigenvaluesOnly);
      t = std::max(t, -es.eigenvalues().minCoeff());
    }
  }
  return t;
}

/// Largest step t (possibly +inf) keeping lambda + t d in the cone, with
/// lambda in the interior (diagonal for PSD cones).
inline double max_step(const StandardForm& sf, const VectorXd& lambda, const VectorXd& d) {
  double t = std::numeric_limits<double>::infinity();
  for (const auto& k : sf.cones) {
    auto ls = lambda.segment(k.offset, k.dim);
    auto ds = d.segment(k.offset, k.dim);
    if (k.kind == ConeKind::Nonneg) {
      for (int i = 0; i < k.dim; ++i)
        if (ds[i] < 0.0) t = std::min(t, -ls[i] / ds[i]);
    } else if (k.kind == ConeKind::SecondOrder) {
      if (k.dim == 1) {
        if (ds[0] < 0.0) t = std::min(t, -ls[0] / ds[0]);
        continue;
      }
      const auto l1 = ls.tail(k.dim - 1);
      const double n1 = l1.norm();
      const double lnorm = std::sqrt((ls[0] - n1) * (ls[0] + n1));
      const double lb0 = ls[0] / lnorm;
      const VectorXd lb1 = l1 / lnorm;
      const double lbd = lb0 * ds[0] - lb1.dot(ds.tail(k.dim - 1));
      const double factor = (lbd + ds[0]) / (lb0 + 1.0);
      const double rho0 = lbd / lnorm;
      const double rho1 = (ds.tail(k.dim - 1) - factor * lb1).norm() / lnorm;
      const double sig = rho1 - rho0;
      if (sig > 0.0) t = std::min(t, 1.0 / sig);
    } else {
      const int n = k.side;
      VectorXd isq(n);
      for (int j = 0; j < n; ++j) isq[j] = 1.0 / std::sqrt(ls[svec_index(j, j, n)]);
      const MatrixXd D = isq.asDiagonal() * smat(ds, n) * isq.asDiagonal();
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(D, Eigen::EigenvaluesOnly);
      const double e = es.eigenvalues().minCoeff();
      if (e < 0.0) t = std::min(t, -1.0 / e);
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Nesterov-Todd scaling: W z = W^{-T} s = lambda.

struct ConeScaling {
  // nonneg: d = sqrt(s/z). soc: eta and wbar = (a, q) with a^2 - |q|^2 = 1.
  // psd: W(Z) = R^T Z R.
  VectorXd d;
  double eta = 1.0;
  MatrixXd R, Rinv;
};

enum class ScaleOp { W, Winv, WT, WinvT };

struct Scaling {
  std::vector<ConeScaling> cones;
  VectorXd lambda;

  static Scaling identity(const StandardForm& sf) {
    Scaling sc;
    for (const auto& k : sf.cones) {
      ConeScaling cs;
      if (k.kind == ConeKind::Nonneg) {
        cs.d = VectorXd::Ones(k.dim);
      } else if (k.kind == ConeKind::SecondOrder) {
        cs.d = VectorXd::Zero(k.dim);
        cs.d[0] = 1.0;
      } else {
        cs.R = cs.Rinv = MatrixXd::Identity(k.side, k.side);
      }
      sc.cones.push_back(std::move(cs));
    }
    sc.lambda = identity_element(sf);
    return sc;
  }

  /// Applies the scaling operator to the rows of X belonging to each cone.
  void apply(const StandardForm& sf, ScaleOp op, MatrixXd& X) const {
    for (std::size_t c = 0; c < sf.cones.size(); ++c) {
      const auto& k = sf.cones[c];
      apply_block(k, cones[c], op, X.middleRows(k.offset, k.dim));
    }
  }

  /// Same, for the rows of a single cone.
  static void apply_block(const InternalCone& k, const ConeScaling& cs, ScaleOp op, Eigen::Ref<MatrixXd> blk) {
    if (k.kind == ConeKind::Nonneg) {
      if (op == ScaleOp::W || op == ScaleOp::WT) blk = cs.d.asDiagonal() * blk;
      else blk = cs.d.cwiseInverse().asDiagonal() * blk;
    } else if (k.kind == ConeKind::SecondOrder) {
      const bool inv = op == ScaleOp::Winv || op == ScaleOp::WinvT;
      const double a = cs.d[0];
      if (k.dim == 1) {
        blk *= inv ? 1.0 / (cs.eta * a) : cs.eta * a;
        return;
      }
      const VectorXd q = cs.d.tail(k.dim - 1);
      const Eigen::RowVectorXd x0 = blk.row(0);
      const Eigen::RowVectorXd qx1 = q.transpose() * blk.bottomRows(k.dim - 1);
      const double sgn = inv ? -1.0 : 1.0;
      const double f = inv ? 1.0 / cs.eta : cs.eta;
      blk.bottomRows(k.dim - 1) += q * (sgn * x0 + qx1 / (1.0 + a));
      blk.bottomRows(k.dim - 1) *= f;
      blk.row(0) = f * (a * x0 + sgn * qx1);
    } else {
      const MatrixXd* L = nullptr;
      bool transpose_left = false;
      // W: R^T X R; WT: R X R^T; Winv: R^-T X R^-1; WinvT: R^-1 X R^-T
      switch (op) {
        case ScaleOp::W: L = &cs.R; transpose_left = true; break;
        case ScaleOp::WT: L = &cs.R; transpose_left = false; break;
        case ScaleOp::Winv: L = &cs.Rinv; transpose_left = true; break;
        case ScaleOp::WinvT: L = &cs.Rinv; transpose_left = false; break;
      }
      for (Eigen::Index col = 0; col < blk.cols(); ++col) {
        const MatrixXd Z = smat(blk.col(col), k.side);
        const MatrixXd Y = transpose_left ? MatrixXd(L->transpose() * Z * *L) : MatrixXd(*L * Z * L->transpose());
        VectorXd out(k.dim);
        svec_into(Y, out);
        blk.col(col) = out;
      }
    }
  }

  VectorXd apply(const StandardForm& sf, ScaleOp op, const VectorXd& v) const {
    VectorXd out = v;
    for (std::size_t c = 0; c < sf.cones.size(); ++c) {
      const auto& k = sf.cones[c];
      const auto& cs = cones[c];
      auto blk = out.segment(k.offset, k.dim);
      const bool inv = op == ScaleOp::Winv || op == ScaleOp::WinvT;
      if (k.kind == ConeKind::Nonneg) {
        if (inv) blk.array() /= cs.d.array();
        else blk.array() *= cs.d.array();
      } else if (k.kind == ConeKind::SecondOrder) {
        const double a = cs.d[0];
        const double f = inv ? 1.0 / cs.eta : cs.eta;
        if (k.dim == 1) {
          blk[0] *= inv ? 1.0 / (cs.eta * a) : cs.eta * a;
          continue;
        }
        const auto q = cs.d.tail(k.dim - 1);
        const double sgn = inv ? -1.0 : 1.0;
        const double x0 = blk[0];
        const double qx1 = q.dot(blk.tail(k.dim - 1));
        blk.tail(k.dim - 1) = f * (blk.tail(k.dim - 1) + (sgn * x0 + qx1 / (1.0 + a)) * q);
        blk[0] = f * (a * x0 + sgn * qx1);
      } else {
        MatrixXd X = blk;
        apply_block(k, cs, op, X);
        blk = X.col(0);
      }
    }
    return out;
  }
};

/// Symmetric square-root factor L with L L^T = S, via eigendecomposition
/// (robust when S is nearly singular).
inline std::optional<MatrixXd> psd_factor(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  if (!(es.eigenvalues().minCoeff() > 0.0)) return std::nullopt;
  return MatrixXd(es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal());
}

/// NT scaling for strictly interior s, z. Returns nullopt if either
/// point has left the interior numerically.
inline std::optional<Scaling> nt_scaling(const StandardForm& sf, const VectorXd& s, const VectorXd& z) {
  Scaling sc;
  sc.lambda = VectorXd::Zero(sf.m());
  for (const auto& k : sf.cones) {
    auto ss = s.segment(k.offset, k.dim);
    auto zs = z.segment(k.offset, k.dim);
    ConeScaling cs;
    if (k.kind == ConeKind::Nonneg) {
      if ((ss.array() <= 0.0).any() || (zs.array() <= 0.0).any()) return std::nullopt;
      cs.d = (ss.array() / zs.array()).sqrt();
      sc.lambda.segment(k.offset, k.dim) = (ss.array() * zs.array()).sqrt();
    } else if (k.kind == ConeKind::SecondOrder) {
      const double sn1 = k.dim > 1 ? ss.tail(k.dim - 1).norm() : 0.0;
      const double zn1 = k.dim > 1 ? zs.tail(k.dim - 1).norm() : 0.0;
      const double sres = (ss[0] - sn1) * (ss[0] + sn1);
      const double zres = (zs[0] - zn1) * (zs[0] + zn1);
      if (!(ss[0] - sn1 > 0.0) || !(zs[0] - zn1 > 0.0)) return std::nullopt;
      const VectorXd sb = ss / std::sqrt(sres);
      const VectorXd zb = zs / std::sqrt(zres);
      const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
      cs.d.resize(k.dim);
      cs.d[0] = (sb[0] + zb[0]) / (2.0 * gamma);
      if (k.dim > 1) cs.d.tail(k.dim - 1) = (sb.tail(k.dim - 1) - zb.tail(k.dim - 1)) / (2.0 * gamma);
      cs.eta = std::pow(sres / zres, 0.25);
      const double a = cs.d[0];
      auto lam = sc.lambda.segment(k.offset, k.dim);
      if (k.dim == 1) {
        lam[0] = cs.eta * a * zs[0];
      } else {
        const VectorXd q = cs.d.tail(k.dim - 1);
        const double qz1 = q.dot(zs.tail(k.dim - 1));
        lam[0] = cs.eta * (a * zs[0] + qz1);
        lam.tail(k.dim - 1) = cs.eta * (q * zs[0] + zs.tail(k.dim - 1) + q * (qz1 / (1.0 + a)));
      }
    } else {
      const int n = k.side;
      const auto ls_opt = psd_factor(smat(ss, n));
      const auto lz_opt = psd_factor(smat(zs, n));
      if (!ls_opt || !lz_opt) return std::nullopt;
      const MatrixXd& Ls = *ls_opt;
      const MatrixXd& Lz = *lz_opt;
      Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const VectorXd sv = svd.singularValues();
      if (!(sv.minCoeff() > 0.0)) return std::nullopt;
      const VectorXd isq = sv.cwiseSqrt().cwiseInverse();
      cs.R = Ls * svd.matrixV() * isq.asDiagonal();
      cs.Rinv = isq.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
      for (int j = 0; j < n; ++j) sc.lambda[k.offset + svec_index(j, j, n)] = sv[j];
    }
    sc.cones.push_back(std::move(cs));
  }
  return sc;
}

// ---------------------------------------------------------------------------
// KKT system
//   [ 0  A^T  G^T    ] [x]   [bx]
//   [ A   0    0     ] [y] = [by]
//   [ G   0  -W^T W  ] [z]   [bz]
// solved by eliminating z and factoring G^T W^-1 W^-T G (+ A rows).

class KktSolver {
 public:
  KktSolver(const StandardForm& sf, const Scaling& sc) : sf_(sf), sc_(sc) {
    const int n = sf.n(), p = sf.p();
    MatrixXd H = MatrixXd::Zero(n, n);
    for (std::size_t c = 0; c < sf.cones.size(); ++c) add_cone(sf.cones[c], sc.cones[c], sf.local[c], H);
    const double reg = 1e-13 * (1.0 + (H.size() ? H.diagonal().cwiseAbs().maxCoeff() : 0.0));
    H.diagonal().array() += reg;
    if (p == 0) {
      llt_.compute(H);
      use_llt_ = llt_.info() == Eigen::Success;
      if (!use_llt_) lu_.compute(H);
    } else {
      MatrixXd K = MatrixXd::Zero(n + p, n + p);
      K.topLeftCorner(n, n) = H;
      K.topRightCorner(n, p) = sf.A.transpose();
      K.bottomLeftCorner(p, n) = sf.A;
      K.bottomRightCorner(p, p).diagonal().setConstant(-reg);
      lu_.compute(K);
    }
  }

  struct Sol {
    VectorXd x, y, z;
  };

  Sol solve(const VectorXd& bx, const VectorXd& by, const VectorXd& bz, int refine = 2) const {
    Sol s = solve_once(bx, by, bz);
    for (int it = 0; it < refine; ++it) {
      const VectorXd rx = bx - sf_.A.transpose() * s.y - sf_.G.transpose() * s.z;
      const VectorXd ry = by - sf_.A * s.x;
      const VectorXd rz = bz - sf_.G * s.x + sc_.apply(sf_, ScaleOp::WT, sc_.apply(sf_, ScaleOp::W, s.z));
      const Sol d = solve_once(rx, ry, rz);
      s.x += d.x;
      s.y += d.y;
      s.z += d.z;
    }
    return s;
  }

 private:
  Sol solve_once(const VectorXd& bx, const VectorXd& by, const VectorXd& bz) const {
    const int n = sf_.n(), p = sf_.p();
    // with V = W^-1 W^-T:  x from (G^T V G) x = bx + G^T V bz,  z = V (G x - bz)
    VectorXd rhs(n + p);
    rhs.head(n) = bx + sf_.G.transpose() * scale_inverse(bz);
    rhs.tail(p) = by;
    VectorXd sol = (p == 0 && use_llt_) ? VectorXd(llt_.solve(rhs)) : VectorXd(lu_.solve(rhs));
    Sol s;
    s.x = sol.head(n);
    s.y = sol.tail(p);
    s.z = scale_inverse(VectorXd(sf_.G * s.x - bz));
    return s;
  }

  VectorXd scale_inverse(const VectorXd& v) const {
    return sc_.apply(sf_, ScaleOp::Winv, sc_.apply(sf_, ScaleOp::WinvT, v));
  }

  /// H += G_c^T W_c^-1 W_c^-T G_c over the columns the cone touches.
  void add_cone(const InternalCone& k, const ConeScaling& cs, const StandardForm::ConeCols& cc, MatrixXd& H) const {
    const auto nc = static_cast<Eigen::Index>(cc.cols.size());
    if (nc == 0) return;
    const MatrixXd& Gc = cc.Gc;
    MatrixXd Hc;
    if (k.kind == ConeKind::Nonneg) {
      const MatrixXd Gs = cs.d.cwiseInverse().asDiagonal() * Gc;
      Hc.noalias() = Gs.transpose() * Gs;
    } else if (k.kind == ConeKind::SecondOrder && k.dim > 1) {
      // In the plane spanned by e_0 and (0, q/|q|), W^-1 = (1/eta) [[a, -|q|], [-|q|, a]];
      // it is 1/eta times the identity elsewhere. So
      // W^-2 = (1/eta^2) (I + V T V^T), T = 2|q| [[|q|, -a], [-a, |q|]].
      const double a = cs.d[0];
      const auto q = cs.d.tail(k.dim - 1);
      const double nq = q.norm();
      Hc = cc.gram;
      if (nq > 0.0) {
        const VectorXd u0 = Gc.row(0).transpose();
        const VectorXd u1 = Gc.bottomRows(k.dim - 1).transpose() * (q / nq);
        const double t = 2.0 * nq;
        // T = t [[nq, -a], [-a, nq]]
        for (Eigen::Index j = 0; j < nc; ++j) {
          const double c0 = t * (nq * u0[j] - a * u1[j]);
          const double c1 = t * (nq * u1[j] - a * u0[j]);
          Hc.col(j) += c0 * u0 + c1 * u1;
        }
      }
      Hc /= cs.eta * cs.eta;
    } else {
      MatrixXd Gd = Gc;
      Scaling::apply_block(k, cs, ScaleOp::WinvT, Gd);
      Hc.noalias() = Gd.transpose() * Gd;
    }
    for (Eigen::Index j = 0; j < nc; ++j) {
      const int cj = cc.cols[static_cast<std::size_t>(j)];
      for (Eigen::Index i = 0; i < nc; ++i) H(cc.cols[static_cast<std::size_t>(i)], cj) += Hc(i, j);
    }
  }

  const StandardForm& sf_;
  const Scaling& sc_;
  Eigen::LLT<MatrixXd> llt_;
  Eigen::PartialPivLU<MatrixXd> lu_;
  bool use_llt_ = false;
};

// ---------------------------------------------------------------------------

inline ConicSolution finish(const StandardForm& sf, SolveStatus status, const VectorXd& x, const VectorXd& y,
                            const VectorXd& z, int iters) {
  ConicSolution out;
  out.status = status;
  out.x = x;
  out.iterations = iters;
  const double r = 1.0 / std::sqrt(2.0);
  for (const auto& ref : sf.refs) {
    if (ref.equality) {
      out.duals.push_back(-y.segment(ref.offset, ref.dim));
      continue;
    }
    VectorXd zb = z.segment(ref.offset, ref.dim);
    if (ref.rotated) {
      const double z0 = zb[0], z1 = zb[1];
      zb[0] = r * (z0 + z1);
      zb[1] = r * (z0 - z1);
    }
    out.duals.push_back(std::move(zb));
  }
  return out;
}

/// Runs the embedding to termination. Status Optimal means relative primal
/// and dual residuals <= feastol and (gap <= abstol or relative gap <= reltol).
inline ConicSolution solve_hsd(const ConicProgram& prog, const SolverSettings& opt) {
  prog.validate();
  const StandardForm sf = to_standard_form(prog);
  const int n = sf.n(), m = sf.m(), p = sf.p();
  const VectorXd& c = sf.c;
  const VectorXd& h = sf.h;
  const VectorXd& b = sf.b;
  const VectorXd e = identity_element(sf);

  const double resx0 = std::max(1.0, c.norm());
  const double resy0 = std::max(1.0, b.norm());
  const double resz0 = std::max(1.0, h.norm());

  VectorXd x, y, z, s;
  {
    const Scaling id = Scaling::identity(sf);
    const KktSolver kkt(sf, id);
    const auto primal = kkt.solve(VectorXd::Zero(n), b, h);
    x = primal.x;
    s = -primal.z;
    const auto dual = kkt.solve(-c, VectorXd::Zero(p), VectorXd::Zero(m));
    y = dual.y;
    z = dual.z;
    const double ts = min_eig_shift(sf, s);
    const double tz = min_eig_shift(sf, z);
    if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ts) * e;
    if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + tz) * e;
  }
  double tau = 1.0, kappa = 1.0;

  ConicSolution last;
  for (int iter = 0;; ++iter) {
    const VectorXd Aty_Gtz = sf.A.transpose() * y + sf.G.transpose() * z;
    const VectorXd rx = Aty_Gtz + c * tau;
    const VectorXd Ax = sf.A * x;
    const VectorXd Gx_s = sf.G * x + s;
    const VectorXd ry = b * tau - Ax;
    const VectorXd rz = h * tau - Gx_s;
    const double cx = c.dot(x), by_hz = b.dot(y) + h.dot(z);
    const double rt = -cx - by_hz - kappa;
    const double sz = s.dot(z);
    const double mu = (sz + tau * kappa) / (sf.degree + 1);

    const double pcost = cx / tau;
    const double dcost = -by_hz / tau;
    const double gap = sz / (tau * tau);
    double relgap = std::numeric_limits<double>::infinity();
    if (pcost < 0.0) relgap = gap / -pcost;
    else if (dcost > 0.0) relgap = gap / dcost;
    const double pres = std::max(ry.norm() / resy0, rz.norm() / resz0) / tau;
    const double dres = rx.norm() / resx0 / tau;

    auto fill = [&](ConicSolution sol) {
      sol.primal_objective = pcost;
      sol.dual_objective = dcost;
      sol.primal_residual = pres;
      sol.dual_residual = dres;
      sol.gap = gap;
      sol.relative_gap = relgap;
      return sol;
    };

    if (!std::isfinite(pres) || !std::isfinite(dres) || !std::isfinite(gap)) {
      last.status = SolveStatus::NumericalFailure;
      last.iterations = iter;
      return last;
    }
    last = fill(finish(sf, SolveStatus::NumericalFailure, x / tau, y / tau, z / tau, iter));

    if (pres <= opt.feastol && dres <= opt.feastol && (gap <= opt.abstol || relgap <= opt.reltol))
      return fill(finish(sf, SolveStatus::Optimal, x / tau, y / tau, z / tau, iter));

    if (by_hz < 0.0) {
      const double pinf = Aty_Gtz.norm() / resx0 / -by_hz;
      if (pinf <= opt.feastol) {
        ConicSolution sol = finish(sf, SolveStatus::PrimalInfeasible, x / tau, y / -by_hz, z / -by_hz, iter);
        sol.primal_residual = pinf;
        return sol;
      }
    }
    if (cx < 0.0) {
      const double dinf = std::max(Ax.norm() / resy0, Gx_s.norm() / resz0) / -cx;
      if (dinf <= opt.feastol) {
        ConicSolution sol = finish(sf, SolveStatus::DualInfeasible, x / -cx, y, z, iter);
        sol.dual_residual = dinf;
        return sol;
      }
    }
    if (iter >= opt.max_iters) {
      last.status = SolveStatus::MaxIter;
      return last;
    }

    const auto scaling = nt_scaling(sf, s, z);
    if (!scaling) return last;
    const Scaling& W = *scaling;
    const VectorXd& lam = W.lambda;
    const KktSolver kkt(sf, W);
    const auto tau_dir = kkt.solve(-c, b, h);
    const double tau_den_base = kappa / tau - c.dot(tau_dir.x) - b.dot(tau_dir.y) - h.dot(tau_dir.z);

    struct Dir {
      VectorXd dx, dy, dz, ds;
      double dtau, dkappa;
    };
    auto direction = [&](double sigma, const VectorXd& ds_rhs, double dk_rhs) {
      const VectorXd lds = jordan_divide(sf, lam, ds_rhs);
      const VectorXd bz = (1.0 - sigma) * rz - W.apply(sf, ScaleOp::WT, lds);
      const auto sol = kkt.solve(-(1.0 - sigma) * rx, (1.0 - sigma) * ry, bz);
      const double btau = -(1.0 - sigma) * rt + dk_rhs / tau;
      Dir d;
      d.dtau = (btau + c.dot(sol.x) + b.dot(sol.y) + h.dot(sol.z)) / tau_den_base;
      d.dx = sol.x + d.dtau * tau_dir.x;
      d.dy = sol.y + d.dtau * tau_dir.y;
      d.dz = sol.z + d.dtau * tau_dir.z;
      const VectorXd wdz = W.apply(sf, ScaleOp::W, d.dz);
      d.ds = W.apply(sf, ScaleOp::WT, VectorXd(lds - wdz));
      d.dkappa = (dk_rhs - kappa * d.dtau) / tau;
      return std::pair{d, std::pair{VectorXd(lds - wdz), wdz}};
    };
    auto step_length = [&](const Dir& d, const VectorXd& ds_scaled, const VectorXd& dz_scaled) {
      double a = std::min(max_step(sf, lam, ds_scaled), max_step(sf, lam, dz_scaled));
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    const VectorXd lamlam = jordan_product(sf, lam, lam);
    auto [aff, aff_scaled] = direction(0.0, -lamlam, -tau * kappa);
    const double a_aff = std::min(1.0, step_length(aff, aff_scaled.first, aff_scaled.second));
    const double sigma = std::pow(1.0 - a_aff, 3);

    const VectorXd corr = jordan_product(sf, aff_scaled.first, aff_scaled.second);
    const VectorXd ds_rhs = -lamlam + sigma * mu * e - corr;
    const double dk_rhs = -tau * kappa + sigma * mu - aff.dtau * aff.dkappa;
    auto [dir, dir_scaled] = direction(sigma, ds_rhs, dk_rhs);
    const double amax = step_length(dir, dir_scaled.first, dir_scaled.second);
    const double alpha = std::min(1.0, 0.99 * amax);
    if (!(alpha > 1e-13) || !std::isfinite(dir.dtau)) return last;

    x += alpha * dir.dx;
    y += alpha * dir.dy;
    z += alpha * dir.dz;
    s += alpha * dir.ds;
    tau += alpha * dir.dtau;
    kappa += alpha * dir.dkappa;
  }
}

}  // namespace nomabf::ipm

namespace nomabf {

/// Built-in SOCP backend (Zero/Nonneg/SOC/RSOC).
class ReferenceSocpBackend : public ConicBackend {
 public:
  std::string name() const override { return "reference"; }
  BackendCapability capability() const override { return {true, false}; }
  ConicSolution solve(const ConicProgram& prog, const SolverSettings& settings) const override {
    require_capability(prog, capability());
    return ipm::solve_hsd(prog, settings);
  }
};

/// Same embedding with PSD cones enabled.
class HsdPsdBackend : public ConicBackend {
 public:
  std::string name() const override { return "hsd-psd"; }
  BackendCapability capability() const override { return {true, true}; }
  ConicSolution solve(const ConicProgram& prog, const SolverSettings& settings) const override {
    return ipm::solve_hsd(prog, settings);
  }
};

inline ConicSolution reference_ipm_solve(const ConicProgram& prog, double tol = 1e-8) {
  return solve(prog, ReferenceSocpBackend{}, tol);
}

inline std::unique_ptr<ConicBackend> make_backend(const std::string& name) {
  if (name == "reference") return std::make_unique<ReferenceSocpBackend>();
  if (name == "hsd-psd") return std::make_unique<HsdPsdBackend>();
  throw ConfigError("backend", "unknown backend '" + name + "' (available: reference, hsd-psd)");
}

}  // namespace nomabf
