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
#include <Eigen/SparseCore>
#include <json.hpp>

#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nomabf/channel.hpp"
#include "nomabf/errors.hpp"

namespace nomabf {

enum class ConeKind { Zero, Nonneg, SecondOrder, RotatedSecondOrder, PositiveSemidefinite };

inline const char* cone_kind_name(ConeKind k) {
  switch (k) {
    case ConeKind::Zero: return "zero";
    case ConeKind::Nonneg: return "nonneg";
    case ConeKind::SecondOrder: return "soc";
    case ConeKind::RotatedSecondOrder: return "rsoc";
    case ConeKind::PositiveSemidefinite: return "psd";
  }
  return "?";
}

/// Cone membership of an affine block A x + b.
///  - SecondOrder(d): (t, u) with t >= ||u||, d = 1 + len(u).
///  - RotatedSecondOrder(d): (p, q, u) with 2 p q >= ||u||^2, p, q >= 0.
///  - PositiveSemidefinite(n): svec of a symmetric n x n matrix, lower
///    triangle column by column, off-diagonal entries scaled by sqrt(2) so
///    that svec(X)^T svec(Y) = tr(XY).
struct Cone {
  ConeKind kind = ConeKind::Nonneg;
  int dim = 0;
  int side = 0;  // PSD only

  static Cone zero(int d) { return {ConeKind::Zero, d, 0}; }
  static Cone nonneg(int d) { return {ConeKind::Nonneg, d, 0}; }
  static Cone soc(int d) { return {ConeKind::SecondOrder, d, 0}; }
  static Cone rsoc(int d) { return {ConeKind::RotatedSecondOrder, d, 0}; }
  static Cone psd(int n) { return {ConeKind::PositiveSemidefinite, n * (n + 1) / 2, n}; }

  std::string name() const {
    std::string s = cone_kind_name(kind);
    return s + "(" + std::to_string(kind == ConeKind::PositiveSemidefinite ? side : dim) + ")";
  }
};

/// Sparse affine expression sum_j coef_j x_j + constant.
struct AffineRow {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  AffineRow() = default;
  explicit AffineRow(double c) : constant(c) {}

  AffineRow& add(int var, double coef) {
    if (coef != 0.0) terms.emplace_back(var, coef);
    return *this;
  }
  AffineRow& operator+=(const AffineRow& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
  }
  AffineRow scaled(double f) const {
    AffineRow r;
    for (auto [j, v] : terms) r.terms.emplace_back(j, v * f);
    r.constant = constant * f;
    return r;
  }
  double eval(const Eigen::VectorXd& x) const {
    double v = constant;
    for (auto [j, c] : terms) v += c * x[j];
    return v;
  }
};

struct ConeBlock {
  Eigen::SparseMatrix<double, Eigen::RowMajor> A;
  Eigen::VectorXd b;
  Cone cone;
  std::string label;
};

/// minimize c^T x subject to A_i x + b_i in K_i for every block i.
struct ConicProgram {
  int num_vars = 0;
  Eigen::VectorXd objective;
  std::vector<ConeBlock> blocks;

  explicit ConicProgram(int n = 0) : num_vars(n), objective(Eigen::VectorXd::Zero(n)) {}

  void add_block(const Cone& cone, const std::vector<AffineRow>& rows, std::string label = {}) {
    if (static_cast<int>(rows.size()) != cone.dim)
      throw std::invalid_argument("ConicProgram: block '" + label + "' has " + std::to_string(rows.size()) +
                                  " rows for cone " + cone.name());
    ConeBlock blk;
    blk.cone = cone;
    blk.label = std::move(label);
    blk.A.resize(cone.dim, num_vars);
    blk.b.resize(cone.dim);
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < cone.dim; ++i) {
      blk.b[i] = rows[static_cast<std::size_t>(i)].constant;
      for (auto [j, v] : rows[static_cast<std::size_t>(i)].terms) {
        if (j < 0 || j >= num_vars) throw std::out_of_range("ConicProgram: variable index out of range");
        trip.emplace_back(i, j, v);
      }
    }
    blk.A.setFromTriplets(trip.begin(), trip.end());
    blocks.push_back(std::move(blk));
  }

  std::size_t count(ConeKind kind) const {
    std::size_t c = 0;
    for (const auto& b : blocks) c += b.cone.kind == kind ? 1 : 0;
    return c;
  }

  void validate() const {
    if (objective.size() != num_vars) throw std::invalid_argument("ConicProgram: objective length mismatch");
    for (const auto& b : blocks) {
      if (b.A.rows() != b.cone.dim || b.b.size() != b.cone.dim || b.A.cols() != num_vars)
        throw std::invalid_argument("ConicProgram: block '" + b.label + "' dimension mismatch");
      if (b.cone.kind == ConeKind::SecondOrder && b.cone.dim < 1)
        throw std::invalid_argument("ConicProgram: empty second-order cone");
      if (b.cone.kind == ConeKind::RotatedSecondOrder && b.cone.dim < 2)
        throw std::invalid_argument("ConicProgram: rotated cone needs dim >= 2");
      if (b.cone.kind == ConeKind::PositiveSemidefinite && b.cone.dim != b.cone.side * (b.cone.side + 1) / 2)
        throw std::invalid_argument("ConicProgram: PSD block size mismatch");
    }
  }
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIter, NumericalFailure };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::MaxIter: return "max_iter";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

/// Dual multipliers z_i satisfy c = sum_i A_i^T z_i with z_i in the dual
/// cone (free for Zero blocks); the dual objective is -sum_i b_i^T z_i.
/// For PrimalInfeasible the duals hold a certificate: sum_i A_i^T z_i = 0,
/// sum_i b_i^T z_i = -1.
struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x;
  std::vector<Eigen::VectorXd> duals;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double relative_gap = 0.0;
  int iterations = 0;
};

struct BackendCapability {
  bool supports_soc = true;
  bool supports_psd = false;
};

struct SolverSettings {
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  int max_iters = 200;
};

class ConicBackend {
 public:
  virtual ~ConicBackend() = default;
  virtual std::string name() const = 0;
  virtual BackendCapability capability() const = 0;
  virtual ConicSolution solve(const ConicProgram& prog, const SolverSettings& settings) const = 0;
};

/// Throws UnsupportedCone naming the first block the backend cannot handle.
inline void require_capability(const ConicProgram& prog, const BackendCapability& cap) {
  for (const auto& b : prog.blocks) {
    const bool soc_like = b.cone.kind == ConeKind::SecondOrder || b.cone.kind == ConeKind::RotatedSecondOrder;
    if ((soc_like && !cap.supports_soc) || (b.cone.kind == ConeKind::PositiveSemidefinite && !cap.supports_psd))
      throw UnsupportedCone(b.cone.name() + " in block '" + b.label + "'");
  }
}

inline ConicSolution solve(const ConicProgram& prog, const ConicBackend& backend, double tol = 1e-8) {
  prog.validate();
  require_capability(prog, backend.capability());
  SolverSettings s;
  s.feastol = s.abstol = s.reltol = tol;
  return backend.solve(prog, s);
}

// ---------------------------------------------------------------------------
// Complex-to-real lowering.
//
// A complex K-vector variable w occupies 2K consecutive reals, interleaved:
// x[off + 2k] = Re w_k, x[off + 2k + 1] = Im w_k. Real scalars (epigraph t,
// alpha, ...) get single slots. Then h^H w = sum_k conj(h_k) w_k has
//   Re = sum_k Re h_k Re w_k + Im h_k Im w_k
//   Im = sum_k Re h_k Im w_k - Im h_k Re w_k.

class ComplexLayout {
 public:
  struct Slot {
    int offset;
    int length;
  };

  int add_vector(int length) {
    slots_.push_back({num_real_, length});
    num_real_ += 2 * length;
    return static_cast<int>(slots_.size()) - 1;
  }

  int add_scalar() { return num_real_++; }

  int num_real() const { return num_real_; }
  std::size_t num_vectors() const { return slots_.size(); }
  const Slot& slot(int handle) const { return slots_.at(static_cast<std::size_t>(handle)); }

  int re(int handle, int k) const { return slot(handle).offset + 2 * k; }
  int im(int handle, int k) const { return slot(handle).offset + 2 * k + 1; }

  /// Writes the declared vectors into a real vector; scalar slots stay zero.
  Eigen::VectorXd lower(const std::vector<CVector>& values) const {
    if (values.size() != slots_.size()) throw std::invalid_argument("ComplexLayout::lower: vector count");
    Eigen::VectorXd x = Eigen::VectorXd::Zero(num_real_);
    for (std::size_t v = 0; v < slots_.size(); ++v) {
      if (values[v].size() != slots_[v].length) throw std::invalid_argument("ComplexLayout::lower: length");
      for (int k = 0; k < slots_[v].length; ++k) {
        x[slots_[v].offset + 2 * k] = values[v][k].real();
        x[slots_[v].offset + 2 * k + 1] = values[v][k].imag();
      }
    }
    return x;
  }

  std::vector<CVector> lift(const Eigen::VectorXd& x) const {
    if (x.size() != num_real_) throw std::invalid_argument("ComplexLayout::lift: size");
    std::vector<CVector> out;
    for (const auto& s : slots_) {
      CVector v(s.length);
      for (int k = 0; k < s.length; ++k) v[k] = cd(x[s.offset + 2 * k], x[s.offset + 2 * k + 1]);
      out.push_back(std::move(v));
    }
    return out;
  }

  /// Real and imaginary parts of h^H w_handle as affine rows.
  std::array<AffineRow, 2> inner(const CVector& h, int handle) const {
    const Slot& s = slot(handle);
    if (h.size() != s.length) throw std::invalid_argument("ComplexLayout::inner: length");
    std::array<AffineRow, 2> rows;
    for (int k = 0; k < s.length; ++k) {
      rows[0].add(re(handle, k), h[k].real()).add(im(handle, k), h[k].imag());
      rows[1].add(re(handle, k), -h[k].imag()).add(im(handle, k), h[k].real());
    }
    return rows;
  }

  /// Re(conj(c) * (h^H w_handle)): a real linear functional of w.
  AffineRow real_projection(const CVector& h, int handle, cd c) const {
    auto [re_row, im_row] = inner(h, handle);
    re_row.terms.reserve(re_row.terms.size() + im_row.terms.size());
    AffineRow out = re_row.scaled(c.real());
    out += im_row.scaled(c.imag());
    return out;
  }

 private:
  std::vector<Slot> slots_;
  int num_real_ = 0;
};

// ---------------------------------------------------------------------------
// Debug dump. Schema "nomabf.conic/1":
//   { "schema": ..., "num_vars": n, "objective": [c...],
//     "blocks": [ { "label", "cone", "dim", "side", "b": [...],
//                   "triplets": [[row, col, value], ...] } ] }

inline nlohmann::json to_json(const ConicProgram& prog) {
  nlohmann::json j;
  j["schema"] = "nomabf.conic/1";
  j["num_vars"] = prog.num_vars;
  j["objective"] = std::vector<double>(prog.objective.data(), prog.objective.data() + prog.objective.size());
  j["blocks"] = nlohmann::json::array();
  for (const auto& b : prog.blocks) {
    nlohmann::json jb;
    jb["label"] = b.label;
    jb["cone"] = cone_kind_name(b.cone.kind);
    jb["dim"] = b.cone.dim;
    jb["side"] = b.cone.side;
    jb["b"] = std::vector<double>(b.b.data(), b.b.data() + b.b.size());
    nlohmann::json trip = nlohmann::json::array();
    for (int r = 0; r < b.A.outerSize(); ++r)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(b.A, r); it; ++it)
        trip.push_back({it.row(), it.col(), it.value()});
    jb["triplets"] = std::move(trip);
    j["blocks"].push_back(std::move(jb));
  }
  return j;
}

inline ConicProgram conic_program_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "nomabf.conic/1") throw ConfigError("/schema", "expected nomabf.conic/1");
  ConicProgram prog(j.at("num_vars").get<int>());
  const auto c = j.at("objective").get<std::vector<double>>();
  if (static_cast<int>(c.size()) != prog.num_vars) throw ConfigError("/objective", "length != num_vars");
  prog.objective = Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
  for (const auto& jb : j.at("blocks")) {
    const std::string kind = jb.at("cone").get<std::string>();
    Cone cone;
    const int dim = jb.at("dim").get<int>();
    if (kind == "zero") cone = Cone::zero(dim);
    else if (kind == "nonneg") cone = Cone::nonneg(dim);
    else if (kind == "soc") cone = Cone::soc(dim);
    else if (kind == "rsoc") cone = Cone::rsoc(dim);
    else if (kind == "psd") cone = Cone::psd(jb.at("side").get<int>());
    else throw ConfigError("/blocks/cone", "unknown cone '" + kind + "'");
    const auto b = jb.at("b").get<std::vector<double>>();
    if (static_cast<int>(b.size()) != cone.dim) throw ConfigError("/blocks/b", "length != dim");
    std::vector<AffineRow> rows(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) rows[i].constant = b[i];
    for (const auto& t : jb.at("triplets")) rows.at(t.at(0).get<std::size_t>()).add(t.at(1).get<int>(), t.at(2).get<double>());
    prog.add_block(cone, rows, jb.value("label", ""));
  }
  return prog;
}

}  // namespace nomabf
