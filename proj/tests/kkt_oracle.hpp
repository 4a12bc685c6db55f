// SPDX-License-Identifier: Apache-2.0
#pragma once

// Independent optimality check for ConicSolution: recomputes cone membership,
// stationarity and complementarity from the raw program data.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "nomabf/conic.hpp"

namespace nomabf::oracle {

/// Distance of v from the cone (0 inside). PSD uses the smallest eigenvalue.
inline double cone_violation(const Cone& cone, const Eigen::VectorXd& v) {
  switch (cone.kind) {
    case ConeKind::Zero: return v.cwiseAbs().maxCoeff();
    case ConeKind::Nonneg: return std::max(0.0, -v.minCoeff());
    case ConeKind::SecondOrder:
      return std::max(0.0, (cone.dim > 1 ? v.tail(cone.dim - 1).norm() : 0.0) - v[0]);
    case ConeKind::RotatedSecondOrder: {
      const double tail = cone.dim > 2 ? v.tail(cone.dim - 2).squaredNorm() : 0.0;
      return std::max({0.0, -v[0], -v[1], std::sqrt(std::max(0.0, tail - 2.0 * v[0] * v[1])) -
                                              std::sqrt(std::max(0.0, 2.0 * v[0] * v[1]))});
    }
    case ConeKind::PositiveSemidefinite: {
      const int n = cone.side;
      Eigen::MatrixXd X(n, n);
      int idx = 0;
      for (int j = 0; j < n; ++j)
        for (int i = j; i < n; ++i, ++idx) X(i, j) = X(j, i) = (i == j) ? v[idx] : v[idx] / std::sqrt(2.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X);
      return std::max(0.0, -es.eigenvalues().minCoeff());
    }
  }
  return 0.0;
}

struct KktResiduals {
  double primal = 0.0;         // max cone violation of A_i x + b_i
  double dual_cone = 0.0;      // max dual cone violation (self-dual cones)
  double stationarity = 0.0;   // |c - sum A_i^T z_i|_inf
  double complementarity = 0.0;  // |sum z_i^T (A_i x + b_i)|
  double max() const { return std::max({primal, dual_cone, stationarity, complementarity}); }
};

inline KktResiduals kkt_residuals(const ConicProgram& prog, const ConicSolution& sol) {
  KktResiduals r;
  Eigen::VectorXd grad = prog.objective;
  for (std::size_t i = 0; i < prog.blocks.size(); ++i) {
    const auto& b = prog.blocks[i];
    const Eigen::VectorXd s = b.A * sol.x + b.b;
    const Eigen::VectorXd& z = sol.duals[i];
    r.primal = std::max(r.primal, cone_violation(b.cone, s));
    if (b.cone.kind != ConeKind::Zero) r.dual_cone = std::max(r.dual_cone, cone_violation(b.cone, z));
    grad -= b.A.transpose() * z;
    r.complementarity += z.dot(s);
  }
  r.stationarity = grad.cwiseAbs().maxCoeff();
  r.complementarity = std::abs(r.complementarity);
  return r;
}

}  // namespace nomabf::oracle
