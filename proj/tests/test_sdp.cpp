// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "instances.hpp"
#include "kkt_oracle.hpp"
#include "nomabf/sca.hpp"
#include "nomabf/sdp.hpp"

using namespace nomabf;

namespace {

const HsdPsdBackend kPsd;
const RngStream kRng{42, 0};

MatrixXcd random_hermitian(int k, const RngStream& r) {
  MatrixXcd A(k, k);
  for (int j = 0; j < k; ++j) A.col(j) = oracle::gaussian_vector(k, r.substream(static_cast<std::uint64_t>(j)));
  return A + A.adjoint();
}

}  // namespace

TEST(Embedding, TraceDoubling) {
  const RngStream r{3, 3};
  for (int k : {1, 2, 4}) {
    const MatrixXcd C = random_hermitian(k, r.substream(0));
    const MatrixXcd W = random_hermitian(k, r.substream(1));
    const double lhs = (embed_hermitian(C).cwiseProduct(embed_hermitian(W))).sum();
    EXPECT_NEAR(lhs, 2.0 * (C * W).trace().real(), 1e-10);
    EXPECT_NEAR(embed_hermitian(W).trace(), 2.0 * W.trace().real(), 1e-12);
    // the parametrized functional carries no doubling
    const HermitianParam hp(k);
    EXPECT_NEAR(hp.trace_functional(C).dot(hp.params(W)), (C * W).trace().real(), 1e-10);
    EXPECT_LE((hp.matrix(hp.params(W)) - W).norm(), 1e-15);
  }
}

TEST(Embedding, PsdRowsMatchDirectEmbedding) {
  const int k = 3;
  const HermitianParam hp(k);
  const MatrixXcd W = random_hermitian(k, RngStream{5, 5});
  const Eigen::VectorXd p = hp.params(W);
  const auto rows = embedded_psd_rows(hp, 0);
  const Eigen::VectorXd expect = ipm::svec(embed_hermitian(W));
  ASSERT_EQ(rows.size(), static_cast<std::size_t>(expect.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_NEAR(rows[i].eval(p), expect[static_cast<Eigen::Index>(i)], 1e-12);
}

TEST(Sdp, BlockCounts) {
  const auto inst = oracle::random_instance(3, 4, 1, 1.0, 2.0);
  const auto sp = build_sdp(inst);
  EXPECT_EQ(sp.program.count(ConeKind::Nonneg), 4u + 6u);
  EXPECT_EQ(sp.program.count(ConeKind::PositiveSemidefinite), 3u);
  EXPECT_THROW(solve(sp.program, ReferenceSocpBackend{}), UnsupportedCone);
}

TEST(Sdp, ScalarInstance) {
  const auto inst = oracle::scalar_instance();
  const auto sol = solve_sdp(inst, kPsd);
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  const double grid = oracle::scalar_grid_minimum(1.0, 4.0, 1.0, 1.0, 1.0, 1.0, 3.0, 1e-3);
  EXPECT_NEAR(sol.objective, grid, 2e-3);
  EXPECT_NEAR(sol.objective, 1.5, 1e-6);
  const auto t = check_tightness_two_user(inst, sol);
  EXPECT_NEAR(t.slack_c, 0.0, 1e-6);
  EXPECT_NEAR(t.slack_d, 3.0, 1e-6);
  EXPECT_NEAR(t.slack_e, 0.0, 1e-6);
  EXPECT_TRUE(t.rank_one_observed);
  EXPECT_TRUE(t.implication_holds);
}

TEST(Sdp, DualScalarInstance) {
  const auto inst = oracle::scalar_instance();
  const auto d = solve_dual_two_user(inst, kPsd);
  ASSERT_EQ(d.status, SolveStatus::Optimal);
  EXPECT_NEAR(d.objective, 1.5, 1e-6);
  EXPECT_THROW(solve_dual_two_user(inst, ReferenceSocpBackend{}), UnsupportedCone);
}

TEST(Sdp, DualLargeCapsMatchCapFreePrimal) {
  auto inst = oracle::random_instance(2, 2, 11, 1.0);
  const auto free_primal = solve_sdp(inst, kPsd);
  inst.per_antenna_caps = std::vector<double>(2, 1e4);
  const auto d = solve_dual_two_user(inst, kPsd);
  ASSERT_EQ(free_primal.status, SolveStatus::Optimal);
  ASSERT_EQ(d.status, SolveStatus::Optimal);
  EXPECT_NEAR(d.objective, free_primal.objective, 1e-6 * std::max(1.0, free_primal.objective));
  for (double x : d.x) EXPECT_LE(x, 1e-6);
}

TEST(Sdp, DualityAndComplementarity) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = oracle::random_instance(2, 2, 20 + seed, 1.0, 5.0);
    const auto p = solve_sdp(inst, kPsd);
    const auto d = solve_dual_two_user(inst, kPsd);
    ASSERT_EQ(p.status, SolveStatus::Optimal);
    ASSERT_EQ(d.status, SolveStatus::Optimal);
    EXPECT_LE(d.objective, p.objective + 1e-7);
    EXPECT_LE(std::abs(d.objective - p.objective), 1e-6 * std::max(1.0, p.objective));
    EXPECT_LE(std::abs((d.Z1 * p.matrices[0]).trace()), 1e-5);
    EXPECT_LE(std::abs((d.Z2 * p.matrices[1]).trace()), 1e-5);
  }
}

TEST(Extract, DiagonalRankOne) {
  MatrixXcd W = MatrixXcd::Zero(2, 2);
  W(0, 0) = 2.0;
  const auto ext = extract_rank_one({W});
  ASSERT_TRUE(ext.beamformers);
  EXPECT_NEAR(std::abs((*ext.beamformers)[0][0] - cd(std::sqrt(2.0), 0.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs((*ext.beamformers)[0][1]), 0.0, 1e-12);
}

TEST(Extract, IdentityIsHighRank) {
  const auto ext = extract_rank_one({MatrixXcd::Identity(2, 2)});
  EXPECT_FALSE(ext.beamformers);
  ASSERT_EQ(ext.high_rank.size(), 1u);
  EXPECT_NEAR(ext.ratios[0], 1.0, 1e-12);
}

TEST(Sdp, LowerBoundsScaAndBindingPattern) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto inst = oracle::random_instance(2, 3, 40 + seed, 1.5, 4.0);
    const auto sdp = solve_sdp(inst, kPsd);
    const auto sca = run(inst, ScaConfig{}, kRng);
    ASSERT_EQ(sdp.status, SolveStatus::Optimal);
    ASSERT_TRUE(sca.solution);
    EXPECT_LE(sdp.objective, sca.objective + 1e-6);
    const auto t = check_tightness_two_user(inst, sdp);
    EXPECT_LE(t.slack_e, 1e-6);
    EXPECT_LE(std::min(t.slack_c, t.slack_d), 1e-6);
    EXPECT_TRUE(t.implication_holds) << "seed " << seed << " ratios " << t.ratio_w1 << " " << t.ratio_w2;
    if (t.condition_met) {
      const auto ext = extract_rank_one(sdp);
      ASSERT_TRUE(ext.beamformers);
      EXPECT_NEAR(total_power(*ext.beamformers), sdp.objective, 1e-6 * sdp.objective);
      EXPECT_TRUE(check_feasibility(inst, *ext.beamformers, 1e-5).feasible);
      EXPECT_NEAR(sca.objective, sdp.objective, 1e-4);
    }
  }
}

TEST(Sdp, InfeasibleTargetsAreCertified) {
  auto inst = oracle::scalar_instance();
  inst.per_antenna_caps = std::vector<double>{1.0};
  EXPECT_TRUE(relaxation_infeasible(inst, kPsd));
  ScaConfig cfg;
  cfg.max_restarts = 0;
  cfg.relaxation_backend = &kPsd;
  const auto res = run(inst, cfg, kRng);
  EXPECT_TRUE(res.trace.problem_infeasible);
}
