// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "instances.hpp"
#include "kkt_oracle.hpp"
#include "nomabf/sca.hpp"

using namespace nomabf;
using oracle::make_instance;

namespace {

ScaConfig default_config() { return ScaConfig{}; }

const RngStream kRng{42, 0};

}  // namespace

TEST(Linearization, EqualityAtReference) {
  const RngStream r{1, 1};
  const CVector h = oracle::gaussian_vector(4, r.substream(0));
  const CVector w = oracle::gaussian_vector(4, r.substream(1));
  EXPECT_NEAR(linearized_lower_bound(w, w, h), std::abs(h.dot(w)), 1e-12);
  EXPECT_NEAR(linearized_lower_bound(-w, w, h), -std::abs(h.dot(w)), 1e-12);
}

TEST(Linearization, BoundHoldsOnRandomDraws) {
  const RngStream r{2, 3};
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < 10000; ++t) {
    const RngStream s = r.substream(static_cast<std::uint64_t>(t));
    const int k = 1 + t % 6;
    const CVector h = oracle::gaussian_vector(k, s.substream(0));
    const CVector w = oracle::gaussian_vector(k, s.substream(1));
    const CVector wr = oracle::gaussian_vector(k, s.substream(2));
    worst = std::min(worst, std::abs(h.dot(w)) - linearized_lower_bound(w, wr, h));
  }
  EXPECT_GE(worst, -1e-12);
}

TEST(Linearization, GuardThrows) {
  CVector h(2), w(2);
  h << 1.0, 0.0;
  w << 0.0, 1.0;
  EXPECT_THROW(linearized_lower_bound(w, w, h), ReferenceInNullspace);
}

TEST(Restriction, BlockCount) {
  const auto inst = oracle::random_instance(4, 8, 5, 1.0, 10.0);
  const auto w0 = initialize(inst, InitStrategy::MrtScaled, kRng);
  const auto rp = build_restriction(inst, w0);
  EXPECT_EQ(rp.program.blocks.size(), 19u);
  EXPECT_EQ(rp.program.count(ConeKind::SecondOrder), 19u);
}

TEST(Restriction, FeasiblePointsAreFeasibleForOriginal) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = oracle::random_instance(1 + seed % 4, 1 + static_cast<int>(seed % 5), seed, 1.0);
    const auto w0 = initialize(inst, InitStrategy::MrtScaled, kRng);
    const auto rp = build_restriction(inst, w0);
    const auto sol = reference_ipm_solve(rp.program);
    ASSERT_EQ(sol.status, SolveStatus::Optimal) << "seed " << seed;
    EXPECT_LE(oracle::kkt_residuals(rp.program, sol).max(), 1e-6) << "seed " << seed;
    EXPECT_TRUE(check_feasibility(inst, rp.beamformers(sol.x)).feasible) << "seed " << seed;
  }
}

TEST(Initialize, MrtSingleUserIsMatchedFilter) {
  const auto inst = oracle::random_instance(1, 4, 9);
  const auto w0 = initialize(inst, InitStrategy::MrtScaled, kRng);
  const cd ratio = w0[0][0] / inst.h(0)[0];
  EXPECT_LE((w0[0] - ratio * inst.h(0)).norm(), 1e-12);
  EXPECT_NEAR(ratio.imag(), 0.0, 1e-12);
  EXPECT_GT(ratio.real(), 0.0);
  EXPECT_TRUE(check_feasibility(inst, w0).feasible);
}

TEST(Initialize, RandomIsDeterministic) {
  const auto inst = oracle::random_instance(3, 4, 9);
  const auto a = initialize(inst, InitStrategy::RandomGaussian, kRng);
  const auto b = initialize(inst, InitStrategy::RandomGaussian, kRng);
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_EQ(a[n], b[n]);
    EXPECT_NEAR(a[n].norm(), 1.0, 1e-12);
  }
}

TEST(Run, ScalarInstanceMatchesGridOracle) {
  const auto inst = oracle::scalar_instance();
  const double grid = oracle::scalar_grid_minimum(1.0, 4.0, 1.0, 1.0, 1.0, 1.0, 3.0, 1e-3);
  EXPECT_NEAR(grid, 1.5, 2e-3);
  const auto res = run(inst, default_config(), kRng);
  ASSERT_TRUE(res.solution);
  EXPECT_EQ(res.trace.stop_reason, StopReason::Converged);
  EXPECT_LE(res.trace.iterations(), 10);
  EXPECT_NEAR(res.objective, grid, 2e-3);
  EXPECT_NEAR(res.objective, 1.5, 1e-4);
  EXPECT_NEAR(std::norm((*res.solution)[1][0]), 0.25, 1e-4);
  EXPECT_NEAR(std::norm((*res.solution)[0][0]), 1.25, 1e-4);
}

TEST(Run, SingleUserClosedForm) {
  for (int k : {1, 3, 6}) {
    const auto inst = oracle::random_instance(1, k, 100 + static_cast<std::uint64_t>(k), 3.0);
    const auto res = run(inst, default_config(), kRng);
    ASSERT_TRUE(res.solution);
    EXPECT_NEAR(res.objective, 3.0 / inst.h(0).squaredNorm(), 1e-6) << "K=" << k;
  }
}

TEST(Run, TraceIsMonotoneAndIteratesFeasible) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = oracle::random_instance(3, 4, 200 + seed, 1.0);
    const auto res = run(inst, default_config(), kRng);
    ASSERT_TRUE(res.solution) << "seed " << seed;
    EXPECT_TRUE(res.trace.monotone) << "seed " << seed;
    const auto& v = res.trace.values;
    for (std::size_t l = 1; l + 1 < v.size(); ++l) EXPECT_GE(v[l] - v[l + 1], -1e-8 * std::max(1.0, v[l]));
    for (bool ok : res.trace.iterate_feasible) EXPECT_TRUE(ok);
    EXPECT_TRUE(check_feasibility(inst, *res.solution).feasible);
  }
}

TEST(Run, TightCapsAreRespected) {
  auto inst = oracle::random_instance(2, 4, 300, 3.0);
  const auto free_res = run(inst, default_config(), kRng);
  ASSERT_TRUE(free_res.solution);
  double top = 0.0;
  for (int k = 0; k < 4; ++k) top = std::max(top, per_antenna_power(*free_res.solution, k));
  inst.per_antenna_caps = std::vector<double>(4, 0.8 * top);
  const auto res = run(inst, default_config(), kRng);
  ASSERT_TRUE(res.solution);
  for (int k = 0; k < 4; ++k) EXPECT_LE(per_antenna_power(*res.solution, k), 0.8 * top + 1e-6);
  EXPECT_GE(res.objective, free_res.objective - 1e-6);
}

TEST(Run, FixedPoint) {
  const auto inst = oracle::random_instance(3, 3, 400, 1.0, 5.0);
  const auto res = run(inst, default_config(), kRng);
  ASSERT_TRUE(res.solution);
  ScaConfig cfg;
  cfg.init_strategy = InitStrategy::UserProvided;
  cfg.initial_point = *res.solution;
  const auto again = run(inst, cfg, kRng);
  ASSERT_TRUE(again.solution);
  EXPECT_LE(std::abs(again.trace.values.at(1) - res.objective), cfg.xi);
}

TEST(Run, PhaseInvariance) {
  const auto inst = oracle::random_instance(3, 4, 500, 1.0);
  auto rotated = inst;
  for (std::size_t m = 0; m < 3; ++m)
    rotated.channel.channels[m] *= std::polar(1.0, 0.7 + 1.3 * static_cast<double>(m));
  const auto a = run(inst, default_config(), kRng);
  const auto b = run(rotated, default_config(), kRng);
  ASSERT_EQ(a.trace.values.size(), b.trace.values.size());
  for (std::size_t l = 0; l < a.trace.values.size(); ++l)
    EXPECT_NEAR(a.trace.values[l], b.trace.values[l], 1e-8 * std::max(1.0, a.trace.values[l]));
}

TEST(Run, InfeasibleTargetsReportRestrictionInfeasible) {
  // scalar instance with the cap cut below the minimum power 1.5
  CVector h1(1), h2(1);
  h1 << 1.0;
  h2 << 2.0;
  const auto inst = make_instance({h1, h2}, {1.0, 1.0}, {1.0, 1.0}, std::vector<double>{1.0});
  ScaConfig cfg;
  cfg.max_restarts = 2;
  const auto res = run(inst, cfg, kRng);
  EXPECT_FALSE(res.solution);
  EXPECT_EQ(res.trace.stop_reason, StopReason::RestrictionInfeasible);
  EXPECT_EQ(res.trace.restarts_used, 2);
  EXPECT_EQ(res.trace.restart_log.size(), 3u);
}

TEST(Alpha, ScalarInstance) {
  const auto inst = oracle::scalar_instance();
  const auto res = run_alpha(inst, default_config(), kRng);
  ASSERT_TRUE(res.solution);
  EXPECT_NEAR(res.objective, 0.5, 1e-5);
  EXPECT_TRUE(res.trace.monotone);
  EXPECT_LE(per_antenna_power(*res.solution, 0), res.objective * 3.0 + 1e-6);
}

TEST(Alpha, LargeCapMatchesPowerOverCap) {
  auto inst = oracle::random_instance(2, 1, 600, 1.0, 1e6);
  const auto power = run(inst, default_config(), kRng);
  const auto alpha = run_alpha(inst, default_config(), kRng);
  ASSERT_TRUE(power.solution && alpha.solution);
  EXPECT_NEAR(alpha.objective * 1e6, power.objective, 1e-6 * std::max(1.0, power.objective));
}

TEST(Alpha, RequiresCaps) {
  const auto inst = oracle::random_instance(2, 2, 1);
  EXPECT_THROW(run_alpha(inst, default_config(), kRng), std::invalid_argument);
}

TEST(Secure, LooseLeakageMatchesPlainRun) {
  auto inst = oracle::random_instance(2, 3, 700, 1.0);
  const auto plain = run(inst, default_config(), kRng);
  inst.eavesdroppers.push_back({oracle::gaussian_vector(3, RngStream{9, 9}), 1e9});
  const auto secure = run_secure(inst, default_config(), kRng);
  ASSERT_TRUE(plain.solution && secure.solution);
  EXPECT_NEAR(secure.objective, plain.objective, 1e-6);
}

TEST(Secure, BindingLeakageRaisesPower) {
  auto inst = oracle::random_instance(2, 3, 800, 1.0);
  const auto plain = run(inst, default_config(), kRng);
  ASSERT_TRUE(plain.solution);
  const CVector f = inst.h(0) / inst.h(0).norm();
  const double leak = eavesdropper_leakage(*plain.solution, f);
  // user 1 alone needs leakage >= gamma sigma^2 / ||h_1||^2 along f
  const double floor = inst.sinr_targets[0] * inst.noise(0) / inst.h(0).squaredNorm();
  ASSERT_LT(floor, leak);
  const double delta = 0.5 * (floor + leak);
  inst.eavesdroppers.push_back({f, delta});
  const auto secure = run_secure(inst, default_config(), kRng);
  ASSERT_TRUE(secure.solution);
  EXPECT_GT(secure.objective, plain.objective + 1e-6);
  EXPECT_LE(eavesdropper_leakage(*secure.solution, f), delta + 1e-6);
  EXPECT_TRUE(check_feasibility(inst, *secure.solution).feasible);
}

TEST(Secure, ZeroLeakageAlongStrongUserIsInfeasible) {
  auto inst = oracle::scalar_instance();
  inst.eavesdroppers.push_back({inst.h(1), 0.0});
  ScaConfig cfg;
  cfg.max_restarts = 1;
  const auto res = run_secure(inst, cfg, kRng);
  EXPECT_FALSE(res.solution);
  EXPECT_EQ(res.trace.stop_reason, StopReason::RestrictionInfeasible);
}

TEST(Secure, RequiresEavesdroppers) {
  EXPECT_THROW(run_secure(oracle::scalar_instance(), default_config(), kRng), std::invalid_argument);
}
