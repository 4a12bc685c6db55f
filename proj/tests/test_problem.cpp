// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "instances.hpp"
#include "nomabf/problem.hpp"

using namespace nomabf;
using oracle::make_instance;

namespace {

CVector vec(std::initializer_list<cd> v) {
  CVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (cd x : v) out[i++] = x;
  return out;
}

/// SINR recomputed entry by entry without Eigen reductions.
double loop_sinr(const BeamformingInstance& inst, const BeamformerSet& w, std::size_t m, std::size_t n) {
  auto gain = [&](std::size_t i) {
    cd acc = 0.0;
    for (int k = 0; k < inst.num_antennas(); ++k) acc += std::conj(inst.h(m)[k]) * w[i][k];
    return std::norm(acc);
  };
  double den = inst.noise(m);
  for (std::size_t i = n + 1; i < w.size(); ++i) den += gain(i);
  return gain(n) / den;
}

BeamformerSet random_beams(std::size_t users, int k, std::uint64_t seed) {
  BeamformerSet w;
  for (std::size_t m = 0; m < users; ++m) w.vectors.push_back(oracle::gaussian_vector(k, RngStream{seed, m}));
  return w;
}

}  // namespace

TEST(Gamma, FromRate) {
  EXPECT_DOUBLE_EQ(gamma_from_rate(1.0), 1.0);
  EXPECT_DOUBLE_EQ(gamma_from_rate(0.0), 0.0);
  EXPECT_DOUBLE_EQ(gamma_from_rate(2.0), 3.0);
  EXPECT_THROW(gamma_from_rate(-0.1), std::invalid_argument);
}

TEST(Sinr, HandExample) {
  const auto inst = make_instance({vec({1.0}), vec({1.0})}, {1.0, 1.0}, {1.0, 1.0});
  const BeamformerSet w{{vec({std::sqrt(2.0)}), vec({1.0})}};
  EXPECT_NEAR(sinr(inst, w, 0, 0), 1.0, 1e-15);
  BeamformerSet z = w;
  z[0] = vec({0.0});
  EXPECT_EQ(sinr(inst, z, 1, 0), 0.0);
}

TEST(Sinr, LastMessageSeesNoiseOnly) {
  const auto inst = oracle::random_instance(3, 4, 3);
  const auto w = random_beams(3, 4, 8);
  EXPECT_DOUBLE_EQ(sinr(inst, w, 2, 2), std::norm(inst.h(2).dot(w[2])) / inst.noise(2));
}

TEST(Sinr, MatchesScalarLoop) {
  const auto inst = oracle::random_instance(4, 3, 12);
  const auto w = random_beams(4, 3, 13);
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t n = 0; n <= m; ++n) EXPECT_NEAR(sinr(inst, w, m, n), loop_sinr(inst, w, m, n), 1e-12);
}

TEST(Sinr, IndexChecks) {
  const auto inst = oracle::random_instance(2, 2, 1);
  const auto w = random_beams(2, 2, 1);
  EXPECT_THROW(sinr(inst, w, 0, 1), std::out_of_range);
  EXPECT_THROW(sinr(inst, w, 2, 0), std::out_of_range);
}

TEST(Sinr, PhaseInvariant) {
  const auto inst = oracle::random_instance(3, 3, 14);
  const auto w = random_beams(3, 3, 15);
  auto r = w;
  r[1] *= std::polar(1.0, 1.234);
  for (std::size_t m = 0; m < 3; ++m)
    for (std::size_t n = 0; n <= m; ++n) EXPECT_NEAR(sinr(inst, w, m, n), sinr(inst, r, m, n), 1e-12);
}

TEST(Power, TotalAndPerAntenna) {
  const BeamformerSet w{{vec({1.0, 0.0}), vec({0.0, 2.0})}};
  EXPECT_DOUBLE_EQ(total_power(w), 5.0);
  EXPECT_DOUBLE_EQ(total_power(BeamformerSet::zeros(3, 2)), 0.0);
  const BeamformerSet v{{vec({1.0, 0.0}), vec({1.0, 0.0})}};
  EXPECT_DOUBLE_EQ(per_antenna_power(v, 0), 2.0);
  EXPECT_DOUBLE_EQ(per_antenna_power(v, 1), 0.0);
  const auto r = random_beams(3, 5, 21);
  double sum = 0.0;
  for (int k = 0; k < 5; ++k) sum += per_antenna_power(r, k);
  EXPECT_NEAR(sum, total_power(r), 1e-12 * total_power(r));
}

TEST(Leakage, Examples) {
  const BeamformerSet w{{vec({1.0, 0.0}), vec({2.0, 0.0})}};
  EXPECT_DOUBLE_EQ(eavesdropper_leakage(w, vec({0.0, 1.0})), 0.0);
  const auto r = random_beams(3, 4, 30);
  CVector e1 = CVector::Zero(4);
  e1[0] = 1.0;
  EXPECT_NEAR(eavesdropper_leakage(r, e1), per_antenna_power(r, 0), 1e-12);
  const CVector f = oracle::gaussian_vector(4, RngStream{31, 0});
  double loop = 0.0;
  for (std::size_t m = 0; m < 3; ++m) {
    cd acc = 0.0;
    for (int k = 0; k < 4; ++k) acc += std::conj(f[k]) * r[m][k];
    loop += std::norm(acc);
  }
  EXPECT_NEAR(eavesdropper_leakage(r, f), loop, 1e-12);
}

TEST(Feasibility, ScalarOptimum) {
  const auto inst = oracle::scalar_instance();
  const BeamformerSet w{{vec({std::sqrt(1.25)}), vec({0.5})}};
  const auto rep = check_feasibility(inst, w);
  EXPECT_TRUE(rep.feasible);
  ASSERT_EQ(rep.details.size(), 4u);
  const double quad[] = {0.0, 3.0, 0.0};
  const double sinr_gap[] = {0.0, 1.5, 0.0};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(rep.details[static_cast<std::size_t>(i)].quadratic_slack, quad[i], 1e-12);
    EXPECT_NEAR(rep.details[static_cast<std::size_t>(i)].slack, sinr_gap[i], 1e-12);
  }
  EXPECT_NEAR(rep.worst_power_slack, 1.5, 1e-12);
  EXPECT_EQ(rep.worst_leak_slack, std::numeric_limits<double>::infinity());
}

TEST(Feasibility, ZeroAndScaledDown) {
  const auto inst = oracle::scalar_instance();
  EXPECT_FALSE(check_feasibility(inst, BeamformerSet::zeros(2, 1)).feasible);
  const BeamformerSet w{{vec({std::sqrt(1.25) * 0.999}), vec({0.5 * 0.999})}};
  EXPECT_FALSE(check_feasibility(inst, w).feasible);
}

TEST(Feasibility, NoCapsNoPowerRows) {
  const auto inst = oracle::random_instance(2, 3, 40);
  const auto w = random_beams(2, 3, 41);
  for (auto s : {1.0, 100.0}) {
    auto big = w;
    big[0] *= s;
    const auto rep = check_feasibility(inst, big);
    EXPECT_EQ(rep.worst_power_slack, std::numeric_limits<double>::infinity());
    for (const auto& d : rep.details) EXPECT_EQ(d.kind, ConstraintSlack::Kind::Sinr);
  }
}

TEST(Instance, Validation) {
  auto inst = oracle::scalar_instance();
  inst.sinr_targets.pop_back();
  EXPECT_THROW(inst.validate(), std::invalid_argument);
  inst = oracle::scalar_instance();
  inst.per_antenna_caps = std::vector<double>{0.0};
  EXPECT_THROW(inst.validate(), std::invalid_argument);
  inst = oracle::scalar_instance();
  inst.channel.noise_powers[0] = 0.0;
  EXPECT_THROW(inst.validate(), std::invalid_argument);
}
