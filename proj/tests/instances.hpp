// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "nomabf/problem.hpp"
#include "nomabf/rng.hpp"

namespace nomabf::oracle {

inline BeamformingInstance make_instance(std::vector<CVector> channels, std::vector<double> noise,
                                         std::vector<double> gammas,
                                         std::optional<std::vector<double>> caps = std::nullopt) {
  BeamformingInstance inst;
  const std::size_t m = channels.size();
  inst.channel.channels = std::move(channels);
  inst.channel.noise_powers = std::move(noise);
  for (std::size_t i = 0; i < m; ++i) inst.channel.decode_order.push_back(i);
  inst.sinr_targets = std::move(gammas);
  inst.per_antenna_caps = std::move(caps);
  inst.validate();
  return inst;
}

/// h1 = 1, h2 = 2, unit noise, unit targets, P1 = 3.
inline BeamformingInstance scalar_instance() {
  CVector h1(1), h2(1);
  h1 << cd(1.0, 0.0);
  h2 << cd(2.0, 0.0);
  return make_instance({h1, h2}, {1.0, 1.0}, {1.0, 1.0}, std::vector<double>{3.0});
}

inline CVector gaussian_vector(int k, const RngStream& rng, double scale = 1.0) {
  CVector v(k);
  for (int i = 0; i < k; ++i) v[i] = scale * cd(rng.normal(2 * i), rng.normal(2 * i + 1)) / std::sqrt(2.0);
  return v;
}

/// Random instance with channels sorted weakest first.
inline BeamformingInstance random_instance(std::size_t users, int k, std::uint64_t seed, double gamma = 1.0,
                                           std::optional<double> cap = std::nullopt) {
  const RngStream rng{seed, 7};
  std::vector<CVector> hs;
  for (std::size_t m = 0; m < users; ++m) hs.push_back(gaussian_vector(k, rng.substream(m)));
  std::sort(hs.begin(), hs.end(), [](const CVector& a, const CVector& b) { return a.norm() < b.norm(); });
  std::optional<std::vector<double>> caps;
  if (cap) caps = std::vector<double>(static_cast<std::size_t>(k), *cap);
  return make_instance(hs, std::vector<double>(users, 1.0), std::vector<double>(users, gamma), caps);
}

/// Brute-force minimum of p1 + p2 over a grid for the two-user K = 1 problem
/// with real gains g_m = |h_m|^2.
inline double scalar_grid_minimum(double g1, double g2, double s1, double s2, double gamma1, double gamma2,
                                  double cap, double step) {
  double best = std::numeric_limits<double>::infinity();
  for (double p2 = 0.0; p2 <= cap; p2 += step) {
    for (double p1 = 0.0; p1 + p2 <= cap; p1 += step) {
      const bool ok = g1 * p1 >= gamma1 * (g1 * p2 + s1) && g2 * p1 >= gamma1 * (g2 * p2 + s2) &&
                      g2 * p2 >= gamma2 * s2;
      if (ok) {
        best = std::min(best, p1 + p2);
        break;  // larger p1 only costs more
      }
    }
  }
  return best;
}

}  // namespace nomabf::oracle
