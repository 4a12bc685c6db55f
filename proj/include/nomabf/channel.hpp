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
#include <complex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "nomabf/errors.hpp"
#include "nomabf/rng.hpp"

namespace nomabf {

using cd = std::complex<double>;
using CVector = Eigen::VectorXcd;

struct UlaConfig {
  int num_antennas = 1;
  double spacing_over_wavelength = 0.5;

  void validate() const {
    if (num_antennas < 1) throw std::invalid_argument("UlaConfig: num_antennas must be >= 1");
    if (!(spacing_over_wavelength > 0.0))
      throw std::invalid_argument("UlaConfig: spacing_over_wavelength must be > 0");
  }
};

/// Rician K-factor. Pure line-of-sight is a flag rather than +inf so the
/// mixing weights stay finite.
struct RicianFactor {
  double value = 0.0;
  bool line_of_sight = false;

  static RicianFactor rayleigh() { return {0.0, false}; }
  static RicianFactor los() { return {0.0, true}; }
  static RicianFactor of(double zeta) { return {zeta, false}; }

  double los_weight() const { return line_of_sight ? 1.0 : std::sqrt(value / (1.0 + value)); }
  double scatter_weight() const { return line_of_sight ? 0.0 : std::sqrt(1.0 / (1.0 + value)); }
};

struct UserGeometry {
  double distance_m = 1.0;
  double aod_deg = 0.0;
  double path_loss_exponent = 2.0;
  RicianFactor rician{};

  void validate() const {
    if (!(distance_m > 0.0)) throw std::invalid_argument("UserGeometry: distance must be > 0");
    if (!(path_loss_exponent >= 0.0))
      throw std::invalid_argument("UserGeometry: path loss exponent must be >= 0");
    if (!rician.line_of_sight && !(rician.value >= 0.0))
      throw std::invalid_argument("UserGeometry: Rician factor must be >= 0");
  }
};

/// Channels stored in decoding order: entry m is the m-th weakest user.
/// decode_order[m] is that user's index in the caller's original list.
struct ChannelRealization {
  std::vector<CVector> channels;
  std::vector<double> noise_powers;
  std::vector<std::size_t> decode_order;

  std::size_t num_users() const { return channels.size(); }
  int num_antennas() const { return channels.empty() ? 0 : static_cast<int>(channels.front().size()); }

  void validate() const {
    const std::size_t m = channels.size();
    if (m == 0) throw std::invalid_argument("ChannelRealization: no users");
    if (noise_powers.size() != m || decode_order.size() != m)
      throw std::invalid_argument("ChannelRealization: inconsistent user counts");
    for (const auto& h : channels)
      if (h.size() != channels.front().size() || h.size() == 0)
        throw std::invalid_argument("ChannelRealization: channel length mismatch");
    for (double s : noise_powers)
      if (!(s > 0.0)) throw std::invalid_argument("ChannelRealization: noise power must be > 0");
    std::vector<std::size_t> sorted = decode_order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < m; ++i)
      if (sorted[i] != i) throw std::invalid_argument("ChannelRealization: decode_order is not a permutation");
  }
};

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// ULA response a(theta), entries exp(-j k 2 pi (d/lambda) sin theta) / sqrt(K).
inline CVector steering_vector(double theta_deg, const UlaConfig& ula) {
  ula.validate();
  const int k_ant = ula.num_antennas;
  const double phase = 2.0 * std::numbers::pi * ula.spacing_over_wavelength * std::sin(deg_to_rad(theta_deg));
  const double scale = 1.0 / std::sqrt(static_cast<double>(k_ant));
  CVector a(k_ant);
  for (int k = 0; k < k_ant; ++k) a[k] = scale * std::polar(1.0, -phase * k);
  return a;
}

inline double large_scale_gain(const UserGeometry& geom) {
  geom.validate();
  return std::pow(geom.distance_m, -geom.path_loss_exponent);
}

/// One Rician draw. Antenna k consumes normal draws 2k and 2k+1 of `rng`,
/// so a K-antenna draw is a prefix of a K'-antenna draw (up to the 1/sqrt(K)
/// normalization) for the same stream.
inline CVector draw_rician_channel(const UserGeometry& geom, const UlaConfig& ula, const RngStream& rng) {
  const double beta = large_scale_gain(geom);
  const int k_ant = ula.num_antennas;
  CVector h = geom.rician.los_weight() * steering_vector(geom.aod_deg, ula);
  const double w_scatter = geom.rician.scatter_weight();
  if (w_scatter > 0.0) {
    const double s = w_scatter / std::sqrt(2.0 * k_ant);
    for (int k = 0; k < k_ant; ++k) {
      const auto idx = static_cast<std::uint64_t>(k);
      h[k] += s * cd(rng.normal(2 * idx), rng.normal(2 * idx + 1));
    }
  }
  return std::sqrt(beta) * h;
}

/// Decoding order: decreasing distance, so the closest user decodes last
/// (largest index). Returns perm with perm[m] = original index at position m.
inline std::vector<std::size_t> order_users(const std::vector<UserGeometry>& geometries) {
  std::vector<std::size_t> perm(geometries.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return geometries[a].distance_m > geometries[b].distance_m;
  });
  for (std::size_t i = 1; i < perm.size(); ++i) {
    if (geometries[perm[i]].distance_m == geometries[perm[i - 1]].distance_m) {
      std::vector<std::size_t> tied;
      for (std::size_t j = 0; j < perm.size(); ++j)
        if (geometries[perm[j]].distance_m == geometries[perm[i]].distance_m) tied.push_back(perm[j]);
      std::sort(tied.begin(), tied.end());
      throw DecodeOrderAmbiguous(std::move(tied));
    }
  }
  return perm;
}

/// Draws all users' channels for one trial. User u (original index) uses
/// substream u of `rng`, so channels do not depend on which other users
/// are present.
inline ChannelRealization draw_realization(const std::vector<UserGeometry>& geometries, const UlaConfig& ula,
                                           double noise_power, const RngStream& rng) {
  ChannelRealization out;
  out.decode_order = order_users(geometries);
  for (std::size_t pos = 0; pos < geometries.size(); ++pos) {
    const std::size_t u = out.decode_order[pos];
    out.channels.push_back(draw_rician_channel(geometries[u], ula, rng.substream(u)));
    out.noise_powers.push_back(noise_power);
  }
  return out;
}

}  // namespace nomabf
