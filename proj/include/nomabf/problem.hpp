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

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nomabf/channel.hpp"

namespace nomabf {

/// Secure-beamforming constraint: sum_m |f^H w_m|^2 <= delta.
struct Eavesdropper {
  CVector channel;
  double max_leakage = 0.0;
};

/// One power-minimization problem. Users are indexed in decoding order
/// (0 = weakest); message n must be decodable by every user m >= n.
struct BeamformingInstance {
  ChannelRealization channel;
  std::vector<double> sinr_targets;
  std::optional<std::vector<double>> per_antenna_caps;
  std::vector<Eavesdropper> eavesdroppers;

  std::size_t num_users() const { return channel.num_users(); }
  int num_antennas() const { return channel.num_antennas(); }
  const CVector& h(std::size_t m) const { return channel.channels[m]; }
  double noise(std::size_t m) const { return channel.noise_powers[m]; }

  void validate() const {
    channel.validate();
    if (sinr_targets.size() != num_users())
      throw std::invalid_argument("BeamformingInstance: need one SINR target per user");
    for (double g : sinr_targets)
      if (!(g > 0.0)) throw std::invalid_argument("BeamformingInstance: SINR targets must be > 0");
    if (per_antenna_caps) {
      if (per_antenna_caps->size() != static_cast<std::size_t>(num_antennas()))
        throw std::invalid_argument("BeamformingInstance: need one power cap per antenna");
      for (double p : *per_antenna_caps)
        if (!(p > 0.0)) throw std::invalid_argument("BeamformingInstance: power caps must be > 0");
    }
    for (const auto& e : eavesdroppers) {
      if (e.channel.size() != num_antennas())
        throw std::invalid_argument("BeamformingInstance: eavesdropper channel length mismatch");
      if (!(e.max_leakage >= 0.0))
        throw std::invalid_argument("BeamformingInstance: leakage bound must be >= 0");
    }
  }
};

struct BeamformerSet {
  std::vector<CVector> vectors;

  std::size_t size() const { return vectors.size(); }
  const CVector& operator[](std::size_t m) const { return vectors[m]; }
  CVector& operator[](std::size_t m) { return vectors[m]; }

  static BeamformerSet zeros(std::size_t num_users, int num_antennas) {
    return BeamformerSet{std::vector<CVector>(num_users, CVector::Zero(num_antennas))};
  }
};

/// gamma = 2^R - 1.
inline double gamma_from_rate(double rate_bps_hz) {
  if (!(rate_bps_hz >= 0.0)) throw std::invalid_argument("gamma_from_rate: rate must be >= 0");
  return std::exp2(rate_bps_hz) - 1.0;
}

/// SINR at user m when decoding message n (n <= m): messages i > n are
/// interference, messages i < n are already cancelled.
inline double sinr(const BeamformingInstance& inst, const BeamformerSet& w, std::size_t m, std::size_t n) {
  const std::size_t users = inst.num_users();
  if (n > m || m >= users) throw std::out_of_range("sinr: need n <= m < M");
  if (w.size() != users) throw std::invalid_argument("sinr: beamformer count mismatch");
  const CVector& hm = inst.h(m);
  double interference = 0.0;
  for (std::size_t i = n + 1; i < users; ++i) interference += std::norm(hm.dot(w[i]));
  return std::norm(hm.dot(w[n])) / (interference + inst.noise(m));
}

inline double total_power(const BeamformerSet& w) {
  double p = 0.0;
  for (const auto& v : w.vectors) p += v.squaredNorm();
  return p;
}

inline double per_antenna_power(const BeamformerSet& w, int k) {
  if (w.size() == 0 || k < 0 || k >= w[0].size()) throw std::out_of_range("per_antenna_power: antenna index");
  double p = 0.0;
  for (const auto& v : w.vectors) p += std::norm(v[k]);
  return p;
}

inline double eavesdropper_leakage(const BeamformerSet& w, const CVector& f) {
  double p = 0.0;
  for (const auto& v : w.vectors) p += std::norm(f.dot(v));
  return p;
}

struct ConstraintSlack {
  enum class Kind { Sinr, AntennaPower, Leakage };
  Kind kind = Kind::Sinr;
  std::size_t first = 0;   // user m, antenna k, or eavesdropper r
  std::size_t second = 0;  // message n for SINR rows
  double value = 0.0;      // SINR, antenna power, or leakage
  double slack = 0.0;      // SINR - gamma, P_k - power, delta - leakage
  /// SINR rows only: |h_m^H w_n|^2 - gamma_n (sum_{i>n} |h_m^H w_i|^2 + sigma_m^2).
  double quadratic_slack = 0.0;
};

struct FeasibilityReport {
  bool feasible = false;
  double worst_sinr_slack = std::numeric_limits<double>::infinity();
  double worst_power_slack = std::numeric_limits<double>::infinity();
  double worst_leak_slack = std::numeric_limits<double>::infinity();
  std::vector<ConstraintSlack> details;
};

inline constexpr double kDefaultFeasibilityTol = 1e-6;

inline FeasibilityReport check_feasibility(const BeamformingInstance& inst, const BeamformerSet& w,
                                           double tol = kDefaultFeasibilityTol) {
  FeasibilityReport rep;
  const std::size_t users = inst.num_users();
  for (std::size_t m = 0; m < users; ++m) {
    for (std::size_t n = 0; n <= m; ++n) {
      ConstraintSlack c;
      c.kind = ConstraintSlack::Kind::Sinr;
      c.first = m;
      c.second = n;
      c.value = sinr(inst, w, m, n);
      c.slack = c.value - inst.sinr_targets[n];
      double interference = 0.0;
      for (std::size_t i = n + 1; i < users; ++i) interference += std::norm(inst.h(m).dot(w[i]));
      c.quadratic_slack =
          std::norm(inst.h(m).dot(w[n])) - inst.sinr_targets[n] * (interference + inst.noise(m));
      rep.worst_sinr_slack = std::min(rep.worst_sinr_slack, c.slack);
      rep.details.push_back(c);
    }
  }
  if (inst.per_antenna_caps) {
    for (int k = 0; k < inst.num_antennas(); ++k) {
      ConstraintSlack c;
      c.kind = ConstraintSlack::Kind::AntennaPower;
      c.first = static_cast<std::size_t>(k);
      c.value = per_antenna_power(w, k);
      c.slack = (*inst.per_antenna_caps)[static_cast<std::size_t>(k)] - c.value;
      rep.worst_power_slack = std::min(rep.worst_power_slack, c.slack);
      rep.details.push_back(c);
    }
  }
  for (std::size_t r = 0; r < inst.eavesdroppers.size(); ++r) {
    ConstraintSlack c;
    c.kind = ConstraintSlack::Kind::Leakage;
    c.first = r;
    c.value = eavesdropper_leakage(w, inst.eavesdroppers[r].channel);
    c.slack = inst.eavesdroppers[r].max_leakage - c.value;
    rep.worst_leak_slack = std::min(rep.worst_leak_slack, c.slack);
    rep.details.push_back(c);
  }
  rep.feasible = rep.worst_sinr_slack >= -tol && rep.worst_power_slack >= -tol && rep.worst_leak_slack >= -tol;
  return rep;
}

}  // namespace nomabf
