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

#include <cmath>
#include <cstdint>
#include <numbers>

namespace nomabf {

/// Counter-based random stream. A draw is a pure function of
/// (seed, stream_id, draw_index), so trials can run in any order or
/// in parallel and still reproduce bit-for-bit.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits(std::uint64_t draw_index) const {
    return mix(mix(mix(seed) ^ stream_id) ^ mix(draw_index + 0x632be59bd9b4e019ULL));
  }

  /// Uniform in the open interval (0, 1).
  double uniform(std::uint64_t draw_index) const {
    return (static_cast<double>(bits(draw_index) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on draws (2i, 2i+1).
  double normal(std::uint64_t draw_index) const {
    const double u1 = uniform(2 * draw_index);
    const double u2 = uniform(2 * draw_index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Independent child stream, e.g. one per user within a trial.
  RngStream substream(std::uint64_t tag) const {
    return RngStream{seed, mix(stream_id ^ mix(tag + 0x2545f4914f6cdd1dULL))};
  }
};

}  // namespace nomabf
