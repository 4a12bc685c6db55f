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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nomabf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two or more users share a distance, so the SIC decoding order is undefined.
class DecodeOrderAmbiguous : public Error {
 public:
  explicit DecodeOrderAmbiguous(std::vector<std::size_t> tied)
      : Error(describe(tied)), tied_indices(std::move(tied)) {}

  std::vector<std::size_t> tied_indices;

 private:
  static std::string describe(const std::vector<std::size_t>& tied) {
    std::string s = "decode order ambiguous: equal distances for users";
    for (auto i : tied) s += " " + std::to_string(i);
    return s;
  }
};

class UnsupportedCone : public Error {
 public:
  explicit UnsupportedCone(const std::string& cone)
      : Error("unsupported cone: " + cone + " (backend lacks capability)"), cone_name(cone) {}
  std::string cone_name;
};

/// |h_m^H w_n| of the reference point fell below the guard.
class ReferenceInNullspace : public Error {
 public:
  ReferenceInNullspace(std::size_t m, std::size_t n)
      : Error("reference in nullspace: |h_m^H w_n| below guard for (m=" + std::to_string(m + 1) +
              ", n=" + std::to_string(n + 1) + ")"),
        user(m),
        message(n) {}
  std::size_t user;
  std::size_t message;
};

/// Invalid configuration or scenario file; `field` is a path like "$.users[2].distance_m".
class ConfigError : public Error {
 public:
  ConfigError(std::string field_path, std::string reason)
      : Error(field_path + ": " + reason), field(std::move(field_path)), reason(std::move(reason)) {}
  std::string field;
  std::string reason;
};

}  // namespace nomabf
