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

#include <json.hpp>

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "nomabf/channel.hpp"
#include "nomabf/errors.hpp"
#include "nomabf/problem.hpp"
#include "nomabf/sca.hpp"

// JSON reading helpers that name the offending field on failure, plus the
// instance and result formats used by the command-line tool.

namespace nomabf::io {

using nlohmann::json;

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key, "missing field");
  return *it;
}

template <class T>
T get(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key, "wrong type");
  }
}

template <class T>
T get_or(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  if (!j.contains(key)) return fallback;
  return get<T>(j, key, path);
}

inline cd complex_from_json(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  throw ConfigError(path, "expected a number or [re, im]");
}

inline json complex_to_json(cd z) { return json::array({z.real(), z.imag()}); }

inline CVector vector_from_json(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array");
  CVector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = complex_from_json(v[i], path + "[" + std::to_string(i) + "]");
  return out;
}

inline json vector_to_json(const CVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(complex_to_json(v[i]));
  return a;
}

inline RicianFactor rician_from_json(const json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("rician")) return RicianFactor::rayleigh();
  const json& r = j["rician"];
  if (r.is_string() && r.get<std::string>() == "los") return RicianFactor::los();
  if (r.is_number() && r.get<double>() >= 0.0) return RicianFactor::of(r.get<double>());
  throw ConfigError(path + ".rician", "expected a number >= 0 or \"los\"");
}

inline UserGeometry geometry_from_json(const json& j, const std::string& path) {
  UserGeometry g;
  g.distance_m = get<double>(j, "distance_m", path);
  g.aod_deg = get_or<double>(j, "aod_deg", path, 0.0);
  g.path_loss_exponent = get_or<double>(j, "path_loss_exponent", path, 2.0);
  g.rician = rician_from_json(j, path);
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  return g;
}

inline json geometry_to_json(const UserGeometry& g) {
  json j{{"distance_m", g.distance_m}, {"aod_deg", g.aod_deg}, {"path_loss_exponent", g.path_loss_exponent}};
  if (g.rician.line_of_sight)
    j["rician"] = "los";
  else
    j["rician"] = g.rician.value;
  return j;
}

/// SINR targets from "sinr_targets" or "rates" (bits/s/Hz).
inline std::vector<double> targets_from_json(const json& j, const std::string& path, std::size_t users) {
  std::vector<double> g;
  if (j.contains("sinr_targets")) {
    g = get<std::vector<double>>(j, "sinr_targets", path);
  } else if (j.contains("rates")) {
    for (double r : get<std::vector<double>>(j, "rates", path)) {
      if (!(r > 0.0)) throw ConfigError(path + ".rates", "rates must be > 0");
      g.push_back(gamma_from_rate(r));
    }
  } else {
    throw ConfigError(path + ".sinr_targets", "missing field (or give rates)");
  }
  if (g.size() == 1 && users > 1) g.assign(users, g.front());
  if (g.size() != users) throw ConfigError(path + ".sinr_targets", "need one target per user");
  for (double x : g)
    if (!(x > 0.0)) throw ConfigError(path + ".sinr_targets", "targets must be > 0");
  return g;
}

enum class Variant { PowerMin, AlphaMin, Secure, CapsOff };

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::PowerMin: return "power-min";
    case Variant::AlphaMin: return "alpha-min";
    case Variant::Secure: return "secure";
    case Variant::CapsOff: return "caps-off";
  }
  return "?";
}

inline Variant variant_from_string(const std::string& s, const std::string& path) {
  for (Variant v : {Variant::PowerMin, Variant::AlphaMin, Variant::Secure, Variant::CapsOff})
    if (s == variant_name(v)) return v;
  throw ConfigError(path, "unknown variant '" + s + "' (power-min, alpha-min, secure, caps-off)");
}

inline ScaConfig sca_config_from_json(const json& j, const std::string& path) {
  ScaConfig c;
  if (!j.is_object()) return c;
  c.xi = get_or<double>(j, "xi", path, c.xi);
  c.max_iters = get_or<int>(j, "max_iters", path, c.max_iters);
  c.max_restarts = get_or<int>(j, "max_restarts", path, c.max_restarts);
  c.denom_guard = get_or<double>(j, "denom_guard", path, c.denom_guard);
  c.solver_tol = get_or<double>(j, "solver_tol", path, c.solver_tol);
  const std::string init = get_or<std::string>(j, "init", path, "mrt");
  if (init == "mrt")
    c.init_strategy = InitStrategy::MrtScaled;
  else if (init == "random")
    c.init_strategy = InitStrategy::RandomGaussian;
  else
    throw ConfigError(path + ".init", "expected \"mrt\" or \"random\"");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  return c;
}

/// A single problem for `solve`.
struct SolveRequest {
  BeamformingInstance instance;
  Variant variant = Variant::PowerMin;
  ScaConfig sca;
};

/// Either explicit "channels" (list of complex vectors, weakest user first)
/// or "num_antennas" + "users" geometries drawn from `seed`.
inline SolveRequest solve_request_from_json(const json& j, std::uint64_t seed) {
  const std::string root = "$";
  SolveRequest req;
  const int version = get<int>(j, "schema_version", root);
  if (version != 1) throw ConfigError(root + ".schema_version", "unsupported version " + std::to_string(version));
  req.variant = variant_from_string(get_or<std::string>(j, "variant", root, "power-min"), root + ".variant");
  BeamformingInstance& inst = req.instance;
  if (j.contains("channels")) {
    const json& ch = j["channels"];
    if (!ch.is_array() || ch.empty()) throw ConfigError(root + ".channels", "expected a non-empty array");
    for (std::size_t m = 0; m < ch.size(); ++m) {
      inst.channel.channels.push_back(vector_from_json(ch[m], root + ".channels[" + std::to_string(m) + "]"));
      inst.channel.decode_order.push_back(m);
    }
    const std::size_t users = ch.size();
    if (j.contains("noise_powers")) {
      inst.channel.noise_powers = get<std::vector<double>>(j, "noise_powers", root);
    } else {
      inst.channel.noise_powers.assign(users, get_or<double>(j, "noise_power", root, 1.0));
    }
  } else {
    const UlaConfig ula{get<int>(j, "num_antennas", root), get_or<double>(j, "spacing_over_wavelength", root, 0.5)};
    const json& us = require(j, "users", root);
    if (!us.is_array() || us.empty()) throw ConfigError(root + ".users", "expected a non-empty array");
    std::vector<UserGeometry> geoms;
    for (std::size_t u = 0; u < us.size(); ++u)
      geoms.push_back(geometry_from_json(us[u], root + ".users[" + std::to_string(u) + "]"));
    try {
      ula.validate();
      inst.channel = draw_realization(geoms, ula, get_or<double>(j, "noise_power", root, 1.0), RngStream{seed, 0});
    } catch (const DecodeOrderAmbiguous& e) {
      throw ConfigError(root + ".users", e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(root + ".num_antennas", e.what());
    }
  }
  inst.sinr_targets = targets_from_json(j, root, inst.channel.channels.size());
  if (j.contains("per_antenna_caps")) {
    const json& caps = j["per_antenna_caps"];
    if (caps.is_number())
      inst.per_antenna_caps = std::vector<double>(static_cast<std::size_t>(inst.num_antennas()), caps.get<double>());
    else
      inst.per_antenna_caps = get<std::vector<double>>(j, "per_antenna_caps", root);
  }
  if (req.variant == Variant::CapsOff) inst.per_antenna_caps.reset();
  if (j.contains("eavesdroppers")) {
    const json& ev = j["eavesdroppers"];
    if (!ev.is_array()) throw ConfigError(root + ".eavesdroppers", "expected an array");
    for (std::size_t r = 0; r < ev.size(); ++r) {
      const std::string p = root + ".eavesdroppers[" + std::to_string(r) + "]";
      inst.eavesdroppers.push_back({vector_from_json(require(ev[r], "channel", p), p + ".channel"),
                                    get<double>(ev[r], "max_leakage", p)});
    }
  }
  try {
    inst.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(root, e.what());
  }
  if (req.variant == Variant::AlphaMin && !inst.per_antenna_caps)
    throw ConfigError(root + ".per_antenna_caps", "alpha-min needs caps");
  if (req.variant == Variant::Secure && inst.eavesdroppers.empty())
    throw ConfigError(root + ".eavesdroppers", "secure needs at least one eavesdropper");
  req.sca = sca_config_from_json(j.value("solver", json::object()), root + ".solver");
  return req;
}

inline json trace_to_json(const ScaTrace& t) {
  return json{{"values", t.values},
              {"iterations", t.iterations()},
              {"stop_reason", stop_reason_name(t.stop_reason)},
              {"restarts_used", t.restarts_used},
              {"restart_log", t.restart_log},
              {"monotone", t.monotone},
              {"iterate_slack", t.iterate_slack},
              {"problem_infeasible", t.problem_infeasible}};
}

inline json beamformers_to_json(const BeamformerSet& w) {
  json a = json::array();
  for (const auto& v : w.vectors) a.push_back(vector_to_json(v));
  return a;
}

}  // namespace nomabf::io
