// Copyright 2026 The uavcache Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"
#include "uavcache/errors.hpp"

namespace uavcache {

using Json = nlohmann::ordered_json;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

// Which cooperative UAVs transmit a coded file and how recovery is scored.
enum class RecoveryMode {
  kAllEligible,  // every eligible holder transmits, recovery needs >= k successes
  kSelectedK,    // only the k best holders transmit, all must succeed
  kNonCoded,     // single best holder sends the whole file (NCT baseline)
};

// How a cell's recovery probability combines the SUs covering it.
enum class CellMode {
  kSimplified,  // 1 - prod(1 - x_i P_i)
  kLiteral,     // 1 - prod(1 - x_i P_i prod_{e in E_opt} eta_e)
};

inline std::string to_string(RecoveryMode m) {
  switch (m) {
    case RecoveryMode::kAllEligible: return "all-eligible";
    case RecoveryMode::kSelectedK: return "selected-k";
    case RecoveryMode::kNonCoded: return "non-coded";
  }
  return "?";
}

inline std::string to_string(CellMode m) {
  return m == CellMode::kSimplified ? "simplified" : "literal-eq6";
}

inline std::optional<RecoveryMode> parse_recovery_mode(const std::string& s) {
  if (s == "all-eligible") return RecoveryMode::kAllEligible;
  if (s == "selected-k") return RecoveryMode::kSelectedK;
  if (s == "non-coded") return RecoveryMode::kNonCoded;
  return std::nullopt;
}

inline std::optional<CellMode> parse_cell_mode(const std::string& s) {
  if (s == "simplified") return CellMode::kSimplified;
  if (s == "literal-eq6") return CellMode::kLiteral;
  return std::nullopt;
}

// Numerical control for the fading CDF series and the STP quadrature.
struct QuadratureSpec {
  int node_count = 64;
  double series_tol = 1e-12;
  int series_max_terms = 64;
};

struct DqnHyperparams {
  double learning_rate = 0.001;
  double discount = 0.9;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double epsilon_decay_fraction = 0.8;
  int batch_size = 32;
  int memory_size = 2000;
  int target_sync_steps = 100;
  int episodes = 500;
  std::vector<int> hidden_layers = {128, 128};
  double grad_clip_norm = 1.0;
  std::string optimizer = "adam";  // "adam" or "sgd"
  double reward_scale = 10.0;      // multiplies rewards stored in replay
};

struct PsoParams {
  int particles = 30;
  int iterations = 50;
  double inertia = 0.7;
  double cognitive = 1.5;
  double social = 1.5;
};

// Every physical, coding and learning parameter of a scenario. Fields ending
// in _db/_dbm keep the value as written; their linear counterparts are filled
// once by finalize() and used by all computations.
struct ScenarioConfig {
  // geometry
  double area_x_m = 1000.0;
  double area_y_m = 1000.0;
  double cell_side_m = 50.0;
  int sensing_uavs = 2;
  int coop_uavs = 16;
  double altitude_m = 100.0;
  double apothem_m = 100.0;
  int polygon_sides = 4;
  double speed_mps = 10.0;
  double slot_s = 1.0;

  // resources and coding
  double total_bandwidth_hz = 10e6;
  std::vector<double> bandwidth_levels_hz = {2e6, 6e6};
  std::vector<int> k_levels = {1, 2, 3};
  int fragments_n = 8;

  // radio
  double snr_threshold_db = 27.0;
  double power_w = 0.15;
  double noise_dbm = -90.0;
  double rician_factor = 3.0;
  double pathloss_exponent = 4.0;
  std::optional<double> beta0;
  double calib_ref_distance_m = 200.0;
  double calib_margin_db = 3.0;
  std::optional<double> contact_mean_s;
  double calib_target_stp = 0.6;
  double calib_content_kbits = 78.0;
  int calib_cells = 9;
  double calib_bandwidth_hz = 2e6;

  // content
  double content_kbits_min = 73.0;
  double content_kbits_max = 83.0;

  // episode and modes
  int horizon = 60;
  RecoveryMode recovery_mode = RecoveryMode::kAllEligible;
  CellMode cell_mode = CellMode::kSimplified;

  QuadratureSpec quadrature;
  DqnHyperparams dqn;
  PsoParams pso;
  std::uint64_t seed = 1;

  // derived, linear units
  double snr_threshold = 0.0;
  double noise_power_w = 0.0;

  void finalize() {
    snr_threshold = db_to_linear(snr_threshold_db);
    noise_power_w = dbm_to_watts(noise_dbm);
  }

  bool calibrated() const { return beta0.has_value() && contact_mean_s.has_value(); }

  int grid_nx() const { return static_cast<int>(std::lround(area_x_m / cell_side_m)); }
  int grid_ny() const { return static_cast<int>(std::lround(area_y_m / cell_side_m)); }
  double cell_area() const { return cell_side_m * cell_side_m; }
  // holders per file: min(n, CU pool)
  int holders_per_file() const { return std::min(fragments_n, coop_uavs); }
};

namespace detail {

// Reads fields out of a JSON object, remembering which keys were consumed so
// that leftovers can be reported, and collecting every validation problem
// instead of stopping at the first one.
class FieldReader {
 public:
  FieldReader(const Json& obj, std::string prefix, std::vector<std::string>& errors)
      : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {}

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const Json& v = obj_.at(key);
    try {
      if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected integer");
        out = v.get<int>();
      } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
          throw std::invalid_argument("expected non-negative integer");
        out = v.get<std::uint64_t>();
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("expected number");
        out = v.get<double>();
      } else if constexpr (std::is_same_v<T, std::optional<double>>) {
        if (v.is_null()) {
          out.reset();
        } else {
          if (!v.is_number()) throw std::invalid_argument("expected number or null");
          out = v.get<double>();
        }
      } else if constexpr (std::is_same_v<T, std::vector<double>>) {
        if (!v.is_array()) throw std::invalid_argument("expected array of numbers");
        std::vector<double> tmp;
        for (const auto& e : v) {
          if (!e.is_number()) throw std::invalid_argument("expected array of numbers");
          tmp.push_back(e.get<double>());
        }
        out = std::move(tmp);
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected string");
        out = v.get<std::string>();
      } else if constexpr (std::is_same_v<T, std::vector<int>>) {
        if (!v.is_array()) throw std::invalid_argument("expected array of integers");
        std::vector<int> tmp;
        for (const auto& e : v) {
          if (!e.is_number_integer()) throw std::invalid_argument("expected array of integers");
          tmp.push_back(e.get<int>());
        }
        out = std::move(tmp);
      } else {
        static_assert(sizeof(T) == 0, "unsupported field type");
      }
    } catch (const std::exception& e) {
      errors_.push_back(path(key) + ": " + e.what());
    }
  }

  std::optional<std::string> read_string(const char* key) {
    seen_.insert(key);
    if (!obj_.contains(key)) return std::nullopt;
    if (!obj_.at(key).is_string()) {
      errors_.push_back(path(key) + ": expected string");
      return std::nullopt;
    }
    return obj_.at(key).get<std::string>();
  }

  const Json* object(const char* key) {
    seen_.insert(key);
    if (!obj_.contains(key)) return nullptr;
    if (!obj_.at(key).is_object()) {
      errors_.push_back(path(key) + ": expected object");
      return nullptr;
    }
    return &obj_.at(key);
  }

  void reject_unknown() {
    for (const auto& [k, _] : obj_.items())
      if (!seen_.count(k)) errors_.push_back(path(k) + ": unknown field");
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

 private:
  const Json& obj_;
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

inline void check(bool ok, std::vector<std::string>& errors, const std::string& field, const std::string& what) {
  if (!ok) errors.push_back(field + ": " + what);
}

}  // namespace detail

// Checks every constraint and returns the list of violations (empty if valid).
inline std::vector<std::string> validate(const ScenarioConfig& c) {
  std::vector<std::string> e;
  using detail::check;
  check(c.area_x_m > 0, e, "area_x_m", "must be positive");
  check(c.area_y_m > 0, e, "area_y_m", "must be positive");
  check(c.cell_side_m > 0, e, "cell_side_m", "must be positive");
  check(c.sensing_uavs >= 1, e, "sensing_uavs", "must be >= 1");
  check(c.coop_uavs >= 1, e, "coop_uavs", "must be >= 1");
  check(c.altitude_m > 0, e, "altitude_m", "must be positive");
  check(c.apothem_m > 0, e, "apothem_m", "must be positive");
  check(c.polygon_sides >= 3, e, "polygon_sides", "must be >= 3");
  check(c.speed_mps >= 0, e, "speed_mps", "must be non-negative");
  check(c.slot_s > 0, e, "slot_s", "must be positive");
  check(c.total_bandwidth_hz > 0, e, "total_bandwidth_hz", "must be positive");
  check(!c.bandwidth_levels_hz.empty(), e, "bandwidth_levels_hz", "must be nonempty");
  for (double b : c.bandwidth_levels_hz) check(b > 0, e, "bandwidth_levels_hz", "levels must be positive");
  check(!c.k_levels.empty(), e, "k_levels", "must be nonempty");
  for (int k : c.k_levels) check(k >= 1, e, "k_levels", "levels must be >= 1");
  check(c.fragments_n >= 1, e, "fragments_n", "must be >= 1");
  for (int k : c.k_levels)
    check(k <= c.holders_per_file(), e, "k_levels", "level exceeds holders per file (min(fragments_n, coop_uavs))");
  check(c.power_w > 0, e, "power_w", "must be positive");
  check(c.rician_factor >= 0, e, "rician_factor", "must be non-negative");
  check(c.pathloss_exponent > 0, e, "pathloss_exponent", "must be positive");
  if (c.beta0) check(*c.beta0 > 0, e, "beta0", "must be positive");
  if (c.contact_mean_s) check(*c.contact_mean_s > 0, e, "contact_mean_s", "must be positive");
  check(c.calib_ref_distance_m > 0, e, "calib_ref_distance_m", "must be positive");
  check(c.calib_target_stp > 0 && c.calib_target_stp < 1, e, "calib_target_stp", "must be in (0, 1)");
  check(c.calib_content_kbits > 0, e, "calib_content_kbits", "must be positive");
  check(c.calib_cells >= 1, e, "calib_cells", "must be >= 1");
  check(c.calib_bandwidth_hz > 0, e, "calib_bandwidth_hz", "must be positive");
  check(c.content_kbits_min > 0, e, "content_kbits_min", "must be positive");
  check(c.content_kbits_min <= c.content_kbits_max, e, "content_kbits_max", "must be >= content_kbits_min");
  check(c.horizon >= 1, e, "horizon", "must be >= 1");
  check(c.quadrature.node_count >= 8, e, "quadrature.node_count", "must be >= 8");
  check(c.quadrature.series_tol > 0, e, "quadrature.series_tol", "must be positive");
  check(c.quadrature.series_max_terms >= 1, e, "quadrature.series_max_terms", "must be >= 1");
  const auto& d = c.dqn;
  check(d.learning_rate > 0, e, "dqn.learning_rate", "must be positive");
  check(d.discount > 0 && d.discount < 1, e, "dqn.discount", "must be in (0, 1)");
  check(d.epsilon_start >= 0 && d.epsilon_start <= 1, e, "dqn.epsilon_start", "must be in [0, 1]");
  check(d.epsilon_end >= 0 && d.epsilon_end <= 1, e, "dqn.epsilon_end", "must be in [0, 1]");
  check(d.epsilon_decay_fraction > 0 && d.epsilon_decay_fraction <= 1, e, "dqn.epsilon_decay_fraction",
        "must be in (0, 1]");
  check(d.batch_size >= 1, e, "dqn.batch_size", "must be >= 1");
  check(d.memory_size >= d.batch_size, e, "dqn.memory_size", "must be >= dqn.batch_size");
  check(d.target_sync_steps >= 1, e, "dqn.target_sync_steps", "must be >= 1");
  check(d.episodes >= 1, e, "dqn.episodes", "must be >= 1");
  for (int h : d.hidden_layers) check(h >= 1, e, "dqn.hidden_layers", "widths must be >= 1");
  check(d.grad_clip_norm > 0, e, "dqn.grad_clip_norm", "must be positive");
  check(d.optimizer == "adam" || d.optimizer == "sgd", e, "dqn.optimizer", "must be \"adam\" or \"sgd\"");
  check(d.reward_scale > 0 && std::isfinite(d.reward_scale), e, "dqn.reward_scale", "must be positive");
  check(c.pso.particles >= 1, e, "pso.particles", "must be >= 1");
  check(c.pso.iterations >= 0, e, "pso.iterations", "must be >= 0");
  return e;
}

// Builds a config from a JSON document. Missing fields keep their defaults,
// unknown fields are rejected, and all problems are reported together.
inline ScenarioConfig config_from_json(const Json& doc) {
  ScenarioConfig c;
  std::vector<std::string> errors;
  if (!doc.is_object()) throw ConfigError("config: top-level value must be an object");
  detail::FieldReader r(doc, "", errors);
  r.read("area_x_m", c.area_x_m);
  r.read("area_y_m", c.area_y_m);
  r.read("cell_side_m", c.cell_side_m);
  r.read("sensing_uavs", c.sensing_uavs);
  r.read("coop_uavs", c.coop_uavs);
  r.read("altitude_m", c.altitude_m);
  r.read("apothem_m", c.apothem_m);
  r.read("polygon_sides", c.polygon_sides);
  r.read("speed_mps", c.speed_mps);
  r.read("slot_s", c.slot_s);
  r.read("total_bandwidth_hz", c.total_bandwidth_hz);
  r.read("bandwidth_levels_hz", c.bandwidth_levels_hz);
  r.read("k_levels", c.k_levels);
  r.read("fragments_n", c.fragments_n);
  r.read("snr_threshold_db", c.snr_threshold_db);
  r.read("power_w", c.power_w);
  r.read("noise_dbm", c.noise_dbm);
  r.read("rician_factor", c.rician_factor);
  r.read("pathloss_exponent", c.pathloss_exponent);
  r.read("beta0", c.beta0);
  r.read("calib_ref_distance_m", c.calib_ref_distance_m);
  r.read("calib_margin_db", c.calib_margin_db);
  r.read("contact_mean_s", c.contact_mean_s);
  r.read("calib_target_stp", c.calib_target_stp);
  r.read("calib_content_kbits", c.calib_content_kbits);
  r.read("calib_cells", c.calib_cells);
  r.read("calib_bandwidth_hz", c.calib_bandwidth_hz);
  r.read("content_kbits_min", c.content_kbits_min);
  r.read("content_kbits_max", c.content_kbits_max);
  r.read("horizon", c.horizon);
  if (auto s = r.read_string("recovery_mode")) {
    if (auto m = parse_recovery_mode(*s)) c.recovery_mode = *m;
    else errors.push_back("recovery_mode: expected one of all-eligible, selected-k, non-coded");
  }
  if (auto s = r.read_string("cell_mode")) {
    if (auto m = parse_cell_mode(*s)) c.cell_mode = *m;
    else errors.push_back("cell_mode: expected one of simplified, literal-eq6");
  }
  if (const Json* q = r.object("quadrature")) {
    detail::FieldReader qr(*q, "quadrature", errors);
    qr.read("node_count", c.quadrature.node_count);
    qr.read("series_tol", c.quadrature.series_tol);
    qr.read("series_max_terms", c.quadrature.series_max_terms);
    qr.reject_unknown();
  }
  if (const Json* q = r.object("dqn")) {
    detail::FieldReader qr(*q, "dqn", errors);
    qr.read("learning_rate", c.dqn.learning_rate);
    qr.read("discount", c.dqn.discount);
    qr.read("epsilon_start", c.dqn.epsilon_start);
    qr.read("epsilon_end", c.dqn.epsilon_end);
    qr.read("epsilon_decay_fraction", c.dqn.epsilon_decay_fraction);
    qr.read("batch_size", c.dqn.batch_size);
    qr.read("memory_size", c.dqn.memory_size);
    qr.read("target_sync_steps", c.dqn.target_sync_steps);
    qr.read("episodes", c.dqn.episodes);
    qr.read("hidden_layers", c.dqn.hidden_layers);
    qr.read("grad_clip_norm", c.dqn.grad_clip_norm);
    qr.read("optimizer", c.dqn.optimizer);
    qr.read("reward_scale", c.dqn.reward_scale);
    qr.reject_unknown();
  }
  if (const Json* q = r.object("pso")) {
    detail::FieldReader qr(*q, "pso", errors);
    qr.read("particles", c.pso.particles);
    qr.read("iterations", c.pso.iterations);
    qr.read("inertia", c.pso.inertia);
    qr.read("cognitive", c.pso.cognitive);
    qr.read("social", c.pso.social);
    qr.reject_unknown();
  }
  r.read("seed", c.seed);
  r.reject_unknown();

  if (errors.empty()) {
    auto more = validate(c);
    errors.insert(errors.end(), more.begin(), more.end());
  }
  if (!errors.empty()) {
    std::ostringstream os;
    os << "invalid config (" << errors.size() << " error" << (errors.size() > 1 ? "s" : "") << ")";
    for (const auto& msg : errors) os << "\n  " << msg;
    throw ConfigError(os.str());
  }
  c.finalize();
  return c;
}

// Full resolved snapshot: every field, including defaults that were used.
inline Json config_to_json(const ScenarioConfig& c) {
  Json j;
  j["area_x_m"] = c.area_x_m;
  j["area_y_m"] = c.area_y_m;
  j["cell_side_m"] = c.cell_side_m;
  j["sensing_uavs"] = c.sensing_uavs;
  j["coop_uavs"] = c.coop_uavs;
  j["altitude_m"] = c.altitude_m;
  j["apothem_m"] = c.apothem_m;
  j["polygon_sides"] = c.polygon_sides;
  j["speed_mps"] = c.speed_mps;
  j["slot_s"] = c.slot_s;
  j["total_bandwidth_hz"] = c.total_bandwidth_hz;
  j["bandwidth_levels_hz"] = c.bandwidth_levels_hz;
  j["k_levels"] = c.k_levels;
  j["fragments_n"] = c.fragments_n;
  j["snr_threshold_db"] = c.snr_threshold_db;
  j["power_w"] = c.power_w;
  j["noise_dbm"] = c.noise_dbm;
  j["rician_factor"] = c.rician_factor;
  j["pathloss_exponent"] = c.pathloss_exponent;
  j["beta0"] = c.beta0 ? Json(*c.beta0) : Json(nullptr);
  j["calib_ref_distance_m"] = c.calib_ref_distance_m;
  j["calib_margin_db"] = c.calib_margin_db;
  j["contact_mean_s"] = c.contact_mean_s ? Json(*c.contact_mean_s) : Json(nullptr);
  j["calib_target_stp"] = c.calib_target_stp;
  j["calib_content_kbits"] = c.calib_content_kbits;
  j["calib_cells"] = c.calib_cells;
  j["calib_bandwidth_hz"] = c.calib_bandwidth_hz;
  j["content_kbits_min"] = c.content_kbits_min;
  j["content_kbits_max"] = c.content_kbits_max;
  j["horizon"] = c.horizon;
  j["recovery_mode"] = to_string(c.recovery_mode);
  j["cell_mode"] = to_string(c.cell_mode);
  j["quadrature"] = {{"node_count", c.quadrature.node_count},
                     {"series_tol", c.quadrature.series_tol},
                     {"series_max_terms", c.quadrature.series_max_terms}};
  j["dqn"] = {{"learning_rate", c.dqn.learning_rate},
              {"discount", c.dqn.discount},
              {"epsilon_start", c.dqn.epsilon_start},
              {"epsilon_end", c.dqn.epsilon_end},
              {"epsilon_decay_fraction", c.dqn.epsilon_decay_fraction},
              {"batch_size", c.dqn.batch_size},
              {"memory_size", c.dqn.memory_size},
              {"target_sync_steps", c.dqn.target_sync_steps},
              {"episodes", c.dqn.episodes},
              {"hidden_layers", c.dqn.hidden_layers},
              {"grad_clip_norm", c.dqn.grad_clip_norm},
              {"optimizer", c.dqn.optimizer},
              {"reward_scale", c.dqn.reward_scale}};
  j["pso"] = {{"particles", c.pso.particles},
              {"iterations", c.pso.iterations},
              {"inertia", c.pso.inertia},
              {"cognitive", c.pso.cognitive},
              {"social", c.pso.social}};
  j["seed"] = c.seed;
  return j;
}

inline ScenarioConfig default_config() {
  ScenarioConfig c;
  c.finalize();
  return c;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

// FNV-1a over the canonical JSON dump; stable across platforms and runs.
inline std::uint64_t config_hash(const ScenarioConfig& c) {
  const std::string s = config_to_json(c).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string config_hash_hex(const ScenarioConfig& c) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << config_hash(c);
  return os.str();
}

}  // namespace uavcache
