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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "uavcache/baselines.hpp"
#include "uavcache/calibration.hpp"
#include "uavcache/config.hpp"
#include "uavcache/dqn.hpp"
#include "uavcache/env.hpp"
#include "uavcache/oracles.hpp"

namespace uavcache::harness {

namespace fs = std::filesystem;

inline constexpr std::uint64_t kPolicyStream = 3;

inline const std::vector<std::string>& policy_names() {
  static const std::vector<std::string> names = {"sacrl", "scrl", "pso", "nct", "random", "oracle"};
  return names;
}

inline bool is_learned(const std::string& policy) { return policy == "sacrl" || policy == "scrl"; }

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
  if (!out) throw ConfigError("write failed: " + path.string());
}

inline void write_json(const fs::path& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

inline void write_resolved_config(const fs::path& dir, const ScenarioConfig& c) {
  write_json(dir / "config.resolved.json", config_to_json(c));
}

struct Stats {
  double mean = 0.0;
  double std = 0.0;        // sample standard deviation
  double std_error = 0.0;  // std / sqrt(n)
};

inline Stats summarize(std::span<const double> xs) {
  Stats s;
  if (xs.empty()) return s;
  const double n = static_cast<double>(xs.size());
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
    s.std_error = s.std / std::sqrt(n);
  }
  return s;
}

// Coefficient of determination of the least-squares line through (i, y_i).
inline double linear_fit_r2(std::span<const double> y) {
  const double n = static_cast<double>(y.size());
  if (y.size() < 2) return 1.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sx += i;
    sy += y[i];
    sxx += static_cast<double>(i) * i;
    sxy += i * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / n;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double fit = intercept + slope * i;
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
}

// ---------------------------------------------------------------------------
// Policies

using CheckpointPaths = std::map<std::string, std::string>;

inline std::unique_ptr<agents::Policy> make_policy(const std::string& name, const envmdp::Env& env,
                                                   const CheckpointPaths& checkpoints) {
  if (name == "random") return std::make_unique<agents::RandomPolicy>();
  if (name == "oracle") return std::make_unique<agents::OraclePolicy>();
  if (name == "pso") return std::make_unique<agents::PsoPolicy>();
  if (name == "nct") return std::make_unique<agents::NctPolicy>(env);
  if (is_learned(name)) {
    const auto it = checkpoints.find(name);
    if (it == checkpoints.end()) throw ConfigError("policy " + name + ": no checkpoint given");
    if (!fs::exists(it->second)) throw ConfigError("policy " + name + ": checkpoint not found: " + it->second);
    auto ck = agents::load_checkpoint(it->second);
    auto task = name == "sacrl" ? agents::sacrl_task(env) : agents::scrl_task(env);
    return std::make_unique<agents::GreedyQPolicy>(name, std::move(ck.q), std::move(task));
  }
  throw ConfigError("unknown policy \"" + name + "\" (expected sacrl, scrl, pso, nct, random or oracle)");
}

// ---------------------------------------------------------------------------
// Evaluation with common random numbers

struct SlotRecord {
  int episode = 0;
  int slot = 0;
  int action = -1;
  double reward = 0.0;
  double area_m2 = 0.0;
};

struct PolicyEvaluation {
  std::string policy;
  std::vector<double> episode_mean_area;  // per episode, mean over slots
  std::vector<double> episode_mean_reward;
  std::vector<SlotRecord> slots;
  Stats area;
  std::vector<double> mean_cumulative_area;  // per slot, averaged over episodes
};

// Episode e of every policy replays the world drawn from the same seed, and
// each policy's own randomness is reseeded per episode.
inline PolicyEvaluation evaluate_policy(envmdp::Env& env, agents::Policy& policy, int episodes, std::uint64_t seed,
                                        std::optional<std::uint64_t> fixed_world = std::nullopt) {
  PolicyEvaluation out;
  out.policy = policy.name();
  const int horizon = env.config().horizon;
  out.mean_cumulative_area.assign(horizon, 0.0);
  for (int e = 0; e < episodes; ++e) {
    const auto world_seed = agents::episode_seed(seed, agents::kEvalStream, e);
    auto state = fixed_world ? env.reset(*fixed_world, world_seed) : env.reset(world_seed);
    Rng rng(agents::episode_seed(seed, kPolicyStream, e));
    double area_sum = 0.0, reward_sum = 0.0;
    while (!env.done()) {
      const int slot = env.slot();
      const auto d = policy.decide(env, state, rng);
      envmdp::validate_allocation(d.allocation, env.config());
      auto r = env.step(d.allocation, d.mode, d.action_index);
      area_sum += r.metrics.area_m2;
      reward_sum += r.reward;
      out.mean_cumulative_area[slot] += area_sum / episodes;
      out.slots.push_back({e, slot, d.action_index, r.reward, r.metrics.area_m2});
      state = std::move(r.state);
    }
    out.episode_mean_area.push_back(area_sum / horizon);
    out.episode_mean_reward.push_back(reward_sum / horizon);
  }
  out.area = summarize(out.episode_mean_area);
  return out;
}

inline std::string slots_csv(const std::vector<PolicyEvaluation>& evals, const std::string& hash) {
  std::ostringstream os;
  os.precision(17);
  os << "# config_hash=" << hash << "\n";
  os << "policy,episode,slot,action,reward,area_m2\n";
  for (const auto& ev : evals)
    for (const auto& s : ev.slots)
      os << ev.policy << ',' << s.episode << ',' << s.slot << ',' << s.action << ',' << s.reward << ',' << s.area_m2
         << "\n";
  return os.str();
}

inline std::string cumulative_csv(const std::vector<PolicyEvaluation>& evals, const std::string& hash) {
  std::ostringstream os;
  os.precision(17);
  os << "# config_hash=" << hash << "\n";
  os << "policy,slot,cumulative_area_m2\n";
  for (const auto& ev : evals)
    for (std::size_t t = 0; t < ev.mean_cumulative_area.size(); ++t)
      os << ev.policy << ',' << t << ',' << ev.mean_cumulative_area[t] << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Commands

struct TrainArtifacts {
  agents::TrainingResult result;
  std::string agent;
  int action_space_size = 0;
  Json summary;
};

inline TrainArtifacts cmd_train(ScenarioConfig c, const std::string& agent, const fs::path& out,
                                int eval_episodes = 20) {
  if (!is_learned(agent)) throw ConfigError("train: --agent must be sacrl or scrl, got \"" + agent + "\"");
  c = calibration::resolve(c);
  const auto hash = config_hash_hex(c);
  envmdp::Env env(c);
  const auto task = agent == "sacrl" ? agents::sacrl_task(env) : agents::scrl_task(env);
  TrainArtifacts a;
  a.agent = agent;
  a.action_space_size = static_cast<int>(task.space.size());
  a.result = agents::train(env, task, c.dqn, c.seed);

  write_resolved_config(out, c);
  {
    std::ostringstream os;
    agents::write_curve_csv(os, a.result.curve, hash);
    write_file(out / ("curve_" + agent + ".csv"), os.str());
  }
  agents::save_checkpoint((out / ("checkpoint_" + agent + ".json")).string(), a.result.q, agent, hash);

  agents::GreedyQPolicy learned(agent, a.result.q, task);
  agents::RandomPolicy random;
  const auto ev = evaluate_policy(env, learned, eval_episodes, c.seed);
  const auto rv = evaluate_policy(env, random, eval_episodes, c.seed);
  const std::size_t tail = std::max<std::size_t>(1, a.result.curve.size() / 10);
  double tail_sum = 0.0;
  for (std::size_t i = a.result.curve.size() - tail; i < a.result.curve.size(); ++i)
    tail_sum += a.result.curve[i].mean_reward;
  a.summary = {{"agent", agent},
               {"config_hash", hash},
               {"seed", c.seed},
               {"episodes", c.dqn.episodes},
               {"horizon", c.horizon},
               {"action_space_size", a.action_space_size},
               {"gradient_steps", a.result.gradient_steps},
               {"tail_mean_reward", tail_sum / tail},
               {"eval_episodes", eval_episodes},
               {"final_mean_area_m2", ev.area.mean},
               {"final_std_area_m2", ev.area.std},
               {"random_mean_area_m2", rv.area.mean},
               {"ratio_vs_random", rv.area.mean > 0 ? ev.area.mean / rv.area.mean : 0.0}};
  write_json(out / ("summary_train_" + agent + ".json"), a.summary);
  return a;
}

struct EvalArtifacts {
  std::vector<PolicyEvaluation> evaluations;
  Json summary;
};

inline EvalArtifacts cmd_eval(ScenarioConfig c, const std::vector<std::string>& policies,
                              const CheckpointPaths& checkpoints, int episodes, const fs::path& out) {
  if (policies.empty()) throw ConfigError("eval: no policies given");
  if (episodes < 1) throw ConfigError("eval: episodes must be >= 1");
  c = calibration::resolve(c);
  const auto hash = config_hash_hex(c);
  envmdp::Env env(c);
  EvalArtifacts a;
  for (const auto& name : policies) {
    auto policy = make_policy(name, env, checkpoints);
    a.evaluations.push_back(evaluate_policy(env, *policy, episodes, c.seed));
  }
  Json per = Json::object();
  for (const auto& ev : a.evaluations) {
    per[ev.policy] = {{"mean_area_m2", ev.area.mean},
                      {"std_area_m2", ev.area.std},
                      {"std_error_m2", ev.area.std_error},
                      {"mean_reward", summarize(ev.episode_mean_reward).mean},
                      {"final_cumulative_area_m2", ev.mean_cumulative_area.back()}};
  }
  Json ratios = Json::object();
  for (const auto& x : a.evaluations)
    for (const auto& y : a.evaluations)
      if (x.policy != y.policy && y.area.mean > 0) ratios[x.policy + "/" + y.policy] = x.area.mean / y.area.mean;
  a.summary = {{"config_hash", hash}, {"seed", c.seed}, {"episodes", episodes}, {"policies", per}, {"ratios", ratios}};

  write_resolved_config(out, c);
  write_json(out / "summary_eval.json", a.summary);
  write_file(out / "eval_slots.csv", slots_csv(a.evaluations, hash));
  write_file(out / "eval_cumulative.csv", cumulative_csv(a.evaluations, hash));
  return a;
}

// Sets a dotted config path to a number. "content_kbits" sets both ends of
// the content range.
inline ScenarioConfig with_parameter(const ScenarioConfig& c, const std::string& path, double value) {
  Json j = config_to_json(c);
  if (path == "content_kbits") {
    j["content_kbits_min"] = value;
    j["content_kbits_max"] = value;
  } else {
    Json* node = &j;
    std::stringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (!node->is_object() || !node->contains(parts[i]))
        throw ConfigError("sweep: parameter path \"" + path + "\" does not resolve");
      node = &(*node)[parts[i]];
    }
    if (!node->is_number() && !node->is_null())
      throw ConfigError("sweep: parameter \"" + path + "\" is not numeric");
    if (node->is_number_integer()) {
      if (value != std::floor(value)) throw ConfigError("sweep: parameter \"" + path + "\" needs integer values");
      *node = static_cast<long long>(value);
    } else {
      *node = value;
    }
  }
  return config_from_json(j);
}

struct SweepRow {
  double value = 0.0;
  PolicyEvaluation evaluation;
};

struct SweepArtifacts {
  std::vector<SweepRow> rows;
  std::string csv;
};

// Calibration is resolved on the base config first, so every sweep point
// shares beta0 and tau.
inline SweepArtifacts cmd_sweep(ScenarioConfig c, const std::string& path, const std::vector<double>& values,
                                const std::vector<std::string>& policies, const CheckpointPaths& checkpoints,
                                int episodes, const fs::path& out) {
  if (values.empty()) throw ConfigError("sweep: no values given");
  if (policies.empty()) throw ConfigError("sweep: no policies given");
  c = calibration::resolve(c);
  const auto hash = config_hash_hex(c);
  SweepArtifacts a;
  std::ostringstream os;
  os.precision(17);
  os << "# config_hash=" << hash << "\n";
  os << "parameter,value,policy,mean_area,std,std_error,episodes\n";
  for (double v : values) {
    const auto point = with_parameter(c, path, v);
    envmdp::Env env(point);
    for (const auto& name : policies) {
      auto policy = make_policy(name, env, checkpoints);
      auto ev = evaluate_policy(env, *policy, episodes, point.seed);
      os << path << ',' << v << ',' << name << ',' << ev.area.mean << ',' << ev.area.std << ',' << ev.area.std_error
         << ',' << episodes << "\n";
      a.rows.push_back({v, std::move(ev)});
    }
  }
  a.csv = os.str();
  write_resolved_config(out, c);
  write_file(out / "sweep.csv", a.csv);
  return a;
}

inline Json cmd_calibrate(const ScenarioConfig& c, const fs::path& out) {
  const auto r = calibration::resolve(c);
  const auto link = calibration::reference_link(r, *r.beta0);
  Json j = {{"config_hash", config_hash_hex(r)},
            {"beta0", *r.beta0},
            {"contact_mean_s", *r.contact_mean_s},
            {"mean_snr_db_at_calib_ref_distance",
             10.0 * std::log10(r.power_w * *r.beta0 * std::pow(r.calib_ref_distance_m, -r.pathloss_exponent) /
                               r.noise_power_w)},
            {"median_link_distance_m", link.distance},
            {"reference_stp", calibration::reference_stp(r, *r.beta0, *r.contact_mean_s)},
            {"target_stp", r.calib_target_stp}};
  write_resolved_config(out, r);
  write_json(out / "calibration.json", j);
  return j;
}

inline oracles::Report cmd_oracle(ScenarioConfig c, const std::string& suite, const fs::path& out) {
  c = calibration::resolve(c);
  auto report = oracles::run_suite(suite, c, c.seed);
  Json j = oracles::to_json(report);
  j["config_hash"] = config_hash_hex(c);
  write_resolved_config(out, c);
  write_json(out / ("oracle_" + suite + ".json"), j);
  return report;
}

}  // namespace uavcache::harness
