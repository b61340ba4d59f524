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
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "uavcache/config.hpp"
#include "uavcache/dqn.hpp"
#include "uavcache/env.hpp"

namespace uavcache::agents {

// What a policy hands to the environment for one slot.
struct Decision {
  envmdp::Allocation allocation;
  RecoveryMode mode = RecoveryMode::kAllEligible;
  int action_index = -1;  // index in the policy's own action list
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual Decision decide(envmdp::Env& env, const envmdp::MdpState& state, Rng& rng) = 0;
};

// ---------------------------------------------------------------------------
// Random

// Uniform over a feasible action list.
inline int random_action(const envmdp::ActionSpace& space, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, space.size() - 1);
  return static_cast<int>(pick(rng));
}

class RandomPolicy : public Policy {
 public:
  std::string name() const override { return "random"; }
  Decision decide(envmdp::Env& env, const envmdp::MdpState&, Rng& rng) override {
    const int a = random_action(env.actions(), rng);
    return {env.actions()[a], env.config().recovery_mode, a};
  }
};

// ---------------------------------------------------------------------------
// Exhaustive per-slot search (exact optimum since transitions ignore actions)

class OraclePolicy : public Policy {
 public:
  std::string name() const override { return "oracle"; }
  Decision decide(envmdp::Env& env, const envmdp::MdpState&, Rng&) override {
    const auto& c = env.config();
    const auto best = envmdp::exhaustive_slot_oracle(env.snapshot(), env.actions(), c.recovery_mode, c.cell_mode);
    return {env.actions()[best.action], c.recovery_mode, best.action};
  }
};

// ---------------------------------------------------------------------------
// Learned Q-network (SACRL on the full space, SCRL on equal-share)

class GreedyQPolicy : public Policy {
 public:
  GreedyQPolicy(std::string name, QFunction q, LearningTask task)
      : name_(std::move(name)), q_(std::move(q)), task_(std::move(task)) {
    if (q_.action_count() != static_cast<int>(task_.space.size()))
      throw ConfigError("policy " + name_ + ": checkpoint has " + std::to_string(q_.action_count()) +
                        " outputs but the action space has " + std::to_string(task_.space.size()));
  }
  std::string name() const override { return name_; }
  Decision decide(envmdp::Env&, const envmdp::MdpState& state, Rng&) override {
    const int a = greedy_action(q_.values(state), {});
    return {task_.space[a], task_.mode, a};
  }

 private:
  std::string name_;
  QFunction q_;
  LearningTask task_;
};

// ---------------------------------------------------------------------------
// Non-coded transmission (NCT)

// (x, B) combinations with k at its lowest level; under non-coded recovery
// the best eligible CU sends the whole file with the full bandwidth.
inline envmdp::ActionSpace non_coded_actions(const envmdp::ActionSpace& full) {
  std::vector<envmdp::Allocation> out;
  for (const auto& a : full.actions())
    if (std::all_of(a.begin(), a.end(), [](const envmdp::SuChoice& s) { return s.k_level == 0; })) out.push_back(a);
  return envmdp::ActionSpace(std::move(out));
}

class NctPolicy : public Policy {
 public:
  explicit NctPolicy(const envmdp::Env& env) : space_(non_coded_actions(env.actions())) {}
  std::string name() const override { return "nct"; }
  const envmdp::ActionSpace& space() const { return space_; }
  Decision decide(envmdp::Env& env, const envmdp::MdpState&, Rng&) override {
    const auto best =
        envmdp::exhaustive_slot_oracle(env.snapshot(), space_, RecoveryMode::kNonCoded, env.config().cell_mode);
    return {space_[best.action], RecoveryMode::kNonCoded, best.action};
  }

 private:
  envmdp::ActionSpace space_;
};

// ---------------------------------------------------------------------------
// Particle swarm (global best), applied myopically per slot

struct PsoResult {
  int action = 0;
  double reward = 0.0;
  std::vector<double> best_history;  // swarm best after init and each iteration
};

namespace detail {

// Rounds a relaxed position (per SU: x, bandwidth level, k level) to levels,
// then repairs budget violations by lowering bandwidth levels (last SU
// first), and unscheduling SUs if that is not enough.
inline envmdp::Allocation round_position(const std::vector<double>& pos, const ScenarioConfig& c) {
  const int nb = static_cast<int>(c.bandwidth_levels_hz.size());
  const int nk = static_cast<int>(c.k_levels.size());
  envmdp::Allocation a(c.sensing_uavs);
  for (int i = 0; i < c.sensing_uavs; ++i) {
    const bool on = pos[3 * i] >= 0.5;
    if (!on) {
      a[i] = envmdp::off_choice(c);
      continue;
    }
    const int b = std::clamp(static_cast<int>(std::lround(pos[3 * i + 1])), 0, nb - 1);
    const int k = std::clamp(static_cast<int>(std::lround(pos[3 * i + 2])), 0, nk - 1);
    a[i] = {true, b, k, c.bandwidth_levels_hz[b], c.k_levels[k]};
  }
  const auto used = [&] {
    double s = 0.0;
    for (const auto& x : a)
      if (x.scheduled) s += x.bandwidth_hz;
    return s;
  };
  const auto over = [&] { return !envmdp::detail::within_budget(used(), c.total_bandwidth_hz); };
  while (over()) {
    bool lowered = false;
    for (int i = c.sensing_uavs - 1; i >= 0 && !lowered; --i) {
      if (a[i].scheduled && a[i].bandwidth_level > 0) {
        --a[i].bandwidth_level;
        a[i].bandwidth_hz = c.bandwidth_levels_hz[a[i].bandwidth_level];
        lowered = true;
      }
    }
    if (lowered) continue;
    for (int i = c.sensing_uavs - 1; i >= 0; --i)
      if (a[i].scheduled) {
        a[i] = envmdp::off_choice(c);
        break;
      }
  }
  return a;
}

}  // namespace detail

inline PsoResult pso_search(const envmdp::SlotEvaluator& slot, const envmdp::ActionSpace& space,
                            const PsoParams& params, Rng& rng) {
  const auto& c = slot.config();
  const int dims = 3 * c.sensing_uavs;
  // each level owns an interval of equal width around its index
  std::vector<double> lo(dims, -0.5), hi(dims, 0.0);
  for (int i = 0; i < c.sensing_uavs; ++i) {
    lo[3 * i] = 0.0;
    hi[3 * i] = 1.0;
    hi[3 * i + 1] = static_cast<double>(c.bandwidth_levels_hz.size()) - 0.5;
    hi[3 * i + 2] = static_cast<double>(c.k_levels.size()) - 0.5;
  }
  std::map<int, double> cache;
  const auto score = [&](const std::vector<double>& pos, int& index) {
    const auto alloc = detail::round_position(pos, c);
    index = space.index_of(alloc);
    if (index < 0) throw ContractViolation("pso: repaired allocation is not in the action list");
    auto it = cache.find(index);
    if (it != cache.end()) return it->second;
    const double r = slot.reward(alloc, c.recovery_mode, c.cell_mode);
    cache.emplace(index, r);
    return r;
  };

  struct Particle {
    std::vector<double> pos, vel, best_pos;
    double best = -1.0;
    int best_index = 0;
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Particle> swarm(params.particles);
  PsoResult out;
  out.reward = -1.0;
  std::vector<double> global_pos;
  for (auto& p : swarm) {
    p.pos.resize(dims);
    p.vel.resize(dims);
    for (int d = 0; d < dims; ++d) {
      const double range = hi[d] - lo[d];
      p.pos[d] = lo[d] + range * unit(rng);
      p.vel[d] = range * (2.0 * unit(rng) - 1.0);
    }
    int idx = 0;
    p.best = score(p.pos, idx);
    p.best_index = idx;
    p.best_pos = p.pos;
    if (p.best > out.reward || (p.best == out.reward && idx < out.action)) {
      out.reward = p.best;
      out.action = idx;
      global_pos = p.pos;
    }
  }
  out.best_history.push_back(out.reward);
  for (int it = 0; it < params.iterations; ++it) {
    for (auto& p : swarm) {
      for (int d = 0; d < dims; ++d) {
        const double range = hi[d] - lo[d];
        p.vel[d] = params.inertia * p.vel[d] + params.cognitive * unit(rng) * (p.best_pos[d] - p.pos[d]) +
                   params.social * unit(rng) * (global_pos[d] - p.pos[d]);
        p.vel[d] = std::clamp(p.vel[d], -range, range);
        p.pos[d] = std::clamp(p.pos[d] + p.vel[d], lo[d], hi[d]);
      }
      int idx = 0;
      const double r = score(p.pos, idx);
      if (r > p.best) {
        p.best = r;
        p.best_index = idx;
        p.best_pos = p.pos;
      }
      if (r > out.reward || (r == out.reward && idx < out.action)) {
        out.reward = r;
        out.action = idx;
        global_pos = p.pos;
      }
    }
    out.best_history.push_back(out.reward);
  }
  return out;
}

class PsoPolicy : public Policy {
 public:
  std::string name() const override { return "pso"; }
  Decision decide(envmdp::Env& env, const envmdp::MdpState&, Rng& rng) override {
    const auto r = pso_search(env.snapshot(), env.actions(), env.config().pso, rng);
    return {env.actions()[r.action], env.config().recovery_mode, r.action};
  }
};

}  // namespace uavcache::agents
