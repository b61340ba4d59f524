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
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "uavcache/channel.hpp"
#include "uavcache/coding.hpp"
#include "uavcache/config.hpp"
#include "uavcache/errors.hpp"
#include "uavcache/world.hpp"

namespace uavcache::envmdp {

// Per-SU decision: scheduling flag, bandwidth and coding parameter. Level
// indices are kept next to the values so searches can move between levels;
// a level index of -1 means the bandwidth is not one of the configured levels
// (equal-share allocation).
struct SuChoice {
  bool scheduled = false;
  int bandwidth_level = 0;
  int k_level = 0;
  double bandwidth_hz = 0.0;
  int k = 1;

  bool operator==(const SuChoice&) const = default;
};

using Allocation = std::vector<SuChoice>;

// Ordered list of feasible joint allocations; the position in the list is
// the flat action index.
class ActionSpace {
 public:
  ActionSpace() = default;
  explicit ActionSpace(std::vector<Allocation> actions) : actions_(std::move(actions)) {}

  std::size_t size() const { return actions_.size(); }
  const Allocation& operator[](std::size_t i) const { return actions_.at(i); }
  const std::vector<Allocation>& actions() const { return actions_; }

  // Index of an allocation, or -1 when it is not in the list.
  int index_of(const Allocation& a) const {
    for (std::size_t i = 0; i < actions_.size(); ++i)
      if (actions_[i] == a) return static_cast<int>(i);
    return -1;
  }

 private:
  std::vector<Allocation> actions_;
};

namespace detail {

// Walks the Cartesian product of per-SU choices with SU 0 most significant.
inline void product(const std::vector<std::vector<SuChoice>>& per_su, std::size_t su, Allocation& current,
                    std::vector<Allocation>& out) {
  if (su == per_su.size()) {
    out.push_back(current);
    return;
  }
  for (const auto& c : per_su[su]) {
    current[su] = c;
    product(per_su, su + 1, current, out);
  }
}

inline double scheduled_bandwidth(const Allocation& a) {
  double sum = 0.0;
  for (const auto& c : a)
    if (c.scheduled) sum += c.bandwidth_hz;
  return sum;
}

inline bool within_budget(double used, double total) { return used <= total * (1.0 + 1e-12); }

}  // namespace detail

// Canonical choice for an unscheduled SU: lowest bandwidth and k levels.
inline SuChoice off_choice(const ScenarioConfig& c) {
  SuChoice s;
  s.scheduled = false;
  s.bandwidth_level = 0;
  s.k_level = 0;
  s.bandwidth_hz = c.bandwidth_levels_hz.front();
  s.k = c.k_levels.front();
  return s;
}

// Joint (x, B, k) actions ordered lexicographically by SU index, then x,
// bandwidth level and k level, keeping only those within the total
// bandwidth.
inline ActionSpace enumerate_actions(const ScenarioConfig& c) {
  if (c.bandwidth_levels_hz.empty() || c.k_levels.empty())
    throw ConfigError("enumerate_actions: bandwidth and k level sets must be nonempty");
  std::vector<SuChoice> choices{off_choice(c)};
  for (std::size_t b = 0; b < c.bandwidth_levels_hz.size(); ++b)
    for (std::size_t k = 0; k < c.k_levels.size(); ++k)
      choices.push_back({true, static_cast<int>(b), static_cast<int>(k), c.bandwidth_levels_hz[b], c.k_levels[k]});
  std::vector<std::vector<SuChoice>> per_su(c.sensing_uavs, choices);
  std::vector<Allocation> all;
  Allocation cur(c.sensing_uavs);
  detail::product(per_su, 0, cur, all);
  std::vector<Allocation> feasible;
  for (auto& a : all)
    if (detail::within_budget(detail::scheduled_bandwidth(a), c.total_bandwidth_hz)) feasible.push_back(std::move(a));
  if (feasible.empty()) throw ConfigError("enumerate_actions: no feasible action under total_bandwidth_hz");
  return ActionSpace(std::move(feasible));
}

// Actions with the total bandwidth split evenly among scheduled SUs; only
// scheduling and k are chosen.
inline ActionSpace enumerate_equal_share_actions(const ScenarioConfig& c) {
  std::vector<SuChoice> choices{off_choice(c)};
  for (std::size_t k = 0; k < c.k_levels.size(); ++k) choices.push_back({true, -1, static_cast<int>(k), 0.0, c.k_levels[k]});
  std::vector<std::vector<SuChoice>> per_su(c.sensing_uavs, choices);
  std::vector<Allocation> all;
  Allocation cur(c.sensing_uavs);
  detail::product(per_su, 0, cur, all);
  for (auto& a : all) {
    const auto on = std::count_if(a.begin(), a.end(), [](const SuChoice& s) { return s.scheduled; });
    for (auto& s : a)
      if (s.scheduled) s.bandwidth_hz = c.total_bandwidth_hz / static_cast<double>(on);
  }
  return ActionSpace(std::move(all));
}

// Re-checks scheduling, bandwidth budget and coding-parameter bounds.
inline void validate_allocation(const Allocation& a, const ScenarioConfig& c) {
  if (static_cast<int>(a.size()) != c.sensing_uavs)
    throw ContractViolation("allocation: expected one choice per sensing UAV");
  for (const auto& s : a) {
    if (s.k < 1 || s.k > c.holders_per_file()) throw ContractViolation("allocation: k outside [1, n]");
    if (s.scheduled && !(s.bandwidth_hz > 0)) throw ContractViolation("allocation: scheduled SU without bandwidth");
  }
  if (!detail::within_budget(detail::scheduled_bandwidth(a), c.total_bandwidth_hz))
    throw ContractViolation("allocation: total bandwidth exceeded");
}

// Per-slot outcome of an allocation.
struct SlotMetrics {
  double reward = 0.0;
  double area_m2 = 0.0;
  double normalized_area = 0.0;
  std::vector<double> file_recovery;  // P_fi per SU (0 when unscheduled)
  std::vector<double> cell_recovery;  // Pr_c per cell
  std::vector<int> eligible_count;
  std::vector<int> selected_count;
  std::vector<bool> infeasible;  // scheduled but fewer than k eligible holders
  std::vector<coding::CodingPlan> plans;
};

// Everything about one frozen slot that does not depend on the action:
// fragment holders, link statistics and eligibility. STP values are computed
// lazily and memoized per (SU, bandwidth, k), so evaluating many actions on
// the same slot is cheap.
class SlotEvaluator {
 public:
  SlotEvaluator(const ScenarioConfig& config, const world::World& w) : config_(config), world_(w) {
    if (!config.calibrated()) throw ConfigError("slot evaluation needs a calibrated config (beta0, contact_mean_s)");
    radio_ = channel::radio_params(config);
    std::vector<Point3> pool;
    for (int e = 0; e < w.coop_count(); ++e) pool.push_back(w.cu(e).position);
    const int n = config.holders_per_file();
    for (int i = 0; i < w.sensing_count(); ++i) {
      SuStatic s;
      s.holders = coding::assign_fragments(w.su(i).position, config.k_levels.front(), n, pool);
      std::vector<double> snr;
      for (int e : s.holders) {
        const auto link = channel::link_stats(w.cu(e).position, w.gv().position, radio_);
        s.links.push_back(link);
        snr.push_back(link.mean_snr);
      }
      s.eligible = coding::eligible_cooperators(s.holders, snr, config.snr_threshold);
      for (int e : s.eligible) {
        const auto it = std::find(s.holders.begin(), s.holders.end(), e);
        s.eligible_links.push_back(s.links[it - s.holders.begin()]);
      }
      sus_.push_back(std::move(s));
    }
  }

  const ScenarioConfig& config() const { return config_; }
  const world::World& world() const { return world_; }
  const std::vector<int>& holders(int su) const { return sus_[su].holders; }
  const std::vector<int>& eligible(int su) const { return sus_[su].eligible; }
  const std::vector<channel::LinkStats>& holder_links(int su) const { return sus_[su].links; }

  // STP of each eligible holder of SU `su` for bandwidth B and parameter k.
  const std::vector<double>& eligible_stp(int su, double bandwidth_hz, int k) const {
    const auto key = std::make_tuple(su, bandwidth_hz, k);
    auto it = stp_cache_.find(key);
    if (it != stp_cache_.end()) return it->second;
    std::vector<double> eta;
    const channel::StpQuery q{world_.file(su).size_bits, k, bandwidth_hz, *config_.contact_mean_s};
    for (const auto& link : sus_[su].eligible_links)
      eta.push_back(channel::stp(q, link, config_.power_w, config_.quadrature));
    return stp_cache_.emplace(key, std::move(eta)).first->second;
  }

  coding::CodingPlan plan(int su, const SuChoice& choice, RecoveryMode mode) const {
    coding::CodingPlan p;
    p.su_id = su;
    p.scheduled = choice.scheduled;
    p.bandwidth_hz = choice.bandwidth_hz;
    p.k = mode == RecoveryMode::kNonCoded ? 1 : choice.k;
    p.n = static_cast<int>(sus_[su].holders.size());
    p.file_bits = world_.file(su).size_bits;
    p.fragment_bits = p.file_bits / p.k;
    p.holders = sus_[su].holders;
    p.eligible = sus_[su].eligible;
    if (!choice.scheduled) {
      p.feasible = true;
      return p;
    }
    p.eta = eligible_stp(su, choice.bandwidth_hz, p.k);
    const auto sel = coding::select_cooperators(p.eligible, p.eta, p.k);
    p.selected = sel.members;
    p.feasible = sel.feasible;
    const auto eta_of = [&](int cu) {
      return p.eta[std::find(p.eligible.begin(), p.eligible.end(), cu) - p.eligible.begin()];
    };
    for (int e : p.selected) p.selected_eta_product *= eta_of(e);
    switch (mode) {
      case RecoveryMode::kAllEligible:
        p.transmitting = p.eligible;
        p.file_recovery = coding::file_recovery_probability(p.eta, p.k);
        break;
      case RecoveryMode::kSelectedK:
      case RecoveryMode::kNonCoded:
        p.transmitting = p.selected;
        p.file_recovery = p.feasible ? p.selected_eta_product : 0.0;
        break;
    }
    if (!p.feasible) p.file_recovery = 0.0;
    return p;
  }

  SlotMetrics evaluate(const Allocation& a, RecoveryMode mode, CellMode cell_mode) const {
    validate_allocation(a, config_);
    SlotMetrics m;
    const int n_su = world_.sensing_count();
    std::vector<coding::SuRecovery> rec(n_su);
    for (int i = 0; i < n_su; ++i) {
      auto p = plan(i, a[i], mode);
      rec[i] = {p.scheduled, p.file_recovery, p.selected_eta_product, world_.file(i).coverage};
      m.file_recovery.push_back(p.scheduled ? p.file_recovery : 0.0);
      m.eligible_count.push_back(static_cast<int>(p.eligible.size()));
      m.selected_count.push_back(static_cast<int>(p.selected.size()));
      m.infeasible.push_back(p.scheduled && !p.feasible);
      m.plans.push_back(std::move(p));
    }
    const auto& grid = world_.grid();
    m.cell_recovery = coding::cell_recovery_probabilities(grid.cell_count(), rec, cell_mode);
    const auto area = coding::effective_recovery_area(m.cell_recovery, grid.cell_area());
    m.area_m2 = area.area_m2;
    m.normalized_area = area.normalized;
    m.reward = reward_scale() * m.area_m2;
    return m;
  }

  // Reward without building the full metrics record.
  double reward(const Allocation& a, RecoveryMode mode, CellMode cell_mode) const {
    return evaluate(a, mode, cell_mode).reward;
  }

  // lambda = 1 / (C A), which maps the reward onto [0, 1]
  double reward_scale() const {
    const auto& g = world_.grid();
    return 1.0 / (g.cell_count() * g.cell_area());
  }

 private:
  struct SuStatic {
    std::vector<int> holders;
    std::vector<channel::LinkStats> links;
    std::vector<int> eligible;
    std::vector<channel::LinkStats> eligible_links;
  };

  ScenarioConfig config_;
  world::World world_;
  channel::RadioParams radio_;
  std::vector<SuStatic> sus_;
  mutable std::map<std::tuple<int, double, int>, std::vector<double>> stp_cache_;
};

struct OracleResult {
  int action = 0;
  double reward = 0.0;
};

// Evaluates every action on the frozen slot; ties go to the smaller index.
inline OracleResult exhaustive_slot_oracle(const SlotEvaluator& slot, const ActionSpace& space, RecoveryMode mode,
                                           CellMode cell_mode) {
  if (space.size() > 10000) throw ContractViolation("exhaustive_slot_oracle: more than 1e4 actions");
  OracleResult best{0, -1.0};
  for (std::size_t i = 0; i < space.size(); ++i) {
    const double r = slot.reward(space[i], mode, cell_mode);
    if (r > best.reward) best = {static_cast<int>(i), r};
  }
  return best;
}

// State vector [p, f]: last slot's P_fi per SU, then current file sizes over
// the configured maximum file size.
using MdpState = std::vector<double>;

// Largest footprint cell count any SU can have, from placing the polygon at
// several sub-cell offsets over an unbounded lattice.
inline int max_footprint_cells(const ScenarioConfig& c) {
  const double s = c.cell_side_m;
  const double circumradius = c.apothem_m / std::cos(std::numbers::pi / c.polygon_sides);
  const int reach = static_cast<int>(std::ceil(circumradius / s)) + 1;
  int best = 0;
  constexpr int kOffsets = 4;
  for (int ox = 0; ox < kOffsets; ++ox)
    for (int oy = 0; oy < kOffsets; ++oy) {
      const Point2 center{(ox + 0.5) * s / kOffsets, (oy + 0.5) * s / kOffsets};
      int count = 0;
      for (int iy = -reach; iy <= reach; ++iy)
        for (int ix = -reach; ix <= reach; ++ix)
          if (world::in_regular_polygon({(ix + 0.5) * s, (iy + 0.5) * s}, center, c.apothem_m, c.polygon_sides))
            ++count;
      best = std::max(best, count);
    }
  return std::max(best, 1);
}

struct StepResult {
  MdpState state;
  double reward = 0.0;
  SlotMetrics metrics;
  bool done = false;
};

// One CSV row of the environment trace.
struct TraceRow {
  int slot = 0;
  int action = -1;
  double reward = 0.0;
  double area_m2 = 0.0;
  std::vector<double> file_recovery;
  std::vector<bool> infeasible;
};

// Time-slotted environment. Mobility and file sampling draw only from the
// environment's own generator, so the world trajectory for a seed does not
// depend on the actions taken.
class Env {
 public:
  explicit Env(ScenarioConfig config)
      : config_(std::move(config)), actions_(enumerate_actions(config_)) {
    if (!config_.calibrated()) throw ConfigError("Env: config must be calibrated (beta0, contact_mean_s)");
    file_scale_bits_ = config_.content_kbits_max * 1e3 * max_footprint_cells(config_);
  }

  const ScenarioConfig& config() const { return config_; }
  const ActionSpace& actions() const { return actions_; }
  int state_size() const { return 2 * config_.sensing_uavs; }
  const world::World& world() const { return world_; }
  int slot() const { return slot_; }
  bool done() const { return slot_ >= config_.horizon; }

  MdpState reset(std::uint64_t seed) { return reset(seed, seed); }

  // Node placement comes from world_seed; mobility and file sizes after that
  // from slot_seed. A fixed world_seed with speed 0 gives a frozen scenario
  // whose per-slot file sizes still vary with slot_seed.
  MdpState reset(std::uint64_t world_seed, std::uint64_t slot_seed) {
    Rng placement(world_seed);
    world_ = world::World::generate(config_, placement);
    rng_.seed(slot_seed ^ 0x9e3779b97f4a7c15ULL);
    slot_ = 0;
    last_p_.assign(config_.sensing_uavs, 0.0);
    trace_.clear();
    slot_eval_.reset();
    return state();
  }

  MdpState state() const {
    MdpState s(last_p_);
    for (const auto& f : world_.files()) s.push_back(std::min(1.0, f.size_bits / file_scale_bits_));
    return s;
  }

  // Evaluator for the current (frozen) slot; valid until the next step.
  const SlotEvaluator& snapshot() {
    if (!slot_eval_) slot_eval_ = std::make_unique<SlotEvaluator>(config_, world_);
    return *slot_eval_;
  }

  StepResult step(int action_index) {
    if (action_index < 0 || action_index >= static_cast<int>(actions_.size()))
      throw ContractViolation("Env::step: action index " + std::to_string(action_index) + " is not feasible");
    return step(actions_[action_index], config_.recovery_mode, action_index);
  }

  // Generic step used by baselines with their own action spaces or recovery
  // semantics.
  StepResult step(const Allocation& a, RecoveryMode mode, int action_index = -1) {
    if (done()) throw ContractViolation("Env::step: episode already finished");
    StepResult r;
    r.metrics = snapshot().evaluate(a, mode, config_.cell_mode);
    r.reward = r.metrics.reward;
    if (trace_enabled_)
      trace_.push_back({slot_, action_index, r.reward, r.metrics.area_m2, r.metrics.file_recovery, r.metrics.infeasible});
    last_p_ = r.metrics.file_recovery;
    slot_eval_.reset();
    world_.advance(rng_, config_.slot_s);
    ++slot_;
    r.done = done();
    r.state = state();
    return r;
  }

  void enable_trace(bool on) { trace_enabled_ = on; }
  const std::vector<TraceRow>& trace() const { return trace_; }

 private:
  ScenarioConfig config_;
  ActionSpace actions_;
  double file_scale_bits_ = 1.0;
  Rng rng_;
  world::World world_;
  int slot_ = 0;
  std::vector<double> last_p_;
  std::unique_ptr<SlotEvaluator> slot_eval_;
  bool trace_enabled_ = false;
  std::vector<TraceRow> trace_;
};

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows, int sensing_uavs,
                            const std::string& config_hash) {
  os << "# config_hash=" << config_hash << "\n";
  os << "slot,action,reward,area_m2";
  for (int i = 0; i < sensing_uavs; ++i) os << ",p_su" << i;
  for (int i = 0; i < sensing_uavs; ++i) os << ",infeasible_su" << i;
  os << "\n";
  os.precision(17);
  for (const auto& r : rows) {
    os << r.slot << ',' << r.action << ',' << r.reward << ',' << r.area_m2;
    for (double p : r.file_recovery) os << ',' << p;
    for (bool f : r.infeasible) os << ',' << (f ? 1 : 0);
    os << "\n";
  }
}

}  // namespace uavcache::envmdp
