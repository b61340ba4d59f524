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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uavcache/config.hpp"
#include "uavcache/env.hpp"
#include "uavcache/errors.hpp"
#include "uavcache/mlp.hpp"

namespace uavcache::agents {

// Deterministic per-episode seeds derived from a base seed and a stream id
// (training and evaluation use different streams).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t episode_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t episode) {
  return splitmix64(splitmix64(base ^ (stream * 0x632be59bd9b4e019ULL)) + episode);
}

struct Transition {
  envmdp::MdpState state;
  int action = 0;
  double reward = 0.0;
  envmdp::MdpState next_state;
  bool terminal = false;
};

// Bounded FIFO of transitions; the oldest entry is overwritten when full.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw DomainError("ReplayMemory: capacity must be positive");
    items_.reserve(capacity);
  }

  void push(Transition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

  // Position 0 is the oldest stored transition.
  const Transition& at_age(std::size_t i) const {
    const std::size_t start = items_.size() < capacity_ ? 0 : next_;
    return items_[(start + i) % items_.size()];
  }

  // Uniform sample of `count` distinct entries (partial Fisher-Yates).
  std::vector<const Transition*> sample(std::size_t count, Rng& rng) const {
    if (count > items_.size()) throw DomainError("ReplayMemory: batch larger than memory");
    std::vector<std::size_t> idx(items_.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<const Transition*> out;
    out.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, idx.size() - 1);
      std::swap(idx[j], idx[pick(rng)]);
      out.push_back(&items_[idx[j]]);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

// Q-network plus its architecture descriptor.
struct QFunction {
  Mlp net;
  std::string activation = "relu";

  static QFunction make(int state_size, const std::vector<int>& hidden, int action_count, Rng& rng) {
    std::vector<int> sizes{state_size};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(action_count);
    return {Mlp(std::move(sizes), rng), "relu"};
  }

  int action_count() const { return net.output_size(); }
  Eigen::VectorXd values(std::span<const double> state) const { return net.forward(state); }
};

// Smallest-index argmax over the actions allowed by `mask` (empty mask means
// every action is allowed).
inline int greedy_action(const Eigen::VectorXd& q, std::span<const bool> mask) {
  int best = -1;
  for (Eigen::Index a = 0; a < q.size(); ++a) {
    if (!mask.empty() && !mask[a]) continue;
    if (best < 0 || q(a) > q(best)) best = static_cast<int>(a);
  }
  if (best < 0) throw ContractViolation("greedy_action: empty action mask");
  return best;
}

// Epsilon-greedy selection. One uniform draw decides explore vs exploit.
inline int act(const QFunction& q, std::span<const double> state, double epsilon, Rng& rng,
               std::span<const bool> mask = {}) {
  const int n = q.action_count();
  std::vector<int> allowed;
  for (int a = 0; a < n; ++a)
    if (mask.empty() || mask[a]) allowed.push_back(a);
  if (allowed.empty()) throw ContractViolation("act: empty action mask");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) {
    std::uniform_int_distribution<std::size_t> pick(0, allowed.size() - 1);
    return allowed[pick(rng)];
  }
  return greedy_action(q.values(state), mask);
}

// y_j = r_j for terminal transitions, else r_j + gamma max_a' Q'(s_{j+1}, a').
inline std::vector<double> td_targets(std::span<const Transition* const> batch, const QFunction& target,
                                      double discount, std::span<const bool> mask = {}) {
  if (batch.empty()) throw DomainError("td_targets: empty batch");
  std::vector<double> y;
  y.reserve(batch.size());
  const int dim = static_cast<int>(batch.front()->next_state.size());
  Eigen::MatrixXd next(dim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j)
    next.col(j) = Eigen::Map<const Eigen::VectorXd>(batch[j]->next_state.data(), dim);
  const Eigen::MatrixXd qn = target.net.forward(next);
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto* t = batch[j];
    if (t->terminal) {
      y.push_back(t->reward);
      continue;
    }
    const int a = greedy_action(qn.col(j), mask);
    y.push_back(t->reward + discount * qn(a, j));
  }
  return y;
}

inline Eigen::MatrixXd stack_states(std::span<const Transition* const> batch) {
  const int dim = static_cast<int>(batch.front()->state.size());
  Eigen::MatrixXd s(dim, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t j = 0; j < batch.size(); ++j)
    s.col(j) = Eigen::Map<const Eigen::VectorXd>(batch[j]->state.data(), dim);
  return s;
}

inline double epsilon_at(const DqnHyperparams& h, int episode) {
  const double span = h.epsilon_decay_fraction * h.episodes;
  const double frac = span <= 0 ? 1.0 : std::min(1.0, episode / span);
  return h.epsilon_start + (h.epsilon_end - h.epsilon_start) * frac;
}

struct CurvePoint {
  int episode = 0;
  double mean_reward = 0.0;
  double epsilon = 0.0;
  double mean_loss = 0.0;
  int gradient_steps = 0;
};

struct TrainingResult {
  QFunction q;
  std::vector<CurvePoint> curve;
  std::size_t stored_transitions = 0;
  long long gradient_steps = 0;
};

// What the learner controls: an action list and the recovery semantics the
// environment applies to it.
struct LearningTask {
  envmdp::ActionSpace space;
  RecoveryMode mode = RecoveryMode::kAllEligible;
};

// DQN with replay memory and a periodically synced target network.
// Per step: epsilon-greedy action, environment step, store, sample a
// mini-batch once the memory holds one, SGD on the squared TD error with
// gradient-norm clipping, target sync every target_sync_steps env steps.
class DqnTrainer {
 public:
  DqnTrainer(const DqnHyperparams& h, const LearningTask& task, int state_size, Rng& rng)
      : h_(h), task_(task), memory_(static_cast<std::size_t>(h.memory_size)) {
    q_ = QFunction::make(state_size, h.hidden_layers, static_cast<int>(task.space.size()), rng);
    target_ = q_;
    if (h_.optimizer == "adam") {
      for (const auto& w : q_.net.weights()) {
        m_.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        v_.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
      }
      for (const auto& b : q_.net.biases()) {
        m_.biases.push_back(Eigen::VectorXd::Zero(b.size()));
        v_.biases.push_back(Eigen::VectorXd::Zero(b.size()));
      }
    }
  }

  const QFunction& q() const { return q_; }
  const QFunction& target() const { return target_; }
  const ReplayMemory& memory() const { return memory_; }
  long long gradient_steps() const { return grad_steps_; }
  long long env_steps() const { return env_steps_; }

  void sync_target() { target_ = q_; }

  // One gradient update on a sampled mini-batch; returns the loss or NaN when
  // the memory is still smaller than a batch.
  double update(Rng& rng) {
    if (memory_.size() < static_cast<std::size_t>(h_.batch_size)) return std::numeric_limits<double>::quiet_NaN();
    const auto batch = memory_.sample(static_cast<std::size_t>(h_.batch_size), rng);
    const auto y = td_targets(batch, target_, h_.discount);
    std::vector<int> actions;
    for (const auto* t : batch) actions.push_back(t->action);
    Mlp::Gradient g;
    const double loss = q_.net.loss_and_gradient(stack_states(batch), actions, y, &g);
    const double norm = std::sqrt(g.squared_norm());
    if (norm > h_.grad_clip_norm) g.scale(h_.grad_clip_norm / norm);
    ++grad_steps_;
    if (h_.optimizer == "adam") adam_step(g);
    else q_.net.apply(g, h_.learning_rate);
    if (!std::isfinite(loss) || loss > 1e6 || !q_.net.finite()) {
      throw TrainingDiverged("DQN diverged at gradient step " + std::to_string(grad_steps_) +
                             ": loss = " + std::to_string(loss) +
                             (q_.net.finite() ? "" : ", non-finite parameters"));
    }
    return loss;
  }

  // Runs one episode; returns its curve point. With `fixed_world` every
  // episode replays the same node placement.
  CurvePoint run_episode(envmdp::Env& env, std::uint64_t seed, int episode, Rng& rng,
                         std::optional<std::uint64_t> fixed_world = std::nullopt) {
    const double eps = epsilon_at(h_, episode);
    auto state = fixed_world ? env.reset(*fixed_world, seed) : env.reset(seed);
    double reward_sum = 0.0, loss_sum = 0.0;
    int losses = 0, steps = 0;
    while (!env.done()) {
      const int a = act(q_, state, eps, rng);
      auto r = env.step(task_.space[a], task_.mode, a);
      reward_sum += r.reward;
      ++steps;
      memory_.push({state, a, h_.reward_scale * r.reward, r.state, r.done});
      state = std::move(r.state);
      const double loss = update(rng);
      if (!std::isnan(loss)) {
        loss_sum += loss;
        ++losses;
      }
      if (++env_steps_ % h_.target_sync_steps == 0) sync_target();
    }
    return {episode, reward_sum / std::max(steps, 1), eps, losses ? loss_sum / losses : 0.0, losses};
  }

 private:
  void adam_step(const Mlp::Gradient& g) {
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(grad_steps_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(grad_steps_));
    const double step = h_.learning_rate * std::sqrt(c2) / c1;
    auto& w = q_.net.weights();
    auto& b = q_.net.biases();
    for (std::size_t l = 0; l < w.size(); ++l) {
      m_.weights[l] = kBeta1 * m_.weights[l] + (1 - kBeta1) * g.weights[l];
      v_.weights[l] = kBeta2 * v_.weights[l] + (1 - kBeta2) * g.weights[l].cwiseAbs2();
      w[l].array() -= step * m_.weights[l].array() / (v_.weights[l].array().sqrt() + kEps);
      m_.biases[l] = kBeta1 * m_.biases[l] + (1 - kBeta1) * g.biases[l];
      v_.biases[l] = kBeta2 * v_.biases[l] + (1 - kBeta2) * g.biases[l].cwiseAbs2();
      b[l].array() -= step * m_.biases[l].array() / (v_.biases[l].array().sqrt() + kEps);
    }
  }

  DqnHyperparams h_;
  LearningTask task_;
  Mlp::Gradient m_, v_;
  QFunction q_;
  QFunction target_;
  ReplayMemory memory_;
  long long grad_steps_ = 0;
  long long env_steps_ = 0;
};

inline constexpr std::uint64_t kTrainStream = 1;
inline constexpr std::uint64_t kEvalStream = 2;

// Trains for h.episodes episodes of the environment's horizon.
inline TrainingResult train(envmdp::Env& env, const LearningTask& task, const DqnHyperparams& h,
                            std::uint64_t seed, std::optional<std::uint64_t> fixed_world = std::nullopt) {
  Rng rng(splitmix64(seed ^ 0x5ac41ULL));
  DqnTrainer trainer(h, task, env.state_size(), rng);
  TrainingResult out;
  for (int e = 0; e < h.episodes; ++e)
    out.curve.push_back(trainer.run_episode(env, episode_seed(seed, kTrainStream, e), e, rng, fixed_world));
  out.q = trainer.q();
  out.stored_transitions = trainer.memory().size();
  out.gradient_steps = trainer.gradient_steps();
  return out;
}

inline LearningTask sacrl_task(const envmdp::Env& env) { return {env.actions(), env.config().recovery_mode}; }

// Equal-bandwidth variant: only scheduling and k are learned.
inline LearningTask scrl_task(const envmdp::Env& env) {
  return {envmdp::enumerate_equal_share_actions(env.config()), env.config().recovery_mode};
}

inline void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve, const std::string& config_hash) {
  os << "# config_hash=" << config_hash << "\n";
  os << "episode,mean_reward,epsilon,mean_loss,gradient_steps\n";
  os.precision(17);
  for (const auto& p : curve)
    os << p.episode << ',' << p.mean_reward << ',' << p.epsilon << ',' << p.mean_loss << ',' << p.gradient_steps
       << "\n";
}

// Checkpoint: versioned JSON with the architecture and row-major weights.
inline constexpr int kCheckpointVersion = 1;

inline Json checkpoint_json(const QFunction& q, const std::string& agent, const std::string& config_hash) {
  Json j;
  j["format"] = "uavcache-qnet";
  j["version"] = kCheckpointVersion;
  j["agent"] = agent;
  j["config_hash"] = config_hash;
  j["activation"] = q.activation;
  j["layers"] = q.net.sizes();
  Json params = Json::array();
  for (std::size_t l = 0; l < q.net.layer_count(); ++l) {
    const auto& w = q.net.weights()[l];
    std::vector<double> flat;
    flat.reserve(w.size());
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    const auto& b = q.net.biases()[l];
    params.push_back({{"weights", flat}, {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  j["params"] = params;
  return j;
}

struct Checkpoint {
  QFunction q;
  std::string agent;
  std::string config_hash;
};

inline Checkpoint checkpoint_from_json(const Json& j) {
  if (j.value("format", "") != "uavcache-qnet") throw ConfigError("checkpoint: unknown format");
  if (j.value("version", 0) != kCheckpointVersion)
    throw ConfigError("checkpoint: unsupported version " + std::to_string(j.value("version", 0)));
  Checkpoint c;
  c.agent = j.value("agent", "");
  c.config_hash = j.value("config_hash", "");
  c.q.activation = j.value("activation", "relu");
  if (c.q.activation != "relu") throw ConfigError("checkpoint: unsupported activation " + c.q.activation);
  const auto sizes = j.at("layers").get<std::vector<int>>();
  Rng dummy(0);
  c.q.net = Mlp(sizes, dummy);
  const auto& params = j.at("params");
  if (params.size() != c.q.net.layer_count()) throw ConfigError("checkpoint: layer count mismatch");
  for (std::size_t l = 0; l < params.size(); ++l) {
    auto& w = c.q.net.weights()[l];
    auto& b = c.q.net.biases()[l];
    const auto flat = params[l].at("weights").get<std::vector<double>>();
    const auto bias = params[l].at("bias").get<std::vector<double>>();
    if (flat.size() != static_cast<std::size_t>(w.size()) || bias.size() != static_cast<std::size_t>(b.size()))
      throw ConfigError("checkpoint: parameter shape mismatch in layer " + std::to_string(l));
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index col = 0; col < w.cols(); ++col) w(r, col) = flat[i++];
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = bias[r];
  }
  return c;
}

inline void save_checkpoint(const std::string& path, const QFunction& q, const std::string& agent,
                            const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw ConfigError("checkpoint: cannot write '" + path + "'");
  out << checkpoint_json(q, agent, config_hash).dump(1) << "\n";
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("checkpoint: cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("checkpoint: '" + path + "' is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace uavcache::agents
