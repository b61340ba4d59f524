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

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <random>

#include "test_util.hpp"
#include "uavcache/baselines.hpp"
#include "uavcache/dqn.hpp"

namespace uavcache::agents {
namespace {

using testing::calibrated_default;

// Pearson chi-square statistic of counts against a uniform distribution.
double chi_square_uniform(const std::vector<int>& counts) {
  double total = 0;
  for (int c : counts) total += c;
  const double expected = total / counts.size();
  double stat = 0;
  for (int c : counts) stat += (c - expected) * (c - expected) / expected;
  return stat;
}

// 99.9% quantile of chi-square with 39 degrees of freedom.
constexpr double kChiSquare39 = 72.05;

QFunction constant_q(int inputs, int actions, double value) {
  Rng rng(1);
  auto q = QFunction::make(inputs, {4}, actions, rng);
  q.net.weights().back().setZero();
  q.net.biases().back().setConstant(value);
  return q;
}

TEST(ActTest, GreedyWhenEpsilonZero) {
  Rng rng(1);
  auto q = QFunction::make(4, {8}, 40, rng);
  const std::vector<double> s = {0.1, 0.2, 0.3, 0.4};
  const auto values = q.values(s);
  Eigen::Index best;
  values.maxCoeff(&best);
  for (int t = 0; t < 20; ++t) EXPECT_EQ(act(q, s, 0.0, rng), best);
}

TEST(ActTest, TiesGoToSmallestFeasibleIndex) {
  Rng rng(1);
  const auto q = constant_q(4, 10, 0.5);
  const std::vector<double> s(4, 0.0);
  EXPECT_EQ(act(q, s, 0.0, rng), 0);
  const bool mask[10] = {false, false, true, true, true, true, true, true, true, true};
  EXPECT_EQ(act(q, s, 0.0, rng, mask), 2);
  const bool none[10] = {};
  EXPECT_THROW(act(q, s, 0.0, rng, none), ContractViolation);
}

TEST(ActTest, UniformWhenEpsilonOne) {
  Rng rng(7);
  auto q = QFunction::make(4, {8}, 40, rng);
  const std::vector<double> s(4, 0.5);
  std::vector<int> counts(40, 0);
  for (int t = 0; t < 10000; ++t) ++counts[act(q, s, 1.0, rng)];
  EXPECT_LT(chi_square_uniform(counts), kChiSquare39);
}

TEST(TdTargetTest, TerminalAndBootstrapped) {
  const auto target = constant_q(2, 3, 1.0);
  Transition terminal{{0, 0}, 0, 0.3, {0, 0}, true};
  Transition step{{0, 0}, 1, 0.5, {0.2, 0.7}, false};
  const std::vector<const Transition*> batch = {&terminal, &step};
  const auto y = td_targets(batch, target, 0.9);
  EXPECT_DOUBLE_EQ(y[0], 0.3);
  EXPECT_DOUBLE_EQ(y[1], 1.4);
  EXPECT_THROW(td_targets(std::vector<const Transition*>{}, target, 0.9), DomainError);
}

TEST(GradientTest, MatchesCentralDifferences) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    EXPECT_LT(testing::gradient_check({4, 2, 3}, 5, seed), 1e-4) << "seed " << seed;
    EXPECT_LT(testing::gradient_check({4, 6, 5, 40}, 8, 100 + seed), 1e-4) << "seed " << seed;
  }
}

TEST(ReplayTest, BoundedFifo) {
  ReplayMemory m(5);
  for (int i = 0; i < 12; ++i) {
    m.push({{}, i, 0.0, {}, false});
    EXPECT_LE(m.size(), 5u);
  }
  EXPECT_EQ(m.size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(m.at_age(i).action, 7 + i);
}

TEST(ReplayTest, SampleWithoutReplacement) {
  ReplayMemory m(50);
  for (int i = 0; i < 50; ++i) m.push({{}, i, 0.0, {}, false});
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const auto batch = m.sample(32, rng);
    std::set<const Transition*> unique(batch.begin(), batch.end());
    EXPECT_EQ(unique.size(), 32u);
  }
  EXPECT_THROW(m.sample(51, rng), DomainError);
}

TEST(EpsilonTest, LinearScheduleThenFlat) {
  DqnHyperparams h;
  EXPECT_DOUBLE_EQ(epsilon_at(h, 0), 1.0);
  EXPECT_NEAR(epsilon_at(h, 200), 1.0 - 0.95 * 0.5, 1e-12);
  EXPECT_NEAR(epsilon_at(h, 400), 0.05, 1e-12);
  EXPECT_NEAR(epsilon_at(h, 499), 0.05, 1e-12);
  for (int e = 0; e < 500; ++e) {
    EXPECT_GE(epsilon_at(h, e), 0.0);
    EXPECT_LE(epsilon_at(h, e), 1.0);
  }
}

TEST(TrainerTest, WarmUpStoresWithoutUpdating) {
  auto c = calibrated_default();
  c.horizon = 1;
  c.dqn.episodes = 1;
  envmdp::Env env(c);
  Rng rng(1);
  DqnTrainer trainer(c.dqn, sacrl_task(env), env.state_size(), rng);
  trainer.run_episode(env, 1, 0, rng);
  EXPECT_EQ(trainer.memory().size(), 1u);
  EXPECT_EQ(trainer.gradient_steps(), 0);
}

TEST(TrainerTest, TargetSyncCopiesParameters) {
  auto c = calibrated_default();
  c.horizon = 10;
  c.dqn.batch_size = 4;
  c.dqn.target_sync_steps = 1000;
  envmdp::Env env(c);
  Rng rng(2);
  DqnTrainer trainer(c.dqn, sacrl_task(env), env.state_size(), rng);
  trainer.run_episode(env, 1, 0, rng);
  const std::vector<double> s = {0.3, 0.1, 0.5, 0.4};
  EXPECT_GT((trainer.q().values(s) - trainer.target().values(s)).norm(), 0.0);
  trainer.sync_target();
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 20; ++t) {
    const std::vector<double> r = {u(rng), u(rng), u(rng), u(rng)};
    EXPECT_EQ(trainer.q().values(r), trainer.target().values(r));
  }
}

TEST(TrainerTest, SameSeedSameCurve) {
  auto c = calibrated_default();
  c.horizon = 10;
  c.dqn.episodes = 6;
  envmdp::Env a(c), b(c);
  const auto ra = train(a, sacrl_task(a), c.dqn, 5);
  const auto rb = train(b, sacrl_task(b), c.dqn, 5);
  ASSERT_EQ(ra.curve.size(), 6u);
  for (std::size_t i = 0; i < ra.curve.size(); ++i) {
    EXPECT_EQ(ra.curve[i].mean_reward, rb.curve[i].mean_reward);
    EXPECT_EQ(ra.curve[i].mean_loss, rb.curve[i].mean_loss);
  }
  EXPECT_TRUE(ra.q.net.finite());
}

TEST(TrainerTest, DivergenceGuardAborts) {
  auto c = calibrated_default();
  c.horizon = 20;
  c.dqn.episodes = 20;
  c.dqn.optimizer = "sgd";
  c.dqn.learning_rate = 1e4;
  c.dqn.grad_clip_norm = 1e6;
  c.dqn.reward_scale = 1e4;
  c.dqn.batch_size = 4;
  envmdp::Env env(c);
  EXPECT_THROW(train(env, sacrl_task(env), c.dqn, 1), TrainingDiverged);
}

TEST(TrainerTest, FrozenSingleSlotLearnsDominantAction) {
  auto c = calibrated_default();
  c.speed_mps = 0;
  c.horizon = 1;
  c.content_kbits_min = c.content_kbits_max = 78;
  c.dqn.episodes = 1500;
  c.dqn.batch_size = 16;
  envmdp::Env env(c);
  const std::uint64_t world = 11;
  const auto res = train(env, sacrl_task(env), c.dqn, 3, world);
  const auto s = env.reset(world, 0);
  const auto best = envmdp::exhaustive_slot_oracle(env.snapshot(), env.actions(), c.recovery_mode, c.cell_mode);
  EXPECT_EQ(greedy_action(res.q.values(s), {}), best.action);
}

// Spearman correlation with average ranks for ties.
double rank_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (i + j) / 2.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

TEST(TrainerTest, MyopicQRanksActionsLikeRewards) {
  auto c = calibrated_default();
  c.speed_mps = 0;
  c.horizon = 10;
  c.content_kbits_min = c.content_kbits_max = 78;
  c.dqn.discount = 1e-9;
  c.dqn.episodes = 300;
  envmdp::Env env(c);
  const std::uint64_t world = 22;
  const auto res = train(env, sacrl_task(env), c.dqn, 4, world);
  // states along a greedy rollout of the frozen scenario
  auto s = env.reset(world, 0);
  std::vector<double> q, r;
  while (!env.done()) {
    const auto& slot = env.snapshot();
    const auto values = res.q.values(s);
    for (std::size_t a = 0; a < env.actions().size(); ++a) {
      q.push_back(values(a));
      r.push_back(slot.reward(env.actions()[a], c.recovery_mode, c.cell_mode));
    }
    s = env.step(greedy_action(values, {})).state;
  }
  EXPECT_GT(rank_correlation(q, r), 0.9);
}

TEST(CheckpointTest, RoundTrip) {
  Rng rng(9);
  const auto q = QFunction::make(4, {16, 8}, 40, rng);
  const auto path = std::filesystem::temp_directory_path() / "uavcache_ck_test.json";
  save_checkpoint(path.string(), q, "sacrl", "abc");
  const auto back = load_checkpoint(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(back.agent, "sacrl");
  EXPECT_EQ(back.config_hash, "abc");
  EXPECT_EQ(back.q.net.sizes(), q.net.sizes());
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 10; ++t) {
    const std::vector<double> s = {u(rng), u(rng), u(rng), u(rng)};
    EXPECT_EQ(back.q.values(s), q.values(s));
  }
}

TEST(CheckpointTest, RejectsWrongVersion) {
  Rng rng(9);
  auto j = checkpoint_json(QFunction::make(2, {3}, 4, rng), "sacrl", "x");
  j["version"] = 99;
  EXPECT_THROW(checkpoint_from_json(j), ConfigError);
  EXPECT_THROW(load_checkpoint("/nonexistent/ck.json"), ConfigError);
}

TEST(ScrlTest, EqualShareSpace) {
  envmdp::Env env(calibrated_default());
  const auto task = scrl_task(env);
  EXPECT_EQ(task.space.size(), 16u);
}

TEST(RandomPolicyTest, UniformAndReproducible) {
  envmdp::Env env(calibrated_default());
  Rng rng(11);
  std::vector<int> counts(40, 0);
  for (int t = 0; t < 10000; ++t) ++counts[random_action(env.actions(), rng)];
  EXPECT_LT(chi_square_uniform(counts), kChiSquare39);
  Rng a(5), b(5);
  for (int t = 0; t < 50; ++t) EXPECT_EQ(random_action(env.actions(), a), random_action(env.actions(), b));
}

TEST(PsoTest, SingleParticleNoIterations) {
  const auto& c = calibrated_default();
  envmdp::Env env(c);
  env.reset(3);
  PsoParams p = c.pso;
  p.particles = 1;
  p.iterations = 0;
  Rng rng(13);
  const auto r = pso_search(env.snapshot(), env.actions(), p, rng);
  // replay the particle's initial draws
  Rng replay(13);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<double> lo = {0, -0.5, -0.5, 0, -0.5, -0.5}, hi = {1, 1.5, 2.5, 1, 1.5, 2.5};
  std::vector<double> pos(6);
  for (int d = 0; d < 6; ++d) {
    pos[d] = lo[d] + (hi[d] - lo[d]) * unit(replay);
    unit(replay);
  }
  EXPECT_EQ(r.action, env.actions().index_of(detail::round_position(pos, c)));
  EXPECT_EQ(r.best_history.size(), 1u);
}

TEST(PsoTest, RepairKeepsBudget) {
  const auto& c = calibrated_default();
  const auto a = detail::round_position({1, 1, 2, 1, 1, 0}, c);
  EXPECT_NO_THROW(envmdp::validate_allocation(a, c));
  EXPECT_TRUE(a[0].scheduled && a[1].scheduled);
  EXPECT_EQ(a[0].bandwidth_level + a[1].bandwidth_level, 1);
}

TEST(PsoTest, LargeBudgetMatchesOracle) {
  const auto& c = calibrated_default();
  envmdp::Env env(c);
  Rng rng(17);
  int matched = 0;
  for (int t = 0; t < 20; ++t) {
    env.reset(1000 + t);
    const auto& slot = env.snapshot();
    const auto best = envmdp::exhaustive_slot_oracle(slot, env.actions(), c.recovery_mode, c.cell_mode);
    const auto r = pso_search(slot, env.actions(), c.pso, rng);
    for (std::size_t i = 1; i < r.best_history.size(); ++i) EXPECT_GE(r.best_history[i], r.best_history[i - 1]);
    matched += r.reward >= best.reward - 1e-15;
  }
  EXPECT_GE(matched, 19);
}

TEST(NctTest, SingleBestLinkCarriesFile) {
  const auto& c = calibrated_default();
  envmdp::Env env(c);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    env.reset(seed);
    const auto& slot = env.snapshot();
    const envmdp::SuChoice on{true, 1, 2, 6e6, 3};
    for (int i = 0; i < 2; ++i) {
      const auto p = slot.plan(i, on, RecoveryMode::kNonCoded);
      EXPECT_EQ(p.k, 1);
      const auto& eta = slot.eligible_stp(i, 6e6, 1);
      const double best = eta.empty() ? 0.0 : *std::max_element(eta.begin(), eta.end());
      EXPECT_DOUBLE_EQ(p.file_recovery, best);
      EXPECT_LE(p.transmitting.size(), 1u);
    }
  }
}

TEST(NctTest, CodedBeatsNonCodedOnDefaultScenario) {
  const auto& c = calibrated_default();
  envmdp::Env env(c);
  NctPolicy nct(env);
  EXPECT_EQ(nct.space().size(), 8u);
  double coded = 0, single = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    env.reset(seed);
    while (!env.done()) {
      const auto& slot = env.snapshot();
      coded += envmdp::exhaustive_slot_oracle(slot, env.actions(), c.recovery_mode, c.cell_mode).reward;
      single += envmdp::exhaustive_slot_oracle(slot, nct.space(), RecoveryMode::kNonCoded, c.cell_mode).reward;
      env.step(0);
    }
  }
  EXPECT_GT(coded, single);
}

}  // namespace
}  // namespace uavcache::agents
