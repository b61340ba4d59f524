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

#include <algorithm>
#include <random>

#include "uavcache/coding.hpp"
#include "uavcache/oracles.hpp"

namespace uavcache::coding {
namespace {

TEST(AssignFragmentsTest, NearestByDistance) {
  Rng rng(2);
  std::uniform_real_distribution<double> u(0, 1000);
  std::vector<Point3> pool(16);
  for (auto& p : pool) p = {u(rng), u(rng), 100};
  const Point3 owner{400, 600, 100};
  const auto holders = assign_fragments(owner, 2, 8, pool);
  ASSERT_EQ(holders.size(), 8u);
  std::vector<int> order(16);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return distance(owner, pool[a]) < distance(owner, pool[b]); });
  EXPECT_EQ(holders, std::vector<int>(order.begin(), order.begin() + 8));
}

TEST(AssignFragmentsTest, WholePoolAndErrors) {
  std::vector<Point3> pool = {{0, 0, 100}, {10, 0, 100}, {20, 0, 100}};
  auto all = assign_fragments({0, 0, 100}, 1, 3, pool);
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<int>{0, 1, 2}));
  EXPECT_THROW(assign_fragments({0, 0, 100}, 4, 3, pool), InfeasibleError);
  EXPECT_THROW(assign_fragments({0, 0, 100}, 0, 3, pool), InfeasibleError);
  EXPECT_THROW(assign_fragments({0, 0, 100}, 1, 4, pool), InfeasibleError);
}

TEST(EligibleTest, ThresholdComparison) {
  const std::vector<int> holders = {1, 2, 3};
  const std::vector<double> snr = {db_to_linear(30), db_to_linear(26), db_to_linear(28)};
  EXPECT_EQ(eligible_cooperators(holders, snr, db_to_linear(27)), (std::vector<int>{1, 3}));
  EXPECT_EQ(eligible_cooperators(holders, snr, 0.0), holders);
  EXPECT_TRUE(eligible_cooperators(holders, snr, db_to_linear(40)).empty());
}

TEST(SelectTest, LargestStp) {
  const std::vector<int> ids = {0, 1, 2};  // a, b, c
  const std::vector<double> eta = {0.9, 0.5, 0.7};
  auto s = select_cooperators(ids, eta, 2);
  EXPECT_TRUE(s.feasible);
  std::sort(s.members.begin(), s.members.end());
  EXPECT_EQ(s.members, (std::vector<int>{0, 2}));
  auto all = select_cooperators(ids, eta, 3);
  std::sort(all.members.begin(), all.members.end());
  EXPECT_EQ(all.members, ids);
}

TEST(SelectTest, TiesGoToSmallerId) {
  const std::vector<int> ids = {7, 3, 5};
  const std::vector<double> eta = {0.4, 0.4, 0.4};
  EXPECT_EQ(select_cooperators(ids, eta, 1).members, (std::vector<int>{3}));
  EXPECT_FALSE(select_cooperators(ids, eta, 4).feasible);
}

TEST(RecoveryTest, SmallCases) {
  EXPECT_DOUBLE_EQ(file_recovery_probability(std::vector<double>{0.7}, 1), 0.7);
  EXPECT_DOUBLE_EQ(file_recovery_probability(std::vector<double>{1, 1, 1, 1}, 3), 1.0);
  EXPECT_NEAR(file_recovery_probability(std::vector<double>{0.9, 0.8, 0.5}, 2), 0.85, 1e-15);
  EXPECT_EQ(file_recovery_probability(std::vector<double>{0.9}, 2), 0.0);
  EXPECT_THROW(file_recovery_probability(std::vector<double>{0.9}, 0), DomainError);
}

TEST(RecoveryTest, MatchesEnumeration) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> size(0, 12), kd(1, 13);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> eta(size(rng));
    for (auto& e : eta) e = u(rng);
    const int k = kd(rng);
    EXPECT_NEAR(file_recovery_probability(eta, k), oracles::recovery_by_enumeration(eta, k), 1e-12);
  }
}

TEST(RecoveryTest, NonincreasingInKAndMonotoneInSet) {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> eta(8);
    for (auto& e : eta) e = u(rng);
    for (int k = 1; k < 8; ++k)
      EXPECT_GE(file_recovery_probability(eta, k), file_recovery_probability(eta, k + 1) - 1e-15);
    const int k = 1 + t % 4;
    const double before = file_recovery_probability(eta, k);
    eta.push_back(u(rng) * 0.99 + 0.01);
    EXPECT_GE(file_recovery_probability(eta, k), before - 1e-15);
  }
}

TEST(CellTest, TwoCoveringSus) {
  const std::vector<int> cov = {0, 1, 5};
  std::vector<SuRecovery> sus = {{true, 0.6, 1.0, cov}, {true, 0.5, 1.0, cov}};
  EXPECT_NEAR(grid_recovery_probability(5, sus, CellMode::kSimplified), 0.8, 1e-15);
  EXPECT_EQ(grid_recovery_probability(3, sus, CellMode::kSimplified), 0.0);
  sus[1].scheduled = false;
  EXPECT_NEAR(grid_recovery_probability(5, sus, CellMode::kSimplified), 0.6, 1e-15);
}

TEST(CellTest, TwoCoveringSusMonteCarlo) {
  Rng rng(5);
  std::bernoulli_distribution a(0.6), b(0.5);
  int hits = 0;
  const int n = 200000;
  for (int t = 0; t < n; ++t) hits += a(rng) || b(rng);
  EXPECT_NEAR(static_cast<double>(hits) / n, 0.8, 5e-3);
}

TEST(CellTest, LiteralModeFactor) {
  const std::vector<int> cov = {2};
  std::vector<SuRecovery> one = {{true, 1.0, 1.0, cov}};
  EXPECT_EQ(grid_recovery_probability(2, one, CellMode::kLiteral), 1.0);
  Rng rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 200; ++t) {
    std::vector<SuRecovery> sus = {{true, u(rng), u(rng), cov}, {true, u(rng), u(rng), cov}};
    const double s = grid_recovery_probability(2, sus, CellMode::kSimplified);
    const double l = grid_recovery_probability(2, sus, CellMode::kLiteral);
    EXPECT_GE(s, l - 1e-15);
    EXPECT_GE(l, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(CellTest, VectorFormMatchesPerCell) {
  Rng rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  const std::vector<int> c0 = {0, 1, 2, 3}, c1 = {2, 3, 4};
  std::vector<SuRecovery> sus = {{true, u(rng), u(rng), c0}, {true, u(rng), u(rng), c1}};
  for (auto mode : {CellMode::kSimplified, CellMode::kLiteral}) {
    const auto all = cell_recovery_probabilities(6, sus, mode);
    for (int c = 0; c < 6; ++c) EXPECT_NEAR(all[c], grid_recovery_probability(c, sus, mode), 1e-15);
  }
}

TEST(AreaTest, Sums) {
  EXPECT_DOUBLE_EQ(effective_recovery_area(std::vector<double>{0.8, 0.2}, 2500).area_m2, 2500.0);
  EXPECT_DOUBLE_EQ(effective_recovery_area(std::vector<double>(400, 1.0), 2500).area_m2, 1e6);
  EXPECT_DOUBLE_EQ(effective_recovery_area(std::vector<double>(400, 0.0), 2500).area_m2, 0.0);
  EXPECT_DOUBLE_EQ(effective_recovery_area(std::vector<double>(400, 1.0), 2500).normalized, 1.0);
}

}  // namespace
}  // namespace uavcache::coding
