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
#include <numeric>
#include <span>
#include <vector>

#include "uavcache/config.hpp"
#include "uavcache/errors.hpp"
#include "uavcache/world.hpp"

namespace uavcache::coding {

// Coding and transmission decisions for one SU's file in one slot.
struct CodingPlan {
  int su_id = 0;
  bool scheduled = false;
  double bandwidth_hz = 0.0;
  int k = 1;
  int n = 0;
  double file_bits = 0.0;
  double fragment_bits = 0.0;  // Z_i / k_i
  std::vector<int> holders;    // CUs caching a fragment, nearest first
  std::vector<int> eligible;   // holders whose mean SNR clears the threshold
  std::vector<int> selected;   // the k eligible holders with the largest STP
  std::vector<double> eta;     // STP per eligible holder, aligned with `eligible`
  std::vector<int> transmitting;  // CUs that actually send, per recovery mode
  bool feasible = false;       // at least k eligible holders
  double file_recovery = 0.0;  // P_fi
  double selected_eta_product = 1.0;

  bool transmits(int cu) const { return std::find(transmitting.begin(), transmitting.end(), cu) != transmitting.end(); }
};

// The n CUs nearest the owning SU (3-D distance, ties by smaller id) each
// cache one distinct fragment.
inline std::vector<int> assign_fragments(const Point3& owner, int k, int n, std::span<const Point3> cu_pool) {
  if (k < 1) throw InfeasibleError("assign_fragments: k must be >= 1");
  if (k > n) throw InfeasibleError("assign_fragments: k (" + std::to_string(k) + ") exceeds n (" +
                                   std::to_string(n) + ")");
  if (n > static_cast<int>(cu_pool.size()))
    throw InfeasibleError("assign_fragments: n (" + std::to_string(n) + ") exceeds CU pool size (" +
                          std::to_string(cu_pool.size()) + ")");
  std::vector<int> order(cu_pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist(cu_pool.size());
  for (std::size_t e = 0; e < cu_pool.size(); ++e) dist[e] = distance(owner, cu_pool[e]);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist[a] < dist[b]; });
  order.resize(n);
  return order;
}

// Holders whose mean SNR (linear) reaches the threshold; mean_snr is aligned
// with `holders`.
inline std::vector<int> eligible_cooperators(std::span<const int> holders, std::span<const double> mean_snr,
                                             double snr_threshold) {
  std::vector<int> out;
  for (std::size_t j = 0; j < holders.size(); ++j)
    if (mean_snr[j] >= snr_threshold) out.push_back(holders[j]);
  return out;
}

struct Selection {
  std::vector<int> members;
  bool feasible = false;
};

// The k members with the largest STP, ties by smaller id, returned in that
// rank order. With fewer than k candidates all are returned and the
// selection is flagged infeasible.
inline Selection select_cooperators(std::span<const int> eligible, std::span<const double> eta, int k) {
  std::vector<int> idx(eligible.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (eta[a] != eta[b]) return eta[a] > eta[b];
    return eligible[a] < eligible[b];
  });
  Selection s;
  s.feasible = static_cast<int>(eligible.size()) >= k;
  const std::size_t take = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(k, 0)));
  for (std::size_t j = 0; j < take; ++j) s.members.push_back(eligible[idx[j]]);
  return s;
}

// Probability that at least k of the independent links succeed (a
// Poisson-binomial tail), by dynamic programming over success counts.
inline double file_recovery_probability(std::span<const double> eta, int k) {
  if (k < 1) throw DomainError("file_recovery_probability: k must be >= 1");
  const int n = static_cast<int>(eta.size());
  if (n < k) return 0.0;
  // exact[j] = P(exactly j successes among the links seen so far)
  std::vector<double> exact(n + 1, 0.0);
  exact[0] = 1.0;
  for (int e = 0; e < n; ++e) {
    const double p = eta[e];
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("file_recovery_probability: eta outside [0, 1]");
    for (int j = e + 1; j >= 1; --j) exact[j] = exact[j] * (1.0 - p) + exact[j - 1] * p;
    exact[0] *= 1.0 - p;
  }
  double tail = 0.0;
  for (int j = k; j <= n; ++j) tail += exact[j];
  return std::clamp(tail, 0.0, 1.0);
}

// What one SU contributes to the cells it covers.
struct SuRecovery {
  bool scheduled = false;
  double file_recovery = 0.0;         // P_fi
  double selected_eta_product = 1.0;  // prod of eta over E_opt (literal mode)
  std::span<const int> coverage;
};

inline double su_cell_success(const SuRecovery& su, CellMode mode) {
  if (!su.scheduled) return 0.0;
  return mode == CellMode::kSimplified ? su.file_recovery : su.file_recovery * su.selected_eta_product;
}

// Pr_c = 1 - prod over SUs covering c of (1 - x_i P_i [prod eta]).
inline double grid_recovery_probability(int cell, std::span<const SuRecovery> sus, CellMode mode) {
  double miss = 1.0;
  for (const auto& su : sus)
    if (std::binary_search(su.coverage.begin(), su.coverage.end(), cell)) miss *= 1.0 - su_cell_success(su, mode);
  return std::clamp(1.0 - miss, 0.0, 1.0);
}

// Pr_c for every cell at once; coverage lists must be sorted.
inline std::vector<double> cell_recovery_probabilities(int cell_count, std::span<const SuRecovery> sus,
                                                       CellMode mode) {
  std::vector<double> miss(cell_count, 1.0);
  for (const auto& su : sus) {
    const double s = su_cell_success(su, mode);
    if (s == 0.0) continue;
    for (int c : su.coverage) miss[c] *= 1.0 - s;
  }
  for (double& m : miss) m = std::clamp(1.0 - m, 0.0, 1.0);
  return miss;
}

struct RecoveryArea {
  double area_m2 = 0.0;     // sum_c Pr_c A
  double normalized = 0.0;  // sum_c Pr_c / C
};

inline RecoveryArea effective_recovery_area(std::span<const double> cell_prob, double cell_area) {
  double sum = 0.0;
  for (double p : cell_prob) sum += p;
  RecoveryArea r;
  r.area_m2 = sum * cell_area;
  r.normalized = cell_prob.empty() ? 0.0 : sum / static_cast<double>(cell_prob.size());
  return r;
}

}  // namespace uavcache::coding
