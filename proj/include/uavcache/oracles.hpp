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
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uavcache/channel.hpp"
#include "uavcache/coding.hpp"
#include "uavcache/config.hpp"
#include "uavcache/errors.hpp"
#include "uavcache/world.hpp"

// Independent reference implementations used to cross-check the fast paths.
namespace uavcache::oracles {

// P(at least k successes) by summing over all 2^|S| outcomes.
inline double recovery_by_enumeration(std::span<const double> eta, int k) {
  const std::size_t n = eta.size();
  if (n > 24) throw DomainError("recovery_by_enumeration: more than 24 links");
  double total = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) < k) continue;
    double p = 1.0;
    for (std::size_t j = 0; j < n; ++j) p *= (mask >> j & 1u) ? eta[j] : 1.0 - eta[j];
    total += p;
  }
  return total;
}

// Even-odd ray casting against the explicit polygon vertices.
inline bool in_polygon_ray_cast(Point2 p, Point2 center, double apothem, int sides) {
  const double circumradius = apothem / std::cos(std::numbers::pi / sides);
  std::vector<Point2> v(sides);
  for (int j = 0; j < sides; ++j) {
    // vertices sit between the edge normals used by world::in_regular_polygon
    const double a = 2.0 * std::numbers::pi * (j + 0.5) / sides;
    v[j] = {center.x + circumradius * std::cos(a), center.y + circumradius * std::sin(a)};
  }
  bool inside = false;
  for (int i = 0, j = sides - 1; i < sides; j = i++) {
    if ((v[i].y > p.y) != (v[j].y > p.y)) {
      const double x = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

// Kolmogorov distance between a CDF and the empirical CDF of `samples`
// (sorted in place).
template <class Cdf>
double sup_distance(std::vector<double>& samples, Cdf&& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  return d;
}

struct Check {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct Report {
  std::string suite;
  std::vector<Check> checks;
  double seconds = 0.0;  // wall time; not serialized
  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
};

inline Json to_json(const Report& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"measured", c.measured}, {"tolerance", c.tolerance}, {"passed", c.passed}});
  return {{"suite", r.suite}, {"passed", r.passed()}, {"checks", checks}};
}

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace detail

// DP recovery probability vs enumeration on random instances.
inline Report eq9_suite(std::uint64_t seed, int instances = 1000, int max_links = 12, double tol = 1e-12) {
  detail::Stopwatch clock;
  Rng rng(seed);
  std::uniform_int_distribution<int> size(0, max_links);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    std::vector<double> eta(size(rng));
    for (auto& e : eta) e = unit(rng);
    const int k = std::uniform_int_distribution<int>(1, max_links + 1)(rng);
    worst = std::max(worst, std::abs(coding::file_recovery_probability(eta, k) - recovery_by_enumeration(eta, k)));
  }
  Report r{"eq9", {{"max_abs_dp_minus_enumeration", worst, tol, worst <= tol}}, 0.0};
  r.seconds = clock.seconds();
  return r;
}

struct StpDraw {
  channel::StpQuery query;
  double distance_m = 0.0;
  double quadrature = 0.0;
  channel::MonteCarloEstimate monte_carlo;
};

// Quadrature STP vs direct sampling of contact time and fading over random
// file sizes, bandwidths, contact means, fragment counts and distances.
inline Report stp_suite(const ScenarioConfig& c, std::uint64_t seed, int draws = 100, long long samples = 1000000,
                        double tol = 3e-3, std::vector<StpDraw>* detail_out = nullptr) {
  detail::Stopwatch clock;
  const auto radio = channel::radio_params(c);
  Rng rng(seed);
  std::uniform_real_distribution<double> file_kbits(20.0, 2000.0), bandwidth(0.5e6, 6e6), tau(0.02, 0.5),
      dist(c.altitude_m + 1.0, 300.0);
  std::uniform_int_distribution<int> k(1, 3);
  const Point3 gv{0.0, 0.0, 0.0};
  double worst = 0.0;
  for (int i = 0; i < draws; ++i) {
    StpDraw d;
    d.query = {file_kbits(rng) * 1e3, k(rng), bandwidth(rng), tau(rng)};
    d.distance_m = dist(rng);
    const auto link = channel::link_stats({0.0, 0.0, d.distance_m}, gv, radio);
    d.quadrature = channel::stp(d.query, link, radio.power_w, c.quadrature);
    d.monte_carlo = channel::stp_monte_carlo(d.query, link, radio.power_w, samples, rng);
    worst = std::max(worst, std::abs(d.quadrature - d.monte_carlo.estimate));
    if (detail_out) detail_out->push_back(d);
  }
  Report r{"stp", {{"max_abs_quadrature_minus_monte_carlo", worst, tol, worst <= tol}}, 0.0};
  r.seconds = clock.seconds();
  return r;
}

// Series CDF of the Rician power vs the empirical CDF of sampled powers.
inline Report cdf_suite(const ScenarioConfig& c, std::uint64_t seed, std::vector<double> factors = {1.0, 3.0, 10.0},
                        long long samples = 1000000, double tol = 3e-3) {
  detail::Stopwatch clock;
  Rng rng(seed);
  Report r{"cdf", {}, 0.0};
  for (double chi : factors) {
    channel::LinkStats link;
    link.mean_gain = 1.0;
    link.rician_factor = chi;
    link.zeta = chi + 1.0;
    std::vector<double> mu(static_cast<std::size_t>(samples));
    for (auto& m : mu) m = channel::sample_rician_power(link, rng);
    const double d =
        sup_distance(mu, [&](double x) { return channel::rician_power_cdf(x, chi, link.zeta, c.quadrature); });
    char name[64];
    std::snprintf(name, sizeof name, "sup_distance_chi_%g", chi);
    r.checks.push_back({name, d, tol, d <= tol});
  }
  r.seconds = clock.seconds();
  return r;
}

inline Report run_suite(const std::string& name, const ScenarioConfig& c, std::uint64_t seed) {
  if (name == "eq9") return eq9_suite(seed);
  if (name == "stp") return stp_suite(c, seed);
  if (name == "cdf") return cdf_suite(c, seed);
  throw ConfigError("oracle: unknown suite \"" + name + "\" (expected eq9, stp or cdf)");
}

}  // namespace uavcache::oracles
