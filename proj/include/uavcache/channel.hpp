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

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <vector>

#include "uavcache/config.hpp"
#include "uavcache/errors.hpp"
#include "uavcache/world.hpp"

namespace uavcache::channel {

// Large-scale statistics of one CU -> GV air-to-ground link. mean_gain is the
// mean of mu = |h|^2 / sigma0^2, so the mean SNR is p * mean_gain.
struct LinkStats {
  double distance = 0.0;
  double mean_gain = 0.0;
  double mean_snr = 0.0;
  double rician_factor = 0.0;
  double zeta = 0.0;  // (chi + 1) / mean_gain
};

// Radio constants needed to build LinkStats, all linear.
struct RadioParams {
  double beta0 = 1.0;
  double pathloss_exponent = 4.0;
  double noise_power_w = 1e-12;
  double power_w = 0.15;
  double rician_factor = 3.0;
};

inline RadioParams radio_params(const ScenarioConfig& c) {
  if (!c.beta0) throw ConfigError("beta0: not set (run calibration first)");
  return {*c.beta0, c.pathloss_exponent, c.noise_power_w, c.power_w, c.rician_factor};
}

inline LinkStats link_stats(const Point3& cu, const Point3& gv, const RadioParams& r) {
  const double d = distance(cu, gv);
  if (!(d > 0)) throw DomainError("link_stats: CU and GV are co-located");
  LinkStats s;
  s.distance = d;
  s.mean_gain = r.beta0 * std::pow(d, -r.pathloss_exponent) / r.noise_power_w;
  s.mean_snr = r.power_w * s.mean_gain;
  s.rician_factor = r.rician_factor;
  s.zeta = (r.rician_factor + 1.0) / s.mean_gain;
  return s;
}

// CDF of the Rician channel power mu with factor chi and zeta = (chi+1)/mean:
//   F(x) = 1 - e^-chi sum_m chi^m/m! sum_{l<=m} (zeta x)^l / l! e^(-zeta x).
// The outer series stops once a term drops below series_tol (after the
// Poisson mode of chi) or at series_max_terms.
inline double rician_power_cdf(double x, double chi, double zeta, const QuadratureSpec& spec) {
  if (!(x >= 0)) throw DomainError("rician_power_cdf: x must be >= 0");
  if (x == 0) return 0.0;
  const double zx = zeta * x;
  if (std::isinf(zx)) return 1.0;
  const double log_zx = std::log(zx);
  if (chi == 0) return std::clamp(-std::expm1(-zx), 0.0, 1.0);
  const double log_chi = std::log(chi);
  double poisson_cdf = 0.0;  // P(N <= m), N ~ Poisson(zeta x)
  double survival = 0.0;
  for (int m = 0; m < spec.series_max_terms; ++m) {
    poisson_cdf += std::exp(-zx + m * log_zx - std::lgamma(m + 1.0));
    const double weight = std::exp(-chi + m * log_chi - std::lgamma(m + 1.0));
    const double term = weight * std::min(poisson_cdf, 1.0);
    survival += term;
    // terms can still grow while (m+1)^2 < chi * zeta x
    if (m > chi && (m + 1.0) * (m + 1.0) > chi * zx && term < spec.series_tol) break;
  }
  return std::clamp(1.0 - survival, 0.0, 1.0);
}

// Density of the normalized power v = zeta * mu: e^(-chi - v) I0(2 sqrt(chi v)),
// returned without the e^-v factor (the Gauss-Laguerre weight).
inline double rician_shape_factor(double v, double chi) {
  const double z = 2.0 * std::sqrt(chi * v);
  if (z < 600.0) return std::exp(-chi) * std::cyl_bessel_i(0.0, z);
  // I0(z) ~ e^z / sqrt(2 pi z) (1 + 1/(8z) + 9/(128 z^2))
  return std::exp(z - chi) / std::sqrt(2.0 * std::numbers::pi * z) * (1.0 + 1.0 / (8 * z) + 9.0 / (128 * z * z));
}

inline double rician_power_pdf(double x, double chi, double zeta) {
  if (x < 0) return 0.0;
  const double v = zeta * x;
  return zeta * std::exp(-v) * rician_shape_factor(v, chi);
}

inline double rate_cdf(double r, const LinkStats& link, double power_w, const QuadratureSpec& spec) {
  if (!(r >= 0)) throw DomainError("rate_cdf: r must be >= 0");
  if (r > 1000.0) return 1.0;
  return rician_power_cdf(std::expm1(r * std::numbers::ln2) / power_w, link.rician_factor, link.zeta, spec);
}

// Nodes and weights of the n-point Gauss-Laguerre rule (weight e^-t on
// [0, inf)).
struct LaguerreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

// Golub-Welsch for the starting values, then Newton on L_n to polish the
// nodes; weights from w_i = x_i / ((n+1)^2 L_{n+1}(x_i)^2).
inline LaguerreRule compute_laguerre_rule(int n) {
  Eigen::VectorXd diag(n), sub(n > 1 ? n - 1 : 1);
  for (int i = 0; i < n; ++i) diag(i) = 2.0 * i + 1.0;
  for (int i = 0; i + 1 < n; ++i) sub(i) = i + 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub.head(std::max(n - 1, 0)), Eigen::EigenvaluesOnly);
  LaguerreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const auto laguerre = [n](double x, double& ln, double& ln_prev) {
    double p0 = 1.0, p1 = 1.0 - x;
    if (n == 0) {
      ln = p0;
      ln_prev = 0.0;
      return;
    }
    for (int k = 1; k < n; ++k) {
      const double p2 = ((2.0 * k + 1.0 - x) * p1 - k * p0) / (k + 1.0);
      p0 = p1;
      p1 = p2;
    }
    ln = p1;
    ln_prev = p0;
  };
  for (int i = 0; i < n; ++i) {
    double x = solver.eigenvalues()(i);
    for (int it = 0; it < 8; ++it) {
      double ln, lp;
      laguerre(x, ln, lp);
      const double deriv = n * (ln - lp) / x;
      const double dx = ln / deriv;
      x -= dx;
      if (std::abs(dx) <= 1e-15 * std::max(1.0, x)) break;
    }
    double ln, lp;
    laguerre(x, ln, lp);
    // L_{n+1}(x) from the recurrence at the root of L_n
    const double ln1 = ((2.0 * n + 1.0 - x) * ln - n * lp) / (n + 1.0);
    rule.nodes[i] = x;
    rule.weights[i] = x / ((n + 1.0) * (n + 1.0) * ln1 * ln1);
  }
  return rule;
}

}  // namespace detail

// Rules are cached per node count; safe to call from several threads.
inline const LaguerreRule& laguerre_rule(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<const LaguerreRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<const LaguerreRule>(detail::compute_laguerre_rule(n));
  return *slot;
}

// Inputs to the successful-transmission probability of one coded fragment.
struct StpQuery {
  double file_bits = 0.0;  // Z_i
  int k = 1;               // fragments needed
  double bandwidth_hz = 0.0;  // B_i, shared by the k transmitting CUs
  double contact_mean_s = 0.0;  // tau
};

namespace detail {

inline void check_stp_query(const StpQuery& q) {
  if (!(q.file_bits >= 0)) throw DomainError("stp: file size must be >= 0");
  if (q.k < 1) throw DomainError("stp: k must be >= 1");
  if (!(q.bandwidth_hz > 0)) throw DomainError("stp: bandwidth must be positive");
  if (!(q.contact_mean_s > 0)) throw DomainError("stp: contact mean must be positive");
}

// Normalized contact time a fragment needs at unit spectral efficiency:
// alpha_i / (tau * B_i / k_i). Note this equals Z_i / (tau * B_i).
inline double required_work(const StpQuery& q) {
  const double fragment_bits = q.file_bits / q.k;
  const double per_cu_bandwidth = q.bandwidth_hz / q.k;
  return fragment_bits / (q.contact_mean_s * per_cu_bandwidth);
}

}  // namespace detail

// eta = Pr{T >= alpha_i / ((B_i/k_i) R)} with T ~ Exp(mean tau). Integrating
// the contact-time form by parts gives eta = E[exp(-c / R)], c the required
// work; with v = zeta mu this is a Gauss-Laguerre integral over the Rician
// power density, which stays smooth where the contact-time integrand has a
// sharp step.
inline double stp(const StpQuery& q, const LinkStats& link, double power_w, const QuadratureSpec& spec) {
  detail::check_stp_query(q);
  if (q.file_bits == 0) return 1.0;
  const double work = detail::required_work(q);
  const LaguerreRule& rule = laguerre_rule(spec.node_count);
  const double chi = link.rician_factor;
  const double snr_per_v = power_w / link.zeta;
  double eta = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double v = rule.nodes[i];
    const double rate = std::log2(1.0 + snr_per_v * v);
    if (rate <= 0) continue;
    eta += rule.weights[i] * rician_shape_factor(v, chi) * std::exp(-work / rate);
  }
  return std::clamp(eta, 0.0, 1.0);
}

// The contact-time integral  int_0^inf (1 - F_R(c / t)) e^-t dt  evaluated
// directly with the CDF series and adaptive Gauss-Kronrod. Slower than stp();
// kept as an independent route for cross-checking.
inline double stp_contact_time(const StpQuery& q, const LinkStats& link, double power_w,
                               const QuadratureSpec& spec, double tol = 1e-10) {
  detail::check_stp_query(q);
  if (q.file_bits == 0) return 1.0;
  const double work = detail::required_work(q);
  const auto integrand = [&](double t) {
    if (t <= 0) return 0.0;
    const double r = work / t;
    if (r > 1000.0) return 0.0;
    return (1.0 - rate_cdf(r, link, power_w, spec)) * std::exp(-t);
  };
  using boost::math::quadrature::gauss_kronrod;
  const double eta = gauss_kronrod<double, 31>::integrate(integrand, 0.0, std::numeric_limits<double>::infinity(),
                                                          30, tol);
  return std::clamp(eta, 0.0, 1.0);
}

// Draws mu = mean_gain |g|^2 with g = sqrt(chi/(chi+1)) + sqrt(1/(2(chi+1))) (z1 + j z2).
inline double sample_rician_power(const LinkStats& link, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double chi = link.rician_factor;
  const double los = std::sqrt(chi / (chi + 1.0));
  const double scatter = std::sqrt(1.0 / (2.0 * (chi + 1.0)));
  const double re = los + scatter * normal(rng);
  const double im = scatter * normal(rng);
  return link.mean_gain * (re * re + im * im);
}

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  long long samples = 0;
};

// Samples contact time and fading directly and counts completed fragments.
inline MonteCarloEstimate stp_monte_carlo(const StpQuery& q, const LinkStats& link, double power_w,
                                          long long sample_count, Rng& rng) {
  detail::check_stp_query(q);
  if (sample_count < 10000) throw DomainError("stp_monte_carlo: sample_count must be >= 1e4");
  if (q.file_bits == 0) return {1.0, 0.0, sample_count};
  std::exponential_distribution<double> contact(1.0 / q.contact_mean_s);
  const double fragment_bits = q.file_bits / q.k;
  const double per_cu_bandwidth = q.bandwidth_hz / q.k;
  long long hits = 0;
  for (long long s = 0; s < sample_count; ++s) {
    const double t = contact(rng);
    const double mu = sample_rician_power(link, rng);
    const double rate = per_cu_bandwidth * std::log2(1.0 + power_w * mu);
    if (rate > 0 && t >= fragment_bits / rate) ++hits;
  }
  const double p = static_cast<double>(hits) / sample_count;
  return {p, std::sqrt(p * (1.0 - p) / sample_count), sample_count};
}

}  // namespace uavcache::channel
