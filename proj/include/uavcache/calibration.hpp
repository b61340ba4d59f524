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
#include <sstream>

#include "uavcache/channel.hpp"
#include "uavcache/config.hpp"

namespace uavcache::calibration {

// beta0 such that a link at calib_ref_distance_m has mean SNR equal to the
// SNR threshold plus calib_margin_db:  beta0 = gamma_cal sigma^2 d_ref^alpha / p.
inline double calibrated_beta0(const ScenarioConfig& c) {
  const double gamma_cal = c.snr_threshold * db_to_linear(c.calib_margin_db);
  return gamma_cal * c.noise_power_w * std::pow(c.calib_ref_distance_m, c.pathloss_exponent) / c.power_w;
}

// Largest CU-GV distance whose mean SNR still clears the threshold.
inline double max_eligible_distance(const ScenarioConfig& c, double beta0) {
  return std::pow(c.power_w * beta0 / (c.noise_power_w * c.snr_threshold), 1.0 / c.pathloss_exponent);
}

// Median CU-GV distance among eligible CUs when CUs are spread uniformly over
// the area: the eligible ground disc has radius r_max and its median radius
// is r_max / sqrt(2).
inline double median_eligible_distance(const ScenarioConfig& c, double beta0) {
  const double d_max = max_eligible_distance(c, beta0);
  if (!(d_max > c.altitude_m)) {
    std::ostringstream os;
    os << "calibration: no CU can be eligible (max eligible distance " << d_max << " m <= altitude "
       << c.altitude_m << " m)";
    throw ConfigError(os.str());
  }
  const double r_max = std::sqrt(d_max * d_max - c.altitude_m * c.altitude_m);
  const double r_med = r_max / std::sqrt(2.0);
  return std::sqrt(r_med * r_med + c.altitude_m * c.altitude_m);
}

inline channel::LinkStats reference_link(const ScenarioConfig& c, double beta0) {
  const double d = median_eligible_distance(c, beta0);
  channel::RadioParams r{beta0, c.pathloss_exponent, c.noise_power_w, c.power_w, c.rician_factor};
  return channel::link_stats({0.0, 0.0, d}, {0.0, 0.0, 0.0}, r);
}

inline double reference_stp(const ScenarioConfig& c, double beta0, double contact_mean_s) {
  channel::StpQuery q{c.calib_content_kbits * 1e3 * c.calib_cells, 1, c.calib_bandwidth_hz, contact_mean_s};
  return channel::stp(q, reference_link(c, beta0), c.power_w, c.quadrature);
}

// Mean contact time giving the reference link the target STP. The STP grows
// with tau, so bisection in log(tau) over a wide bracket suffices.
inline double calibrated_contact_mean(const ScenarioConfig& c, double beta0) {
  double lo = 1e-9, hi = 1e6;
  const double eta_lo = reference_stp(c, beta0, lo);
  const double eta_hi = reference_stp(c, beta0, hi);
  if (!(eta_lo < c.calib_target_stp && eta_hi > c.calib_target_stp)) {
    std::ostringstream os;
    os << "calibration: target STP " << c.calib_target_stp << " not bracketed: eta(" << lo << ") = " << eta_lo
       << ", eta(" << hi << ") = " << eta_hi;
    throw ConfigError(os.str());
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    if (reference_stp(c, beta0, mid) < c.calib_target_stp) lo = mid;
    else hi = mid;
    if (hi / lo - 1.0 < 1e-13) break;
  }
  return std::sqrt(lo * hi);
}

// Fills beta0 and contact_mean_s when absent. Values already present are
// kept, so resolving a resolved config is the identity.
inline ScenarioConfig resolve(ScenarioConfig c) {
  if (!c.beta0) c.beta0 = calibrated_beta0(c);
  if (!c.contact_mean_s) c.contact_mean_s = calibrated_contact_mean(c, *c.beta0);
  return c;
}

}  // namespace uavcache::calibration
