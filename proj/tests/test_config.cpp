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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "test_util.hpp"
#include "uavcache/calibration.hpp"
#include "uavcache/config.hpp"

namespace uavcache {
namespace {

std::string error_of(const Json& doc) {
  try {
    config_from_json(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigTest, EmptyDocumentIsDefaultProfile) {
  const auto c = config_from_json(Json::object());
  EXPECT_EQ(config_to_json(c), config_to_json(default_config()));
  EXPECT_EQ(c.sensing_uavs, 2);
  EXPECT_EQ(c.coop_uavs, 16);
  EXPECT_DOUBLE_EQ(c.total_bandwidth_hz, 10e6);
  EXPECT_DOUBLE_EQ(c.power_w, 0.15);
  EXPECT_DOUBLE_EQ(c.rician_factor, 3.0);
  EXPECT_DOUBLE_EQ(c.pathloss_exponent, 4.0);
  EXPECT_DOUBLE_EQ(c.altitude_m, 100.0);
  EXPECT_EQ(c.dqn.memory_size, 2000);
  EXPECT_DOUBLE_EQ(c.dqn.learning_rate, 0.001);
  EXPECT_EQ(c.holders_per_file(), 8);
  EXPECT_EQ(c.recovery_mode, RecoveryMode::kAllEligible);
  EXPECT_EQ(c.cell_mode, CellMode::kSimplified);
}

TEST(ConfigTest, DecibelsConvertedOnce) {
  const auto c = config_from_json(Json{{"snr_threshold_db", 27}});
  EXPECT_NEAR(c.snr_threshold, std::pow(10.0, 2.7), 1e-9);
  EXPECT_NEAR(c.noise_power_w, 1e-12, 1e-24);
  // serialized back in dB, so a round trip does not convert twice
  const auto again = config_from_json(config_to_json(c));
  EXPECT_NEAR(again.snr_threshold, std::pow(10.0, 2.7), 1e-9);
}

TEST(ConfigTest, NegativeContactMeanNamesField) {
  const auto msg = error_of(Json{{"contact_mean_s", -1.0}});
  EXPECT_NE(msg.find("contact_mean_s"), std::string::npos) << msg;
}

TEST(ConfigTest, UnknownFieldsRejectedWithPath) {
  EXPECT_NE(error_of(Json{{"bogus", 1}}).find("bogus"), std::string::npos);
  EXPECT_NE(error_of(Json{{"dqn", {{"lr", 0.1}}}}).find("dqn.lr"), std::string::npos);
}

TEST(ConfigTest, ErrorsAreAggregated) {
  const auto msg = error_of(Json{{"power_w", -1.0}, {"horizon", 0}, {"k_levels", Json::array()}});
  EXPECT_NE(msg.find("power_w"), std::string::npos) << msg;
  EXPECT_NE(msg.find("horizon"), std::string::npos) << msg;
  EXPECT_NE(msg.find("k_levels"), std::string::npos) << msg;
}

TEST(ConfigTest, WrongTypeAndModes) {
  EXPECT_NE(error_of(Json{{"horizon", "sixty"}}).find("horizon"), std::string::npos);
  EXPECT_NE(error_of(Json{{"recovery_mode", "sometimes"}}).find("recovery_mode"), std::string::npos);
  EXPECT_NE(error_of(Json{{"dqn", {{"optimizer", "rmsprop"}}}}).find("dqn.optimizer"), std::string::npos);
  const auto c = config_from_json(Json{{"recovery_mode", "selected-k"}, {"cell_mode", "literal-eq6"}});
  EXPECT_EQ(c.recovery_mode, RecoveryMode::kSelectedK);
  EXPECT_EQ(c.cell_mode, CellMode::kLiteral);
}

TEST(ConfigTest, MissingFileAndBadJson) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "uavcache_bad_config.json";
  std::ofstream(path) << "{ not json";
  EXPECT_THROW(load_config(path.string()), ConfigError);
  std::filesystem::remove(path);
}

TEST(ConfigTest, RoundTripPreservesHash) {
  auto c = default_config();
  c.apothem_m = 175;
  c.beta0 = 3.5;
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_NE(config_hash(back), config_hash(default_config()));
  EXPECT_EQ(config_hash_hex(c).size(), 16u);
}

TEST(CalibrationTest, MeanSnrAtReferenceDistance) {
  const auto& c = testing::calibrated_default();
  const double snr = c.power_w * *c.beta0 * std::pow(200.0, -4.0) / c.noise_power_w;
  EXPECT_NEAR(10 * std::log10(snr), 30.0, 1e-9);
  EXPECT_NEAR(*c.beta0, 10.0 + 2.0 / 3.0, 1e-2);
}

TEST(CalibrationTest, ContactMeanHitsTargetStp) {
  const auto& c = testing::calibrated_default();
  const double eta = calibration::reference_stp(c, *c.beta0, *c.contact_mean_s);
  EXPECT_GE(eta, 0.595);
  EXPECT_LE(eta, 0.605);
}

TEST(CalibrationTest, Idempotent) {
  const auto& c = testing::calibrated_default();
  EXPECT_EQ(config_hash(calibration::resolve(c)), config_hash(c));
  auto fixed = default_config();
  fixed.beta0 = 5.0;
  fixed.contact_mean_s = 0.2;
  const auto r = calibration::resolve(fixed);
  EXPECT_EQ(*r.beta0, 5.0);
  EXPECT_EQ(*r.contact_mean_s, 0.2);
}

TEST(CalibrationTest, UnreachableTargetReportsBracket) {
  auto c = default_config();
  c.calib_target_stp = 1.0 - 1e-13;
  try {
    calibration::resolve(c);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("eta("), std::string::npos) << e.what();
  }
}

}  // namespace
}  // namespace uavcache
