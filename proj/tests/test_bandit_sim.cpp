// Copyright 2026 The ope-switch Authors
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

#include <sstream>
#include <vector>

#include "ope/bandit_sim.hpp"

namespace {

TEST(Csv, RoundTripIsExact) {
  const auto data = ope::synth_dataset(4, 3, 10, 1.0, 1);
  std::stringstream ss;
  ope::write_csv(ss, data);
  const auto back = ope::read_csv(ss, "x");
  EXPECT_EQ(back.features, data.features);
  EXPECT_EQ(back.labels, data.labels);
  EXPECT_EQ(back.num_classes, 4u);
}

TEST(Csv, LabelColumnMayBeAnywhere) {
  std::stringstream ss("label,f0,f1\n1,0.5,2\n0,1,-1\n");
  const auto d = ope::read_csv(ss);
  EXPECT_EQ(d.labels, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(d.features[0], (std::vector<double>{0.5, 2.0}));
}

TEST(Csv, ErrorsNameTheLine) {
  std::stringstream bad_cell("f0,label\n1,0\nabc,1\n");
  try {
    ope::read_csv(bad_cell);
    FAIL() << "expected ParseError";
  } catch (const ope::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::stringstream no_label("f0,f1\n1,2\n");
  EXPECT_THROW(ope::read_csv(no_label), ope::ParseError);
  std::stringstream ragged("f0,label\n1\n");
  EXPECT_THROW(ope::read_csv(ragged), ope::ParseError);
  std::stringstream gap("f0,label\n1,0\n2,2\n");
  EXPECT_THROW(ope::read_csv(gap), ope::ValidationError);
  std::stringstream nonfinite("f0,label\ninf,0\n");
  EXPECT_THROW(ope::read_csv(nonfinite), ope::ParseError);
}

TEST(Synth, DeterministicAndShaped) {
  const auto a = ope::synth_dataset(6, 10, 20, 2.0, 7);
  const auto b = ope::synth_dataset(6, 10, 20, 2.0, 7);
  const auto c = ope::synth_dataset(6, 10, 20, 2.0, 8);
  EXPECT_EQ(a.features, b.features);
  EXPECT_NE(a.features, c.features);
  EXPECT_EQ(a.size(), 120u);
  EXPECT_EQ(a.dim(), 10u);
  EXPECT_NO_THROW(a.validate());
  EXPECT_NO_THROW(ope::synth_dataset(8, 2, 5, 1.0, 1).validate());
  EXPECT_NO_THROW(ope::synth_dataset(3, 1, 5, 1.0, 1).validate());
  EXPECT_THROW(ope::synth_dataset(1, 2, 5, 1.0, 1), ope::ValidationError);
}

TEST(CovariateShift, KeepsEveryClass) {
  const auto data = ope::synth_dataset(10, 2, 5, 3.0, 3);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto sub = ope::covariate_shift_subsample(data, s);
    EXPECT_NO_THROW(sub.validate());
    EXPECT_LE(sub.size(), data.size());
  }
}

TEST(Simulate, RecordsCarryFullDistributionsAndValidRewards) {
  const auto data = ope::synth_dataset(3, 4, 40, 1.5, 4);
  const auto pols = ope::make_policies(data, {}, 5);
  for (auto channel : {ope::RewardChannel::deterministic, ope::RewardChannel::noisy}) {
    const auto log = ope::simulate_log(data, pols.logging, channel, 300, 6);
    EXPECT_EQ(log.size(), 300u);
    EXPECT_TRUE(log.has_logging_dists());
    for (const auto& r : log.records()) {
      EXPECT_GT(r.logging_prob, 0.0);
      EXPECT_EQ(r.logging_prob, r.logging_dist[r.action]);
      EXPECT_TRUE(r.reward == 0.0 || r.reward == 1.0);
    }
    const auto again = ope::simulate_log(data, pols.logging, channel, 300, 6);
    for (std::size_t i = 0; i < log.size(); ++i) {
      EXPECT_EQ(log[i].action, again[i].action);
      EXPECT_EQ(log[i].reward, again[i].reward);
    }
  }
  EXPECT_THROW(ope::simulate_log(data, pols.logging, ope::RewardChannel::noisy, 0, 1),
               ope::ValidationError);
  EXPECT_THROW(ope::simulate_log(data, ope::PolicyFn::uniform(4), ope::RewardChannel::noisy, 5, 1),
               ope::ValidationError);
}

TEST(Simulate, NoisyRewardMeanMatchesGroundTruthFormula) {
  const auto data = ope::synth_dataset(3, 2, 30, 2.0, 9);
  const auto pols = ope::make_policies(data, {}, 10);
  // Logging with the target itself: the plain reward mean estimates the value.
  const auto log = ope::simulate_log(data, pols.target, ope::RewardChannel::noisy, 200000, 11);
  double total = 0.0;
  for (const auto& r : log.records()) {
    total += r.reward;
  }
  const double mean = total / static_cast<double>(log.size());
  const double truth = ope::ground_truth_value(data, pols.target, ope::RewardChannel::noisy);
  EXPECT_NEAR(mean, truth, 4.0 * 0.5 / std::sqrt(200000.0));
  const double det = ope::ground_truth_value(data, pols.target, ope::RewardChannel::deterministic);
  EXPECT_DOUBLE_EQ(truth, 0.5 * det + 0.25);
}

TEST(GroundTruth, UniformPolicyIsOneOverK) {
  const auto data = ope::synth_dataset(5, 2, 4, 1.0, 2);
  EXPECT_DOUBLE_EQ(
      ope::ground_truth_value(data, ope::PolicyFn::uniform(5), ope::RewardChannel::deterministic),
      0.2);
}

TEST(SizeSchedule, OneTwoFiveThenPopulation) {
  EXPECT_EQ(ope::size_schedule(1500), (std::vector<std::size_t>{100, 200, 500, 1000, 1500}));
  EXPECT_EQ(ope::size_schedule(1000), (std::vector<std::size_t>{100, 200, 500, 1000}));
  EXPECT_EQ(ope::size_schedule(50), (std::vector<std::size_t>{50}));
}

TEST(Channel, ParseAndPrint) {
  EXPECT_EQ(ope::parse_channel("noisy"), ope::RewardChannel::noisy);
  EXPECT_EQ(ope::to_string(ope::RewardChannel::deterministic), "deterministic");
  EXPECT_THROW(ope::parse_channel("loud"), ope::ValidationError);
}

}  // namespace
