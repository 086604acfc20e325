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

#include <cmath>
#include <numbers>
#include <random>

#include "ope/estimators.hpp"
#include "ope/instances.hpp"
#include "ope/theory_check.hpp"
#include "support/oracles.hpp"

namespace {

using ope::FiniteInstance;
using ope::Table;

FiniteInstance uniform_instance(Eigen::Index contexts, Eigen::Index actions, double sd,
                                double cap) {
  FiniteInstance inst;
  inst.context_probs = Eigen::VectorXd::Constant(contexts, 1.0 / static_cast<double>(contexts));
  inst.logging = Table::Constant(contexts, actions, 1.0 / static_cast<double>(actions));
  inst.target = inst.logging;
  inst.mean_reward = Table::Constant(contexts, actions, 0.5 * cap);
  inst.noise_sd = Table::Constant(contexts, actions, sd);
  inst.reward_cap = Table::Constant(contexts, actions, cap);
  inst.validate();
  return inst;
}

// E_mu[rho^2 sigma^2] by cell enumeration.
double noise_moment(const FiniteInstance& inst) {
  return static_cast<double>(oracle::cell_sum(inst, [&](auto m, auto a, long double rho, long double) {
    return rho * rho * inst.noise_sd(m, a) * inst.noise_sd(m, a);
  }));
}

TEST(MinimaxLowerBound, GammaZeroLeavesNoiseTermOnly) {
  const auto inst = ope::instance_5x3();
  for (std::size_t n : {1u, 20u, 500u}) {
    EXPECT_NEAR(ope::minimax_lower_bound(inst, 0.0, n).value,
                noise_moment(inst) / (700.0 * static_cast<double>(n)), 1e-15);
  }
  auto quiet = inst;
  quiet.noise_sd.setZero();
  EXPECT_EQ(ope::minimax_lower_bound(quiet, 0.0, 10).value, 0.0);
}

TEST(MinimaxLowerBound, PreconditionsFromCGamma) {
  const auto inst = ope::instance_5x3();
  const auto lb = ope::minimax_lower_bound(inst, 0.0, 20);
  EXPECT_EQ(lb.c_gamma, ope::c_gamma(inst, 0.0));
  EXPECT_GE(lb.required_n, 16.0 * std::sqrt(lb.c_gamma));
  EXPECT_EQ(lb.preconditions_met, 20.0 >= lb.required_n);
  EXPECT_TRUE(ope::minimax_lower_bound(inst, 0.0, 1000000).preconditions_met);
  EXPECT_THROW(ope::minimax_lower_bound(inst, 1.5, 10), ope::ValidationError);
}

TEST(CGamma, MatchesEnumerationAndJensenFloor) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto inst = oracle::random_instance(s, 2 + static_cast<Eigen::Index>(s % 4),
                                              2 + static_cast<Eigen::Index>(s % 3));
    for (const double gamma : {0.0, 0.05, 0.2, 1.0}) {
      const double c = ope::c_gamma(inst, gamma);
      EXPECT_NEAR(c, oracle::c_gamma_by_enumeration(inst, gamma, 2.0), 1e-9 * c);
      EXPECT_GE(c, 16.0 * (1.0 - 1e-12));
    }
  }
  EXPECT_THROW(ope::c_gamma(ope::instance_5x3(), -0.1), ope::ValidationError);
}

TEST(LbSigma, TrivialCases) {
  auto inst = ope::instance_5x3();
  const double s = noise_moment(inst);
  // Large n raises the truncation threshold above every cell.
  const std::size_t n = 1000000;
  EXPECT_NEAR(ope::lb_sigma_expr(inst, n),
              s / (32.0 * std::numbers::e * static_cast<double>(n)), 1e-18);
  inst.noise_sd.setZero();
  EXPECT_EQ(ope::lb_sigma_expr(inst, 10), 0.0);
}

TEST(LbRmax, TrivialCases) {
  const auto inst = ope::instance_5x3();
  const double below = inst.joint_logging_mass().minCoeff() / 2.0;
  EXPECT_EQ(ope::lb_rmax_expr(inst, below, 10), 0.0);
  // gamma = 1: xi saturates, T = E_mu[rho^2 R^2], subtrahend log(5) T.
  const double t = static_cast<double>(oracle::cell_sum(inst, [&](auto m, auto a, long double rho, long double) {
    return rho * rho * inst.reward_cap(m, a) * inst.reward_cap(m, a);
  }));
  const std::size_t n = 100000;
  const double head = t / (32.0 * std::numbers::e * static_cast<double>(n));
  EXPECT_NEAR(ope::lb_rmax_expr(inst, 1.0, n), head - std::log(5.0) * t, 1e-12);
}

TEST(LbRmax, SmallGammaOnNearUniformInstanceStaysNonpositive) {
  // With gamma = 1/(n log n) the subtrahend gamma log(5/gamma) exceeds
  // 1/(32 e n) for every n >= 2, so the expression cannot be positive.
  auto inst = uniform_instance(50, 3, 0.5, 1.0);
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> jitter(0.95, 1.05);
  for (Eigen::Index m = 0; m < 50; ++m) {
    inst.context_probs(m) *= jitter(g);
  }
  inst.context_probs /= inst.context_probs.sum();
  for (std::size_t n : {2u, 10u, 30u, 100u}) {
    const double nd = static_cast<double>(n);
    const double gamma = 1.0 / (nd * std::log(nd));
    const double value = ope::lb_rmax_expr(inst, gamma, n);
    const double cap = static_cast<double>(oracle::cell_sum(inst, [&](auto m, auto a, long double rho, long double) {
                         return rho * rho * inst.reward_cap(m, a) * inst.reward_cap(m, a);
                       })) /
                       (32.0 * std::numbers::e * nd);
    EXPECT_LE(value, 0.0) << n;
    EXPECT_LE(value, cap) << n;
    EXPECT_GT(1.0 / (32.0 * std::numbers::e * nd), 0.0);
    EXPECT_GT(ope::gamma_log_term(gamma), 1.0 / (32.0 * std::numbers::e * nd));
  }
}

TEST(LbRmax, PositiveWhenCellsAreRareEnough) {
  // 10000 x 3 uniform: joint mass 1/30000, T = 1, no cell above the
  // threshold sqrt(n T / 16) > 1 at n = 17.
  const auto inst = uniform_instance(10000, 3, 0.5, 1.0);
  const std::size_t n = 17;
  const double gamma = 5e-5;
  const double head = 1.0 / (32.0 * std::numbers::e * 17.0);
  const double value = ope::lb_rmax_expr(inst, gamma, n);
  EXPECT_NEAR(value, head - gamma * std::log(5.0 / gamma), 1e-12);
  EXPECT_GT(value, 0.0);
  EXPECT_LE(value, head);
}

TEST(GaussianHardPair, HandExample) {
  FiniteInstance inst;
  inst.context_probs = Eigen::VectorXd::Ones(1);
  inst.logging = Table(1, 2);
  inst.logging << 0.5, 0.5;
  inst.target = Table(1, 2);
  inst.target << 1.0, 0.0;
  inst.mean_reward = Table::Zero(1, 2);
  inst.noise_sd = Table::Ones(1, 2);
  inst.reward_cap = Table::Constant(1, 2, 10.0);
  const auto pair = ope::gaussian_hard_pair(inst, 8);
  EXPECT_NEAR(pair.alpha, std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(pair.delta(0, 0), 0.70711, 1e-5);
  EXPECT_EQ(pair.delta(0, 1), 0.0);
  EXPECT_LE(ope::gaussian_pair_divergence(inst, pair), 1.0 / 8.0 + 1e-15);
  EXPECT_EQ(pair.member(inst, 2).mean_reward, Table::Zero(1, 2));

  inst.reward_cap = Table::Constant(1, 2, 0.1);
  const auto clipped = ope::gaussian_hard_pair(inst, 8);
  EXPECT_EQ(clipped.delta(0, 0), 0.1);
}

TEST(GaussianHardPair, FeasibleOnShippedInstances) {
  for (const auto& name : ope::shipped_instance_names()) {
    const auto inst = ope::shipped_instance(name);
    for (std::size_t n : {20u, 50u, 100u}) {
      const auto pair = ope::gaussian_hard_pair(inst, n);
      EXPECT_LE(ope::gaussian_pair_divergence(inst, pair), 1.0 / static_cast<double>(n) + 1e-15);
      EXPECT_NO_THROW(pair.member(inst, 1).validate());
    }
  }
  auto quiet = ope::instance_5x3();
  quiet.noise_sd.setZero();
  EXPECT_THROW(ope::gaussian_hard_pair(quiet, 10), ope::ComputationError);
}

TEST(BernoulliPrior, HalfBaselineAndFeasible) {
  const auto inst = ope::instance_5x3();
  for (std::size_t n : {20u, 50u, 100u}) {
    const auto prior = ope::bernoulli_hard_prior(inst, 1.0, n);
    EXPECT_TRUE((prior.theta_2.array() == 0.5).all());
    EXPECT_LE(prior.theta_1.maxCoeff(), 1.0);
    EXPECT_LE(ope::bernoulli_prior_divergence_bound(inst, prior),
              1.0 / static_cast<double>(n) + 1e-15);
  }
  EXPECT_THROW(ope::bernoulli_hard_prior(inst, 0.0, 10), ope::ComputationError);
  const auto prior = ope::bernoulli_hard_prior(inst, 1.0, 50);
  auto engine = ope::make_engine(4);
  const auto eta = ope::sample_bernoulli_means(inst, prior, 1, engine);
  for (Eigen::Index j = 0; j < eta.size(); ++j) {
    EXPECT_TRUE(eta.data()[j] == 0.0 || eta.data()[j] == 1.0);
  }
}

TEST(KlBound, Examples) {
  const auto same = ope::kl_bernoulli_bound(0.3, 0.3);
  EXPECT_EQ(same.kl, 0.0);
  EXPECT_EQ(same.bound, 0.0);
  const auto k = ope::kl_bernoulli_bound(0.75, 0.5);
  EXPECT_NEAR(k.kl, 0.75 * std::log(1.5) + 0.25 * std::log(0.5), 1e-15);
  EXPECT_DOUBLE_EQ(k.bound, 0.25);
  EXPECT_LE(k.kl, k.bound);
  EXPECT_THROW(ope::kl_bernoulli_bound(0.0, 0.5), ope::ValidationError);
  EXPECT_THROW(ope::kl_bernoulli_bound(0.5, 1.0), ope::ValidationError);
}

TEST(KlBound, RandomPairs) {
  std::mt19937_64 g(17);
  std::uniform_real_distribution<double> u(1e-9, 1.0 - 1e-9);
  for (int t = 0; t < 2000; ++t) {
    const auto k = ope::kl_bernoulli_bound(u(g), u(g));
    EXPECT_LE(k.kl, k.bound * (1.0 + 1e-12) + 1e-15);
  }
}

TEST(DrClosedForm, MatchesEnumeration) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto inst = oracle::random_instance(100 + s, 3, 4);
    std::mt19937_64 g(s);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Table model(3, 4);
    for (Eigen::Index j = 0; j < model.size(); ++j) {
      model.data()[j] = u(g);
    }
    for (const Table& m : {Table(Table::Zero(3, 4)), model}) {
      const double cf = ope::dr_closed_form_mse(inst, m, 37);
      EXPECT_NEAR(cf, oracle::dr_mse_by_enumeration(inst, m, 37), 1e-12 * cf);
    }
  }
}

TEST(SwitchBound, ReducesToUnbiasedTermAboveMaxWeight) {
  const auto inst = ope::instance_5x3();
  const Table model = ope::instance_5x3_model();
  const double tau = inst.weights().maxCoeff();
  const double expected = static_cast<double>(oracle::cell_sum(inst, [&](auto m, auto a, long double rho, long double) {
    const long double s = inst.noise_sd(m, a);
    const long double r = inst.reward_cap(m, a);
    return (s * s + r * r) * rho * rho;
  }));
  EXPECT_NEAR(ope::switch_mse_bound(inst, model, tau, 10), 0.2 * expected, 1e-14);
  // tau below every weight: everything is imputed.
  double bias = 0.0;
  for (Eigen::Index m = 0; m < 5; ++m) {
    for (Eigen::Index a = 0; a < 3; ++a) {
      bias += inst.context_probs(m) * inst.target(m, a) * (model(m, a) - inst.mean_reward(m, a));
    }
  }
  EXPECT_NEAR(ope::switch_mse_bound(inst, model, 0.0, 10), 0.2 + bias * bias, 1e-14);
  Table bad = model;
  bad(0, 0) = 1.5;
  EXPECT_THROW(ope::switch_mse_bound(inst, bad, 1.0, 10), ope::ValidationError);
}

TEST(EmpiricalMse, ZeroForExactEstimators) {
  const auto inst = ope::instance_5x3();
  const double truth = ope::policy_value_exact(inst, ope::WhichPolicy::target);
  const auto r = ope::empirical_mse([&](const ope::BanditLog&) { return truth; }, inst, 10, 50, 1);
  EXPECT_EQ(r.mse, 0.0);

  auto one = uniform_instance(1, 3, 0.0, 1.0);
  const auto pi = one.target_policy();
  const auto ips =
      ope::empirical_mse([&](const ope::BanditLog& log) { return ope::ips(log, pi).value; }, one,
                         5, 50, 2);
  EXPECT_NEAR(ips.mse, 0.0, 1e-30);
}

TEST(EmpiricalMse, RepeatableAndWorkerInvariant) {
  const auto inst = ope::instance_4x3();
  const auto pi = inst.target_policy();
  auto est = [&](const ope::BanditLog& log) { return ope::ips(log, pi).value; };
  const auto a = ope::empirical_mse(est, inst, 20, 400, 9, 1);
  const auto b = ope::empirical_mse(est, inst, 20, 400, 9, 4);
  EXPECT_EQ(a.mse, b.mse);
  EXPECT_EQ(a.std_err, b.std_err);
  EXPECT_EQ(a.mean_estimate, b.mean_estimate);
  EXPECT_EQ(ope::dr_closed_form_mse(inst, ope::instance_5x3_model().topRows(4), 20),
            ope::dr_closed_form_mse(inst, ope::instance_5x3_model().topRows(4), 20));
  EXPECT_THROW(ope::empirical_mse(est, inst, 20, 1, 9), ope::ValidationError);
}

TEST(EmpiricalMeanModel, ClippedAndZeroWhenUnseen) {
  auto inst = uniform_instance(2, 2, 3.0, 1.0);
  inst.logging << 1.0, 0.0, 0.5, 0.5;
  inst.target = inst.logging;
  auto engine = ope::make_engine(5);
  const auto log = ope::simulate_instance_log(inst, 400, engine);
  const auto model = ope::empirical_mean_model(log, inst);
  EXPECT_EQ(model(0, 1), 0.0);
  EXPECT_GE(model.minCoeff(), 0.0);
  EXPECT_LE(model.maxCoeff(), 1.0);
}

TEST(InstanceGrid, SpansLoggingSupport) {
  const auto inst = ope::instance_5x3();
  const auto grid = ope::instance_threshold_grid(inst);
  ASSERT_EQ(grid.size(), 21u);
  const Table rho = inst.weights();
  double lo = 1e300;
  for (Eigen::Index j = 0; j < rho.size(); ++j) {
    if (rho.data()[j] > 0.0) {
      lo = std::min(lo, rho.data()[j]);
    }
  }
  EXPECT_EQ(grid.front(), lo);
  EXPECT_EQ(grid.back(), rho.maxCoeff());
}

}  // namespace
