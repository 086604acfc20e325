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

#include <random>
#include <vector>

#include "ope/tuning.hpp"
#include "support/fixtures.hpp"

namespace {

ope::LogRecord rec(double ctx, std::size_t a, double r, std::vector<double> dist) {
  ope::LogRecord out;
  out.features = {ctx};
  out.action = a;
  out.reward = r;
  out.logging_prob = dist[a];
  out.logging_dist = std::move(dist);
  return out;
}

struct Small {
  ope::WeightedLog w;
  ope::Table caps;
};

// Two contexts, two actions; logged weights (4, 0, 1).
Small small_log() {
  ope::Table target(2, 2);
  target << 1.0, 0.0, 0.5, 0.5;
  ope::BanditLog log({rec(0, 0, 1.0, {0.25, 0.75}), rec(0, 1, 0.0, {0.25, 0.75}),
                      rec(1, 1, 1.0, {0.5, 0.5})},
                     2);
  auto w = ope::weigh(log, ope::PolicyFn::tabular(target));
  return {w, ope::Table::Ones(3, 2)};
}

TEST(VarHat, SpreadOverNSquared) {
  const std::vector<double> y = {1.0, 2.0, 3.0, 6.0};
  // mean 3, squared deviations 4 + 1 + 0 + 9 = 14, over 16
  EXPECT_DOUBLE_EQ(ope::var_hat(y), 0.875);
  const std::vector<double> flat = {0.5, 0.5, 0.5};
  EXPECT_EQ(ope::var_hat(flat), 0.0);
}

TEST(BiasBound, ImputedTargetMassSquared) {
  const auto s = small_log();
  // tau = 2: records 0 and 1 each put target mass 1 on action 0 (rho 4).
  EXPECT_DOUBLE_EQ(ope::bias_bound_sq(s.w, s.caps, 2.0), 4.0 / 9.0);
  EXPECT_EQ(ope::bias_bound_sq(s.w, s.caps, 4.0), 0.0);
  // tau = 0.5: every positive-mass action is imputed: (1 + 1 + 1) / 3.
  EXPECT_DOUBLE_EQ(ope::bias_bound_sq(s.w, s.caps, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(ope::bias_bound_sq(s.w, 0.5 * s.caps, 2.0), 1.0 / 9.0);
}

TEST(SelectTau, ArgminOfObjectiveOnRandomLogs) {
  for (int s = 0; s < 300; ++s) {
    const auto c = fixture::random_case(300 + static_cast<std::uint64_t>(s));
    const auto w = ope::weigh(c.log, c.target);
    const auto rhat = ope::tabulate(c.log, c.model);
    const ope::Table caps = ope::Table::Ones(rhat.rows(), rhat.cols());
    const auto grid = ope::threshold_grid(w);
    const auto trace = ope::select_tau(w, nullptr, rhat, caps, grid);
    ASSERT_EQ(trace.objective.size(), grid.size());
    std::size_t best = 0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double v = ope::var_hat(w, rhat, grid[j]);
      const double b = ope::bias_bound_sq(w, caps, grid[j]);
      EXPECT_EQ(trace.objective[j], v + b);
      if (v + b < trace.objective[best]) {
        best = j;
      }
    }
    EXPECT_EQ(trace.chosen_index, best);
    EXPECT_LE(trace.chosen_objective(), trace.objective.front());
    EXPECT_LE(trace.chosen_objective(), trace.objective.back());

    const auto report = ope::switch_auto(w, rhat, caps, grid);
    EXPECT_EQ(report.value, ope::switch_estimate(w, rhat, trace.chosen_tau()).value);
    EXPECT_EQ(*report.tau, trace.chosen_tau());
    EXPECT_EQ(*report.var_hat, trace.var_hats[best]);
  }
}

TEST(SelectTau, TiesGoToSmallestThreshold) {
  const auto s = small_log();
  const ope::Table rhat = ope::Table::Constant(3, 2, 0.5);
  // Every weight is at most 4, so all candidates keep the whole log unbiased.
  const std::vector<double> taus = {5.0, 6.0, 7.0};
  const auto trace = ope::select_tau(s.w, nullptr, rhat, s.caps, taus);
  EXPECT_EQ(trace.objective[0], trace.objective[2]);
  EXPECT_EQ(trace.chosen_index, 0u);
}

TEST(SelectTau, RejectsBadCandidateLists) {
  const auto s = small_log();
  const ope::Table rhat = ope::Table::Zero(3, 2);
  const std::vector<double> none;
  const std::vector<double> unsorted = {2.0, 1.0};
  EXPECT_THROW(ope::select_tau(s.w, nullptr, rhat, s.caps, none), ope::ValidationError);
  EXPECT_THROW(ope::select_tau(s.w, nullptr, rhat, s.caps, unsorted), ope::ValidationError);
}

TEST(SelectTauTrun, HandComputedObjective) {
  const auto s = small_log();
  const std::vector<double> taus = {2.0};
  const auto trace = ope::select_tau_trun(s.w, s.caps, taus);
  // Capped weights (2, 0, 1), rewards (1, 0, 1): estimate 1 and zero spread.
  EXPECT_EQ(trace.var_hats[0], 0.0);
  // Removed mass: records 0 and 1 lose (1 - 2/4) on action 0.
  EXPECT_DOUBLE_EQ(trace.bias_bounds_sq[0], 1.0 / 9.0);
  const auto r = ope::trun_ips_auto(s.w, s.caps, taus);
  EXPECT_DOUBLE_EQ(r.value, 1.0);
}

TEST(Simplex, ProjectionKnownPoints) {
  Eigen::VectorXd a(2);
  a << 2.0, 0.0;
  EXPECT_EQ(ope::project_to_simplex(a), Eigen::Vector2d(1.0, 0.0));
  Eigen::VectorXd b(3);
  b << 0.3, 0.3, 0.3;
  const auto pb = ope::project_to_simplex(b);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(pb(j), 1.0 / 3.0, 1e-15);
  }
  Eigen::VectorXd c(3);
  c << 0.5, -1.0, 0.5;
  const auto pc = ope::project_to_simplex(c);
  EXPECT_NEAR(pc(0), 0.5, 1e-15);
  EXPECT_EQ(pc(1), 0.0);
}

TEST(Simplex, ProjectionIsNearestPoint) {
  std::mt19937_64 g(42);
  std::normal_distribution<double> z(0.0, 2.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const int d = 2 + t % 6;
    Eigen::VectorXd v(d);
    for (int j = 0; j < d; ++j) {
      v(j) = z(g);
    }
    const auto p = ope::project_to_simplex(v);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_GE(p.minCoeff(), 0.0);
    for (int probe = 0; probe < 20; ++probe) {
      Eigen::VectorXd q(d);
      for (int j = 0; j < d; ++j) {
        q(j) = -std::log(u(g) + 1e-300);
      }
      q /= q.sum();
      EXPECT_LE((p - v).norm(), (q - v).norm() + 1e-12);
    }
  }
}

TEST(Magic, NeverWorseThanBestVertex) {
  for (int s = 0; s < 100; ++s) {
    const auto c = fixture::random_case(700 + static_cast<std::uint64_t>(s), 30);
    const auto w = ope::weigh(c.log, c.target);
    const auto rhat = ope::tabulate(c.log, c.model);
    const auto grid = ope::threshold_grid(w, 8);
    const auto m = ope::magic_combine(w, rhat, grid);
    double best_vertex = m.quadratic(0, 0);
    for (Eigen::Index j = 0; j < m.quadratic.rows(); ++j) {
      best_vertex = std::min(best_vertex, m.quadratic(j, j));
      EXPECT_EQ(m.candidate_values[static_cast<std::size_t>(j)],
                ope::switch_estimate(w, rhat, grid[static_cast<std::size_t>(j)]).value);
    }
    EXPECT_LE(m.objective, best_vertex);
    double total = 0.0;
    double value = 0.0;
    for (std::size_t j = 0; j < m.weights.size(); ++j) {
      EXPECT_GE(m.weights[j], 0.0);
      total += m.weights[j];
      value += m.weights[j] * m.candidate_values[j];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(m.report.value, value, 1e-12);
    Eigen::VectorXd wv = Eigen::Map<const Eigen::VectorXd>(m.weights.data(),
                                                           static_cast<Eigen::Index>(m.weights.size()));
    EXPECT_NEAR(ope::quadratic_objective(m.quadratic, wv), m.objective, 1e-12);
  }
}

TEST(Magic, SingleCandidateIsThatSwitchEstimate) {
  const auto s = small_log();
  const ope::Table rhat = ope::Table::Constant(3, 2, 0.5);
  const std::vector<double> taus = {2.0};
  const auto m = ope::magic_combine(s.w, rhat, taus);
  EXPECT_EQ(m.weights, std::vector<double>{1.0});
  EXPECT_EQ(m.report.value, ope::switch_estimate(s.w, rhat, 2.0).value);
}

}  // namespace
