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

#ifndef OPE_THEORY_SUITE_HPP
#define OPE_THEORY_SUITE_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ope/estimators.hpp"
#include "ope/instances.hpp"
#include "ope/theory_check.hpp"

// Batch of closed-form versus Monte-Carlo checks on a shipped instance,
// serialized as the theory-check report.

namespace ope {

struct TheoryCheckConfig {
  std::string instance = "5x3";
  std::size_t n = 20;
  std::vector<std::size_t> sandwich_sizes = {20, 50, 100};
  std::size_t replicates = 20000;
  std::uint64_t seed = 0;
  std::size_t grid_size = 21;
  std::size_t kl_pairs = 10000;
  std::size_t workers = default_workers();
};

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Informational entries report values without a pass/fail meaning.
  bool informational = false;
  double slack = 0.0;
  std::vector<std::pair<std::string, double>> values;
};

struct TheoryReport {
  std::string instance;
  std::vector<CheckResult> checks;

  bool all_passed() const {
    for (const auto& c : checks) {
      if (!c.passed) {
        return false;
      }
    }
    return true;
  }
};

/// Reward table used for DR checks on a shipped instance.
inline Table reference_model(const std::string& instance_name, const FiniteInstance& inst) {
  if (instance_name == "5x3") {
    return instance_5x3_model();
  }
  return Table::Constant(inst.logging.rows(), inst.logging.cols(), 0.5).cwiseMin(inst.reward_cap);
}

inline TheoryReport run_theory_checks(const TheoryCheckConfig& cfg) {
  const auto inst = shipped_instance(cfg.instance);
  const auto target = inst.target_policy();
  const Table model = reference_model(cfg.instance, inst);
  const Table zero = Table::Zero(inst.logging.rows(), inst.logging.cols());
  TheoryReport report;
  report.instance = cfg.instance;
  auto seed_for = [&](std::uint64_t tag) { return derive_seed(cfg.seed, {tag}); };

  // Closed-form risk of IPS and DR, and unbiasedness of both.
  {
    const auto dr_model = RewardModel::tabular(model);
    const auto mc = empirical_mse_many(
        [&](const BanditLog& log) {
          return std::vector<double>{ips(log, target).value, dr(log, target, dr_model).value};
        },
        inst, cfg.n, cfg.replicates, seed_for(1), cfg.workers);
    const std::pair<const char*, const Table*> cases[2] = {{"ips", &zero}, {"dr", &model}};
    for (std::size_t j = 0; j < 2; ++j) {
      const double closed = dr_closed_form_mse(inst, *cases[j].second, cfg.n);
      const double rel = std::abs(mc[j].mse - closed) / closed;
      CheckResult c;
      c.name = std::string(cases[j].first) + "_closed_form_mse";
      c.slack = std::max(0.05 * closed, 3.0 * mc[j].std_err) - std::abs(mc[j].mse - closed);
      c.passed = c.slack >= 0.0;
      c.values = {{"closed_form", closed}, {"empirical", mc[j].mse},
                  {"std_err", mc[j].std_err}, {"relative_error", rel}};
      report.checks.push_back(c);

      CheckResult u;
      u.name = std::string(cases[j].first) + "_unbiased";
      const double gap = std::abs(mc[j].mean_estimate - mc[j].truth);
      u.slack = 4.0 * mc[j].mean_std_err - gap;
      u.passed = u.slack >= 0.0;
      u.values = {{"truth", mc[j].truth}, {"mean_estimate", mc[j].mean_estimate},
                  {"std_err", mc[j].mean_std_err}};
      report.checks.push_back(u);
    }
  }

  // Upper bound for SWITCH at every grid threshold.
  {
    const auto grid = instance_threshold_grid(inst, cfg.grid_size);
    const auto rmodel = RewardModel::tabular(model);
    const auto mc = empirical_mse_many(
        [&](const BanditLog& log) {
          const auto w = weigh(log, target);
          const auto table = tabulate(log, rmodel);
          std::vector<double> out;
          out.reserve(grid.size());
          for (const double tau : grid) {
            out.push_back(switch_estimate(w, table, tau).value);
          }
          return out;
        },
        inst, cfg.n, cfg.replicates, seed_for(2), cfg.workers);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const double bound = switch_mse_bound(inst, model, grid[j], cfg.n);
      CheckResult c;
      c.name = "switch_mse_bound[" + std::to_string(j) + "]";
      c.slack = bound + 3.0 * mc[j].std_err - mc[j].mse;
      c.passed = c.slack >= 0.0;
      c.values = {{"tau", grid[j]}, {"bound", bound}, {"empirical", mc[j].mse},
                  {"std_err", mc[j].std_err}};
      report.checks.push_back(c);
    }
  }

  // Lower bounds against achievable risks on the Gaussian hard pair.
  for (const std::size_t n : cfg.sandwich_sizes) {
    const auto pair = gaussian_hard_pair(inst, n);
    const Table midpoint = 0.5 * (pair.eta_1 + pair.eta_2);
    const double lb = minimax_lower_bound(inst, 0.0, n).value;
    const double lb1 = lb_sigma_expr(inst, n);
    double worst[3] = {0.0, 0.0, 0.0};
    double worst_se[3] = {0.0, 0.0, 0.0};
    for (int member = 1; member <= 2; ++member) {
      const auto hard = pair.member(inst, member);
      const auto mc = empirical_mse_many(
          [&](const BanditLog& log) {
            const auto w = weigh(log, target);
            const auto mid = tabulate(log, RewardModel::tabular(midpoint, hard.reward_cap));
            const auto fitted =
                tabulate(log, RewardModel::tabular(empirical_mean_model(log, hard), hard.reward_cap));
            return std::vector<double>{ips(w).value, dr(w, mid).value, dm(w, fitted).value};
          },
          hard, n, cfg.replicates, seed_for(100 + 10 * n + static_cast<std::uint64_t>(member)),
          cfg.workers);
      for (std::size_t e = 0; e < 3; ++e) {
        if (mc[e].mse >= worst[e]) {
          worst[e] = mc[e].mse;
          worst_se[e] = mc[e].std_err;
        }
      }
    }
    const char* names[3] = {"ips", "dr", "dm"};
    for (std::size_t e = 0; e < 3; ++e) {
      CheckResult c;
      c.name = std::string("minimax_lower_bound_vs_") + names[e] + "[n=" + std::to_string(n) + "]";
      c.slack = worst[e] + 3.0 * worst_se[e] - lb;
      c.passed = c.slack >= 0.0;
      c.values = {{"lower_bound", lb}, {"worst_empirical", worst[e]}, {"std_err", worst_se[e]}};
      report.checks.push_back(c);
    }
    CheckResult s;
    s.name = "lb_sigma_vs_ips[n=" + std::to_string(n) + "]";
    s.slack = worst[0] + 3.0 * worst_se[0] - lb1;
    s.passed = s.slack >= 0.0;
    s.values = {{"lower_bound", lb1}, {"worst_empirical", worst[0]}, {"std_err", worst_se[0]}};
    report.checks.push_back(s);

    CheckResult g;
    g.name = "gaussian_pair_feasibility[n=" + std::to_string(n) + "]";
    const double div = gaussian_pair_divergence(inst, pair);
    bool in_range = true;
    for (Eigen::Index i = 0; i < pair.delta.size(); ++i) {
      const double d = pair.delta.data()[i];
      in_range = in_range && d >= 0.0 && d <= inst.reward_cap.data()[i];
    }
    g.slack = 1.0 / static_cast<double>(n) - div;
    g.passed = in_range && g.slack >= -1e-15;
    g.values = {{"divergence", div}, {"limit", 1.0 / static_cast<double>(n)},
                {"alpha", pair.alpha}};
    report.checks.push_back(g);

    CheckResult b;
    b.name = "bernoulli_prior_feasibility[n=" + std::to_string(n) + "]";
    const auto prior = bernoulli_hard_prior(inst, 1.0, n);
    const double bdiv = bernoulli_prior_divergence_bound(inst, prior);
    b.slack = 1.0 / static_cast<double>(n) - bdiv;
    b.passed = prior.delta.maxCoeff() <= 0.5 && prior.delta.minCoeff() >= 0.0 && b.slack >= -1e-15;
    b.values = {{"divergence_bound", bdiv}, {"limit", 1.0 / static_cast<double>(n)},
                {"alpha", prior.alpha}};
    report.checks.push_back(b);
  }

  // Bernoulli KL bound on random pairs.
  {
    auto engine = make_engine(seed_for(3));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = std::numeric_limits<double>::infinity();
    std::size_t drawn = 0;
    while (drawn < cfg.kl_pairs) {
      const double p = u(engine);
      const double q = u(engine);
      if (p <= 0.0 || q <= 0.0) {
        continue;
      }
      const auto kl = kl_bernoulli_bound(p, q);
      worst = std::min(worst, kl.bound - kl.kl);
      ++drawn;
    }
    CheckResult c;
    c.name = "kl_bernoulli_bound";
    c.slack = worst;
    c.passed = worst >= 0.0;
    c.values = {{"pairs", static_cast<double>(cfg.kl_pairs)}, {"min_gap", worst}};
    report.checks.push_back(c);
  }

  // Constants reported for reference.
  {
    const auto lb = minimax_lower_bound(inst, 0.0, cfg.n);
    CheckResult c;
    c.name = "c_gamma_and_preconditions";
    c.informational = true;
    c.passed = true;
    c.values = {{"c_gamma", lb.c_gamma},
                {"required_n", lb.required_n},
                {"preconditions_met", lb.preconditions_met ? 1.0 : 0.0},
                {"lb_rmax_gamma1", lb_rmax_expr(inst, 1.0, cfg.n)}};
    report.checks.push_back(c);
  }
  return report;
}

inline nlohmann::ordered_json to_json(const TheoryReport& report) {
  nlohmann::ordered_json j;
  j["instance"] = report.instance;
  j["all_passed"] = report.all_passed();
  auto& arr = j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : report.checks) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["passed"] = c.passed;
    if (c.informational) {
      e["informational"] = true;
    }
    e["slack"] = c.slack;
    auto& v = e["values"] = nlohmann::ordered_json::object();
    for (const auto& [k, x] : c.values) {
      v[k] = x;
    }
    arr.push_back(std::move(e));
  }
  return j;
}

}  // namespace ope

#endif  // OPE_THEORY_SUITE_HPP
