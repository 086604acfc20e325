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

// Reference implementations used only by the tests. They are written
// directly from the estimator and risk definitions, record by record and cell
// by cell, without the library's cached views, so agreement is evidence
// rather than tautology.

#ifndef OPE_TESTS_ORACLES_HPP
#define OPE_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ope/core.hpp"

namespace oracle {

using Model = std::function<double(const std::vector<double>&, std::size_t)>;

struct Log {
  std::vector<std::vector<double>> x;
  std::vector<std::size_t> a;
  std::vector<double> r;
  std::vector<std::vector<double>> mu;  // full logging distributions
  std::vector<std::vector<double>> pi;  // target distributions
};

inline Log from(const ope::BanditLog& log, const ope::PolicyFn& target) {
  Log out;
  for (const auto& rec : log.records()) {
    out.x.push_back(rec.features);
    out.a.push_back(rec.action);
    out.r.push_back(rec.reward);
    out.mu.push_back(rec.logging_dist);
    out.pi.push_back(target(rec.features));
  }
  return out;
}

inline long double ips(const Log& l) {
  long double s = 0;
  for (std::size_t i = 0; i < l.a.size(); ++i) {
    s += static_cast<long double>(l.pi[i][l.a[i]]) / l.mu[i][l.a[i]] * l.r[i];
  }
  return s / l.a.size();
}

inline long double dm(const Log& l, const Model& m) {
  long double s = 0;
  for (std::size_t i = 0; i < l.a.size(); ++i) {
    for (std::size_t b = 0; b < l.pi[i].size(); ++b) {
      s += l.pi[i][b] * m(l.x[i], b);
    }
  }
  return s / l.a.size();
}

inline long double dr(const Log& l, const Model& m) {
  long double s = 0;
  for (std::size_t i = 0; i < l.a.size(); ++i) {
    const double rho = l.pi[i][l.a[i]] / l.mu[i][l.a[i]];
    s += rho * (l.r[i] - m(l.x[i], l.a[i]));
    for (std::size_t b = 0; b < l.pi[i].size(); ++b) {
      s += l.pi[i][b] * m(l.x[i], b);
    }
  }
  return s / l.a.size();
}

/// SWITCH with `dr_model` inside the unbiased part (zero model gives SWITCH).
inline long double switch_dr(const Log& l, const Model& dr_model, const Model& impute, double tau) {
  long double s = 0;
  for (std::size_t i = 0; i < l.a.size(); ++i) {
    const double rho_i = l.pi[i][l.a[i]] / l.mu[i][l.a[i]];
    if (rho_i <= tau) {
      s += rho_i * (l.r[i] - dr_model(l.x[i], l.a[i]));
    }
    for (std::size_t b = 0; b < l.pi[i].size(); ++b) {
      if (l.mu[i][b] == 0.0) {
        continue;
      }
      const double rho = l.pi[i][b] / l.mu[i][b];
      s += l.pi[i][b] * (rho <= tau ? dr_model(l.x[i], b) : impute(l.x[i], b));
    }
  }
  return s / l.a.size();
}

/// Exact MSE of one-sample-averaged DR: Var(Y)/n with
/// Y = rho (r - rhat) + sum_b pi rhat, enumerated over (m, a) and adding the
/// reward noise variance rho^2 sigma^2 per cell.
inline double dr_mse_by_enumeration(const ope::FiniteInstance& inst, const ope::Table& rhat,
                                    std::size_t n) {
  long double ey = 0;
  long double ey2 = 0;
  for (Eigen::Index m = 0; m < inst.logging.rows(); ++m) {
    long double direct = 0;
    for (Eigen::Index b = 0; b < inst.logging.cols(); ++b) {
      direct += inst.target(m, b) * rhat(m, b);
    }
    for (Eigen::Index a = 0; a < inst.logging.cols(); ++a) {
      const long double p = inst.context_probs(m) * inst.logging(m, a);
      if (p == 0) {
        continue;
      }
      const long double rho = inst.target(m, a) / inst.logging(m, a);
      const long double mean_y = rho * (inst.mean_reward(m, a) - rhat(m, a)) + direct;
      const long double var_y = rho * rho * inst.noise_sd(m, a) * inst.noise_sd(m, a);
      ey += p * mean_y;
      ey2 += p * (var_y + mean_y * mean_y);
    }
  }
  return static_cast<double>((ey2 - ey * ey) / n);
}

/// E over cells of lambda mu f via a flat list of cells.
template <class F>
long double cell_sum(const ope::FiniteInstance& inst, F f) {
  long double s = 0;
  for (Eigen::Index m = 0; m < inst.logging.rows(); ++m) {
    for (Eigen::Index a = 0; a < inst.logging.cols(); ++a) {
      const long double p = inst.context_probs(m) * inst.logging(m, a);
      if (p > 0) {
        const long double rho = inst.target(m, a) / inst.logging(m, a);
        s += p * f(m, a, rho, p);
      }
    }
  }
  return s;
}

inline double c_gamma_by_enumeration(const ope::FiniteInstance& inst, double gamma, double eps) {
  const long double p = 2.0L + eps;
  const auto s_hi = cell_sum(inst, [&](auto m, auto a, long double rho, long double) {
    return std::pow(rho * inst.noise_sd(m, a), p);
  });
  const auto s_lo = cell_sum(inst, [&](auto m, auto a, long double rho, long double) {
    return std::pow(rho * inst.noise_sd(m, a), 2.0L);
  });
  const auto r_hi = cell_sum(inst, [&](auto m, auto a, long double rho, long double mass) {
    return mass <= gamma ? std::pow(rho * inst.reward_cap(m, a), p) : 0.0L;
  });
  const auto r_lo = cell_sum(inst, [&](auto m, auto a, long double rho, long double mass) {
    return mass <= gamma ? std::pow(rho * inst.reward_cap(m, a), 2.0L) : 0.0L;
  });
  auto ratio = [&](long double num, long double den) {
    return num == 0 && den == 0 ? 0.0L : num / std::pow(den, p);
  };
  return static_cast<double>(std::pow(2.0L, p) *
                             std::max(ratio(s_hi * s_hi, s_lo), ratio(r_hi * r_hi, r_lo)));
}

/// Random finite instance with strictly positive logging and R_max = 1.
inline ope::FiniteInstance random_instance(std::uint64_t seed, Eigen::Index contexts,
                                           Eigen::Index actions, double sd = 0.5) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  ope::FiniteInstance inst;
  inst.context_probs.resize(contexts);
  for (Eigen::Index m = 0; m < contexts; ++m) {
    inst.context_probs(m) = u(g);
  }
  inst.context_probs /= inst.context_probs.sum();
  auto normalize_rows = [](ope::Table t) {
    for (Eigen::Index m = 0; m < t.rows(); ++m) {
      t.row(m) /= t.row(m).sum();
    }
    return t;
  };
  ope::Table lg(contexts, actions);
  ope::Table tg(contexts, actions);
  ope::Table mr(contexts, actions);
  for (Eigen::Index m = 0; m < contexts; ++m) {
    for (Eigen::Index a = 0; a < actions; ++a) {
      lg(m, a) = u(g);
      tg(m, a) = u(g) * u(g) * u(g);
      mr(m, a) = u(g) - 0.05;
    }
  }
  inst.logging = normalize_rows(lg);
  inst.target = normalize_rows(tg);
  inst.mean_reward = mr;
  inst.noise_sd = ope::Table::Constant(contexts, actions, sd);
  inst.reward_cap = ope::Table::Ones(contexts, actions);
  inst.validate();
  return inst;
}

}  // namespace oracle

#endif  // OPE_TESTS_ORACLES_HPP
