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

#ifndef OPE_THEORY_CHECK_HPP
#define OPE_THEORY_CHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ope/core.hpp"
#include "ope/errors.hpp"
#include "ope/rng.hpp"

/**
 * \file
 * \brief Closed-form risk expressions, minimax lower bounds and adversarial
 * reward constructions on finite instances, plus the Monte-Carlo MSE oracle
 * that checks them.
 *
 * Notation: E_mu[f] sums f(m, a) lambda(m) mu(a|m) over all cells and E_pi[f]
 * sums f(m, a) lambda(m) pi(a|m). xi_gamma(m, a) = 1(lambda(m) mu(a|m) <= gamma).
 * Every ratio uses 0/0 = 0. Finite instances make each (context, action)
 * its own partition cell, so the discretized lower bound is evaluated with
 * delta = 0 (R_hat = R_max, rho_hat = rho, gamma' = gamma).
 */

namespace ope {

/// sum over cells of lambda mu f(m, a)
template <class F>
double expect_logging(const FiniteInstance& inst, F&& f) {
  double total = 0.0;
  for (Eigen::Index m = 0; m < inst.logging.rows(); ++m) {
    double inner = 0.0;
    for (Eigen::Index a = 0; a < inst.logging.cols(); ++a) {
      const double p = inst.logging(m, a);
      if (p != 0.0) {
        inner += p * f(m, a);
      }
    }
    total += inst.context_probs(m) * inner;
  }
  return total;
}

/// sum over cells of lambda pi f(m, a)
template <class F>
double expect_target(const FiniteInstance& inst, F&& f) {
  double total = 0.0;
  for (Eigen::Index m = 0; m < inst.target.rows(); ++m) {
    double inner = 0.0;
    for (Eigen::Index a = 0; a < inst.target.cols(); ++a) {
      const double p = inst.target(m, a);
      if (p != 0.0) {
        inner += p * f(m, a);
      }
    }
    total += inst.context_probs(m) * inner;
  }
  return total;
}

inline double ratio_or_zero(double num, double den) { return num == 0.0 && den == 0.0 ? 0.0 : num / den; }

/// xi_gamma on every cell.
inline Table infrequent_indicator(const FiniteInstance& inst, double gamma) {
  const Table mass = inst.joint_logging_mass();
  return (mass.array() <= gamma).cast<double>().matrix();
}

/// gamma log(5 / gamma), taken as 0 at gamma = 0.
inline double gamma_log_term(double gamma) { return gamma == 0.0 ? 0.0 : gamma * std::log(5.0 / gamma); }

// ---------------------------------------------------------------------------
// Closed forms

/// Exact MSE of DR with a fixed model table (IPS when the table is zero):
/// (1/n)(E_mu[rho^2 sigma^2] + Var_x E_mu[rho r*|x] + E_x Var_mu[rho (rhat - r*)|x]).
inline double dr_closed_form_mse(const FiniteInstance& inst, const Table& model, std::size_t n) {
  if (n == 0) {
    throw ValidationError("dr_closed_form_mse: n must be positive");
  }
  const Table rho = inst.weights();
  const double noise = expect_logging(inst, [&](auto m, auto a) {
    const double s = rho(m, a) * inst.noise_sd(m, a);
    return s * s;
  });
  // Per-context conditional moments under a ~ mu(.|x).
  const auto contexts = inst.logging.rows();
  Eigen::VectorXd cond_mean_signal(contexts);
  double within = 0.0;
  for (Eigen::Index m = 0; m < contexts; ++m) {
    double mean_signal = 0.0;
    double mean_err = 0.0;
    double second_err = 0.0;
    for (Eigen::Index a = 0; a < inst.logging.cols(); ++a) {
      const double p = inst.logging(m, a);
      if (p == 0.0) {
        continue;
      }
      mean_signal += p * rho(m, a) * inst.mean_reward(m, a);
      const double err = rho(m, a) * (model(m, a) - inst.mean_reward(m, a));
      mean_err += p * err;
      second_err += p * err * err;
    }
    cond_mean_signal(m) = mean_signal;
    within += inst.context_probs(m) * std::max(0.0, second_err - mean_err * mean_err);
  }
  const double grand = inst.context_probs.dot(cond_mean_signal);
  double between = 0.0;
  for (Eigen::Index m = 0; m < contexts; ++m) {
    const double c = cond_mean_signal(m) - grand;
    between += inst.context_probs(m) * c * c;
  }
  return (noise + between + within) / static_cast<double>(n);
}

/// (2/n){E_mu[(sigma^2 + R^2) rho^2 1(rho <= tau)] + E_pi[R^2 1(rho > tau)]}
///   + E_pi[eps 1(rho > tau)]^2,  eps = model - r*.
inline double switch_mse_bound(const FiniteInstance& inst, const Table& model, double tau,
                               std::size_t n) {
  if (n == 0) {
    throw ValidationError("switch_mse_bound: n must be positive");
  }
  for (Eigen::Index m = 0; m < model.rows(); ++m) {
    for (Eigen::Index a = 0; a < model.cols(); ++a) {
      if (!(model(m, a) >= 0.0 && model(m, a) <= inst.reward_cap(m, a))) {
        throw ValidationError("switch_mse_bound: model must lie in [0, R_max]");
      }
    }
  }
  const Table rho = inst.weights();
  const double unbiased = expect_logging(inst, [&](auto m, auto a) {
    if (rho(m, a) > tau) {
      return 0.0;
    }
    const double s = inst.noise_sd(m, a);
    const double r = inst.reward_cap(m, a);
    return (s * s + r * r) * rho(m, a) * rho(m, a);
  });
  const double imputed = expect_target(inst, [&](auto m, auto a) {
    const double r = inst.reward_cap(m, a);
    return rho(m, a) > tau ? r * r : 0.0;
  });
  const double bias = expect_target(inst, [&](auto m, auto a) {
    return rho(m, a) > tau ? model(m, a) - inst.mean_reward(m, a) : 0.0;
  });
  return 2.0 / static_cast<double>(n) * (unbiased + imputed) + bias * bias;
}

/// 2^(2+eps) max{ E[(rho sigma)^(2+eps)]^2 / E[(rho sigma)^2]^(2+eps),
///               E[xi (rho R)^(2+eps)]^2 / E[xi (rho R)^2]^(2+eps) }
inline double c_gamma(const FiniteInstance& inst, double gamma, double epsilon_moment = 2.0) {
  if (!(gamma >= 0.0 && gamma <= 1.0) || !(epsilon_moment > 0.0)) {
    throw ValidationError("c_gamma: need gamma in [0, 1] and epsilon > 0");
  }
  const Table rho = inst.weights();
  const Table xi = infrequent_indicator(inst, gamma);
  const double p = 2.0 + epsilon_moment;
  const double s_hi = expect_logging(inst, [&](auto m, auto a) {
    return std::pow(rho(m, a) * inst.noise_sd(m, a), p);
  });
  const double s_lo = expect_logging(inst, [&](auto m, auto a) {
    const double v = rho(m, a) * inst.noise_sd(m, a);
    return v * v;
  });
  const double r_hi = expect_logging(inst, [&](auto m, auto a) {
    return xi(m, a) * std::pow(rho(m, a) * inst.reward_cap(m, a), p);
  });
  const double r_lo = expect_logging(inst, [&](auto m, auto a) {
    const double v = rho(m, a) * inst.reward_cap(m, a);
    return xi(m, a) * v * v;
  });
  const double first = ratio_or_zero(s_hi * s_hi, std::pow(s_lo, p));
  const double second = ratio_or_zero(r_hi * r_hi, std::pow(r_lo, p));
  return std::pow(2.0, p) * std::max(first, second);
}

struct LowerBound {
  double value = 0.0;
  /// n >= max{16 C^(1/eps), 2 C^(2/eps) E_mu[sigma^2 / R_max^2]}
  bool preconditions_met = false;
  double c_gamma = 0.0;
  double required_n = 0.0;
};

/// (E_mu[rho^2 sigma^2] + E_mu[xi rho^2 R^2](1 - 350 n gamma log(5/gamma))) / (700 n),
/// evaluated as written even when the bracket is negative.
inline LowerBound minimax_lower_bound(const FiniteInstance& inst, double gamma, std::size_t n,
                                      double epsilon_moment = 2.0) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ValidationError("minimax_lower_bound: gamma must lie in [0, 1]");
  }
  if (n == 0) {
    throw ValidationError("minimax_lower_bound: n must be positive");
  }
  const Table rho = inst.weights();
  const Table xi = infrequent_indicator(inst, gamma);
  const double nd = static_cast<double>(n);
  const double noise = expect_logging(inst, [&](auto m, auto a) {
    const double v = rho(m, a) * inst.noise_sd(m, a);
    return v * v;
  });
  const double range = expect_logging(inst, [&](auto m, auto a) {
    const double v = rho(m, a) * inst.reward_cap(m, a);
    return xi(m, a) * v * v;
  });
  LowerBound lb;
  lb.value = (noise + range * (1.0 - 350.0 * nd * gamma_log_term(gamma))) / (700.0 * nd);
  lb.c_gamma = c_gamma(inst, gamma, epsilon_moment);
  const double snr = expect_logging(inst, [&](auto m, auto a) {
    const double s = inst.noise_sd(m, a);
    const double r = inst.reward_cap(m, a);
    return ratio_or_zero(s * s, r * r);
  });
  lb.required_n = std::max(16.0 * std::pow(lb.c_gamma, 1.0 / epsilon_moment),
                           2.0 * std::pow(lb.c_gamma, 2.0 / epsilon_moment) * snr);
  lb.preconditions_met = nd >= lb.required_n;
  return lb;
}

/// Noise lower bound:
/// (S / (32 e n)) [1 - E_mu[rho^2 sigma^2 1(rho sigma^2 > R sqrt(n S / 2))] / S]^2,
/// S = E_mu[rho^2 sigma^2]; 0 when S = 0.
inline double lb_sigma_expr(const FiniteInstance& inst, std::size_t n) {
  const Table rho = inst.weights();
  const double nd = static_cast<double>(n);
  const double s = expect_logging(inst, [&](auto m, auto a) {
    const double v = rho(m, a) * inst.noise_sd(m, a);
    return v * v;
  });
  if (s == 0.0) {
    return 0.0;
  }
  const double threshold = std::sqrt(nd * s / 2.0);
  const double tail = expect_logging(inst, [&](auto m, auto a) {
    const double sd = inst.noise_sd(m, a);
    const double v = rho(m, a) * sd;
    return rho(m, a) * sd * sd > inst.reward_cap(m, a) * threshold ? v * v : 0.0;
  });
  const double bracket = 1.0 - tail / s;
  return s / (32.0 * std::numbers::e * nd) * bracket * bracket;
}

/// Range lower bound with delta = 0:
/// (T / (32 e n)) [1 - E_mu[xi rho^2 R^2 1(xi rho R > sqrt(n T / 16))] / T]^2
///   - gamma log(5/gamma) T,   T = E_mu[xi rho^2 R^2].
inline double lb_rmax_expr(const FiniteInstance& inst, double gamma, std::size_t n) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw ValidationError("lb_rmax_expr: gamma must lie in [0, 1]");
  }
  const Table rho = inst.weights();
  const Table xi = infrequent_indicator(inst, gamma);
  const double nd = static_cast<double>(n);
  const double t = expect_logging(inst, [&](auto m, auto a) {
    const double v = rho(m, a) * inst.reward_cap(m, a);
    return xi(m, a) * v * v;
  });
  if (t == 0.0) {
    return 0.0;
  }
  const double threshold = std::sqrt(nd * t / 16.0);
  const double tail = expect_logging(inst, [&](auto m, auto a) {
    const double v = xi(m, a) * rho(m, a) * inst.reward_cap(m, a);
    return v > threshold ? v * v : 0.0;
  });
  const double bracket = 1.0 - tail / t;
  return t / (32.0 * std::numbers::e * nd) * bracket * bracket - gamma_log_term(gamma) * t;
}

// ---------------------------------------------------------------------------
// Hard instances

struct HardPair {
  Table eta_1;
  Table eta_2;
  Table sigma;
  double alpha = 0.0;
  /// Delta table (equal to eta_1 in the Gaussian construction).
  Table delta;
  std::string description;

  /// The instance with mean rewards eta_1 (which = 1) or eta_2 (which = 2)
  /// and Gaussian noise sigma.
  FiniteInstance member(const FiniteInstance& base, int which) const {
    FiniteInstance out = base;
    out.mean_reward = which == 1 ? eta_1 : eta_2;
    out.noise_sd = sigma;
    out.noise = RewardNoise::gaussian;
    return out;
  }
};

/// alpha = sqrt(2 S / n), Delta = min{alpha sigma^2 rho / S, R_max},
/// eta_1 = Delta, eta_2 = 0, with S = E_mu[rho^2 sigma^2].
inline HardPair gaussian_hard_pair(const FiniteInstance& inst, std::size_t n) {
  const Table rho = inst.weights();
  const double s = expect_logging(inst, [&](auto m, auto a) {
    const double v = rho(m, a) * inst.noise_sd(m, a);
    return v * v;
  });
  if (!(s > 0.0)) {
    throw ComputationError("gaussian_hard_pair: E_mu[rho^2 sigma^2] is zero");
  }
  HardPair pair;
  pair.alpha = std::sqrt(2.0 * s / static_cast<double>(n));
  pair.sigma = inst.noise_sd;
  pair.delta.resize(rho.rows(), rho.cols());
  for (Eigen::Index m = 0; m < rho.rows(); ++m) {
    for (Eigen::Index a = 0; a < rho.cols(); ++a) {
      const double sd = inst.noise_sd(m, a);
      pair.delta(m, a) = std::min(pair.alpha * sd * sd * rho(m, a) / s, inst.reward_cap(m, a));
    }
  }
  pair.eta_1 = pair.delta;
  pair.eta_2 = Table::Zero(rho.rows(), rho.cols());
  pair.description = "gaussian: alpha=" + std::to_string(pair.alpha) + " S=" + std::to_string(s);
  return pair;
}

/// E_mu[Delta^2 / (2 sigma^2)], cells with sigma = 0 contributing 0/0 = 0.
inline double gaussian_pair_divergence(const FiniteInstance& inst, const HardPair& pair) {
  return expect_logging(inst, [&](auto m, auto a) {
    const double sd = inst.noise_sd(m, a);
    return ratio_or_zero(pair.delta(m, a) * pair.delta(m, a), 2.0 * sd * sd);
  });
}

struct BernoulliPrior {
  Table theta_1;
  Table theta_2;
  Table delta;
  Table xi;
  double alpha = 0.0;
};

/// theta_2 = 0.5, theta_1 = theta_2 + Delta with
/// Delta = min{xi rho R alpha / T, 0.5}, alpha = sqrt(4 T / n),
/// T = E_mu[xi rho^2 R^2].
inline BernoulliPrior bernoulli_hard_prior(const FiniteInstance& inst, double gamma,
                                           std::size_t n) {
  const Table rho = inst.weights();
  BernoulliPrior prior;
  prior.xi = infrequent_indicator(inst, gamma);
  const double t = expect_logging(inst, [&](auto m, auto a) {
    const double v = rho(m, a) * inst.reward_cap(m, a);
    return prior.xi(m, a) * v * v;
  });
  if (!(t > 0.0)) {
    throw ComputationError("bernoulli_hard_prior: E_mu[xi rho^2 R^2] is zero");
  }
  prior.alpha = std::sqrt(4.0 * t / static_cast<double>(n));
  prior.delta.resize(rho.rows(), rho.cols());
  for (Eigen::Index m = 0; m < rho.rows(); ++m) {
    for (Eigen::Index a = 0; a < rho.cols(); ++a) {
      prior.delta(m, a) = std::min(
          prior.xi(m, a) * rho(m, a) * inst.reward_cap(m, a) * prior.alpha / t, 0.5);
    }
  }
  prior.theta_2 = Table::Constant(rho.rows(), rho.cols(), 0.5);
  prior.theta_1 = prior.theta_2 + prior.delta;
  return prior;
}

/// (1/4) E_mu[xi Delta^2]
inline double bernoulli_prior_divergence_bound(const FiniteInstance& inst,
                                               const BernoulliPrior& prior) {
  return 0.25 * expect_logging(inst, [&](auto m, auto a) {
           return prior.xi(m, a) * prior.delta(m, a) * prior.delta(m, a);
         });
}

/// One mean-reward realization: eta(m, a) = xi R_max with probability
/// theta(m, a), else 0.
inline Table sample_bernoulli_means(const FiniteInstance& inst, const BernoulliPrior& prior,
                                    int which, Engine& engine) {
  const Table& theta = which == 1 ? prior.theta_1 : prior.theta_2;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Table eta(theta.rows(), theta.cols());
  for (Eigen::Index m = 0; m < theta.rows(); ++m) {
    for (Eigen::Index a = 0; a < theta.cols(); ++a) {
      eta(m, a) = uniform(engine) < theta(m, a) ? prior.xi(m, a) * inst.reward_cap(m, a) : 0.0;
    }
  }
  return eta;
}

struct KlBound {
  double kl = 0.0;
  double bound = 0.0;
};

/// KL(Ber(p) || Ber(q)) and the chi-square-type bound (p - q)^2 (1/q + 1/(1-q)).
inline KlBound kl_bernoulli_bound(double p, double q) {
  if (!(p > 0.0 && p < 1.0 && q > 0.0 && q < 1.0)) {
    throw ValidationError("kl_bernoulli_bound: p and q must lie in (0, 1)");
  }
  KlBound out;
  out.kl = p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  out.bound = (p - q) * (p - q) * (1.0 / q + 1.0 / (1.0 - q));
  return out;
}

// ---------------------------------------------------------------------------
// Monte-Carlo oracle

/// n i.i.d. records from the instance. Features are {context index}; every
/// record carries the full logging distribution of its context.
inline BanditLog simulate_instance_log(const FiniteInstance& inst, std::size_t n, Engine& engine) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto contexts = inst.context_probs.size();
  const auto k = inst.logging.cols();
  auto draw = [&](auto row_value, Eigen::Index count) {
    const double u = uniform(engine);
    double cumulative = 0.0;
    Eigen::Index last = 0;
    for (Eigen::Index j = 0; j < count; ++j) {
      const double p = row_value(j);
      if (p > 0.0) {
        cumulative += p;
        last = j;
        if (u < cumulative) {
          return j;
        }
      }
    }
    return last;
  };
  std::vector<LogRecord> records;
  records.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    const Eigen::Index m = draw([&](Eigen::Index j) { return inst.context_probs(j); }, contexts);
    const Eigen::Index a = draw([&](Eigen::Index j) { return inst.logging(m, j); }, k);
    LogRecord rec;
    rec.features = {static_cast<double>(m)};
    rec.action = static_cast<std::size_t>(a);
    rec.logging_dist.assign(inst.logging.row(m).data(), inst.logging.row(m).data() + k);
    rec.logging_prob = rec.logging_dist[rec.action];
    const double mean = inst.mean_reward(m, a);
    if (inst.noise == RewardNoise::gaussian) {
      rec.reward = mean + inst.noise_sd(m, a) * normal(engine);
    } else {
      const double cap = inst.reward_cap(m, a);
      rec.reward = cap > 0.0 && uniform(engine) < mean / cap ? cap : 0.0;
    }
    records.push_back(std::move(rec));
  }
  return BanditLog(std::move(records), static_cast<std::size_t>(k));
}

/// Per-cell empirical mean reward from a simulated instance log (features
/// {m}), clipped to [0, R_max]; cells never logged get 0.
inline Table empirical_mean_model(const BanditLog& log, const FiniteInstance& inst) {
  const auto contexts = inst.logging.rows();
  const auto k = inst.logging.cols();
  Table sums = Table::Zero(contexts, k);
  Table counts = Table::Zero(contexts, k);
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto m = PolicyFn::context_index(log[i].features, contexts);
    const auto a = static_cast<Eigen::Index>(log[i].action);
    sums(m, a) += log[i].reward;
    counts(m, a) += 1.0;
  }
  Table model = Table::Zero(contexts, k);
  for (Eigen::Index m = 0; m < contexts; ++m) {
    for (Eigen::Index a = 0; a < k; ++a) {
      if (counts(m, a) > 0.0) {
        model(m, a) = std::clamp(sums(m, a) / counts(m, a), 0.0, inst.reward_cap(m, a));
      }
    }
  }
  return model;
}

/// Maps a log to an estimate of the target policy's value.
using LogEstimator = std::function<double(const BanditLog&)>;

struct MonteCarloResult {
  double mse = 0.0;
  double std_err = 0.0;
  /// Mean estimate and its standard error (for unbiasedness checks).
  double mean_estimate = 0.0;
  double mean_std_err = 0.0;
  double truth = 0.0;
  std::size_t replicates = 0;
};

/// Maps a log to several estimates at once (for example one per threshold),
/// so every estimate of a replicate sees the same log.
using MultiLogEstimator = std::function<std::vector<double>(const BanditLog&)>;

/// Replicate r uses the engine seeded with derive_seed(seed, {r}); results
/// are reduced in replicate order, so they do not depend on `workers`.
inline std::vector<MonteCarloResult> empirical_mse_many(const MultiLogEstimator& estimator,
                                                        const FiniteInstance& inst, std::size_t n,
                                                        std::size_t replicates, std::uint64_t seed,
                                                        std::size_t workers = default_workers()) {
  if (replicates < 2) {
    throw ValidationError("empirical_mse: need at least 2 replicates");
  }
  inst.validate();
  const double truth = policy_value_exact(inst, WhichPolicy::target);
  std::vector<std::vector<double>> estimates(replicates);
  std::vector<std::string> errors(replicates);
  parallel_for(replicates, workers, [&](std::size_t r) {
    auto engine = make_engine(derive_seed(seed, {r}));
    try {
      estimates[r] = estimator(simulate_instance_log(inst, n, engine));
    } catch (const std::exception& e) {
      errors[r] = e.what();
    }
  });
  for (std::size_t r = 0; r < replicates; ++r) {
    if (!errors[r].empty()) {
      throw ComputationError("empirical_mse: replicate " + std::to_string(r) + " (seed " +
                             std::to_string(seed) + "): " + errors[r]);
    }
    if (estimates[r].size() != estimates.front().size()) {
      throw ComputationError("empirical_mse: estimator output length changed between replicates");
    }
  }
  const std::size_t count = estimates.front().size();
  const double rd = static_cast<double>(replicates);
  std::vector<MonteCarloResult> results(count);
  for (std::size_t j = 0; j < count; ++j) {
    auto& out = results[j];
    out.truth = truth;
    out.replicates = replicates;
    double sum_sq = 0.0;
    double sum_est = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) {
      const double e = estimates[r][j];
      sum_sq += (e - truth) * (e - truth);
      sum_est += e;
    }
    out.mse = sum_sq / rd;
    out.mean_estimate = sum_est / rd;
    double var_sq = 0.0;
    double var_est = 0.0;
    for (std::size_t r = 0; r < replicates; ++r) {
      const double e = estimates[r][j];
      const double sq = (e - truth) * (e - truth);
      var_sq += (sq - out.mse) * (sq - out.mse);
      var_est += (e - out.mean_estimate) * (e - out.mean_estimate);
    }
    out.std_err = std::sqrt(var_sq / (rd - 1.0) / rd);
    out.mean_std_err = std::sqrt(var_est / (rd - 1.0) / rd);
  }
  return results;
}

inline MonteCarloResult empirical_mse(const LogEstimator& estimator, const FiniteInstance& inst,
                                      std::size_t n, std::size_t replicates, std::uint64_t seed,
                                      std::size_t workers = default_workers()) {
  return empirical_mse_many(
             [&](const BanditLog& log) { return std::vector<double>{estimator(log)}; }, inst, n,
             replicates, seed, workers)
      .front();
}

/// Geometric grid from the smallest positive weight to the largest weight
/// over all cells the logging policy can reach; both endpoints exact.
inline std::vector<double> instance_threshold_grid(const FiniteInstance& inst,
                                                   std::size_t count = 21) {
  if (count == 0) {
    throw ValidationError("instance_threshold_grid: count must be positive");
  }
  const Table rho = inst.weights();
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index m = 0; m < rho.rows(); ++m) {
    for (Eigen::Index a = 0; a < rho.cols(); ++a) {
      if (inst.logging(m, a) > 0.0 && rho(m, a) > 0.0) {
        lo = std::min(lo, rho(m, a));
        hi = std::max(hi, rho(m, a));
      }
    }
  }
  if (!(hi > 0.0)) {
    throw ComputationError("instance_threshold_grid: target puts no mass on the logging support");
  }
  if (count == 1 || lo == hi) {
    return std::vector<double>(count, lo);
  }
  std::vector<double> grid(count);
  grid.front() = lo;
  grid.back() = hi;
  const double ratio = hi / lo;
  for (std::size_t j = 1; j + 1 < count; ++j) {
    grid[j] = lo * std::pow(ratio, static_cast<double>(j) / static_cast<double>(count - 1));
  }
  return grid;
}

}  // namespace ope

#endif  // OPE_THEORY_CHECK_HPP
