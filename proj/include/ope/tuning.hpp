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

#ifndef OPE_TUNING_HPP
#define OPE_TUNING_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "ope/core.hpp"
#include "ope/estimators.hpp"

/**
 * \file
 * \brief Data-driven threshold selection for the SWITCH family.
 *
 * For each candidate tau the objective is
 *
 *   var_hat(tau) + bias_bound_sq(tau)
 *
 * where var_hat is the spread of the per-record values Y_i(tau) divided by
 * n^2, and bias_bound_sq squares the average target-policy mass (weighted by
 * the reward cap) that falls in the imputed region rho > tau. The bias bound
 * charges the imputed region its worst case, so the selection only imputes
 * where the unbiased part's variance is larger still.
 */

namespace ope {

struct TuningTrace {
  std::vector<double> taus;
  std::vector<double> var_hats;
  std::vector<double> bias_bounds_sq;
  std::vector<double> objective;
  std::size_t chosen_index = 0;

  double chosen_tau() const { return taus.at(chosen_index); }
  double chosen_objective() const { return objective.at(chosen_index); }
};

/// R_max(x_i, a) for every record and action.
inline Table cap_table(const BanditLog& log, const RewardCapFn& cap) {
  Table t(static_cast<Eigen::Index>(log.size()), static_cast<Eigen::Index>(log.num_actions()));
  for (std::size_t i = 0; i < log.size(); ++i) {
    for (std::size_t a = 0; a < log.num_actions(); ++a) {
      const double c = cap(log[i].features, a);
      if (!std::isfinite(c) || c < 0.0) {
        throw ValidationError("reward cap must be finite and nonnegative");
      }
      t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = c;
    }
  }
  return t;
}

/// (1/n^2) sum_i (Y_i - mean(Y))^2.
inline double var_hat(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : values) {
    ss += (v - mean) * (v - mean);
  }
  return ss / (n * n);
}

inline double var_hat(const WeightedLog& w, const Table& impute_model, double tau) {
  return var_hat(switch_record_values(w, nullptr, impute_model, tau));
}

/// [ (1/n) sum_i sum_a R_max(x_i, a) pi(a|x_i) 1(rho(x_i, a) > tau) ]^2
inline double bias_bound_sq(const WeightedLog& w, const Table& caps, double tau) {
  w.require_all_weights("bias_bound_sq");
  double total = 0.0;
  for (std::size_t i = 0; i < w.n; ++i) {
    double inner = 0.0;
    for (std::size_t a = 0; a < w.k; ++a) {
      const double p = w.pi(i, a);
      if (p != 0.0 && w.rho(i, a) > tau) {
        inner += caps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) * p;
      }
    }
    total += inner;
  }
  const double avg = total / static_cast<double>(w.n);
  return avg * avg;
}

/// Minimizes var_hat + bias_bound_sq over `taus` (ascending). Ties go to the
/// smallest tau. With `dr_model` set, the variance term uses the SWITCH-DR
/// per-record values; the bias bound is the same for both.
inline TuningTrace select_tau(const WeightedLog& w, const Table* dr_model,
                              const Table& impute_model, const Table& caps,
                              std::span<const double> taus) {
  if (taus.empty()) {
    throw ValidationError("select_tau: candidate list is empty");
  }
  if (!std::is_sorted(taus.begin(), taus.end())) {
    throw ValidationError("select_tau: candidates must be sorted ascending");
  }
  TuningTrace trace;
  trace.taus.assign(taus.begin(), taus.end());
  for (const double tau : taus) {
    const double v = var_hat(switch_record_values(w, dr_model, impute_model, tau));
    const double b = bias_bound_sq(w, caps, tau);
    trace.var_hats.push_back(v);
    trace.bias_bounds_sq.push_back(b);
    trace.objective.push_back(v + b);
  }
  for (std::size_t j = 1; j < trace.objective.size(); ++j) {
    if (trace.objective[j] < trace.objective[trace.chosen_index]) {
      trace.chosen_index = j;
    }
  }
  return trace;
}

/// SWITCH with the tuned threshold; the report carries the diagnostics.
inline EstimateReport switch_auto(const WeightedLog& w, const Table& impute_model,
                                  const Table& caps, std::span<const double> taus,
                                  TuningTrace* trace_out = nullptr) {
  auto trace = select_tau(w, nullptr, impute_model, caps, taus);
  auto report = switch_estimate(w, impute_model, trace.chosen_tau());
  report.var_hat = trace.var_hats[trace.chosen_index];
  report.bias_bound_sq = trace.bias_bounds_sq[trace.chosen_index];
  if (trace_out != nullptr) {
    *trace_out = std::move(trace);
  }
  return report;
}

inline EstimateReport switch_dr_auto(const WeightedLog& w, const Table& dr_model,
                                     const Table& impute_model, const Table& caps,
                                     std::span<const double> taus,
                                     TuningTrace* trace_out = nullptr) {
  auto trace = select_tau(w, &dr_model, impute_model, caps, taus);
  auto report = switch_dr_estimate(w, dr_model, impute_model, trace.chosen_tau());
  report.var_hat = trace.var_hats[trace.chosen_index];
  report.bias_bound_sq = trace.bias_bounds_sq[trace.chosen_index];
  if (trace_out != nullptr) {
    *trace_out = std::move(trace);
  }
  return report;
}

inline EstimateReport trim_ips_auto(const WeightedLog& w, const Table& caps,
                                    std::span<const double> taus,
                                    TuningTrace* trace_out = nullptr) {
  return switch_auto(w, zero_table(w), caps, taus, trace_out);
}

/// Threshold selection for the capped-and-renormalized estimator. Variance by
/// the delta method for a ratio, sum_i c_i^2 (r_i - v)^2 / (sum_i c_i)^2 with
/// c_i = min(rho_i, tau); bias bounded by the target mass removed by capping,
/// [ (1/n) sum_i sum_a R_max pi (1 - tau/rho)_+ ]^2.
inline TuningTrace select_tau_trun(const WeightedLog& w, const Table& caps,
                                   std::span<const double> taus) {
  w.require_all_weights("trun-ips tuning");
  if (taus.empty()) {
    throw ValidationError("select_tau_trun: candidate list is empty");
  }
  TuningTrace trace;
  trace.taus.assign(taus.begin(), taus.end());
  for (const double tau : taus) {
    const double v = trun_ips(w, tau).value;
    double den = 0.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < w.n; ++i) {
      const double c = std::min(w.logged_weight[i], tau);
      den += c;
      ss += c * c * (w.reward[i] - v) * (w.reward[i] - v);
    }
    double lost = 0.0;
    for (std::size_t i = 0; i < w.n; ++i) {
      for (std::size_t a = 0; a < w.k; ++a) {
        const double rho = w.rho(i, a);
        if (rho > tau) {
          lost += caps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) * w.pi(i, a) *
                  (1.0 - tau / rho);
        }
      }
    }
    lost /= static_cast<double>(w.n);
    trace.var_hats.push_back(ss / (den * den));
    trace.bias_bounds_sq.push_back(lost * lost);
    trace.objective.push_back(trace.var_hats.back() + trace.bias_bounds_sq.back());
  }
  for (std::size_t j = 1; j < trace.objective.size(); ++j) {
    if (trace.objective[j] < trace.objective[trace.chosen_index]) {
      trace.chosen_index = j;
    }
  }
  return trace;
}

inline EstimateReport trun_ips_auto(const WeightedLog& w, const Table& caps,
                                    std::span<const double> taus,
                                    TuningTrace* trace_out = nullptr) {
  auto trace = select_tau_trun(w, caps, taus);
  auto report = trun_ips(w, trace.chosen_tau());
  report.var_hat = trace.var_hats[trace.chosen_index];
  report.bias_bound_sq = trace.bias_bounds_sq[trace.chosen_index];
  if (trace_out != nullptr) {
    *trace_out = std::move(trace);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Convenience overloads on raw logs

/// Y_i(tau) for a single record.
inline double per_record_value(const LogRecord& record, const PolicyFn& target,
                               const RewardModel& impute_model, double tau) {
  const BanditLog one({record}, target.num_actions());
  const auto w = weigh(one, target);
  return switch_record_values(w, nullptr, tabulate(one, impute_model), tau).front();
}

inline double var_hat(const BanditLog& log, const PolicyFn& target,
                      const RewardModel& impute_model, double tau) {
  return var_hat(weigh(log, target), tabulate(log, impute_model), tau);
}

inline double bias_bound_sq(const BanditLog& log, const PolicyFn& target,
                            const RewardCapFn& reward_cap, double tau) {
  return bias_bound_sq(weigh(log, target), cap_table(log, reward_cap), tau);
}

inline TuningTrace select_tau(const BanditLog& log, const PolicyFn& target,
                              const RewardModel& impute_model, const RewardCapFn& reward_cap,
                              std::span<const double> taus) {
  return select_tau(weigh(log, target), nullptr, tabulate(log, impute_model),
                    cap_table(log, reward_cap), taus);
}

// ---------------------------------------------------------------------------
// Simplified MAGIC

/// Settings for the simplex-constrained quadratic program.
struct MagicConfig {
  std::size_t iterations = 500;
  std::size_t power_iterations = 50;
};

struct MagicResult {
  EstimateReport report;
  std::vector<double> weights;
  /// SWITCH estimates at each candidate tau.
  std::vector<double> candidate_values;
  /// Cov + bias bias^T
  Eigen::MatrixXd quadratic;
  double objective = 0.0;
};

/// Euclidean projection onto the probability simplex (sort-based).
inline Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
  const auto n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) {
      theta = t;
    }
  }
  return (v.array() - theta).max(0.0).matrix();
}

inline double quadratic_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& w) {
  return w.dot(a * w);
}

/// Convex combination of SWITCH estimates over `taus`. The quadratic uses the
/// 1/n-scaled covariance of the per-record vectors (Y_i(tau_1..tau_J)) plus
/// b b^T, where b_j is the distance of estimate j to the largest-tau
/// estimate. Projected gradient descent starts at the best pure-tau vertex
/// and never accepts an increasing step, so the returned objective is at most
/// the best vertex objective.
inline MagicResult magic_combine(const WeightedLog& w, const Table& impute_model,
                                 std::span<const double> taus, const MagicConfig& config = {}) {
  if (taus.empty()) {
    throw ValidationError("magic: candidate list is empty");
  }
  const auto j_count = static_cast<Eigen::Index>(taus.size());
  const auto n = static_cast<Eigen::Index>(w.n);
  Eigen::MatrixXd y(n, j_count);
  for (Eigen::Index j = 0; j < j_count; ++j) {
    const auto values = switch_record_values(w, nullptr, impute_model, taus[static_cast<std::size_t>(j)]);
    for (Eigen::Index i = 0; i < n; ++i) {
      y(i, j) = values[static_cast<std::size_t>(i)];
    }
  }
  MagicResult result;
  Eigen::VectorXd means(j_count);
  for (Eigen::Index j = 0; j < j_count; ++j) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      sum += y(i, j);
    }
    means(j) = sum / static_cast<double>(n);
    result.candidate_values.push_back(means(j));
  }
  const Eigen::MatrixXd centered = y.rowwise() - means.transpose();
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  const Eigen::VectorXd bias = means.array() - means(j_count - 1);
  result.quadratic = (centered.transpose() * centered) / nn + bias * bias.transpose();
  const Eigen::MatrixXd& a = result.quadratic;

  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < j_count; ++j) {
    if (a(j, j) < a(best, best)) {
      best = j;
    }
  }
  Eigen::VectorXd weights = Eigen::VectorXd::Zero(j_count);
  weights(best) = 1.0;
  double objective = a(best, best);

  Eigen::VectorXd v = Eigen::VectorXd::Constant(j_count, 1.0 / std::sqrt(static_cast<double>(j_count)));
  double lambda = 0.0;
  for (std::size_t it = 0; it < config.power_iterations; ++it) {
    const Eigen::VectorXd av = a * v;
    const double norm = av.norm();
    if (norm == 0.0) {
      break;
    }
    lambda = v.dot(av);
    v = av / norm;
  }
  if (lambda > 0.0 && j_count > 1) {
    double step = 1.0 / (2.0 * lambda);
    for (std::size_t it = 0; it < config.iterations; ++it) {
      const Eigen::VectorXd grad = 2.0 * (a * weights);
      Eigen::VectorXd candidate = project_to_simplex(weights - step * grad);
      double value = quadratic_objective(a, candidate);
      int halvings = 0;
      while (value > objective && halvings < 40) {
        step *= 0.5;
        candidate = project_to_simplex(weights - step * grad);
        value = quadratic_objective(a, candidate);
        ++halvings;
      }
      if (value > objective) {
        break;
      }
      weights = std::move(candidate);
      objective = value;
    }
  }
  result.weights.assign(weights.data(), weights.data() + j_count);
  result.objective = objective;
  result.report.value = weights.dot(means);
  result.report.var_hat = weights.dot((centered.transpose() * centered / nn) * weights);
  const double combined_bias = weights.dot(bias);
  result.report.bias_bound_sq = combined_bias * combined_bias;
  return result;
}

inline MagicResult magic_combine(const BanditLog& log, const PolicyFn& target,
                                 const RewardModel& impute_model, std::span<const double> taus,
                                 const MagicConfig& config = {}) {
  return magic_combine(weigh(log, target), tabulate(log, impute_model), taus, config);
}

}  // namespace ope

#endif  // OPE_TUNING_HPP
