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

#ifndef OPE_ESTIMATORS_HPP
#define OPE_ESTIMATORS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ope/core.hpp"

/**
 * \file
 * \brief Point estimators of a target policy's value from logged feedback.
 *
 * | name       | estimate                                                      |
 * |------------|---------------------------------------------------------------|
 * | `ips`      | mean of rho_i r_i                                             |
 * | `dm`       | mean over records of sum_a pi(a|x_i) rhat(x_i, a)             |
 * | `dr`       | dm plus the importance-weighted residual rho_i (r_i - rhat_i) |
 * | `switch`   | ips where rho <= tau, rhat-imputation where rho > tau         |
 * | `switch-dr`| as `switch` with dr in the small-weight region                |
 * | `trim-ips` | `switch` with a zero imputation model                         |
 * | `trun-ips` | weights capped at tau then self-normalized (tau -> inf gives  |
 * |            | self-normalized IPS, not plain IPS)                           |
 * | `magic`    | simplified convex combination of `switch` over a tau grid     |
 *
 * Every estimator averages per-record values in record order and divides by
 * n once, so identities such as SWITCH(tau = 0) == DM hold bit-for-bit.
 * Threshold comparisons send ties rho == tau to the unbiased part.
 */

namespace ope {

/// Names accepted by the CLI and the harness.
inline constexpr std::array<std::string_view, 8> kEstimatorNames = {
    "ips", "dm", "dr", "switch", "switch-dr", "trim-ips", "trun-ips", "magic"};

/// Mean-reward predictor rhat(x, a). Predictions are clipped into
/// [0, cap(x, a)] on every use; without a cap only the lower clip applies.
class RewardModel {
 public:
  using Predictor = std::function<double(std::span<const double> x, std::size_t action)>;

  explicit RewardModel(Predictor predictor, Predictor cap = {})
      : predictor_(std::move(predictor)), cap_(std::move(cap)) {}

  double cap(std::span<const double> x, std::size_t action) const {
    return cap_ ? cap_(x, action) : std::numeric_limits<double>::infinity();
  }

  double predict(std::span<const double> x, std::size_t action) const {
    const double raw = predictor_(x, action);
    if (std::isnan(raw)) {
      throw ComputationError("RewardModel: prediction is NaN");
    }
    return std::clamp(raw, 0.0, cap(x, action));
  }

  static RewardModel zero() {
    return RewardModel([](std::span<const double>, std::size_t) { return 0.0; });
  }

  static RewardModel constant(double value, double cap = std::numeric_limits<double>::infinity()) {
    return RewardModel([value](std::span<const double>, std::size_t) { return value; },
                       [cap](std::span<const double>, std::size_t) { return cap; });
  }

  /// Lookup model over finitely many contexts (context index in `x[0]`).
  static RewardModel tabular(Table values, std::optional<Table> caps = std::nullopt) {
    Predictor cap;
    if (caps) {
      cap = [caps = std::move(*caps)](std::span<const double> x, std::size_t a) {
        return caps(PolicyFn::context_index(x, caps.rows()), static_cast<Eigen::Index>(a));
      };
    }
    return RewardModel(
        [values = std::move(values)](std::span<const double> x, std::size_t a) {
          return values(PolicyFn::context_index(x, values.rows()), static_cast<Eigen::Index>(a));
        },
        std::move(cap));
  }

  /// Same predictor with the cap replaced.
  RewardModel with_cap(Predictor cap) const { return RewardModel(predictor_, std::move(cap)); }

 private:
  Predictor predictor_;
  Predictor cap_;
};

/// Upper bound R_max(x, a) on mean rewards.
using RewardCapFn = RewardModel::Predictor;

inline RewardCapFn constant_cap(double value) {
  return [value](std::span<const double>, std::size_t) { return value; };
}

struct EstimateReport {
  double value = 0.0;
  std::optional<double> tau;
  std::optional<double> var_hat;
  std::optional<double> bias_bound_sq;
};

// ---------------------------------------------------------------------------
// Cached-weight view

/// Per-record quantities every estimator needs, evaluated once:
/// target probabilities pi(.|x_i), the logged weight rho_i, and (when the log
/// carries full logging distributions) rho(x_i, a) for every action.
struct WeightedLog {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> reward;
  std::vector<std::size_t> action;
  std::vector<double> logged_weight;
  Table target;  // n x k
  Table weight;  // n x k, or 0 x 0 when unavailable

  bool has_all_weights() const noexcept { return weight.rows() == static_cast<Eigen::Index>(n); }

  void require_all_weights(const char* who) const {
    if (!has_all_weights()) {
      throw ValidationError(std::string(who) +
                            ": needs full logging distributions (logging_dist) in the log");
    }
  }

  double pi(std::size_t i, std::size_t a) const {
    return target(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
  }
  double rho(std::size_t i, std::size_t a) const {
    return weight(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
  }
};

inline WeightedLog weigh(const BanditLog& log, const PolicyFn& target) {
  if (target.num_actions() != log.num_actions()) {
    throw ValidationError("target policy action count differs from log");
  }
  WeightedLog w;
  w.n = log.size();
  w.k = log.num_actions();
  w.reward.resize(w.n);
  w.action.resize(w.n);
  w.logged_weight.resize(w.n);
  w.target.resize(static_cast<Eigen::Index>(w.n), static_cast<Eigen::Index>(w.k));
  const bool full = log.has_logging_dists();
  if (full) {
    w.weight.resize(static_cast<Eigen::Index>(w.n), static_cast<Eigen::Index>(w.k));
  }
  for (std::size_t i = 0; i < w.n; ++i) {
    const auto& rec = log[i];
    const auto row = static_cast<Eigen::Index>(i);
    target.evaluate(rec.features, std::span<double>(w.target.row(row).data(), w.k));
    w.reward[i] = rec.reward;
    w.action[i] = rec.action;
    w.logged_weight[i] = importance_weight(w.pi(i, rec.action), rec.logging_prob);
    if (full) {
      for (std::size_t a = 0; a < w.k; ++a) {
        w.weight(row, static_cast<Eigen::Index>(a)) =
            a == rec.action ? w.logged_weight[i]
                            : importance_weight(w.pi(i, a), rec.logging_dist[a]);
      }
    }
  }
  return w;
}

/// Clipped predictions rhat(x_i, a) for every record and action.
inline Table tabulate(const BanditLog& log, const RewardModel& model) {
  Table t(static_cast<Eigen::Index>(log.size()), static_cast<Eigen::Index>(log.num_actions()));
  for (std::size_t i = 0; i < log.size(); ++i) {
    for (std::size_t a = 0; a < log.num_actions(); ++a) {
      t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) =
          model.predict(log[i].features, a);
    }
  }
  return t;
}

inline Table zero_table(const WeightedLog& w) {
  return Table::Zero(static_cast<Eigen::Index>(w.n), static_cast<Eigen::Index>(w.k));
}

/// Largest rho(x_i, a) over all records and actions.
inline double max_weight(const WeightedLog& w) {
  w.require_all_weights("max_weight");
  return w.weight.maxCoeff();
}

namespace detail {

inline double mean(std::span<const double> values) {
  double sum = 0.0;
  for (const double v : values) {
    sum += v;
  }
  return sum / static_cast<double>(values.size());
}

inline void check_table(const WeightedLog& w, const Table& t, const char* who) {
  if (t.rows() != static_cast<Eigen::Index>(w.n) || t.cols() != static_cast<Eigen::Index>(w.k)) {
    throw ValidationError(std::string(who) + ": model table shape differs from log");
  }
}

inline double model(const Table& t, std::size_t i, std::size_t a) {
  return t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
}

/// sum_a pi(a|x_i) rhat(x_i, a), skipping actions with pi = 0 (those terms
/// are exactly zero).
inline double direct_term(const WeightedLog& w, const Table& rhat, std::size_t i) {
  double s = 0.0;
  for (std::size_t a = 0; a < w.k; ++a) {
    const double p = w.pi(i, a);
    if (p != 0.0) {
      s += model(rhat, i, a) * p;
    }
  }
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-record values

/// Y_i for IPS: rho_i r_i.
inline std::vector<double> ips_record_values(const WeightedLog& w) {
  std::vector<double> y(w.n);
  for (std::size_t i = 0; i < w.n; ++i) {
    y[i] = w.logged_weight[i] * w.reward[i];
  }
  return y;
}

inline std::vector<double> dm_record_values(const WeightedLog& w, const Table& rhat) {
  detail::check_table(w, rhat, "dm");
  std::vector<double> y(w.n);
  for (std::size_t i = 0; i < w.n; ++i) {
    y[i] = detail::direct_term(w, rhat, i);
  }
  return y;
}

inline std::vector<double> dr_record_values(const WeightedLog& w, const Table& rhat) {
  detail::check_table(w, rhat, "dr");
  std::vector<double> y(w.n);
  for (std::size_t i = 0; i < w.n; ++i) {
    const double residual = w.reward[i] - detail::model(rhat, i, w.action[i]);
    y[i] = w.logged_weight[i] * residual + detail::direct_term(w, rhat, i);
  }
  return y;
}

/// Y_i(tau) for SWITCH (dr_model == nullptr) or SWITCH-DR:
///   [rho_i (r_i - rdr_i) 1(rho_i <= tau) + sum_a rdr pi 1(rho <= tau)]
///   + sum_a rimp pi 1(rho > tau)
/// With dr_model == nullptr the bracket is rho_i r_i 1(rho_i <= tau).
inline std::vector<double> switch_record_values(const WeightedLog& w, const Table* dr_model,
                                                const Table& impute_model, double tau) {
  w.require_all_weights("switch");
  detail::check_table(w, impute_model, "switch");
  if (dr_model != nullptr) {
    detail::check_table(w, *dr_model, "switch-dr");
  }
  if (!(tau >= 0.0)) {
    throw ValidationError("switch: tau must be nonnegative");
  }
  std::vector<double> y(w.n);
  for (std::size_t i = 0; i < w.n; ++i) {
    const double rho_i = w.logged_weight[i];
    double unbiased = 0.0;
    double imputed = 0.0;
    if (dr_model == nullptr) {
      if (rho_i <= tau) {
        unbiased = w.reward[i] * rho_i;
      }
    } else {
      if (rho_i <= tau) {
        unbiased = rho_i * (w.reward[i] - detail::model(*dr_model, i, w.action[i]));
      }
      double direct = 0.0;
      for (std::size_t a = 0; a < w.k; ++a) {
        const double p = w.pi(i, a);
        if (p != 0.0 && w.rho(i, a) <= tau) {
          direct += detail::model(*dr_model, i, a) * p;
        }
      }
      unbiased = unbiased + direct;
    }
    for (std::size_t a = 0; a < w.k; ++a) {
      const double p = w.pi(i, a);
      if (p != 0.0 && w.rho(i, a) > tau) {
        imputed += detail::model(impute_model, i, a) * p;
      }
    }
    y[i] = unbiased + imputed;
  }
  return y;
}

// ---------------------------------------------------------------------------
// Estimators on the cached view

inline EstimateReport ips(const WeightedLog& w) {
  return {detail::mean(ips_record_values(w)), {}, {}, {}};
}

inline EstimateReport dm(const WeightedLog& w, const Table& rhat) {
  return {detail::mean(dm_record_values(w, rhat)), {}, {}, {}};
}

inline EstimateReport dr(const WeightedLog& w, const Table& rhat) {
  return {detail::mean(dr_record_values(w, rhat)), {}, {}, {}};
}

inline EstimateReport switch_estimate(const WeightedLog& w, const Table& impute_model, double tau) {
  EstimateReport r{detail::mean(switch_record_values(w, nullptr, impute_model, tau)), tau, {}, {}};
  return r;
}

inline EstimateReport switch_dr_estimate(const WeightedLog& w, const Table& dr_model,
                                         const Table& impute_model, double tau) {
  return {detail::mean(switch_record_values(w, &dr_model, impute_model, tau)), tau, {}, {}};
}

inline EstimateReport trim_ips(const WeightedLog& w, double tau) {
  return switch_estimate(w, zero_table(w), tau);
}

/// sum_i min(rho_i, tau) r_i / sum_i min(rho_i, tau). Only logged weights are
/// used, so full logging distributions are not required.
inline EstimateReport trun_ips(const WeightedLog& w, double tau) {
  if (!(tau > 0.0)) {
    throw ValidationError("trun-ips: tau must be positive");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < w.n; ++i) {
    const double c = std::min(w.logged_weight[i], tau);
    num += c * w.reward[i];
    den += c;
  }
  if (!(den > 0.0)) {
    throw ComputationError("trun-ips: all capped weights are zero");
  }
  return {num / den, tau, {}, {}};
}

/// `count` thresholds on a geometric grid from the smallest strictly positive
/// to the largest rho(x_i, a) over all records and actions. Endpoints are
/// exact. A single-point grid is the lower endpoint.
inline std::vector<double> threshold_grid(const WeightedLog& w, std::size_t count = 21) {
  w.require_all_weights("threshold_grid");
  if (count == 0) {
    throw ValidationError("threshold_grid: count must be positive");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index i = 0; i < w.weight.size(); ++i) {
    const double v = w.weight.data()[i];
    if (v > 0.0) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > 0.0)) {
    throw ComputationError("threshold_grid: no positive importance weight in the log");
  }
  std::vector<double> grid(count, lo);
  if (hi == lo || count == 1) {
    return grid;
  }
  const double ratio = hi / lo;
  for (std::size_t j = 1; j + 1 < count; ++j) {
    grid[j] = lo * std::pow(ratio, static_cast<double>(j) / static_cast<double>(count - 1));
  }
  grid.back() = hi;
  return grid;
}

// ---------------------------------------------------------------------------
// Convenience overloads on raw logs

inline EstimateReport ips(const BanditLog& log, const PolicyFn& target) {
  return ips(weigh(log, target));
}

inline EstimateReport dm(const BanditLog& log, const PolicyFn& target, const RewardModel& model) {
  return dm(weigh(log, target), tabulate(log, model));
}

inline EstimateReport dr(const BanditLog& log, const PolicyFn& target, const RewardModel& model) {
  return dr(weigh(log, target), tabulate(log, model));
}

inline EstimateReport switch_estimate(const BanditLog& log, const PolicyFn& target,
                                      const RewardModel& impute_model, double tau) {
  return switch_estimate(weigh(log, target), tabulate(log, impute_model), tau);
}

inline EstimateReport switch_dr_estimate(const BanditLog& log, const PolicyFn& target,
                                         const RewardModel& dr_model,
                                         const RewardModel& impute_model, double tau) {
  return switch_dr_estimate(weigh(log, target), tabulate(log, dr_model),
                            tabulate(log, impute_model), tau);
}

inline EstimateReport trim_ips(const BanditLog& log, const PolicyFn& target, double tau) {
  return trim_ips(weigh(log, target), tau);
}

inline EstimateReport trun_ips(const BanditLog& log, const PolicyFn& target, double tau) {
  return trun_ips(weigh(log, target), tau);
}

inline std::vector<double> threshold_grid(const BanditLog& log, const PolicyFn& target,
                                          std::size_t count = 21) {
  return threshold_grid(weigh(log, target), count);
}

}  // namespace ope

#endif  // OPE_ESTIMATORS_HPP
