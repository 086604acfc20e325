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

#ifndef OPE_CORE_HPP
#define OPE_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ope/errors.hpp"

/**
 * \file
 * \brief Domain types for logged bandit feedback and finite problem instances.
 *
 * A `BanditLog` holds i.i.d. records `(x, a, r, mu(a|x))`. Importance weights
 * are never stored; they are recomputed from policy probabilities whenever an
 * estimator needs them.
 */

namespace ope {

/// Tolerance on probability vectors summing to one. Out-of-tolerance vectors
/// are rejected, never renormalized.
inline constexpr double kProbabilityTolerance = 1e-9;

using FeatureVector = std::vector<double>;

/// Row-major dense table; rows index contexts (or records), columns actions.
using Table = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// Throws ValidationError unless `p` is a probability vector within tolerance.
inline void check_distribution(std::span<const double> p, const char* what) {
  double sum = 0.0;
  for (const double v : p) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError(std::string(what) + ": entries must be finite and nonnegative");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbabilityTolerance) {
    throw ValidationError(std::string(what) + ": probabilities sum to " + std::to_string(sum));
  }
}

// ---------------------------------------------------------------------------
// Importance weights

/// `target_prob / logging_prob` with the convention 0/0 = 0.
inline double importance_weight(double target_prob, double logging_prob) {
  if (!(target_prob >= 0.0 && target_prob <= 1.0) ||
      !(logging_prob >= 0.0 && logging_prob <= 1.0)) {
    throw ValidationError("importance_weight: probabilities must lie in [0, 1]");
  }
  if (logging_prob == 0.0) {
    if (target_prob > 0.0) {
      throw AbsoluteContinuityError(
          "target policy has positive probability on an action with zero logging probability");
    }
    return 0.0;
  }
  return target_prob / logging_prob;
}

// ---------------------------------------------------------------------------
// Logged data

struct LogRecord {
  FeatureVector features;
  std::size_t action = 0;
  double reward = 0.0;
  /// mu(action | features)
  double logging_prob = 1.0;
  /// Optional full logging distribution mu(.|features), length K. Needed by
  /// estimators that inspect weights of unlogged actions (SWITCH family,
  /// threshold grid). Empty when the logger recorded only the propensity.
  std::vector<double> logging_dist;
};

/// Nonempty collection of records over K actions with a common feature
/// dimension. Propensity and reward sanity are reported by `validate_log`.
class BanditLog {
 public:
  BanditLog(std::vector<LogRecord> records, std::size_t num_actions)
      : records_(std::move(records)), num_actions_(num_actions) {
    if (records_.empty()) {
      throw ValidationError("BanditLog: log must be nonempty");
    }
    if (num_actions_ == 0) {
      throw ValidationError("BanditLog: num_actions must be positive");
    }
    dim_ = records_.front().features.size();
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      if (r.action >= num_actions_) {
        throw ValidationError("BanditLog: record " + std::to_string(i) + " has action " +
                              std::to_string(r.action) + " outside [0, " +
                              std::to_string(num_actions_) + ")");
      }
      if (r.features.size() != dim_) {
        throw ValidationError("BanditLog: record " + std::to_string(i) +
                              " has inconsistent feature dimension");
      }
      if (!r.logging_dist.empty() && r.logging_dist.size() != num_actions_) {
        throw ValidationError("BanditLog: record " + std::to_string(i) +
                              " has logging_dist of wrong length");
      }
    }
  }

  const std::vector<LogRecord>& records() const noexcept { return records_; }
  const LogRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const noexcept { return records_.size(); }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t dim() const noexcept { return dim_; }

  bool has_logging_dists() const {
    return std::all_of(records_.begin(), records_.end(),
                       [](const LogRecord& r) { return !r.logging_dist.empty(); });
  }

  /// Records at the given indices, in the given order.
  BanditLog subset(std::span<const std::size_t> indices) const {
    std::vector<LogRecord> out;
    out.reserve(indices.size());
    for (const auto i : indices) {
      out.push_back(records_.at(i));
    }
    return BanditLog(std::move(out), num_actions_);
  }

 private:
  std::vector<LogRecord> records_;
  std::size_t num_actions_;
  std::size_t dim_ = 0;
};

// ---------------------------------------------------------------------------
// Policies

/// A stochastic policy mapping features to a distribution over K actions.
/// Every evaluation is checked against the probability-vector invariant.
class PolicyFn {
 public:
  using Evaluator = std::function<void(std::span<const double> x, std::span<double> out)>;

  PolicyFn(std::size_t num_actions, Evaluator evaluator)
      : num_actions_(num_actions), evaluator_(std::move(evaluator)) {
    if (num_actions_ == 0) {
      throw ValidationError("PolicyFn: num_actions must be positive");
    }
  }

  std::size_t num_actions() const noexcept { return num_actions_; }

  void evaluate(std::span<const double> x, std::span<double> out) const {
    if (out.size() != num_actions_) {
      throw ValidationError("PolicyFn: output span has wrong length");
    }
    evaluator_(x, out);
    check_distribution(out, "PolicyFn output");
  }

  std::vector<double> operator()(std::span<const double> x) const {
    std::vector<double> out(num_actions_);
    evaluate(x, out);
    return out;
  }

  static PolicyFn uniform(std::size_t num_actions) {
    return PolicyFn(num_actions, [num_actions](std::span<const double>, std::span<double> out) {
      std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(num_actions));
    });
  }

  /// Point mass on `choose(x)`.
  static PolicyFn deterministic(std::size_t num_actions,
                                std::function<std::size_t(std::span<const double>)> choose) {
    return PolicyFn(num_actions, [choose = std::move(choose)](std::span<const double> x,
                                                              std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
      out[choose(x)] = 1.0;
    });
  }

  /// Policy over finitely many contexts: the context index is `x[0]`, and
  /// row m of `table` is the distribution in context m.
  static PolicyFn tabular(Table table) {
    for (Eigen::Index m = 0; m < table.rows(); ++m) {
      check_distribution(std::span<const double>(table.row(m).data(), table.cols()),
                         "PolicyFn::tabular row");
    }
    const auto k = static_cast<std::size_t>(table.cols());
    return PolicyFn(k, [table = std::move(table)](std::span<const double> x, std::span<double> out) {
      const auto m = context_index(x, table.rows());
      std::copy_n(table.row(m).data(), table.cols(), out.begin());
    });
  }

  static Eigen::Index context_index(std::span<const double> x, Eigen::Index rows) {
    if (x.empty()) {
      throw ValidationError("tabular lookup: empty feature vector");
    }
    const double v = x[0];
    if (!(v >= 0.0) || v >= static_cast<double>(rows) || v != std::floor(v)) {
      throw ValidationError("tabular lookup: feature 0 is not a valid context index");
    }
    return static_cast<Eigen::Index>(v);
  }

 private:
  std::size_t num_actions_;
  Evaluator evaluator_;
};

// ---------------------------------------------------------------------------
// Finite instances

enum class RewardNoise {
  /// r ~ Normal(mean_reward, noise_sd^2)
  gaussian,
  /// r in {0, reward_cap} with P(r = reward_cap) = mean_reward / reward_cap
  bernoulli,
};

/// A fully specified finite contextual bandit problem: context distribution,
/// logging and target policies, and per-(context, action) reward moments.
struct FiniteInstance {
  Eigen::VectorXd context_probs;  // M
  Table logging;                  // M x K
  Table target;                   // M x K
  Table mean_reward;              // M x K
  Table noise_sd;                 // M x K
  Table reward_cap;               // M x K
  RewardNoise noise = RewardNoise::gaussian;

  std::size_t num_contexts() const { return static_cast<std::size_t>(context_probs.size()); }
  std::size_t num_actions() const { return static_cast<std::size_t>(logging.cols()); }

  /// Throws ValidationError on any invariant violation.
  void validate() const {
    const auto m = context_probs.size();
    const auto k = logging.cols();
    if (m == 0 || k == 0) {
      throw ValidationError("FiniteInstance: empty tables");
    }
    auto same_shape = [&](const Table& t) { return t.rows() == m && t.cols() == k; };
    if (!same_shape(logging) || !same_shape(target) || !same_shape(mean_reward) ||
        !same_shape(noise_sd) || !same_shape(reward_cap)) {
      throw ValidationError("FiniteInstance: table shapes disagree");
    }
    check_distribution(std::span<const double>(context_probs.data(), m),
                       "FiniteInstance context_probs");
    for (Eigen::Index i = 0; i < m; ++i) {
      check_distribution(std::span<const double>(logging.row(i).data(), k),
                         "FiniteInstance logging row");
      check_distribution(std::span<const double>(target.row(i).data(), k),
                         "FiniteInstance target row");
      for (Eigen::Index a = 0; a < k; ++a) {
        const double r = mean_reward(i, a);
        const double cap = reward_cap(i, a);
        const double sd = noise_sd(i, a);
        if (!std::isfinite(cap) || cap < 0.0 || !std::isfinite(sd) || sd < 0.0) {
          throw ValidationError("FiniteInstance: reward_cap and noise_sd must be finite and >= 0");
        }
        if (!(r >= 0.0 && r <= cap)) {
          throw ValidationError("FiniteInstance: mean_reward outside [0, reward_cap]");
        }
        if (target(i, a) > 0.0 && logging(i, a) == 0.0) {
          throw AbsoluteContinuityError("FiniteInstance: target not absolutely continuous");
        }
      }
    }
  }

  /// rho(m, a) for every cell, 0/0 = 0.
  Table weights() const {
    Table rho(logging.rows(), logging.cols());
    for (Eigen::Index i = 0; i < rho.rows(); ++i) {
      for (Eigen::Index a = 0; a < rho.cols(); ++a) {
        rho(i, a) = importance_weight(target(i, a), logging(i, a));
      }
    }
    return rho;
  }

  /// Joint point mass lambda(m) mu(a|m).
  Table joint_logging_mass() const {
    Table mass = logging;
    for (Eigen::Index i = 0; i < mass.rows(); ++i) {
      mass.row(i) *= context_probs(i);
    }
    return mass;
  }

  /// Joint point mass lambda(m) pi(a|m).
  Table joint_target_mass() const {
    Table mass = target;
    for (Eigen::Index i = 0; i < mass.rows(); ++i) {
      mass.row(i) *= context_probs(i);
    }
    return mass;
  }

  PolicyFn target_policy() const { return PolicyFn::tabular(target); }
  PolicyFn logging_policy() const { return PolicyFn::tabular(logging); }
};

enum class WhichPolicy { target, logging };

/// Exact value sum_m lambda(m) sum_a policy(a|m) r*(m, a).
inline double policy_value_exact(const FiniteInstance& instance, WhichPolicy which) {
  const Table& policy = which == WhichPolicy::target ? instance.target : instance.logging;
  double value = 0.0;
  for (Eigen::Index m = 0; m < policy.rows(); ++m) {
    double inner = 0.0;
    for (Eigen::Index a = 0; a < policy.cols(); ++a) {
      inner += policy(m, a) * instance.mean_reward(m, a);
    }
    value += instance.context_probs(m) * inner;
  }
  return value;
}

// ---------------------------------------------------------------------------
// Log validation

struct LogViolation {
  std::size_t record = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<LogViolation> violations;
  std::size_t num_records = 0;
  /// Extremes of rho over the logged actions.
  double min_rho_observed = std::numeric_limits<double>::quiet_NaN();
  double max_rho_observed = std::numeric_limits<double>::quiet_NaN();
  /// Extremes of rho over every action in every logged context; NaN when the
  /// log lacks full logging distributions.
  double min_rho_all = std::numeric_limits<double>::quiet_NaN();
  double max_rho_all = std::numeric_limits<double>::quiet_NaN();

  bool ok() const noexcept { return violations.empty(); }
};

/// Scans every record: propensity bounds, finiteness, absolute continuity,
/// and agreement between `logging_prob` and `logging_dist`. Never throws on
/// bad records; findings are collected in the report.
inline ValidationReport validate_log(const BanditLog& log, const PolicyFn& target) {
  ValidationReport report;
  report.num_records = log.size();
  const std::size_t k = log.num_actions();
  if (target.num_actions() != k) {
    report.violations.push_back({0, "target policy action count differs from log"});
    return report;
  }
  auto fold = [](double& lo, double& hi, double v) {
    lo = std::isnan(lo) ? v : std::min(lo, v);
    hi = std::isnan(hi) ? v : std::max(hi, v);
  };
  std::vector<double> pi(k);
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& rec = log[i];
    auto flag = [&](std::string msg) { report.violations.push_back({i, std::move(msg)}); };
    if (!all_finite(rec.features)) {
      flag("non-finite feature");
    }
    if (!std::isfinite(rec.reward)) {
      flag("non-finite reward");
    }
    if (!(rec.logging_prob > 0.0 && rec.logging_prob <= 1.0)) {
      flag("logging_prob outside (0, 1]");
    }
    try {
      target.evaluate(rec.features, pi);
    } catch (const ValidationError& e) {
      flag(std::string("target policy: ") + e.what());
      continue;
    }
    if (rec.logging_prob > 0.0 && rec.logging_prob <= 1.0) {
      fold(report.min_rho_observed, report.max_rho_observed,
           pi[rec.action] / rec.logging_prob);
    } else if (pi[rec.action] > 0.0) {
      flag("absolute continuity violated on logged action");
    }
    if (!rec.logging_dist.empty()) {
      bool dist_ok = true;
      try {
        check_distribution(rec.logging_dist, "logging_dist");
      } catch (const ValidationError& e) {
        flag(e.what());
        dist_ok = false;
      }
      if (dist_ok && rec.logging_dist[rec.action] != rec.logging_prob) {
        flag("logging_dist disagrees with logging_prob");
      }
      if (dist_ok) {
        for (std::size_t a = 0; a < k; ++a) {
          if (pi[a] > 0.0 && rec.logging_dist[a] == 0.0) {
            flag("absolute continuity violated on action " + std::to_string(a));
          } else {
            fold(report.min_rho_all, report.max_rho_all,
                 rec.logging_dist[a] == 0.0 ? 0.0 : pi[a] / rec.logging_dist[a]);
          }
        }
      }
    }
  }
  if (!log.has_logging_dists()) {
    report.min_rho_all = std::numeric_limits<double>::quiet_NaN();
    report.max_rho_all = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

}  // namespace ope

#endif  // OPE_CORE_HPP
