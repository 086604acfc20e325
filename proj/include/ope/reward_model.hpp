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

#ifndef OPE_REWARD_MODEL_HPP
#define OPE_REWARD_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ope/core.hpp"
#include "ope/estimators.hpp"
#include "ope/rng.hpp"

/**
 * \file
 * \brief Logistic reward models, softmax policy models and two-fold
 * cross-fitting.
 *
 * Reward models fit one binary logistic regression per action on the
 * records that took that action; unobserved actions predict 0.5. Policy
 * models fit a multinomial softmax regression. Both minimize the mean loss
 * plus (l2 / 2) ||w||^2 (intercepts unregularized) by full-batch gradient
 * descent from zero. A step that raises the loss is halved and the halved
 * step is kept for later iterations, so the loss trace is nonincreasing.
 */

namespace ope {

struct TrainerConfig {
  double l2 = 1e-4;
  double step = 0.5;
  std::size_t iterations = 500;
  /// Center and scale features before fitting; the transform is stored in the
  /// model and applied at prediction time.
  bool standardize = false;
  /// Softmax class count; 0 infers max(label) + 1.
  std::size_t num_classes = 0;
};

enum class ModelMode { reward, policy };

/// Weights are K x (d + 1), intercept in the last column.
struct LogisticModel {
  ModelMode mode = ModelMode::reward;
  std::size_t num_actions = 0;
  std::size_t dim = 0;
  TrainerConfig config;
  Eigen::MatrixXd weights;
  /// Standardization transform; empty when unused.
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;

  Eigen::VectorXd design_row(std::span<const double> x) const {
    if (x.size() != dim) {
      throw ValidationError("LogisticModel: feature dimension mismatch");
    }
    Eigen::VectorXd row(static_cast<Eigen::Index>(dim) + 1);
    for (std::size_t j = 0; j < dim; ++j) {
      double v = x[j];
      if (feature_mean.size() > 0) {
        v = (v - feature_mean(static_cast<Eigen::Index>(j))) /
            feature_scale(static_cast<Eigen::Index>(j));
      }
      row(static_cast<Eigen::Index>(j)) = v;
    }
    row(static_cast<Eigen::Index>(dim)) = 1.0;
    return row;
  }

  double logit(std::span<const double> x, std::size_t action) const {
    return weights.row(static_cast<Eigen::Index>(action)).dot(design_row(x));
  }

  /// Softmax probabilities (policy mode).
  void probabilities(std::span<const double> x, std::span<double> out) const {
    const Eigen::VectorXd z = weights * design_row(x);
    const double zmax = z.maxCoeff();
    double total = 0.0;
    for (Eigen::Index a = 0; a < z.size(); ++a) {
      out[static_cast<std::size_t>(a)] = std::exp(z(a) - zmax);
      total += out[static_cast<std::size_t>(a)];
    }
    for (auto& p : out) {
      p /= total;
    }
  }

  /// Largest logit; ties go to the smallest index.
  std::size_t argmax(std::span<const double> x) const {
    const Eigen::VectorXd z = weights * design_row(x);
    std::size_t best = 0;
    for (Eigen::Index a = 1; a < z.size(); ++a) {
      if (z(a) > z(static_cast<Eigen::Index>(best))) {
        best = static_cast<std::size_t>(a);
      }
    }
    return best;
  }
};

inline double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

/// sigmoid(w_a . x + b_a) clipped to [0, cap].
inline double predict_reward(const LogisticModel& model, std::span<const double> x,
                             std::size_t action, double cap) {
  if (action >= model.num_actions) {
    throw ValidationError("predict_reward: action out of range");
  }
  return std::clamp(sigmoid(model.logit(x, action)), 0.0, cap);
}

// ---------------------------------------------------------------------------
// Objectives

struct LossAndGradient {
  double loss = 0.0;
  Eigen::MatrixXd gradient;
};

/// Mean binary log loss + (l2/2)||w[0:d]||^2 for one weight row; `design`
/// carries the intercept column last.
inline LossAndGradient binary_logistic_objective(const Eigen::MatrixXd& design,
                                                 const Eigen::VectorXd& labels,
                                                 const Eigen::VectorXd& w, double l2) {
  const auto n = design.rows();
  const auto p = design.cols();
  const Eigen::VectorXd z = design * w;
  Eigen::VectorXd residual(n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    loss += softplus(z(i)) - labels(i) * z(i);
    residual(i) = sigmoid(z(i)) - labels(i);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  LossAndGradient out;
  out.gradient = (design.transpose() * residual) * inv_n;
  const auto reg = w.head(p - 1);
  out.loss = loss * inv_n + 0.5 * l2 * reg.squaredNorm();
  out.gradient.topRows(p - 1) += l2 * reg;
  return out;
}

/// Mean cross-entropy + (l2/2)||W[:, 0:d]||_F^2; W is K x (d + 1).
inline LossAndGradient softmax_objective(const Eigen::MatrixXd& design,
                                         const std::vector<std::size_t>& labels,
                                         const Eigen::MatrixXd& w, double l2) {
  const auto n = design.rows();
  const auto p = design.cols();
  const auto k = w.rows();
  Eigen::MatrixXd z = design * w.transpose();  // n x K
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double zmax = z.row(i).maxCoeff();
    double total = 0.0;
    for (Eigen::Index a = 0; a < k; ++a) {
      total += std::exp(z(i, a) - zmax);
    }
    const double lse = zmax + std::log(total);
    loss += lse - z(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]));
    for (Eigen::Index a = 0; a < k; ++a) {
      z(i, a) = std::exp(z(i, a) - lse);
    }
    z(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) -= 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  LossAndGradient out;
  out.gradient = (z.transpose() * design) * inv_n;
  const auto reg = w.leftCols(p - 1);
  out.loss = loss * inv_n + 0.5 * l2 * reg.squaredNorm();
  out.gradient.leftCols(p - 1) += l2 * reg;
  return out;
}

struct FitResult {
  Eigen::MatrixXd weights;
  std::vector<double> loss_trace;
};

/// Gradient descent with persistent step halving. `objective` maps weights to
/// loss and gradient of the same shape.
template <class Objective>
FitResult gradient_descent(Objective&& objective, Eigen::MatrixXd start,
                           const TrainerConfig& config) {
  FitResult fit;
  fit.weights = std::move(start);
  LossAndGradient current = objective(fit.weights);
  fit.loss_trace.push_back(current.loss);
  double step = config.step;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    bool accepted = false;
    while (step > 1e-12) {
      Eigen::MatrixXd trial = fit.weights - step * current.gradient;
      LossAndGradient next = objective(trial);
      if (std::isfinite(next.loss) && next.loss <= current.loss) {
        fit.weights = std::move(trial);
        current = std::move(next);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      break;
    }
    fit.loss_trace.push_back(current.loss);
  }
  return fit;
}

namespace detail {

struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
};

inline Standardizer fit_standardizer(const std::vector<const FeatureVector*>& rows, std::size_t d) {
  Standardizer s{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d)),
                 Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d))};
  for (const auto* r : rows) {
    for (std::size_t j = 0; j < d; ++j) {
      s.mean(static_cast<Eigen::Index>(j)) += (*r)[j];
    }
  }
  s.mean /= static_cast<double>(rows.size());
  for (const auto* r : rows) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = (*r)[j] - s.mean(static_cast<Eigen::Index>(j));
      s.scale(static_cast<Eigen::Index>(j)) += c * c;
    }
  }
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    const double sd = std::sqrt(s.scale(j) / static_cast<double>(rows.size()));
    s.scale(j) = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

/// Design matrix for the given rows under the model's transform.
inline Eigen::MatrixXd design_matrix(const LogisticModel& model,
                                     const std::vector<const FeatureVector*>& rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(model.dim) + 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = model.design_row(*rows[i]).transpose();
  }
  return x;
}

inline void prepare(LogisticModel& model, const std::vector<const FeatureVector*>& rows) {
  if (model.config.standardize) {
    auto s = fit_standardizer(rows, model.dim);
    model.feature_mean = std::move(s.mean);
    model.feature_scale = std::move(s.scale);
  }
}

}  // namespace detail

/// Per-action binary logistic regression of reward on features.
/// Rewards must be exactly 0 or 1.
inline LogisticModel train_reward_model(const BanditLog& log, const TrainerConfig& config = {},
                                        std::vector<std::vector<double>>* loss_traces = nullptr) {
  LogisticModel model;
  model.mode = ModelMode::reward;
  model.num_actions = log.num_actions();
  model.dim = log.dim();
  model.config = config;
  model.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.num_actions),
                                        static_cast<Eigen::Index>(model.dim) + 1);
  std::vector<const FeatureVector*> all_rows;
  for (const auto& r : log.records()) {
    if (r.reward != 0.0 && r.reward != 1.0) {
      throw ValidationError("train_reward_model: rewards must be binary (0 or 1)");
    }
    all_rows.push_back(&r.features);
  }
  detail::prepare(model, all_rows);
  if (loss_traces != nullptr) {
    loss_traces->assign(model.num_actions, {});
  }
  for (std::size_t a = 0; a < model.num_actions; ++a) {
    std::vector<const FeatureVector*> rows;
    std::vector<double> labels;
    for (const auto& r : log.records()) {
      if (r.action == a) {
        rows.push_back(&r.features);
        labels.push_back(r.reward);
      }
    }
    if (rows.empty()) {
      continue;  // zero weights: constant 0.5
    }
    const Eigen::MatrixXd x = detail::design_matrix(model, rows);
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(labels.data(),
                                                                static_cast<Eigen::Index>(labels.size()));
    auto fit = gradient_descent(
        [&](const Eigen::MatrixXd& w) { return binary_logistic_objective(x, y, w, config.l2); },
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.dim) + 1, 1), config);
    model.weights.row(static_cast<Eigen::Index>(a)) = fit.weights.col(0).transpose();
    if (loss_traces != nullptr) {
      (*loss_traces)[a] = std::move(fit.loss_trace);
    }
  }
  return model;
}

/// Multinomial softmax regression of labels on features.
inline LogisticModel train_policy_model(const std::vector<FeatureVector>& features,
                                        const std::vector<std::size_t>& labels,
                                        const TrainerConfig& config = {},
                                        std::vector<double>* loss_trace = nullptr) {
  if (features.empty() || features.size() != labels.size()) {
    throw ValidationError("train_policy_model: need a nonempty set of labeled examples");
  }
  const std::size_t inferred = *std::max_element(labels.begin(), labels.end()) + 1;
  LogisticModel model;
  model.mode = ModelMode::policy;
  model.num_actions = config.num_classes == 0 ? inferred : config.num_classes;
  if (inferred > model.num_actions) {
    throw ValidationError("train_policy_model: label outside [0, num_classes)");
  }
  model.dim = features.front().size();
  model.config = config;
  std::vector<const FeatureVector*> rows;
  for (const auto& f : features) {
    if (f.size() != model.dim) {
      throw ValidationError("train_policy_model: inconsistent feature dimension");
    }
    rows.push_back(&f);
  }
  detail::prepare(model, rows);
  const Eigen::MatrixXd x = detail::design_matrix(model, rows);
  auto fit = gradient_descent(
      [&](const Eigen::MatrixXd& w) { return softmax_objective(x, labels, w, config.l2); },
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.num_actions),
                            static_cast<Eigen::Index>(model.dim) + 1),
      config);
  model.weights = std::move(fit.weights);
  if (loss_trace != nullptr) {
    *loss_trace = std::move(fit.loss_trace);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Adapters

inline RewardModel as_reward_model(std::shared_ptr<const LogisticModel> model,
                                   RewardCapFn cap = {}) {
  return RewardModel(
      [model](std::span<const double> x, std::size_t a) { return sigmoid(model->logit(x, a)); },
      std::move(cap));
}

inline RewardModel as_reward_model(LogisticModel model, RewardCapFn cap = {}) {
  return as_reward_model(std::make_shared<const LogisticModel>(std::move(model)), std::move(cap));
}

/// Softmax probabilities of a policy-mode model.
inline PolicyFn softmax_policy(std::shared_ptr<const LogisticModel> model) {
  const auto k = model->num_actions;
  return PolicyFn(k, [model](std::span<const double> x, std::span<double> out) {
    model->probabilities(x, out);
  });
}

/// Point mass on the argmax class (ties to the smallest index).
inline PolicyFn argmax_policy(std::shared_ptr<const LogisticModel> model) {
  const auto k = model->num_actions;
  return PolicyFn::deterministic(k, [model](std::span<const double> x) { return model->argmax(x); });
}

// ---------------------------------------------------------------------------
// Cross-fitting

/// Two reward models, each trained on the other fold. Records in fold f are
/// scored by `model(f)`, which never saw them.
struct CrossFitPair {
  std::vector<std::uint8_t> fold_assignment;
  LogisticModel model_0;
  LogisticModel model_1;

  const LogisticModel& model(std::size_t fold) const { return fold == 0 ? model_0 : model_1; }

  std::vector<std::size_t> fold_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_assignment.size(); ++i) {
      if (fold_assignment[i] == fold) {
        out.push_back(i);
      }
    }
    return out;
  }

  /// Clipped rhat(x_i, a) with each row taken from the model not trained on
  /// record i.
  Table routed_table(const BanditLog& log, const RewardCapFn& cap) const {
    if (log.size() != fold_assignment.size()) {
      throw ValidationError("CrossFitPair: log size differs from fold assignment");
    }
    Table t(static_cast<Eigen::Index>(log.size()), static_cast<Eigen::Index>(log.num_actions()));
    for (std::size_t i = 0; i < log.size(); ++i) {
      const auto& m = model(fold_assignment[i]);
      for (std::size_t a = 0; a < log.num_actions(); ++a) {
        const double c = cap ? cap(log[i].features, a) : std::numeric_limits<double>::infinity();
        t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) =
            predict_reward(m, log[i].features, a, c);
      }
    }
    return t;
  }
};

/// Seeded permutation split into folds of sizes ceil(n/2) and floor(n/2).
inline CrossFitPair cross_fit(const BanditLog& log, const TrainerConfig& config,
                              std::uint64_t seed) {
  if (log.size() < 2) {
    throw ValidationError("cross_fit: need at least 2 records");
  }
  std::vector<std::size_t> perm(log.size());
  std::iota(perm.begin(), perm.end(), 0);
  auto engine = make_engine(seed);
  std::shuffle(perm.begin(), perm.end(), engine);
  CrossFitPair pair;
  pair.fold_assignment.assign(log.size(), 0);
  const std::size_t half = (log.size() + 1) / 2;
  for (std::size_t j = half; j < perm.size(); ++j) {
    pair.fold_assignment[perm[j]] = 1;
  }
  pair.model_0 = train_reward_model(log.subset(pair.fold_indices(1)), config);
  pair.model_1 = train_reward_model(log.subset(pair.fold_indices(0)), config);
  return pair;
}

/// Average of the two fold-restricted DR estimates.
inline EstimateReport cross_fit_dr(const BanditLog& log, const PolicyFn& target,
                                   const CrossFitPair& pair, const RewardCapFn& cap = {}) {
  double total = 0.0;
  for (std::size_t f = 0; f < 2; ++f) {
    const auto sub = log.subset(pair.fold_indices(f));
    total += dr(sub, target, as_reward_model(pair.model(f), cap)).value;
  }
  return {total / 2.0, {}, {}, {}};
}

/// Same value as `cross_fit_dr` from a cached view and a routed model table.
inline EstimateReport cross_fit_dr(const WeightedLog& w, const Table& routed,
                                   const CrossFitPair& pair) {
  const auto y = dr_record_values(w, routed);
  double sums[2] = {0.0, 0.0};
  double counts[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < w.n; ++i) {
    sums[pair.fold_assignment[i]] += y[i];
    counts[pair.fold_assignment[i]] += 1.0;
  }
  return {(sums[0] / counts[0] + sums[1] / counts[1]) / 2.0, {}, {}, {}};
}

// ---------------------------------------------------------------------------
// Model files
//
//   ope-logistic-model 1
//   mode reward|policy
//   num_actions K
//   dim d
//   l2 <real>
//   step <real>
//   iterations <int>
//   standardize 0|1
//   [feature_mean d reals]
//   [feature_scale d reals]
//   weights
//   K lines of d + 1 reals
//
// Reals carry 17 significant digits, so save-then-load is exact.

inline void write_model(std::ostream& out, const LogisticModel& model) {
  out << std::setprecision(17);
  out << "ope-logistic-model 1\n";
  out << "mode " << (model.mode == ModelMode::reward ? "reward" : "policy") << '\n';
  out << "num_actions " << model.num_actions << '\n';
  out << "dim " << model.dim << '\n';
  out << "l2 " << model.config.l2 << '\n';
  out << "step " << model.config.step << '\n';
  out << "iterations " << model.config.iterations << '\n';
  out << "standardize " << (model.feature_mean.size() > 0 ? 1 : 0) << '\n';
  auto write_vec = [&](const char* key, const Eigen::VectorXd& v) {
    out << key;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      out << ' ' << v(j);
    }
    out << '\n';
  };
  if (model.feature_mean.size() > 0) {
    write_vec("feature_mean", model.feature_mean);
    write_vec("feature_scale", model.feature_scale);
  }
  out << "weights\n";
  for (Eigen::Index a = 0; a < model.weights.rows(); ++a) {
    for (Eigen::Index j = 0; j < model.weights.cols(); ++j) {
      out << (j == 0 ? "" : " ") << model.weights(a, j);
    }
    out << '\n';
  }
}

inline LogisticModel read_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::istringstream {
    if (!std::getline(in, line)) {
      throw ParseError("model: unexpected end of file", line_no + 1);
    }
    ++line_no;
    return std::istringstream(line);
  };
  auto expect_key = [&](std::istringstream& s, const char* key) {
    std::string k;
    s >> k;
    if (k != key) {
      throw ParseError(std::string("model: expected '") + key + "'", line_no);
    }
  };
  LogisticModel model;
  {
    auto s = next_line();
    std::string magic;
    int version = 0;
    s >> magic >> version;
    if (magic != "ope-logistic-model" || version != 1) {
      throw ParseError("model: bad header", line_no);
    }
  }
  {
    auto s = next_line();
    expect_key(s, "mode");
    std::string mode;
    s >> mode;
    if (mode == "reward") {
      model.mode = ModelMode::reward;
    } else if (mode == "policy") {
      model.mode = ModelMode::policy;
    } else {
      throw ParseError("model: unknown mode '" + mode + "'", line_no);
    }
  }
  auto read_scalar = [&](const char* key, auto& value) {
    auto s = next_line();
    expect_key(s, key);
    if (!(s >> value)) {
      throw ParseError(std::string("model: bad value for ") + key, line_no);
    }
  };
  int standardize = 0;
  read_scalar("num_actions", model.num_actions);
  read_scalar("dim", model.dim);
  read_scalar("l2", model.config.l2);
  read_scalar("step", model.config.step);
  read_scalar("iterations", model.config.iterations);
  read_scalar("standardize", standardize);
  model.config.standardize = standardize != 0;
  auto read_vec = [&](const char* key) {
    auto s = next_line();
    expect_key(s, key);
    Eigen::VectorXd v(static_cast<Eigen::Index>(model.dim));
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (!(s >> v(j))) {
        throw ParseError(std::string("model: short ") + key, line_no);
      }
    }
    return v;
  };
  if (model.config.standardize) {
    model.feature_mean = read_vec("feature_mean");
    model.feature_scale = read_vec("feature_scale");
  }
  {
    auto s = next_line();
    expect_key(s, "weights");
  }
  model.weights.resize(static_cast<Eigen::Index>(model.num_actions),
                       static_cast<Eigen::Index>(model.dim) + 1);
  for (Eigen::Index a = 0; a < model.weights.rows(); ++a) {
    auto s = next_line();
    for (Eigen::Index j = 0; j < model.weights.cols(); ++j) {
      if (!(s >> model.weights(a, j)) || !std::isfinite(model.weights(a, j))) {
        throw ParseError("model: bad weight", line_no);
      }
    }
  }
  return model;
}

inline void save_model(const std::string& path, const LogisticModel& model) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot open for writing: " + path);
  }
  write_model(out, model);
}

inline LogisticModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open model file: " + path);
  }
  return read_model(in);
}

}  // namespace ope

#endif  // OPE_REWARD_MODEL_HPP
