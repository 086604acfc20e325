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

#ifndef OPE_BANDIT_SIM_HPP
#define OPE_BANDIT_SIM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ope/core.hpp"
#include "ope/reward_model.hpp"
#include "ope/rng.hpp"

/**
 * \file
 * \brief Multiclass-to-bandit simulation.
 *
 * Labels become actions; the reward of action a on row (x, y) is 1(a = y).
 * The population is the uniform distribution over dataset rows, so policy
 * values are exact sums over rows.
 */

namespace ope {

struct MulticlassDataset {
  std::vector<FeatureVector> features;
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;
  std::string name;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }

  /// Every class in [0, num_classes) present, finite features, N >= K.
  void validate() const {
    if (labels.empty() || features.size() != labels.size()) {
      throw ValidationError("dataset: empty or mismatched features/labels");
    }
    std::vector<bool> seen(num_classes, false);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= num_classes) {
        throw ValidationError("dataset: label outside [0, num_classes)");
      }
      seen[labels[i]] = true;
      if (features[i].size() != dim() || !all_finite(features[i])) {
        throw ValidationError("dataset: bad feature row " + std::to_string(i));
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw ValidationError("dataset: class indices are not contiguous");
    }
    if (size() < num_classes) {
      throw ValidationError("dataset: fewer rows than classes");
    }
  }
};

enum class RewardChannel {
  /// r = 1(a = label)
  deterministic,
  /// with probability 0.5 the deterministic reward, otherwise a fair coin
  noisy,
};

inline std::string_view to_string(RewardChannel c) {
  return c == RewardChannel::deterministic ? "deterministic" : "noisy";
}

inline RewardChannel parse_channel(std::string_view s) {
  if (s == "deterministic") {
    return RewardChannel::deterministic;
  }
  if (s == "noisy") {
    return RewardChannel::noisy;
  }
  throw ValidationError("unknown reward channel '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// CSV
//
// Header row names feature columns f0..f{d-1} and one `label` column (any
// position). Labels must cover 0..K-1 without gaps.

inline MulticlassDataset read_csv(std::istream& in, std::string name = "dataset") {
  std::string line;
  std::size_t line_no = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    return cells;
  };
  if (!std::getline(in, line)) {
    throw ParseError("csv: empty file", 0);
  }
  ++line_no;
  const auto header = split(line);
  std::size_t label_col = header.size();
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") {
      label_col = c;
    }
  }
  if (label_col == header.size()) {
    throw ParseError("csv: no 'label' column", 1);
  }
  for (std::size_t j = 0;; ++j) {
    const auto it = std::find(header.begin(), header.end(), "f" + std::to_string(j));
    if (it == header.end()) {
      break;
    }
    feature_cols.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  if (feature_cols.empty() || feature_cols.size() + 1 != header.size()) {
    throw ParseError("csv: header must be f0..f{d-1} plus label", 1);
  }
  MulticlassDataset data;
  data.name = std::move(name);
  std::size_t max_label = 0;
  std::set<std::size_t> distinct;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ParseError("csv: wrong number of columns", line_no);
    }
    FeatureVector row(feature_cols.size());
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const auto& cell = cells[feature_cols[j]];
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw ParseError("csv: cannot parse feature '" + cell + "'", line_no);
      }
      if (used != cell.size() || !std::isfinite(v)) {
        throw ParseError("csv: non-finite or malformed feature '" + cell + "'", line_no);
      }
      row[j] = v;
    }
    const auto& lc = cells[label_col];
    if (lc.empty() || lc.find_first_not_of("0123456789") != std::string::npos) {
      throw ParseError("csv: label must be a nonnegative integer", line_no);
    }
    const auto label = static_cast<std::size_t>(std::stoull(lc));
    max_label = std::max(max_label, label);
    distinct.insert(label);
    data.features.push_back(std::move(row));
    data.labels.push_back(label);
  }
  if (data.labels.empty()) {
    throw ParseError("csv: no data rows", 0);
  }
  if (distinct.size() != max_label + 1) {
    throw ValidationError("csv: labels must be contiguous from 0 (found " +
                          std::to_string(distinct.size()) + " distinct, max " +
                          std::to_string(max_label) + ")");
  }
  data.num_classes = max_label + 1;
  data.validate();
  return data;
}

inline void write_csv(std::ostream& out, const MulticlassDataset& data) {
  out << std::setprecision(17);
  for (std::size_t j = 0; j < data.dim(); ++j) {
    out << 'f' << j << ',';
  }
  out << "label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (const double v : data.features[i]) {
      out << v << ',';
    }
    out << data.labels[i] << '\n';
  }
}

inline MulticlassDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open dataset file: " + path);
  }
  auto stem = path.substr(path.find_last_of('/') == std::string::npos ? 0 : path.find_last_of('/') + 1);
  if (const auto dot = stem.rfind('.'); dot != std::string::npos) {
    stem.resize(dot);
  }
  return read_csv(in, stem);
}

inline void save_csv(const std::string& path, const MulticlassDataset& data) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot open for writing: " + path);
  }
  write_csv(out, data);
}

// ---------------------------------------------------------------------------
// Generators

/// Gaussian class clusters with identity covariance. Class means have norm
/// `separation`: orthogonal random directions when K <= d, otherwise evenly
/// spaced on a circle in a random plane. For d = 1 the means are spread
/// evenly over [-separation, separation].
inline MulticlassDataset synth_dataset(std::size_t num_classes, std::size_t dim,
                                       std::size_t per_class, double separation,
                                       std::uint64_t seed) {
  if (num_classes < 2 || dim < 1 || per_class < 1) {
    throw ValidationError("synth_dataset: need K >= 2, d >= 1, per_class >= 1");
  }
  auto engine = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto random_unit = [&] {
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      v(j) = normal(engine);
    }
    return Eigen::VectorXd(v / v.norm());
  };
  std::vector<Eigen::VectorXd> means;
  if (dim == 1) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      Eigen::VectorXd m(1);
      m(0) = separation * (2.0 * static_cast<double>(c) / static_cast<double>(num_classes - 1) - 1.0);
      means.push_back(m);
    }
  } else if (num_classes <= dim) {
    for (std::size_t c = 0; c < num_classes; ++c) {
      Eigen::VectorXd v = random_unit();
      for (const auto& prev : means) {
        v -= v.dot(prev) * prev;
      }
      means.push_back(v / v.norm());
    }
    for (auto& m : means) {
      m *= separation;
    }
  } else {
    const Eigen::VectorXd u = random_unit();
    Eigen::VectorXd v = random_unit();
    v -= v.dot(u) * u;
    v /= v.norm();
    const double two_pi = 2.0 * std::acos(-1.0);
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double angle = two_pi * static_cast<double>(c) / static_cast<double>(num_classes);
      means.push_back(separation * (std::cos(angle) * u + std::sin(angle) * v));
    }
  }
  MulticlassDataset data;
  data.num_classes = num_classes;
  data.name = "synth-k" + std::to_string(num_classes) + "-d" + std::to_string(dim);
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t r = 0; r < per_class; ++r) {
      FeatureVector x(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        x[j] = means[c](static_cast<Eigen::Index>(j)) + normal(engine);
      }
      data.features.push_back(std::move(x));
      data.labels.push_back(c);
    }
  }
  return data;
}

/// Keeps each row with probability sigmoid(2 w.(x - mean) / s), where w is a
/// random unit direction and s the standard deviation of the projections.
/// Classes that end up missing get one uniformly chosen row forced in.
inline MulticlassDataset covariate_shift_subsample(const MulticlassDataset& data,
                                                   std::uint64_t seed) {
  if (data.size() < 10) {
    throw ValidationError("covariate_shift_subsample: need at least 10 rows");
  }
  const std::size_t d = data.dim();
  auto engine = make_engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  Eigen::VectorXd w(static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    w(j) = normal(engine);
  }
  w /= w.norm();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  for (const auto& x : data.features) {
    mean += Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(d));
  }
  mean /= static_cast<double>(data.size());
  std::vector<double> proj(data.size());
  double ss = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = Eigen::Map<const Eigen::VectorXd>(data.features[i].data(), static_cast<Eigen::Index>(d));
    proj[i] = w.dot(x - mean);
    ss += proj[i] * proj[i];
  }
  const double sd = std::sqrt(ss / static_cast<double>(data.size()));
  const double scale = sd > 0.0 ? sd : 1.0;
  std::vector<bool> keep(data.size(), false);
  for (std::size_t i = 0; i < data.size(); ++i) {
    keep[i] = uniform(engine) < sigmoid(2.0 * proj[i] / scale);
  }
  for (std::size_t c = 0; c < data.num_classes; ++c) {
    std::vector<std::size_t> rows;
    bool present = false;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.labels[i] == c) {
        rows.push_back(i);
        present = present || keep[i];
      }
    }
    if (!present && !rows.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
      keep[rows[pick(engine)]] = true;
    }
  }
  MulticlassDataset out;
  out.num_classes = data.num_classes;
  out.name = data.name + "-shifted";
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (keep[i]) {
      out.features.push_back(data.features[i]);
      out.labels.push_back(data.labels[i]);
    }
  }
  return out;
}

struct PolicyPair {
  std::shared_ptr<const LogisticModel> target_model;
  std::shared_ptr<const LogisticModel> logging_model;
  PolicyFn target;
  PolicyFn logging;
};

/// Target: argmax of a softmax model fit on all rows. Logging: softmax
/// probabilities of a model fit on a covariate-shifted subsample.
inline PolicyPair make_policies(const MulticlassDataset& data, const TrainerConfig& config,
                                std::uint64_t seed) {
  data.validate();
  TrainerConfig cfg = config;
  cfg.num_classes = data.num_classes;
  auto target_model =
      std::make_shared<const LogisticModel>(train_policy_model(data.features, data.labels, cfg));
  const auto shifted = covariate_shift_subsample(data, seed);
  auto logging_model =
      std::make_shared<const LogisticModel>(train_policy_model(shifted.features, shifted.labels, cfg));
  return PolicyPair{target_model, logging_model, argmax_policy(target_model),
                    softmax_policy(logging_model)};
}

namespace detail {

/// Inverse-CDF draw; never returns an action with zero probability.
inline std::size_t sample_action(std::span<const double> probs, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (probs[a] > 0.0) {
      cumulative += probs[a];
      last_positive = a;
      if (u < cumulative) {
        return a;
      }
    }
  }
  return last_positive;
}

}  // namespace detail

/// n records: rows uniformly with replacement, actions from `logging`,
/// rewards from `channel`. Records carry the full logging distribution.
inline BanditLog simulate_log(const MulticlassDataset& data, const PolicyFn& logging,
                              RewardChannel channel, std::size_t n, std::uint64_t seed) {
  if (n == 0) {
    throw ValidationError("simulate_log: n must be positive");
  }
  if (logging.num_actions() != data.num_classes) {
    throw ValidationError("simulate_log: logging policy action count differs from dataset");
  }
  auto engine = make_engine(seed);
  std::uniform_int_distribution<std::size_t> row_dist(0, data.size() - 1);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<LogRecord> records;
  records.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t row = row_dist(engine);
    LogRecord rec;
    rec.features = data.features[row];
    rec.logging_dist = logging(rec.features);
    rec.action = detail::sample_action(rec.logging_dist, uniform(engine));
    rec.logging_prob = rec.logging_dist[rec.action];
    const double truth = rec.action == data.labels[row] ? 1.0 : 0.0;
    if (channel == RewardChannel::deterministic) {
      rec.reward = truth;
    } else {
      const bool reveal = uniform(engine) < 0.5;
      const bool coin = uniform(engine) < 0.5;
      rec.reward = reveal ? truth : (coin ? 1.0 : 0.0);
    }
    records.push_back(std::move(rec));
  }
  return BanditLog(std::move(records), data.num_classes);
}

/// Exact value of `target` under the uniform population over rows.
inline double ground_truth_value(const MulticlassDataset& data, const PolicyFn& target,
                                 RewardChannel channel) {
  std::vector<double> pi(data.num_classes);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    target.evaluate(data.features[i], pi);
    total += pi[data.labels[i]];
  }
  const double v_det = total / static_cast<double>(data.size());
  return channel == RewardChannel::deterministic ? v_det : 0.5 * v_det + 0.25;
}

/// 100, 200, 500, 1000, 2000, 5000, 10000, 20000, ... below N, then N itself.
inline std::vector<std::size_t> size_schedule(std::size_t population) {
  std::vector<std::size_t> sizes;
  const std::size_t steps[3] = {1, 2, 5};
  for (std::size_t scale = 100;; scale *= 10) {
    for (const auto s : steps) {
      const std::size_t v = s * scale;
      if (v >= population) {
        sizes.push_back(population);
        return sizes;
      }
      sizes.push_back(v);
    }
  }
}

}  // namespace ope

#endif  // OPE_BANDIT_SIM_HPP
