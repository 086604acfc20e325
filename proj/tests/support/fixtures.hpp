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

// Hand-rolled random generators for property tests.

#ifndef OPE_TESTS_FIXTURES_HPP
#define OPE_TESTS_FIXTURES_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "ope/core.hpp"
#include "ope/estimators.hpp"

namespace fixture {

struct RandomCase {
  ope::BanditLog log;
  ope::PolicyFn target;
  ope::Table target_table;   // contexts x K
  ope::Table logging_table;  // contexts x K
  ope::Table model_table;    // contexts x K, values in [0, 1]
  ope::RewardModel model;
};

/// Random probability row; with `sparse` some entries are exactly zero.
inline std::vector<double> random_row(std::mt19937_64& g, std::size_t k, bool sparse) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> row(k);
  double total = 0.0;
  for (auto& v : row) {
    v = u(g);
    if (sparse && u(g) < 0.3) {
      v = 0.0;
    }
    total += v;
  }
  if (total == 0.0) {
    row[0] = 1.0;
    total = 1.0;
  }
  for (auto& v : row) {
    v /= total;
  }
  return row;
}

/// A log over `contexts` discrete contexts (feature {m}) with full logging
/// distributions, a tabular target that is absolutely continuous w.r.t. the
/// logging policy (it may put zero mass on logged actions), and a tabular
/// reward model.
inline RandomCase random_case(std::uint64_t seed, std::size_t n = 0, std::size_t k = 0,
                              std::size_t contexts = 0) {
  std::mt19937_64 g(seed);
  std::uniform_int_distribution<std::size_t> pick_k(2, 6);
  std::uniform_int_distribution<std::size_t> pick_n(1, 40);
  std::uniform_int_distribution<std::size_t> pick_c(1, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  k = k == 0 ? pick_k(g) : k;
  n = n == 0 ? pick_n(g) : n;
  contexts = contexts == 0 ? pick_c(g) : contexts;
  const auto ci = static_cast<Eigen::Index>(contexts);
  const auto ki = static_cast<Eigen::Index>(k);
  ope::Table lg(ci, ki);
  ope::Table tg(ci, ki);
  ope::Table md(ci, ki);
  for (Eigen::Index m = 0; m < ci; ++m) {
    const auto l = random_row(g, k, true);
    std::vector<double> t = random_row(g, k, true);
    double total = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      if (l[a] == 0.0) {
        t[a] = 0.0;
      }
      total += t[a];
    }
    if (total == 0.0) {
      for (std::size_t a = 0; a < k; ++a) {
        if (l[a] > 0.0) {
          t[a] = 1.0;
          total = 1.0;
          break;
        }
      }
    }
    for (std::size_t a = 0; a < k; ++a) {
      lg(m, static_cast<Eigen::Index>(a)) = l[a];
      tg(m, static_cast<Eigen::Index>(a)) = t[a] / total;
      md(m, static_cast<Eigen::Index>(a)) = u(g);
    }
  }
  std::vector<ope::LogRecord> records;
  std::uniform_int_distribution<std::size_t> pick_ctx(0, contexts - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto m = static_cast<Eigen::Index>(pick_ctx(g));
    ope::LogRecord rec;
    rec.features = {static_cast<double>(m)};
    rec.logging_dist.assign(lg.row(m).data(), lg.row(m).data() + ki);
    const double draw = u(g);
    double cum = 0.0;
    rec.action = k;
    for (std::size_t a = 0; a < k; ++a) {
      if (rec.logging_dist[a] > 0.0) {
        cum += rec.logging_dist[a];
        rec.action = a;
        if (draw < cum) {
          break;
        }
      }
    }
    rec.logging_prob = rec.logging_dist[rec.action];
    rec.reward = u(g) < 0.5 ? 1.0 : 0.0;
    records.push_back(std::move(rec));
  }
  ope::BanditLog log(std::move(records), k);
  auto target = ope::PolicyFn::tabular(tg);
  auto model = ope::RewardModel::tabular(md);
  return RandomCase{std::move(log), std::move(target), tg, lg, md, std::move(model)};
}

inline ope::Table table_lookup(const ope::BanditLog& log, const ope::Table& per_context) {
  ope::Table t(static_cast<Eigen::Index>(log.size()), per_context.cols());
  for (std::size_t i = 0; i < log.size(); ++i) {
    t.row(static_cast<Eigen::Index>(i)) =
        per_context.row(static_cast<Eigen::Index>(log[i].features[0]));
  }
  return t;
}

}  // namespace fixture

#endif  // OPE_TESTS_FIXTURES_HPP
