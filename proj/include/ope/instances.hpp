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

#ifndef OPE_INSTANCES_HPP
#define OPE_INSTANCES_HPP

#include <string>
#include <vector>

#include "ope/core.hpp"
#include "ope/errors.hpp"

// Small finite instances shipped with the library. Rewards are Gaussian with
// means in [0, 1] and R_max = 1 on every cell.

namespace ope {

namespace detail {

inline Table table_from(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.begin()->size());
  Table t(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (const double v : row) {
      t(i, j++) = v;
    }
    ++i;
  }
  return t;
}

}  // namespace detail

/// Five contexts, three actions. Importance weights range from 0 to 14.
inline FiniteInstance instance_5x3() {
  FiniteInstance inst;
  inst.context_probs.resize(5);
  inst.context_probs << 0.3, 0.25, 0.2, 0.15, 0.1;
  inst.logging = detail::table_from({{0.6, 0.3, 0.1},
                                     {0.2, 0.5, 0.3},
                                     {0.05, 0.15, 0.8},
                                     {0.34, 0.33, 0.33},
                                     {0.1, 0.1, 0.8}});
  inst.target = detail::table_from({{0.1, 0.3, 0.6},
                                    {0.5, 0.2, 0.3},
                                    {0.7, 0.2, 0.1},
                                    {0.0, 1.0, 0.0},
                                    {0.2, 0.6, 0.2}});
  inst.mean_reward = detail::table_from({{0.2, 0.5, 0.8},
                                         {0.9, 0.4, 0.1},
                                         {0.3, 0.6, 0.5},
                                         {0.7, 0.2, 0.4},
                                         {0.5, 0.9, 0.3}});
  inst.noise_sd = detail::table_from({{0.3, 0.5, 0.4},
                                      {0.2, 0.6, 0.5},
                                      {0.5, 0.3, 0.2},
                                      {0.4, 0.4, 0.4},
                                      {0.6, 0.2, 0.3}});
  inst.reward_cap = Table::Ones(5, 3);
  inst.noise = RewardNoise::gaussian;
  inst.validate();
  return inst;
}

/// Four contexts, three actions, with one deterministic target row.
inline FiniteInstance instance_4x3() {
  FiniteInstance inst;
  inst.context_probs.resize(4);
  inst.context_probs << 0.4, 0.3, 0.2, 0.1;
  inst.logging = detail::table_from({{0.7, 0.2, 0.1},
                                     {0.1, 0.1, 0.8},
                                     {0.45, 0.45, 0.1},
                                     {0.3, 0.3, 0.4}});
  inst.target = detail::table_from({{0.0, 0.2, 0.8},
                                    {0.6, 0.3, 0.1},
                                    {0.1, 0.1, 0.8},
                                    {0.3, 0.3, 0.4}});
  inst.mean_reward = detail::table_from({{0.1, 0.4, 0.9},
                                         {0.8, 0.5, 0.2},
                                         {0.3, 0.3, 0.7},
                                         {0.6, 0.1, 0.4}});
  inst.noise_sd = Table::Constant(4, 3, 0.4);
  inst.reward_cap = Table::Ones(4, 3);
  inst.noise = RewardNoise::gaussian;
  inst.validate();
  return inst;
}

/// A fixed tabular reward model for the 5x3 instance, deliberately biased.
inline Table instance_5x3_model() {
  return detail::table_from({{0.3, 0.4, 0.6},
                             {0.7, 0.5, 0.2},
                             {0.4, 0.5, 0.5},
                             {0.5, 0.3, 0.5},
                             {0.4, 0.7, 0.4}});
}

/// Looks up a shipped instance by name ("5x3" or "4x3").
inline FiniteInstance shipped_instance(const std::string& name) {
  if (name == "5x3") {
    return instance_5x3();
  }
  if (name == "4x3") {
    return instance_4x3();
  }
  throw ValidationError("unknown instance '" + name + "' (expected 5x3 or 4x3)");
}

inline std::vector<std::string> shipped_instance_names() { return {"5x3", "4x3"}; }

}  // namespace ope

#endif  // OPE_INSTANCES_HPP
