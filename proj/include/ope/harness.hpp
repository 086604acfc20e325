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

#ifndef OPE_HARNESS_HPP
#define OPE_HARNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ope/bandit_sim.hpp"
#include "ope/core.hpp"
#include "ope/errors.hpp"
#include "ope/estimators.hpp"
#include "ope/reward_model.hpp"
#include "ope/rng.hpp"
#include "ope/tuning.hpp"

/**
 * \file
 * \brief Experiment orchestration: the replication loop over datasets, log
 * sizes and replicates, truncated-MSE aggregation and result files.
 *
 * Seeds. Replicate r of size index s on dataset d uses
 * `derive_seed(master, {d, s, r})` as its base; the log is simulated from
 * `derive_seed(base, {0})` and the cross-fitting split from
 * `derive_seed(base, {1})`. The policies of dataset d are trained with seed
 * `derive_seed(master, {d})`. No seed depends on the worker that runs it.
 *
 * Estimator wiring for one simulated log of size n:
 *
 * | name      | reward models                                                   |
 * |-----------|-----------------------------------------------------------------|
 * | ips       | none                                                            |
 * | dm        | logistic model fit on the whole log                             |
 * | dr        | two-fold cross-fitted models, average of the fold estimates     |
 * | switch    | imputes with the dm model                                       |
 * | switch-dr | cross-fitted models inside, dm model for imputation             |
 * | trim-ips  | SWITCH with a zero model                                        |
 * | trun-ips  | weights capped at tau, then self-normalized                     |
 * | magic     | simplex combination of SWITCH over the grid (simplified variant) |
 *
 * All tunable estimators use the data-dependent 21-point grid and R_max = 1.
 */

namespace ope {

inline constexpr const char* kSweepSchema = "ope-sweep/1";
inline constexpr const char* kResultsHeader =
    "dataset,channel,n,estimator,replicates,mse_trunc,rel_mse,std_err,tau_mean";

// ---------------------------------------------------------------------------
// Configuration

struct SyntheticSpec {
  std::size_t num_classes = 3;
  std::size_t dim = 2;
  std::size_t per_class = 200;
  double separation = 2.0;
  std::uint64_t seed = 0;
};

struct DatasetSpec {
  std::string name;
  /// CSV path (resolved against the config file's directory) or a synthetic spec.
  std::optional<std::string> csv_path;
  std::optional<SyntheticSpec> synthetic;
};

struct EstimatorSpec {
  std::string name;
  /// Fixed threshold; unset means tuned automatically.
  std::optional<double> tau;

  std::string label() const {
    if (!tau) {
      return name;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s@%.17g", name.c_str(), *tau);
    return buf;
  }
};

struct ExperimentConfig {
  std::string schema = kSweepSchema;
  std::vector<DatasetSpec> datasets;
  RewardChannel channel = RewardChannel::noisy;
  /// Explicit sizes; empty means the schedule 100, 200, 500, ... up to N.
  std::vector<std::size_t> sizes;
  std::size_t replicates = 500;
  std::vector<EstimatorSpec> estimators;
  std::uint64_t master_seed = 0;
  std::size_t grid_size = 21;
  bool oracle = false;
  double truncation = 1.0;
  TrainerConfig trainer;
  std::string output;

  void validate() const;
};

inline bool is_estimator_name(std::string_view name) {
  return std::find(kEstimatorNames.begin(), kEstimatorNames.end(), name) != kEstimatorNames.end();
}

inline bool is_tunable(std::string_view name) {
  return name == "switch" || name == "switch-dr" || name == "trim-ips" || name == "trun-ips";
}

inline void ExperimentConfig::validate() const {
  if (schema != kSweepSchema) {
    throw ValidationError("config: schema must be \"" + std::string(kSweepSchema) + "\", got \"" +
                          schema + "\"");
  }
  if (datasets.empty()) {
    throw ValidationError("config: no datasets");
  }
  for (const auto& d : datasets) {
    if (d.csv_path.has_value() == d.synthetic.has_value()) {
      throw ValidationError("config: dataset '" + d.name + "' needs exactly one of csv or synthetic");
    }
  }
  if (replicates < 1) {
    throw ValidationError("config: replicates must be >= 1");
  }
  if (!sizes.empty()) {
    if (sizes.front() == 0 || !std::is_sorted(sizes.begin(), sizes.end())) {
      throw ValidationError("config: sizes must be positive and nondecreasing");
    }
  }
  if (estimators.empty()) {
    throw ValidationError("config: no estimators");
  }
  for (const auto& e : estimators) {
    if (!is_estimator_name(e.name)) {
      throw ValidationError("config: unknown estimator '" + e.name + "'");
    }
    if (e.tau && !is_tunable(e.name)) {
      throw ValidationError("config: estimator '" + e.name + "' takes no tau");
    }
    if (e.tau && !(*e.tau >= 0.0 && std::isfinite(*e.tau))) {
      throw ValidationError("config: tau must be finite and >= 0");
    }
    if (e.tau && e.name == "trun-ips" && !(*e.tau > 0.0)) {
      throw ValidationError("config: trun-ips tau must be > 0");
    }
  }
  if (grid_size < 1) {
    throw ValidationError("config: grid_size must be >= 1");
  }
  if (!(truncation > 0.0)) {
    throw ValidationError("config: truncation must be > 0");
  }
}

/// Parses the JSON config document. Relative csv paths are resolved against
/// `base_dir`.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::string& base_dir = "") {
  ExperimentConfig c;
  try {
    if (!j.is_object()) {
      throw ValidationError("config: top level must be an object");
    }
    static const std::vector<std::string> known = {
        "schema",  "datasets", "channel", "sizes",   "replicates", "estimators",
        "seed",    "grid_size", "oracle", "truncation", "trainer", "output"};
    for (const auto& [key, _] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw ValidationError("config: unknown key '" + key + "'");
      }
    }
    c.schema = j.value("schema", std::string());
    for (const auto& d : j.at("datasets")) {
      DatasetSpec spec;
      spec.name = d.at("name").get<std::string>();
      if (d.contains("csv")) {
        std::filesystem::path p = d.at("csv").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) {
          p = std::filesystem::path(base_dir) / p;
        }
        spec.csv_path = p.string();
      }
      if (d.contains("synthetic")) {
        const auto& s = d.at("synthetic");
        SyntheticSpec syn;
        syn.num_classes = s.at("num_classes").get<std::size_t>();
        syn.dim = s.at("dim").get<std::size_t>();
        syn.per_class = s.value("per_class", syn.per_class);
        syn.separation = s.value("separation", syn.separation);
        syn.seed = s.value("seed", syn.seed);
        spec.synthetic = syn;
      }
      c.datasets.push_back(std::move(spec));
    }
    if (j.contains("channel")) {
      c.channel = parse_channel(j.at("channel").get<std::string>());
    }
    if (j.contains("sizes")) {
      for (const auto& s : j.at("sizes")) {
        const auto v = s.get<long long>();
        if (v <= 0) {
          throw ValidationError("config: sizes must be positive and nondecreasing");
        }
        c.sizes.push_back(static_cast<std::size_t>(v));
      }
    }
    if (j.contains("replicates")) {
      const auto v = j.at("replicates").get<long long>();
      if (v < 1) {
        throw ValidationError("config: replicates must be >= 1");
      }
      c.replicates = static_cast<std::size_t>(v);
    }
    if (j.contains("estimators")) {
      for (const auto& e : j.at("estimators")) {
        EstimatorSpec spec;
        if (e.is_string()) {
          spec.name = e.get<std::string>();
        } else {
          spec.name = e.at("name").get<std::string>();
          if (e.contains("tau")) {
            const auto& t = e.at("tau");
            if (!(t.is_string() && t.get<std::string>() == "auto")) {
              spec.tau = t.get<double>();
            }
          }
        }
        c.estimators.push_back(std::move(spec));
      }
    } else {
      for (const auto name : kEstimatorNames) {
        c.estimators.push_back({std::string(name), std::nullopt});
      }
    }
    c.master_seed = j.value("seed", c.master_seed);
    c.grid_size = j.value("grid_size", c.grid_size);
    c.oracle = j.value("oracle", c.oracle);
    c.truncation = j.value("truncation", c.truncation);
    if (j.contains("trainer")) {
      const auto& t = j.at("trainer");
      c.trainer.l2 = t.value("l2", c.trainer.l2);
      c.trainer.step = t.value("step", c.trainer.step);
      c.trainer.iterations = t.value("iterations", c.trainer.iterations);
      c.trainer.standardize = t.value("standardize", c.trainer.standardize);
    }
    c.output = j.value("output", c.output);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open config file: " + path);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config " + path + ": " + e.what(), 0);
  }
  return parse_config(j, std::filesystem::path(path).parent_path().string());
}

inline MulticlassDataset load_dataset(const DatasetSpec& spec) {
  if (spec.csv_path) {
    auto data = load_csv(*spec.csv_path);
    data.name = spec.name;
    return data;
  }
  const auto& s = *spec.synthetic;
  auto data = synth_dataset(s.num_classes, s.dim, s.per_class, s.separation, s.seed);
  data.name = spec.name;
  return data;
}

// ---------------------------------------------------------------------------
// Aggregation

struct ResultRow {
  std::string dataset;
  RewardChannel channel = RewardChannel::noisy;
  std::size_t n = 0;
  std::string estimator;
  std::size_t replicates = 0;
  double mse_trunc = 0.0;
  double rel_mse = 0.0;
  double std_err = 0.0;
  std::optional<double> tau_mean;
  /// Untruncated MSE and the largest absolute error (not written to the CSV).
  double mse_raw = 0.0;
  double max_abs_error = 0.0;
};

struct TruncatedMse {
  double mse = 0.0;
  double std_err = 0.0;
  double mse_raw = 0.0;
  double max_abs_error = 0.0;
};

/// Mean of min(e^2, truncation) and its standard error (0 for one replicate).
inline TruncatedMse truncated_mse(std::span<const double> errors, double truncation = 1.0) {
  if (errors.empty()) {
    throw ValidationError("truncated_mse: no errors");
  }
  TruncatedMse out;
  const double r = static_cast<double>(errors.size());
  for (const double e : errors) {
    out.mse += std::min(e * e, truncation);
    out.mse_raw += e * e;
    out.max_abs_error = std::max(out.max_abs_error, std::abs(e));
  }
  out.mse /= r;
  out.mse_raw /= r;
  if (errors.size() > 1) {
    double ss = 0.0;
    for (const double e : errors) {
      const double d = std::min(e * e, truncation) - out.mse;
      ss += d * d;
    }
    out.std_err = std::sqrt(ss / (r - 1.0) / r);
  }
  return out;
}

/// mse / ips_mse; 1 when both are zero.
inline double relative_mse(double mse, double ips_mse) {
  if (ips_mse == 0.0) {
    return mse == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return mse / ips_mse;
}

/// Index of the candidate whose truncated MSE across replicates is smallest
/// (ties to the lowest index). `values[r][j]` is candidate j on replicate r.
inline std::size_t oracle_choice(const std::vector<std::vector<double>>& values, double truth,
                                 double truncation = 1.0) {
  if (values.empty() || values.front().empty()) {
    throw ValidationError("oracle_choice: empty candidate table");
  }
  const std::size_t count = values.front().size();
  std::size_t best = 0;
  double best_mse = std::numeric_limits<double>::infinity();
  std::vector<double> errors(values.size());
  for (std::size_t j = 0; j < count; ++j) {
    for (std::size_t r = 0; r < values.size(); ++r) {
      errors[r] = values[r].at(j) - truth;
    }
    const double m = truncated_mse(errors, truncation).mse;
    if (m < best_mse) {
      best_mse = m;
      best = j;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// One replicate

inline constexpr std::array<const char*, 4> kOracleFamilies = {"switch", "switch-dr", "trim-ips",
                                                              "trun-ips"};

struct ReplicateOutcome {
  /// IPS is always computed; it is the relative-MSE reference.
  double ips_value = 0.0;
  std::vector<double> values;
  std::vector<double> taus;  // NaN when not applicable
  /// Tuning objective per grid index for each configured auto-tuned estimator.
  std::vector<std::vector<double>> objectives;
  std::vector<double> grid;
  /// oracle[f][j] for the families in kOracleFamilies.
  std::vector<std::vector<double>> oracle;
};

struct ReplicateContext {
  const ExperimentConfig* config;
  const MulticlassDataset* data;
  const PolicyPair* policies;
};

/// Trun-IPS value with the zero-normalizer case mapped to 0.
inline double trun_or_zero(const WeightedLog& w, double tau) {
  double den = 0.0;
  for (std::size_t i = 0; i < w.n; ++i) {
    den += std::min(w.logged_weight[i], tau);
  }
  return den > 0.0 ? trun_ips(w, tau).value : 0.0;
}

/// Reward-model tables consumed by the named estimators. `dm` is used for
/// direct terms and imputation, `dr` inside doubly robust corrections. With
/// `pair` set, dr is the average of the two fold-restricted estimates.
struct ModelTables {
  Table dm;
  Table dr;
  const CrossFitPair* pair = nullptr;
};

/// Runs one named estimator. `trace` receives the tuning trace of
/// auto-tuned estimators and `magic` the MAGIC diagnostics.
inline EstimateReport estimate_named(const EstimatorSpec& spec, const WeightedLog& w,
                                     const ModelTables& models, const Table& caps,
                                     std::span<const double> grid, TuningTrace* trace = nullptr,
                                     MagicResult* magic = nullptr) {
  const auto& name = spec.name;
  TuningTrace local;
  TuningTrace* t = trace != nullptr ? trace : &local;
  EstimateReport report;
  if (name == "ips") {
    report = ips(w);
  } else if (name == "dm") {
    report = dm(w, models.dm);
  } else if (name == "dr") {
    report = models.pair != nullptr ? cross_fit_dr(w, models.dr, *models.pair) : dr(w, models.dr);
  } else if (name == "switch") {
    report = spec.tau ? switch_estimate(w, models.dm, *spec.tau)
                      : switch_auto(w, models.dm, caps, grid, t);
  } else if (name == "switch-dr") {
    report = spec.tau ? switch_dr_estimate(w, models.dr, models.dm, *spec.tau)
                      : switch_dr_auto(w, models.dr, models.dm, caps, grid, t);
  } else if (name == "trim-ips") {
    report = spec.tau ? trim_ips(w, *spec.tau) : trim_ips_auto(w, caps, grid, t);
  } else if (name == "trun-ips") {
    double tau = 0.0;
    if (spec.tau) {
      tau = *spec.tau;
    } else {
      *t = select_tau_trun(w, caps, grid);
      tau = t->chosen_tau();
      report.var_hat = t->var_hats[t->chosen_index];
      report.bias_bound_sq = t->bias_bounds_sq[t->chosen_index];
    }
    report.value = trun_or_zero(w, tau);
  } else if (name == "magic") {
    auto result = magic_combine(w, models.dm, grid);
    report = result.report;
    if (magic != nullptr) {
      *magic = std::move(result);
    }
  } else {
    throw ValidationError("unknown estimator '" + name + "'");
  }
  if (is_tunable(name)) {
    report.tau = spec.tau ? *spec.tau : t->chosen_tau();
  }
  return report;
}

inline ReplicateOutcome run_replicate(const ReplicateContext& ctx, std::size_t n,
                                      std::uint64_t base_seed) {
  const auto& cfg = *ctx.config;
  const auto log =
      simulate_log(*ctx.data, ctx.policies->logging, cfg.channel, n, derive_seed(base_seed, {0}));
  const auto w = weigh(log, ctx.policies->target);
  const auto caps = cap_table(log, constant_cap(1.0));
  const auto grid = threshold_grid(w, cfg.grid_size);

  bool need_dm = cfg.oracle;
  bool need_cross = cfg.oracle;
  for (const auto& e : cfg.estimators) {
    need_dm = need_dm || e.name == "dm" || e.name == "switch" || e.name == "switch-dr" ||
              e.name == "magic";
    need_cross = need_cross || e.name == "dr" || e.name == "switch-dr";
  }
  ModelTables models;
  if (need_dm) {
    models.dm =
        tabulate(log, as_reward_model(train_reward_model(log, cfg.trainer), constant_cap(1.0)));
  }
  std::optional<CrossFitPair> pair;
  if (need_cross) {
    pair = cross_fit(log, cfg.trainer, derive_seed(base_seed, {1}));
    models.dr = pair->routed_table(log, constant_cap(1.0));
    models.pair = &*pair;
  }

  ReplicateOutcome out;
  out.grid = grid;
  out.ips_value = ips(w).value;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& e : cfg.estimators) {
    TuningTrace trace;
    const auto report = estimate_named(e, w, models, caps, grid, &trace);
    out.values.push_back(report.value);
    out.taus.push_back(report.tau.value_or(nan));
    out.objectives.push_back(is_tunable(e.name) && !e.tau ? trace.objective : std::vector<double>{});
  }
  const auto& dm_table = models.dm;
  const auto& routed = models.dr;
  if (cfg.oracle) {
    const auto zero = zero_table(w);
    out.oracle.resize(kOracleFamilies.size());
    for (const double tau : grid) {
      out.oracle[0].push_back(switch_estimate(w, dm_table, tau).value);
      out.oracle[1].push_back(switch_dr_estimate(w, routed, dm_table, tau).value);
      out.oracle[2].push_back(switch_estimate(w, zero, tau).value);
      out.oracle[3].push_back(trun_or_zero(w, tau));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweep

/// Per-grid-index means of the tuning objective for one auto-tuned row.
struct TraceRow {
  std::string dataset;
  RewardChannel channel = RewardChannel::noisy;
  std::size_t n = 0;
  std::string estimator;
  std::size_t grid_index = 0;
  double tau_mean = 0.0;
  double objective_mean = 0.0;
  double chosen_fraction = 0.0;
};

struct SweepOutput {
  std::vector<ResultRow> rows;
  std::vector<ResultRow> oracle_rows;
  std::vector<TraceRow> traces;
  double truncation = 1.0;
};

inline SweepOutput run_sweep(const ExperimentConfig& config,
                             std::size_t workers = default_workers()) {
  config.validate();
  SweepOutput output;
  output.truncation = config.truncation;
  for (std::size_t d = 0; d < config.datasets.size(); ++d) {
    const auto data = load_dataset(config.datasets[d]);
    const auto policies = make_policies(data, config.trainer, derive_seed(config.master_seed, {d}));
    const double truth = ground_truth_value(data, policies.target, config.channel);
    const auto sizes = config.sizes.empty() ? size_schedule(data.size()) : config.sizes;
    const ReplicateContext ctx{&config, &data, &policies};

    for (std::size_t s = 0; s < sizes.size(); ++s) {
      const std::size_t n = sizes[s];
      const std::size_t reps = config.replicates;
      std::vector<ReplicateOutcome> outcomes(reps);
      std::vector<std::string> errors(reps);
      parallel_for(reps, workers, [&](std::size_t r) {
        try {
          outcomes[r] = run_replicate(ctx, n, derive_seed(config.master_seed, {d, s, r}));
        } catch (const std::exception& e) {
          errors[r] = e.what();
        }
      });
      for (std::size_t r = 0; r < reps; ++r) {
        if (!errors[r].empty()) {
          std::ostringstream msg;
          msg << "replicate failed: dataset=" << data.name << " (index " << d << ") n=" << n
              << " (size index " << s << ") replicate=" << r << " master_seed="
              << config.master_seed << " seed=" << derive_seed(config.master_seed, {d, s, r})
              << ": " << errors[r];
          throw ComputationError(msg.str());
        }
      }

      auto make_row = [&](const std::string& label, const std::vector<double>& values,
                          const std::vector<double>& taus) {
        std::vector<double> errs(reps);
        for (std::size_t r = 0; r < reps; ++r) {
          errs[r] = values[r] - truth;
        }
        const auto agg = truncated_mse(errs, config.truncation);
        ResultRow row;
        row.dataset = data.name;
        row.channel = config.channel;
        row.n = n;
        row.estimator = label;
        row.replicates = reps;
        row.mse_trunc = agg.mse;
        row.std_err = agg.std_err;
        row.mse_raw = agg.mse_raw;
        row.max_abs_error = agg.max_abs_error;
        if (!taus.empty() && !std::isnan(taus.front())) {
          double total = 0.0;
          for (const double t : taus) {
            total += t;
          }
          row.tau_mean = total / static_cast<double>(reps);
        }
        return row;
      };

      std::vector<double> ips_values(reps);
      for (std::size_t r = 0; r < reps; ++r) {
        ips_values[r] = outcomes[r].ips_value;
      }
      const double ips_mse = make_row("ips", ips_values, {}).mse_trunc;

      for (std::size_t e = 0; e < config.estimators.size(); ++e) {
        std::vector<double> values(reps);
        std::vector<double> taus(reps);
        for (std::size_t r = 0; r < reps; ++r) {
          values[r] = outcomes[r].values[e];
          taus[r] = outcomes[r].taus[e];
        }
        auto row = make_row(config.estimators[e].label(), values, taus);
        row.rel_mse = config.estimators[e].name == "ips" ? 1.0 : relative_mse(row.mse_trunc, ips_mse);
        output.rows.push_back(row);

        if (!outcomes.front().objectives[e].empty()) {
          const std::size_t g = outcomes.front().grid.size();
          for (std::size_t j = 0; j < g; ++j) {
            TraceRow t;
            t.dataset = data.name;
            t.channel = config.channel;
            t.n = n;
            t.estimator = row.estimator;
            t.grid_index = j;
            for (std::size_t r = 0; r < reps; ++r) {
              t.tau_mean += outcomes[r].grid[j];
              t.objective_mean += outcomes[r].objectives[e][j];
              t.chosen_fraction += outcomes[r].taus[e] == outcomes[r].grid[j] ? 1.0 : 0.0;
            }
            t.tau_mean /= static_cast<double>(reps);
            t.objective_mean /= static_cast<double>(reps);
            t.chosen_fraction /= static_cast<double>(reps);
            output.traces.push_back(t);
          }
        }
      }

      if (config.oracle) {
        for (std::size_t f = 0; f < kOracleFamilies.size(); ++f) {
          std::vector<std::vector<double>> table(reps);
          for (std::size_t r = 0; r < reps; ++r) {
            table[r] = outcomes[r].oracle[f];
          }
          const std::size_t j = oracle_choice(table, truth, config.truncation);
          std::vector<double> values(reps);
          std::vector<double> taus(reps);
          for (std::size_t r = 0; r < reps; ++r) {
            values[r] = table[r][j];
            taus[r] = outcomes[r].grid[j];
          }
          auto row = make_row(std::string(kOracleFamilies[f]) + "-oracle", values, taus);
          row.rel_mse = relative_mse(row.mse_trunc, ips_mse);
          output.oracle_rows.push_back(row);
        }
      }
    }
  }
  return output;
}

/// Rows for the configured estimators.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  auto cfg = config;
  cfg.oracle = false;
  return run_sweep(cfg).rows;
}

/// Oracle-tau rows for SWITCH, SWITCH-DR, TrimIPS and TrunIPS.
inline std::vector<ResultRow> run_oracle_tau(const ExperimentConfig& config) {
  if (!config.oracle) {
    throw ValidationError("run_oracle_tau: config does not request oracle mode");
  }
  return run_sweep(config).oracle_rows;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    out << r.dataset << ',' << to_string(r.channel) << ',' << r.n << ',' << r.estimator << ','
        << r.replicates << ',' << format_real(r.mse_trunc) << ',' << format_real(r.rel_mse) << ','
        << format_real(r.std_err) << ',' << (r.tau_mean ? format_real(*r.tau_mean) : "") << '\n';
  }
}

inline void write_traces_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "dataset,channel,n,estimator,grid_index,tau_mean,objective_mean,chosen_fraction\n";
  for (const auto& t : rows) {
    out << t.dataset << ',' << to_string(t.channel) << ',' << t.n << ',' << t.estimator << ','
        << t.grid_index << ',' << format_real(t.tau_mean) << ',' << format_real(t.objective_mean)
        << ',' << format_real(t.chosen_fraction) << '\n';
  }
}

/// Writes `path` (results), `<path>.traces.csv` and `<path>.meta.json`.
inline void save_sweep(const std::string& path, const SweepOutput& output,
                       const ExperimentConfig& config) {
  auto open = [](const std::string& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) {
      throw ComputationError("cannot write " + p);
    }
    return f;
  };
  std::vector<ResultRow> all = output.rows;
  all.insert(all.end(), output.oracle_rows.begin(), output.oracle_rows.end());
  {
    auto f = open(path);
    write_results_csv(f, all);
  }
  {
    auto f = open(path + ".traces.csv");
    write_traces_csv(f, output.traces);
  }
  nlohmann::ordered_json meta;
  meta["schema"] = config.schema;
  meta["truncation"] = output.truncation;
  meta["replicates"] = config.replicates;
  meta["seed"] = config.master_seed;
  meta["grid_size"] = config.grid_size;
  meta["channel"] = std::string(to_string(config.channel));
  meta["oracle"] = config.oracle;
  auto& names = meta["datasets"] = nlohmann::ordered_json::array();
  for (const auto& d : config.datasets) {
    names.push_back(d.name);
  }
  auto& est = meta["estimators"] = nlohmann::ordered_json::array();
  for (const auto& e : config.estimators) {
    est.push_back(e.label());
  }
  auto f = open(path + ".meta.json");
  f << meta.dump(2) << '\n';
}

}  // namespace ope

#endif  // OPE_HARNESS_HPP
