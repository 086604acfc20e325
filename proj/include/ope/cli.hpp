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

#ifndef OPE_CLI_HPP
#define OPE_CLI_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ope/bandit_sim.hpp"
#include "ope/errors.hpp"
#include "ope/estimators.hpp"
#include "ope/harness.hpp"
#include "ope/log_io.hpp"
#include "ope/reward_model.hpp"
#include "ope/theory_suite.hpp"
#include "ope/tuning.hpp"

/**
 * \file
 * \brief The `ope` command line: synth, simulate, evaluate, sweep and
 * theory-check. Exit status 0 on success, 1 on invalid input (bad flags,
 * unreadable or malformed files, violated preconditions), 2 on runtime
 * failures during computation.
 */

namespace ope {

namespace cli_detail {

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw ComputationError("cannot write " + path);
  }
  f << text;
}

inline void emit_json(const nlohmann::ordered_json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << j.dump(2) << '\n';
  } else {
    write_text(path, j.dump(2) + "\n");
  }
}

inline nlohmann::ordered_json trace_json(const TuningTrace& t) {
  nlohmann::ordered_json j;
  j["taus"] = t.taus;
  j["var_hat"] = t.var_hats;
  j["bias_bound_sq"] = t.bias_bounds_sq;
  j["objective"] = t.objective;
  j["chosen_index"] = t.chosen_index;
  j["chosen_tau"] = t.chosen_tau();
  return j;
}

}  // namespace cli_detail

/// Runs the command line on `args` (without the program name).
inline int cli_dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  CLI::App app{"Off-policy evaluation for contextual bandits", "ope"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::uint64_t seed = 0;
  std::string out_path;

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic multiclass dataset as CSV");
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::size_t per_class = 200;
  double separation = 2.0;
  synth->add_option("--classes", classes, "Number of classes (>= 2)")->required();
  synth->add_option("--dim", dim, "Feature dimension (>= 1)")->required();
  synth->add_option("--per-class", per_class, "Rows per class")->capture_default_str();
  synth->add_option("--separation", separation, "Distance of class means from the origin")
      ->capture_default_str();
  synth->add_option("--seed", seed, "Random seed")->capture_default_str();
  synth->add_option("--out", out_path, "Output CSV path")->required();

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "Train target and logging policies on a dataset and write a bandit log");
  std::string data_path;
  std::string channel_name = "noisy";
  std::size_t n = 0;
  std::string target_model_path;
  std::string logging_model_path;
  simulate->add_option("--data", data_path, "Dataset CSV (columns f0..f{d-1}, label)")->required();
  simulate->add_option("--channel", channel_name, "Reward channel: deterministic or noisy")
      ->capture_default_str();
  simulate->add_option("--n", n, "Number of log records")->required();
  simulate->add_option("--seed", seed, "Random seed")->capture_default_str();
  simulate->add_option("--out", out_path, "Output log path (JSON lines)")->required();
  simulate->add_option("--target-model", target_model_path,
                       "Target policy model output (default <out>.target.model)");
  simulate->add_option("--logging-model", logging_model_path,
                       "Logging policy model output (default <out>.logging.model)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Estimate a target policy's value from a log");
  std::string log_path;
  std::string target_kind = "argmax";
  std::string estimator;
  std::string tau_text = "auto";
  std::string reward_model_path;
  std::size_t grid_size = 21;
  double rmax = 1.0;
  evaluate->add_option("--log", log_path, "Log file")->required();
  evaluate->add_option("--target-model", target_model_path, "Target policy model file")->required();
  evaluate->add_option("--target-kind", target_kind, "argmax or softmax")->capture_default_str();
  evaluate
      ->add_option("--estimator", estimator,
                   "ips, dm, dr, switch, switch-dr, trim-ips, trun-ips or magic (magic is a "
                   "simplified simplex combination of SWITCH estimates)")
      ->required();
  evaluate->add_option("--tau", tau_text, "Threshold: auto or a number")->capture_default_str();
  evaluate->add_option("--reward-model", reward_model_path,
                       "Reward model file; when absent models are trained on the log");
  evaluate->add_option("--grid-size", grid_size, "Threshold grid size")->capture_default_str();
  evaluate->add_option("--rmax", rmax, "Reward upper bound used by the bias bound")
      ->capture_default_str();
  evaluate->add_option("--seed", seed, "Cross-fitting seed")->capture_default_str();
  evaluate->add_option("--out", out_path, "Report path (JSON); stdout when absent");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run a replicated experiment and write a results CSV");
  std::string config_path;
  std::optional<double> truncation;
  sweep->add_option("--config", config_path, "Experiment config (JSON)")->required();
  sweep->add_option("--out", out_path, "Results CSV path (overrides the config)");
  sweep->add_option("--seed", seed, "Master seed (overrides the config)");
  sweep->add_option("--expert-truncation", truncation,
                    "Squared-error truncation level (default 1)");

  // theory-check
  auto* theory = app.add_subcommand("theory-check",
                                    "Compare closed-form risks and bounds with Monte-Carlo MSE");
  std::string instance = "5x3";
  std::size_t replicates = 20000;
  std::size_t theory_n = 20;
  bool strict = false;
  theory->add_option("--instance", instance, "Shipped instance: 5x3 or 4x3")->capture_default_str();
  theory->add_option("--n", theory_n, "Log size")->capture_default_str();
  theory->add_option("--replicates", replicates, "Monte-Carlo replicates")->capture_default_str();
  theory->add_option("--seed", seed, "Random seed")->capture_default_str();
  theory->add_option("--out", out_path, "Report path (JSON); stdout when absent");
  theory->add_flag("--strict", strict, "Exit 2 when any check fails");

  if (!args.empty() && !args.front().empty() && args.front().front() != '-' &&
      app.get_subcommand_no_throw(args.front()) == nullptr) {
    err << "error: unknown subcommand '" << args.front() << "'\n\n" << app.help();
    return 1;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*synth) {
      const auto data = synth_dataset(classes, dim, per_class, separation, seed);
      save_csv(out_path, data);
      out << "wrote " << out_path << " (" << data.size() << " rows, " << data.num_classes
          << " classes)\n";
    } else if (*simulate) {
      const auto channel = parse_channel(channel_name);
      const auto data = load_csv(data_path);
      const auto policies = make_policies(data, TrainerConfig{}, derive_seed(seed, {0}));
      const auto log = simulate_log(data, policies.logging, channel, n, derive_seed(seed, {1}));
      save_log(out_path, log);
      save_model(target_model_path.empty() ? out_path + ".target.model" : target_model_path,
                 *policies.target_model);
      save_model(logging_model_path.empty() ? out_path + ".logging.model" : logging_model_path,
                 *policies.logging_model);
      nlohmann::ordered_json j;
      j["records"] = log.size();
      j["ground_truth"] = ground_truth_value(data, policies.target, channel);
      out << j.dump() << '\n';
    } else if (*evaluate) {
      if (!is_estimator_name(estimator)) {
        throw ValidationError("unknown estimator '" + estimator + "'");
      }
      EstimatorSpec spec{estimator, std::nullopt};
      if (tau_text != "auto") {
        if (!is_tunable(estimator)) {
          throw ValidationError("estimator '" + estimator + "' takes no tau");
        }
        try {
          std::size_t used = 0;
          spec.tau = std::stod(tau_text, &used);
          if (used != tau_text.size()) {
            throw std::invalid_argument(tau_text);
          }
        } catch (const std::logic_error&) {
          throw ValidationError("--tau must be 'auto' or a number, got '" + tau_text + "'");
        }
      }
      const auto log = load_log(log_path);
      auto target_model = std::make_shared<const LogisticModel>(load_model(target_model_path));
      if (target_model->mode != ModelMode::policy) {
        throw ValidationError(target_model_path + " is not a policy model");
      }
      if (target_kind != "argmax" && target_kind != "softmax") {
        throw ValidationError("--target-kind must be argmax or softmax");
      }
      const auto target =
          target_kind == "argmax" ? argmax_policy(target_model) : softmax_policy(target_model);
      const auto report = validate_log(log, target);
      if (!report.ok()) {
        const auto& v = report.violations.front();
        throw ValidationError("log fails validation (" + std::to_string(report.violations.size()) +
                              " problems); record " + std::to_string(v.record) + ": " + v.message);
      }
      const auto w = weigh(log, target);
      const auto cap = constant_cap(rmax);
      const auto caps = cap_table(log, cap);
      ModelTables models;
      std::optional<CrossFitPair> pair;
      const bool needs_models = estimator != "ips" && estimator != "trim-ips" &&
                                estimator != "trun-ips";
      if (needs_models) {
        if (!reward_model_path.empty()) {
          const auto rm = load_model(reward_model_path);
          if (rm.mode != ModelMode::reward) {
            throw ValidationError(reward_model_path + " is not a reward model");
          }
          models.dm = tabulate(log, as_reward_model(rm, cap));
          models.dr = models.dm;
        } else {
          models.dm = tabulate(log, as_reward_model(train_reward_model(log), cap));
          if (estimator == "dr" || estimator == "switch-dr") {
            pair = cross_fit(log, TrainerConfig{}, seed);
            models.dr = pair->routed_table(log, cap);
            models.pair = &*pair;
          }
        }
      }
      const bool needs_grid = (is_tunable(estimator) && !spec.tau) || estimator == "magic";
      std::vector<double> grid;
      if (needs_grid) {
        grid = threshold_grid(w, grid_size);
      }
      TuningTrace trace;
      MagicResult magic;
      const auto est = estimate_named(spec, w, models, caps, grid, &trace, &magic);
      nlohmann::ordered_json j;
      j["estimator"] = estimator;
      j["value"] = est.value;
      j["n"] = log.size();
      if (est.tau) {
        j["tau"] = *est.tau;
      }
      if (est.var_hat) {
        j["var_hat"] = *est.var_hat;
      }
      if (est.bias_bound_sq) {
        j["bias_bound_sq"] = *est.bias_bound_sq;
      }
      j["max_rho_observed"] = report.max_rho_observed;
      if (is_tunable(estimator) && !spec.tau) {
        j["tuning_trace"] = cli_detail::trace_json(trace);
      }
      if (estimator == "magic") {
        j["magic"]["taus"] = grid;
        j["magic"]["weights"] = magic.weights;
        j["magic"]["candidate_values"] = magic.candidate_values;
        j["magic"]["objective"] = magic.objective;
        j["magic"]["note"] = "simplified variant: simplex-constrained quadratic over SWITCH estimates";
      }
      cli_detail::emit_json(j, out_path, out);
    } else if (*sweep) {
      auto config = load_config(config_path);
      if (sweep->count("--seed") > 0) {
        config.master_seed = seed;
      }
      if (truncation) {
        config.truncation = *truncation;
      }
      if (!out_path.empty()) {
        config.output = out_path;
      }
      if (config.output.empty()) {
        throw ValidationError("sweep: no output path (use --out or the config's \"output\")");
      }
      config.validate();
      const auto result = run_sweep(config);
      save_sweep(config.output, result, config);
      out << "wrote " << config.output << " ("
          << result.rows.size() + result.oracle_rows.size() << " rows, truncation="
          << format_real(result.truncation) << ")\n";
    } else if (*theory) {
      TheoryCheckConfig cfg;
      cfg.instance = instance;
      cfg.n = theory_n;
      cfg.replicates = replicates;
      cfg.seed = seed;
      const auto report = run_theory_checks(cfg);
      cli_detail::emit_json(to_json(report), out_path, out);
      if (!out_path.empty()) {
        std::size_t failed = 0;
        for (const auto& c : report.checks) {
          failed += c.passed ? 0 : 1;
        }
        out << "wrote " << out_path << " (" << report.checks.size() << " checks, " << failed
            << " failed)\n";
      }
      if (strict && !report.all_passed()) {
        return 2;
      }
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const ComputationError& e) {
    err << "runtime failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

inline int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_dispatch(args);
}

}  // namespace ope

#endif  // OPE_CLI_HPP
