// Copyright 2026 The uavcache Authors. All rights reserved.
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

// Command-line front end: train | eval | sweep | calibrate | oracle.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uavcache/harness.hpp"

namespace {

using namespace uavcache;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> modes;
  std::string agent = "sacrl";
};

ScenarioConfig load(const Globals& g) {
  ScenarioConfig c = g.config_path.empty() ? default_config() : load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  for (const auto& m : g.modes) {
    if (auto r = parse_recovery_mode(m)) c.recovery_mode = *r;
    else if (auto p = parse_cell_mode(m)) c.cell_mode = *p;
    else
      throw ConfigError("--mode: unknown value \"" + m +
                        "\" (expected all-eligible, selected-k, non-coded, simplified or literal-eq6)");
  }
  return c;
}

harness::CheckpointPaths parse_checkpoints(const std::vector<std::string>& specs) {
  harness::CheckpointPaths out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--checkpoint expects agent=path, got \"" + s + "\"");
    out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

std::vector<std::string> default_policies(const harness::CheckpointPaths& ck, std::vector<std::string> rest) {
  std::vector<std::string> out;
  for (const auto& name : {"sacrl", "scrl"})
    if (ck.count(name)) out.push_back(name);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

int report_error(const std::string& type, const std::string& message, int code) {
  Json j = {{"error", {{"type", type}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV coded-caching map transmission simulator"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON scenario config")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "base seed (overrides config)");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--mode", g.modes, "recovery mode or cell mode, repeatable");
  app.add_option("--agent", g.agent, "learned agent: sacrl or scrl");

  auto* train = app.add_subcommand("train", "train SACRL or SCRL");
  int train_eval_episodes = 20;
  train->add_option("--eval-episodes", train_eval_episodes, "greedy evaluation episodes for the summary");

  auto* eval = app.add_subcommand("eval", "compare policies with common random numbers");
  std::vector<std::string> eval_policies, eval_checkpoints;
  int eval_episodes = 20;
  eval->add_option("--policies", eval_policies, "sacrl, scrl, pso, nct, random, oracle")->delimiter(',');
  eval->add_option("--checkpoint", eval_checkpoints, "agent=path, repeatable");
  eval->add_option("--episodes", eval_episodes, "evaluation episodes");

  auto* sweep = app.add_subcommand("sweep", "evaluate policies across values of one parameter");
  std::string sweep_param;
  std::vector<double> sweep_values;
  std::vector<std::string> sweep_policies, sweep_checkpoints;
  int sweep_episodes = 20;
  sweep->add_option("--param", sweep_param, "dotted config path, or content_kbits")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")->delimiter(',')->required();
  sweep->add_option("--policies", sweep_policies, "policies to evaluate (default oracle)")->delimiter(',');
  sweep->add_option("--checkpoint", sweep_checkpoints, "agent=path, repeatable");
  sweep->add_option("--episodes", sweep_episodes, "episodes per point");

  auto* calibrate = app.add_subcommand("calibrate", "solve beta0 and tau");

  auto* oracle = app.add_subcommand("oracle", "run an oracle suite");
  std::string suite;
  oracle->add_option("--suite", suite, "eq9, stp or cdf")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const auto c = load(g);
    const auto out = [&](const char* fallback) { return std::filesystem::path(g.out.empty() ? fallback : g.out); };
    if (*train) {
      const auto a = harness::cmd_train(c, g.agent, out("runs/train"), train_eval_episodes);
      std::cout << a.summary.dump(2) << "\n";
    } else if (*eval) {
      const auto ck = parse_checkpoints(eval_checkpoints);
      const auto policies = eval_policies.empty() ? default_policies(ck, {"pso", "nct", "random"}) : eval_policies;
      const auto a = harness::cmd_eval(c, policies, ck, eval_episodes, out("runs/eval"));
      std::cout << a.summary.dump(2) << "\n";
    } else if (*sweep) {
      const auto ck = parse_checkpoints(sweep_checkpoints);
      const auto policies = sweep_policies.empty() ? std::vector<std::string>{"oracle"} : sweep_policies;
      const auto a = harness::cmd_sweep(c, sweep_param, sweep_values, policies, ck, sweep_episodes, out("runs/sweep"));
      std::cout << a.csv;
    } else if (*calibrate) {
      std::cout << harness::cmd_calibrate(c, out("runs/calibrate")).dump(2) << "\n";
    } else if (*oracle) {
      const auto r = harness::cmd_oracle(c, suite, out("runs/oracle"));
      std::cout << oracles::to_json(r).dump(2) << "\n";
      if (!r.passed()) return 3;
    }
  } catch (const ConfigError& e) {
    return report_error("config", e.what(), 2);
  } catch (const InfeasibleError& e) {
    return report_error("infeasible", e.what(), 2);
  } catch (const TrainingDiverged& e) {
    return report_error("training_diverged", e.what(), 4);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return 0;
}
