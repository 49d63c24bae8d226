#pragma once

#include "skd/inference.hpp"
#include "skd/training.hpp"

#include <string>
#include <vector>

namespace skd {

struct Scenario {
  std::string name;
  AblationFlags flags;
};

// Parses a comma-separated scenario list such as "bs,sd,sd+td,full".
std::vector<Scenario> parse_scenarios(const std::string& list);

const std::vector<Scenario>& default_scenarios();

struct ScenarioResult {
  Scenario scenario;
  EvalResult eval;
  double final_loss = 0;
};

/// Finetunes `stage1` once per scenario with that scenario's flags and
/// evaluates the result on `eval`. Per-scenario runs go to <out_dir>/<name>
/// when `out_dir` is set.
std::vector<ScenarioResult> run_ablation(const ParameterStore& stage1, const std::vector<TrainingSequence>& train,
                                         const std::vector<TrainingSequence>& eval, const RunConfig& cfg,
                                         const std::vector<Scenario>& scenarios, const std::string& out_dir = "");

// Plain-text table: one row per scenario with the flag columns, max F and MAE.
std::string format_ablation_table(const std::vector<ScenarioResult>& results);

std::string ablation_report_json(const std::vector<ScenarioResult>& results);

}  // namespace skd
