#include "skd/ablation.hpp"

#include "skd/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <sstream>

namespace skd {

std::vector<Scenario> parse_scenarios(const std::string& list) {
  std::vector<Scenario> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    AblationFlags flags;
    try {
      flags = AblationFlags::parse(item);
      flags.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("unknown scenario '" + item + "': " + e.what());
    }
    out.push_back({item, flags});
  }
  if (out.empty()) throw ConfigError("empty scenario list");
  return out;
}

const std::vector<Scenario>& default_scenarios() {
  static const std::vector<Scenario> s = parse_scenarios("bs,sd,sd+td,sd+fe_o,sd+td+fe_t,full");
  return s;
}

std::vector<ScenarioResult> run_ablation(const ParameterStore& stage1, const std::vector<TrainingSequence>& train,
                                         const std::vector<TrainingSequence>& eval, const RunConfig& cfg,
                                         const std::vector<Scenario>& scenarios, const std::string& out_dir) {
  std::vector<ScenarioResult> results;
  for (const auto& scenario : scenarios) {
    RunConfig run = cfg;
    run.train.ablation = scenario.flags;
    run.train.stage = 2;
    TrainOptions opts;
    opts.init = &stage1;
    if (!out_dir.empty()) opts.out_dir = (std::filesystem::path(out_dir) / scenario.name).string();
    TrainResult trained = train_stage2(train, run, opts);
    ScenarioResult r;
    r.scenario = scenario;
    r.final_loss = trained.log.empty() ? 0.0 : trained.log.back().total;
    r.eval = evaluate_sequences(eval, trained.params, run.arch, run.beta2);
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_ablation_table(const std::vector<ScenarioResult>& results) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %3s %3s %5s %5s %8s %8s\n", "scenario", "SD", "TD", "FE_o", "FE_t", "maxF",
                "MAE");
  out << line;
  for (const auto& r : results) {
    const auto mark = [](bool b) { return b ? "x" : "-"; };
    const AblationFlags& f = r.scenario.flags;
    std::snprintf(line, sizeof line, "%-12s %3s %3s %5s %5s %8.4f %8.4f\n", r.scenario.name.c_str(), mark(f.sd),
                  mark(f.td), mark(f.fe_o), mark(f.fe_t), r.eval.f_max, r.eval.mae);
    out << line;
  }
  return out.str();
}

std::string ablation_report_json(const std::vector<ScenarioResult>& results) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : results) {
    const AblationFlags& f = r.scenario.flags;
    rows.push_back({{"scenario", r.scenario.name},
                    {"sd", f.sd},
                    {"td", f.td},
                    {"fe_o", f.fe_o},
                    {"fe_t", f.fe_t},
                    {"f_max", r.eval.f_max},
                    {"mae", r.eval.mae},
                    {"final_loss", r.final_loss}});
  }
  return nlohmann::json{{"scenarios", rows}}.dump(2);
}

}  // namespace skd
