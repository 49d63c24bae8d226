// Command-line driver: train, infer, eval, ablate, synth.

#include "skd/ablation.hpp"
#include "skd/error.hpp"
#include "skd/inference.hpp"
#include "skd/metrics.hpp"
#include "skd/persistence.hpp"
#include "skd/synthetic.hpp"
#include "skd/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace skd;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text << '\n';
}

RunConfig config_or_defaults(const std::string& path) {
  RunConfig cfg = path.empty() ? RunConfig{} : load_config(path);
  validate(cfg);
  return cfg;
}

std::vector<TrainingSequence> load_roots(const std::string& roots, const RunConfig& cfg) {
  std::vector<TrainingSequence> all;
  for (const auto& root : split(roots, ',')) {
    auto part = load_training_sequences(index_dataset(root, cfg.data.layout, cfg.data.resolution));
    for (auto& s : part) all.push_back(std::move(s));
  }
  if (all.empty()) throw DataError("no training data under '" + roots + "'");
  return all;
}

void print_progress(const LossLogLine& l, int every) {
  if (l.iter % every == 0) std::cout << format_log_line(l) << '\n';
}

struct TrainArgs {
  int stage = 1;
  std::string config, data, out, resume;
  std::optional<std::uint64_t> seed;
};

int run_train(const TrainArgs& a) {
  RunConfig cfg = config_or_defaults(a.config);
  cfg.train.stage = a.stage;
  if (a.seed) cfg.train.seed = *a.seed;
  const auto data = load_roots(a.data, cfg);

  std::optional<Checkpoint> init;
  std::string init_path = a.resume;
  if (init_path.empty() && a.stage == 2) {
    const fs::path candidate = fs::path(a.out) / "stage1_final.skd";
    if (!fs::exists(candidate))
      throw ConfigError("stage 2 needs --resume CKPT or a stage1_final.skd in --out");
    init_path = candidate.string();
  }
  if (!init_path.empty()) init = load_checkpoint(init_path);

  TrainOptions opts;
  opts.out_dir = a.out;
  opts.init = init ? &init->params : nullptr;
  opts.on_iteration = [](const LossLogLine& l) { print_progress(l, 50); };
  std::cout << "iter\tlr\tL_s\tL_t\ttotal\n";
  TrainResult r = a.stage == 1 ? train_stage1(data, cfg, opts) : train_stage2(data, cfg, opts);
  if (a.stage == 2)
    std::cout << "adopted " << r.adoption.adopted.size() << " parameters, initialized "
              << r.adoption.initialized.size() << ", ignored " << r.adoption.ignored.size() << '\n';
  std::cout << "wrote " << (fs::path(a.out) / ("stage" + std::to_string(a.stage) + "_final.skd")).string() << '\n';
  return kOk;
}

struct InferArgs {
  std::string ckpt, data, out, sequences;
};

int run_infer(const InferArgs& a) {
  if (!fs::exists(a.ckpt)) throw DataError("checkpoint '" + a.ckpt + "' does not exist");
  Checkpoint ck = load_checkpoint(a.ckpt);
  check_compatible(ck.params, ck.config.arch);
  const DatasetIndex index = index_dataset(a.data, ck.config.data.layout, ck.config.data.resolution);
  const auto wanted = split(a.sequences, ',');
  nlohmann::json timing = nlohmann::json::object();
  std::size_t matched = 0;
  for (const auto& seq : index.sequences) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), seq.name) == wanted.end()) continue;
    ++matched;
    const fs::path dir = seq.kind == SequenceKind::still ? fs::path(a.out) : fs::path(a.out) / seq.name;
    const TimingReport r = infer_sequence(seq, ck.params, ck.config.arch, dir.string());
    timing[seq.name] = nlohmann::json::parse(timing_report_json(r));
    std::cout << seq.name << ": " << r.written << " maps, mean " << r.mean * 1e3 << " ms/frame\n";
  }
  if (matched == 0) throw DataError("no sequence matched '" + a.sequences + "'");
  write_text(fs::path(a.out) / "timing.json", timing.dump(2));
  return kOk;
}

struct EvalArgs {
  std::string pred, gt, out;
  double beta2 = 0.3;
};

int run_eval(const EvalArgs& a) {
  const EvalResult r = evaluate_directories(a.pred, a.gt, a.beta2);
  write_text(a.out, eval_report_json(r));
  std::cout << "maxF " << r.f_max << "  MAE " << r.mae << "  frames " << r.frame_count << '\n';
  return kOk;
}

struct AblateArgs {
  std::string config, data, eval_data, out, scenarios = "bs,sd,sd+td,sd+fe_o,sd+td+fe_t,full", stage1;
};

int run_ablate(const AblateArgs& a) {
  const RunConfig cfg = config_or_defaults(a.config);
  const auto scenarios = parse_scenarios(a.scenarios);
  const auto train = load_roots(a.data, cfg);
  const auto eval = a.eval_data.empty() ? train : load_roots(a.eval_data, cfg);

  ParameterStore stage1;
  if (!a.stage1.empty()) {
    stage1 = load_checkpoint(a.stage1).params;
  } else {
    RunConfig base = cfg;
    base.train.stage = 1;
    base.train.ablation = AblationFlags{};
    TrainOptions opts;
    opts.out_dir = (fs::path(a.out) / "stage1").string();
    std::cout << "training the shared stage-1 model\n";
    stage1 = train_stage1(train, base, opts).params;
  }
  const auto results = run_ablation(stage1, train, eval, cfg, scenarios, a.out);
  const std::string table = format_ablation_table(results);
  std::cout << table;
  write_text(fs::path(a.out) / "ablation.txt", table);
  write_text(fs::path(a.out) / "ablation.json", ablation_report_json(results));
  return kOk;
}

struct SynthArgs {
  std::string out;
  int sequences = 4;
  SyntheticSpec spec;
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& a) {
  write_synthetic_dataset(a.out, moving_square_set(a.sequences, a.spec, a.seed));
  std::cout << "wrote " << a.sequences << " sequences to " << a.out << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Video salient object detection with spatiotemporal distillation"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Run training stage 1 or 2");
  train->add_option("--stage", ta.stage, "Training stage")->required()->check(CLI::IsMember({1, 2}));
  train->add_option("--config", ta.config, "Config file (defaults when omitted)");
  train->add_option("--data", ta.data, "Dataset root(s), comma separated")->required();
  train->add_option("--out", ta.out, "Output directory")->required();
  train->add_option("--resume", ta.resume, "Checkpoint to resume (stage 1) or initialize from (stage 2)");
  train->add_option("--seed", ta.seed, "Override train.seed");

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "Write saliency maps for every frame");
  infer->add_option("--ckpt", ia.ckpt, "Checkpoint")->required();
  infer->add_option("--data", ia.data, "Dataset root")->required();
  infer->add_option("--out", ia.out, "Output directory")->required();
  infer->add_option("--sequences", ia.sequences, "Comma-separated subset of sequences");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score saliency maps against ground truth");
  eval->add_option("--pred", ea.pred, "Prediction directory")->required();
  eval->add_option("--gt", ea.gt, "Ground-truth directory")->required();
  eval->add_option("--out", ea.out, "Report path (JSON)")->required();
  eval->add_option("--beta2", ea.beta2, "F-measure beta^2");

  AblateArgs aa;
  auto* ablate = app.add_subcommand("ablate", "Train, infer and score each ablation scenario");
  ablate->add_option("--config", aa.config, "Config file");
  ablate->add_option("--data", aa.data, "Training dataset root(s)")->required();
  ablate->add_option("--eval-data", aa.eval_data, "Held-out dataset root(s); defaults to --data");
  ablate->add_option("--out", aa.out, "Output directory")->required();
  ablate->add_option("--scenarios", aa.scenarios, "Comma-separated scenarios");
  ablate->add_option("--stage1", aa.stage1, "Reuse this stage-1 checkpoint");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a moving-square dataset");
  synth->add_option("--out", sa.out, "Output root")->required();
  synth->add_option("--sequences", sa.sequences, "Number of sequences");
  synth->add_option("--frames", sa.spec.frames, "Frames per sequence");
  synth->add_option("--height", sa.spec.height, "Frame height");
  synth->add_option("--width", sa.spec.width, "Frame width");
  synth->add_option("--square", sa.spec.square, "Square side");
  synth->add_option("--max-step", sa.spec.max_step, "Largest per-frame displacement in pixels");
  synth->add_option("--seed", sa.seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return run_train(ta);
    if (*infer) return run_infer(ia);
    if (*eval) return run_eval(ea);
    if (*ablate) return run_ablate(aa);
    if (*synth) return run_synth(sa);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
