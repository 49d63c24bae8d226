// Acceptance checks 1-9. Prints one PASS/FAIL line per criterion and exits
// nonzero when any of them fails.

#include "../support.hpp"
#include "skd/ablation.hpp"
#include "skd/attention.hpp"
#include "skd/image_io.hpp"
#include "skd/inference.hpp"
#include "skd/metrics.hpp"
#include "skd/model.hpp"
#include "skd/training.hpp"

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace skd;
namespace fs = std::filesystem;

namespace {

// Collects failed conditions for the criterion being run.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

using Seconds = std::chrono::duration<double>;

int failed = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<std::string(Check&)>& body) {
  Check c;
  std::string detail;
  const auto start = std::chrono::steady_clock::now();
  try {
    detail = body(c);
  } catch (const std::exception& e) {
    c.failures.push_back(std::string("exception: ") + e.what());
  }
  const double elapsed = Seconds(std::chrono::steady_clock::now() - start).count();
  if (elapsed > limit_s) c.failures.push_back("took " + fmt("%.1f", elapsed) + " s, limit " + fmt("%.0f", limit_s));
  const bool ok = c.failures.empty();
  failed += !ok;
  std::cout << "criterion " << id << ": " << (ok ? "PASS" : "FAIL") << "  " << name << "  (" << fmt("%.2f", elapsed)
            << " s)";
  if (!detail.empty()) std::cout << "  " << detail;
  std::cout << '\n';
  for (const auto& f : c.failures) std::cout << "    " << f << '\n';
  std::cout.flush();
}

ArchitectureConfig small_arch() {
  ArchitectureConfig a;
  a.backbone = Backbone::tiny;
  a.low_channels = 8;
  a.high_channels = 16;
  a.embed_channels = 8;
  a.aspp_channels = 16;
  a.aspp_rates = {2, 3};
  return a;
}

RunConfig toy_config() { return load_config(std::string(SKD_SOURCE_DIR) + "/configs/toy.cfg"); }

std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SKD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Pixel loop over the 256 thresholds, frame-averaged precision and recall.
std::pair<double, double> metric_oracle(const std::vector<Tensord>& preds, const std::vector<Tensord>& gts,
                                        double beta2) {
  std::vector<double> ps(256, 0), rs(256, 0);
  double mae_sum = 0;
  int counted = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const auto& p = preds[k];
    const auto& g = gts[k];
    double fg = 0, err = 0;
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      fg += g.data()[i];
      err += std::abs(p.data()[i] - g.data()[i]);
    }
    mae_sum += err / double(p.numel());
    if (fg == 0) continue;
    ++counted;
    for (int t = 0; t < 256; ++t) {
      double tp = 0, pos = 0;
      for (std::int64_t i = 0; i < p.numel(); ++i)
        if (p.data()[i] >= (t + 0.5) / 256.0) {
          ++pos;
          tp += g.data()[i];
        }
      ps[std::size_t(t)] += pos ? tp / pos : 0;
      rs[std::size_t(t)] += tp / fg;
    }
  }
  double best = 0;
  for (int t = 0; t < 256 && counted; ++t) {
    const double p = ps[std::size_t(t)] / counted, r = rs[std::size_t(t)] / counted;
    if (beta2 * p + r > 0) best = std::max(best, (1 + beta2) * p * r / (beta2 * p + r));
  }
  return {best, mae_sum / double(preds.size())};
}

}  // namespace

int main() {
  std::cout << "acceptance suite\n";

  criterion(1, "attention columns normalize", 10, [](Check& c) {
    Rng rng(101);
    double worst = 0;
    int pairs = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const int ch = std::array{2, 16, 256}[std::size_t(trial % 3)];
      const int n = std::array{1, 4, 64}[std::size_t((trial / 3) % 3)];
      RowMatrix<float> ht(ch, n), hr(ch, n);
      for (Eigen::Index i = 0; i < ht.size(); ++i) {
        ht.data()[i] = float(rng.normal());
        hr.data()[i] = float(rng.normal());
      }
      const auto r = mutual_attention<float>(ht, hr);
      c.expect(r.attention.rows() == n && r.attention.cols() == n, "attention is not n x n");
      for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(double(r.attention.col(j).sum()) - 1.0));
      c.expect((r.attention.array() >= 0).all(), "negative attention weight");
      if (n == 1) c.expect(r.attention(0, 0) == 1.0f, "n = 1 attention is not exactly [[1]]");
      ++pairs;
    }
    c.expect(worst <= 1e-5, "column sum error " + fmt("%.3g", worst));
    return std::to_string(pairs) + " pairs, max |colsum - 1| " + fmt("%.2g", worst);
  });

  criterion(2, "loss gradients match central differences", 30, [](Check& c) {
    Rng rng(202);
    const Shape grid{1, 1, 6, 6};
    const int n = 36;
    auto vec = [&](bool unit) {
      const Tensord t = unit ? test::random_unit(grid, rng) : test::random_tensor(grid, rng, 2.0);
      return ArrayX<double>(t.array());
    };
    const ArrayX<double> soft_target = vec(true), teacher = vec(false);
    const ArrayX<double> gt = test::random_binary(grid, rng).array();
    double worst = 0;
    auto record = [&](const std::string& name, double err) {
      worst = std::max(worst, err);
      c.expect(err < 1e-4, name + " relative error " + fmt("%.3g", err));
    };

    // Autograd forms on 1x6x6 grids.
    const Tensord target = test::random_unit(grid, rng);
    record("L_g", test::gradient_check([&](const std::vector<Vard>& v) { return sigmoid_ce(v[0], target); },
                                       {test::random_tensor(grid, rng, 2.0)}));
    const Tensord fixed_teacher = test::random_tensor(grid, rng, 2.0);
    record("L_d", test::gradient_check(
                      [&](const std::vector<Vard>& v) { return distill_term(v[0], Vard(fixed_teacher, false)); },
                      {test::random_tensor(grid, rng, 2.0)}));

    // Closed-form gradients of the composite objectives, phases stacked.
    auto stacked = [&](int phases, std::function<double(const std::vector<ArrayX<double>>&,
                                                        std::vector<ArrayX<double>>*)> loss) {
      return [=](const ArrayX<double>& x, ArrayX<double>* g) {
        std::vector<ArrayX<double>> p;
        for (int k = 0; k < phases; ++k) p.push_back(x.segment(k * n, n));
        std::vector<ArrayX<double>> grads;
        const double v = loss(p, g ? &grads : nullptr);
        if (g) {
          g->resize(x.size());
          for (int k = 0; k < phases; ++k) g->segment(k * n, n) = grads[std::size_t(k)];
        }
        return v;
      };
    };
    auto stack_input = [&](int phases) {
      ArrayX<double> x(phases * n);
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = 2 * rng.normal();
      return x;
    };
    LossConfig cfg;
    cfg.alpha = 0.7;
    record("L_g (closed form)", test::gradient_check_array(
                                    [&](const ArrayX<double>& x, ArrayX<double>* g) {
                                      return sigmoid_ce<double>(x, soft_target, g);
                                    },
                                    stack_input(1)));
    record("L_d (closed form)", test::gradient_check_array(
                                    [&](const ArrayX<double>& x, ArrayX<double>* g) {
                                      return distill_term<double>(x, teacher, g);
                                    },
                                    stack_input(1)));
    record("L_s", test::gradient_check_array(stacked(3,
                                                     [&](const auto& p, auto* g) {
                                                       return spatial_loss<double>(p, teacher, gt, cfg, g).total;
                                                     }),
                                             stack_input(3)));
    LossConfig plain = cfg;
    plain.temporal_mode = TemporalMode::plain;
    record("L_t plain", test::gradient_check_array(stacked(3,
                                                           [&](const auto& p, auto* g) {
                                                             return temporal_loss<double>(p, teacher, gt, plain, g)
                                                                 .total;
                                                           }),
                                                   stack_input(3)));
    LossConfig encoded = cfg;
    encoded.temporal_mode = TemporalMode::encoded;
    record("L_t encoded", test::gradient_check_array(stacked(4,
                                                             [&](const auto& p, auto* g) {
                                                               return temporal_loss<double>(p, teacher, gt, encoded,
                                                                                            g)
                                                                   .total;
                                                             }),
                                                     stack_input(4)));

    // The teacher is a constant for every distillation term.
    const Vard student(test::random_tensor(grid, rng), true);
    const Vard teacher_var(test::random_tensor(grid, rng), true);
    backward(distill_term(student, teacher_var));
    const bool zero = !teacher_var.node()->has_grad() ||
                      (teacher_var.grad().array() == 0.0).all();
    c.expect(zero, "teacher gradient is not zero");

    // When the teacher is the final phase, that phase only sees its own L_g.
    std::vector<ArrayX<double>> phases{stack_input(1), stack_input(1), stack_input(1)}, grads;
    spatial_loss<double>(phases, gt, cfg, &grads);
    ArrayX<double> own;
    sigmoid_ce<double>(phases[2], gt, &own);
    c.expect((grads[2] == own).all(), "distillation leaks gradient into the teacher phase");
    return "max relative error " + fmt("%.2g", worst);
  });

  criterion(3, "max F and MAE match the pixel-loop oracle", 60, [](Check& c) {
    Rng rng(303);
    double worst = 0;
    std::vector<Tensord> preds, gts;
    for (int k = 0; k < 50; ++k) {
      Tensord p = test::random_unit({1, 1, 8, 8}, rng);
      if (k % 2) p.array() = (p.array() * 255).round() / 255;
      preds.push_back(p);
      gts.push_back(test::random_binary({1, 1, 8, 8}, rng));
      const EvalResult r = evaluate({preds.back()}, {gts.back()}, 0.3);
      const auto [f, m] = metric_oracle({preds.back()}, {gts.back()}, 0.3);
      worst = std::max({worst, std::abs(r.f_max - f), std::abs(r.mae - m)});
    }
    const EvalResult all = evaluate(preds, gts, 0.3);
    const auto [f, m] = metric_oracle(preds, gts, 0.3);
    worst = std::max({worst, std::abs(all.f_max - f), std::abs(all.mae - m)});
    c.expect(worst <= 1e-12, "oracle mismatch " + fmt("%.3g", worst));
    const EvalResult perfect = evaluate(gts, gts, 0.3);
    c.expect(perfect.f_max == 1.0, "perfect f_max " + fmt("%.17g", perfect.f_max));
    c.expect(perfect.mae == 0.0, "perfect mae " + fmt("%.17g", perfect.mae));
    return "50 pairs, max deviation " + fmt("%.2g", worst);
  });

  criterion(4, "removing the encoder leaves inference unchanged", 600, [](Check& c) {
    test::TempDir dir("accept4");
    RunConfig cfg;
    cfg.arch = small_arch();
    cfg.train.crop = 64;
    cfg.train.batch_size = 2;
    cfg.train.stage1 = {0.01, 0.9, 20};
    cfg.train.stage2 = {0.003, 0.95, 20};
    cfg.train.checkpoint_interval = 1000;
    cfg.train.ablation = AblationFlags::parse("sd+td+fe_o");
    SyntheticSpec spec;
    spec.frames = 10;
    const auto synthetic = moving_square_set(1, spec, 404);
    write_synthetic_dataset(dir.str("data"), synthetic);
    const auto data = to_training_sequences(synthetic);

    const TrainResult s1 = train_stage1(data, cfg, {});
    TrainOptions opts;
    opts.init = &s1.params;
    TrainResult s2 = train_stage2(data, cfg, opts);
    c.expect(has_encoder(s2.params), "stage-2 checkpoint has no encoder parameters");
    save_checkpoint(dir.str("with.skd"), s2.params, cfg);
    ParameterStore stripped = s2.params.clone();
    const std::size_t removed = strip_removable(stripped);
    c.expect(removed > 0 && !has_encoder(stripped), "strip removed nothing");
    save_checkpoint(dir.str("without.skd"), stripped, cfg);

    // In-memory float maps.
    ParameterStore with = load_checkpoint(dir.str("with.skd")).params;
    ParameterStore without = load_checkpoint(dir.str("without.skd")).params;
    int identical = 0;
    for (const auto& frame : synthetic[0].frames) {
      const Tensorf a = infer_frame(frame, with, cfg.arch);
      const Tensorf b = infer_frame(frame, without, cfg.arch);
      identical += a.shape() == b.shape() && std::memcmp(a.data(), b.data(), sizeof(float) * std::size_t(a.numel())) == 0;
    }
    c.expect(identical == 10, std::to_string(identical) + "/10 float maps identical");

    // Written maps through the command-line tool.
    c.expect(run_cli("infer --ckpt " + dir.str("with.skd") + " --data " + dir.str("data") + " --out " +
                     dir.str("maps_with")) == 0,
             "infer with encoder failed");
    c.expect(run_cli("infer --ckpt " + dir.str("without.skd") + " --data " + dir.str("data") + " --out " +
                     dir.str("maps_without")) == 0,
             "infer without encoder failed");
    int files = 0, same = 0;
    for (const auto& e : fs::directory_iterator(dir.path() / "maps_with/seq00")) {
      ++files;
      const fs::path other = dir.path() / "maps_without/seq00" / e.path().filename();
      same += fs::exists(other) && slurp(e.path().string()) == slurp(other.string());
    }
    c.expect(files == 10 && same == 10, std::to_string(same) + "/" + std::to_string(files) + " written maps identical");
    return std::to_string(removed) + " encoder tensors removed, " + std::to_string(identical) + " float maps and " +
           std::to_string(same) + " PNGs identical";
  });

  criterion(5, "toy sequence overfits", 900, [](Check& c) {
    RunConfig cfg = toy_config();
    cfg.train.ablation = AblationFlags::parse("sd+td+fe_o");
    cfg.loss.alpha = 0.7;
    c.expect(cfg.train.stage1.max_iter == 500 && cfg.train.stage2.max_iter == 300, "toy config iteration counts");
    SyntheticSpec spec;
    spec.frames = 5;
    const auto train = to_training_sequences(moving_square_set(1, spec, 505));
    const ParameterStore stage1 = train_stage1(train, cfg, {}).params;
    TrainOptions opts;
    opts.init = &stage1;
    ParameterStore stage2 = train_stage2(train, cfg, opts).params;
    const EvalResult r = evaluate_sequences(train, stage2, cfg.arch, cfg.beta2);
    c.expect(r.f_max >= 0.95, "f_max " + fmt("%.4f", r.f_max));
    c.expect(r.mae <= 0.05, "mae " + fmt("%.4f", r.mae));
    return "f_max " + fmt("%.4f", r.f_max) + ", mae " + fmt("%.4f", r.mae);
  });

  criterion(6, "full model is no worse than the baseline on held-out data", 1800, [](Check& c) {
    RunConfig cfg = toy_config();
    cfg.loss.alpha = 0.7;
    SyntheticSpec spec;
    spec.frames = 5;
    const auto train = to_training_sequences(moving_square_set(4, spec, 606));
    const auto held_out = to_training_sequences(moving_square_set(4, spec, 607, "held"));
    RunConfig base = cfg;
    base.train.ablation = AblationFlags{};
    const ParameterStore stage1 = train_stage1(train, base, {}).params;
    const auto results = run_ablation(stage1, train, held_out, cfg, parse_scenarios("bs,full"));
    const double bs = results[0].eval.f_max, full = results[1].eval.f_max;
    c.expect(results[0].eval.frame_count == 20, "held-out frame count");
    c.expect(full >= bs, "full " + fmt("%.4f", full) + " < bs " + fmt("%.4f", bs));
    return "bs f_max " + fmt("%.4f", bs) + ", full f_max " + fmt("%.4f", full);
  });

  criterion(7, "poly schedule and seeded determinism", 300, [](Check& c) {
    double worst = 0;
    for (double base : {1e-3, 1e-4})
      for (int iter : {0, 1, 20000, 39999, 40000}) {
        const double expected = base * std::pow(1.0 - double(iter) / 40000.0, 0.9);
        worst = std::max(worst, std::abs(poly_lr(base, iter, 40000) - expected));
      }
    c.expect(worst <= 1e-12, "poly_lr deviation " + fmt("%.3g", worst));

    RunConfig cfg = toy_config();
    cfg.train.stage1.max_iter = 10;
    cfg.train.seed = 77;
    SyntheticSpec spec;
    const auto data = to_training_sequences(moving_square_set(2, spec, 707));
    const TrainResult a = train_stage1(data, cfg, {});
    const TrainResult b = train_stage1(data, cfg, {});
    c.expect(a.log.size() == 10 && b.log.size() == 10, "log length");
    bool same = a.log.size() == b.log.size();
    for (std::size_t i = 0; same && i < a.log.size(); ++i)
      same = format_log_line(a.log[i]) == format_log_line(b.log[i]) && a.log[i].total == b.log[i].total;
    c.expect(same, "seeded loss logs differ");
    return "poly deviation " + fmt("%.2g", worst) + ", logs identical: " + (same ? "yes" : "no");
  });

  criterion(8, "phase predictions telescope", 300, [](Check& c) {
    const ArchitectureConfig arch = small_arch();
    Rng rng(808);
    int exact = 0, forwards = 0;
    for (int trial = 0; trial < 100; ++trial) {
      ParameterStore params = build_parameters(arch, true, 8000 + std::uint64_t(trial));
      ForwardContext ctx{params, trial % 2 == 0};
      const int h = 32 + int(rng.below(3)) * 8, w = 32 + int(rng.below(3)) * 8;
      const Varf a(test::random_unit({1, 3, h, w}, rng).cast<float>());
      const Varf b(test::random_unit({1, 3, h, w}, rng).cast<float>());
      const SpatialOutput sa = forward_spatial(a, ctx, arch);
      const SpatialOutput sb = forward_spatial(b, ctx, arch);
      const PhasePredictions p = forward_temporal(sa, sb, ctx, arch);
      bool ok = p.logits.size() == 4 && p.residuals.size() == 3;
      for (std::size_t j = 1; ok && j < p.logits.size(); ++j)
        ok = ((p.logits[j].value().array() - p.logits[j - 1].value().array()) == p.residuals[j - 1].value().array())
                 .all();
      exact += ok;
      ++forwards;
    }
    c.expect(exact == forwards, std::to_string(forwards - exact) + " forwards break P_j - P_{j-1} == R_j");

    ParameterStore params = build_parameters(arch, true, 9);
    for (const auto& unit : temporal_unit_prefixes()) {
      params.tensor(unit + ".conv3.weight").set_zero();
      params.tensor(unit + ".conv3.bias").set_zero();
    }
    ForwardContext ctx{params, false};
    const Varf x(test::random_unit({1, 3, 32, 32}, rng).cast<float>());
    const SpatialOutput out = forward_spatial(x, ctx, arch);
    const auto& l = out.phases.logits;
    const bool flat = (l[0].value().array() == l[1].value().array()).all() &&
                      (l[1].value().array() == l[2].value().array()).all();
    c.expect(flat, "zeroed heads still change the prediction");
    return std::to_string(exact) + "/" + std::to_string(forwards) + " forwards exact";
  });

  criterion(9, "checkpoint round trip and config defaults", 120, [](Check& c) {
    test::TempDir dir("accept9");
    RunConfig cfg;
    cfg.arch = small_arch();
    ParameterStore params = build_parameters(cfg.arch, true, 909);
    params.metadata() = StoreMetadata{2, "sd+td+fe_o", 40000, {kEncoderPrefix}};
    save_checkpoint(dir.str("a.skd"), params, cfg);
    const Checkpoint ck = load_checkpoint(dir.str("a.skd"));
    save_checkpoint(dir.str("b.skd"), ck.params, ck.config);
    const bool same = slurp(dir.str("a.skd")) == slurp(dir.str("b.skd"));
    c.expect(same, "re-saved checkpoint differs");

    const RunConfig d = parse_config("");
    c.expect(d.train.stage1.base_lr == 1e-3 && d.train.stage2.base_lr == 1e-4, "learning rates");
    c.expect(d.train.stage1.momentum == 0.9 && d.train.stage2.momentum == 0.95, "momentum");
    c.expect(d.train.weight_decay == 5e-4, "weight decay");
    c.expect(d.train.batch_size == 8, "batch size");
    c.expect(d.train.crop == 473, "crop");
    c.expect(d.loss.alpha == 0.7, "alpha");
    return std::to_string(slurp(dir.str("a.skd")).size()) + " bytes, byte identical: " + (same ? "yes" : "no");
  });

  std::cout << (failed ? std::to_string(failed) + " criteria failed\n" : std::string("all criteria passed\n"));
  return failed ? 1 : 0;
}
