#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "skd/image_io.hpp"
#include "skd/metrics.hpp"
#include "support.hpp"

#include <json.hpp>

#include <cmath>

using namespace skd;

namespace {

// Pixel-loop reference over all 256 thresholds.
struct Oracle {
  double f_max = 0;
  double mae = 0;
};

Oracle oracle(const std::vector<Tensord>& preds, const std::vector<Tensord>& gts, double beta2) {
  Oracle o;
  std::vector<double> p_avg(256, 0), r_avg(256, 0);
  int counted = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const Tensord& p = preds[k];
    const Tensord& g = gts[k];
    double err = 0, fg = 0;
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      err += std::abs(p.data()[i] - g.data()[i]);
      fg += g.data()[i];
    }
    o.mae += err / double(p.numel());
    if (fg == 0) continue;
    ++counted;
    for (int t = 0; t < 256; ++t) {
      double tp = 0, pos = 0;
      for (std::int64_t i = 0; i < p.numel(); ++i) {
        const bool on = p.data()[i] >= (t + 0.5) / 256.0;
        pos += on;
        tp += on && g.data()[i] == 1.0;
      }
      p_avg[std::size_t(t)] += pos > 0 ? tp / pos : 0.0;
      r_avg[std::size_t(t)] += tp / fg;
    }
  }
  o.mae /= double(preds.size());
  for (int t = 0; t < 256; ++t) {
    const double p = counted ? p_avg[std::size_t(t)] / counted : 0;
    const double r = counted ? r_avg[std::size_t(t)] / counted : 0;
    const double f = (beta2 * p + r) > 0 ? (1 + beta2) * p * r / (beta2 * p + r) : 0;
    o.f_max = std::max(o.f_max, f);
  }
  return o;
}

Tensord quantized_map(int h, int w, Rng& rng) {
  Tensord t(Shape{1, 1, h, w});
  for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = double(rng.below(256)) / 255.0;
  return t;
}

}  // namespace

TEST_CASE("precision and recall at a threshold") {
  ArrayX<double> gt(4), pred(4);
  gt << 1, 1, 0, 0;
  pred << 1, 1, 0, 0;
  for (int t = 0; t < 255; ++t) {
    const auto pr = pr_at_threshold(pred, gt, t);
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
  }
  const auto inverse = pr_at_threshold(1 - gt, gt, 100);
  CHECK(inverse.precision == 0.0);
  CHECK(inverse.recall == 0.0);
  CHECK(pr_at_threshold(ArrayX<double>::Zero(4), gt, 0).precision == 0.0);
  CHECK(pr_at_threshold(pred, ArrayX<double>::Zero(4), 10).recall == 1.0);
  ArrayX<double> not_binary = gt;
  not_binary[0] = 0.5;
  CHECK_THROWS_AS(pr_at_threshold(pred, not_binary, 0), DataError);
}

TEST_CASE("F-measure identities") {
  CHECK(f_measure(0.5, 0.5, 0.3) == doctest::Approx(0.5));
  CHECK(f_measure(1, 1, 0.3) == 1.0);
  CHECK(f_measure(0, 0, 0.3) == 0.0);
}

TEST_CASE("max F and MAE match the pixel-loop oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Tensord> preds, gts;
    for (int k = 0; k < 3; ++k) {
      preds.push_back(trial % 2 ? quantized_map(8, 8, rng) : test::random_unit({1, 1, 8, 8}, rng));
      gts.push_back(test::random_binary({1, 1, 8, 8}, rng));
    }
    const EvalResult r = evaluate(preds, gts, 0.3);
    const Oracle o = oracle(preds, gts, 0.3);
    CHECK(std::abs(r.f_max - o.f_max) < 1e-12);
    CHECK(std::abs(r.mae - o.mae) < 1e-12);
    CHECK(std::abs(mae(preds, gts) - o.mae) < 1e-12);
  }
}

TEST_CASE("perfect and degenerate predictions") {
  Rng rng(2);
  std::vector<Tensord> gts{test::random_binary({1, 1, 8, 8}, rng), test::random_binary({1, 1, 8, 8}, rng)};
  const EvalResult r = evaluate(gts, gts);
  CHECK(r.f_max == 1.0);
  CHECK(r.mae == 0.0);
  CHECK(r.frame_count == 2);

  std::vector<Tensord> zero{Tensord(Shape{1, 1, 4, 4})};
  std::vector<Tensord> gt{Tensord(Shape{1, 1, 4, 4})};
  for (int i = 0; i < 4; ++i) gt[0].data()[i] = 1;
  CHECK(mae(zero, gt) == 0.25);

  std::vector<Tensord> empty{Tensord(Shape{1, 1, 4, 4})};
  const EvalResult e = evaluate({Tensord(Shape{1, 1, 4, 4}, 0.3), gts[0].slice_sample(0)}, {empty[0], gts[0]});
  CHECK(e.empty_gt_frames == 1);
  CHECK(e.frame_count == 2);

  CHECK_THROWS_AS(evaluate({}, {}), DataError);
  CHECK_THROWS_AS(evaluate(gts, {gts[0]}), DataError);
}

TEST_CASE("monotone rescaling keeps max F") {
  Rng rng(3);
  std::vector<Tensord> preds, moved, gts;
  for (int k = 0; k < 4; ++k) {
    preds.push_back(quantized_map(8, 8, rng));
    gts.push_back(test::random_binary({1, 1, 8, 8}, rng));
  }
  // Level k > 0 moves from k/255 to (k + 0.75)/256: strictly increasing, and
  // every level still sits alone in its threshold bin.
  for (const auto& p : preds) {
    Tensord q = p;
    for (std::int64_t i = 0; i < q.numel(); ++i) {
      const double level = std::round(q.data()[i] * 255);
      q.data()[i] = level == 0 ? 0.0 : (level + 0.75) / 256.0;
    }
    moved.push_back(q);
  }
  CHECK(evaluate(preds, gts).f_max == evaluate(moved, gts).f_max);
}

TEST_CASE("MAE is a metric on maps") {
  Rng rng(4);
  const std::vector<Tensord> a{test::random_unit({1, 1, 6, 6}, rng)};
  const std::vector<Tensord> b{test::random_unit({1, 1, 6, 6}, rng)};
  const std::vector<Tensord> c{test::random_unit({1, 1, 6, 6}, rng)};
  CHECK(mae(a, b) == mae(b, a));
  CHECK(mae(a, c) <= mae(a, b) + mae(b, c) + 1e-15);
}

TEST_CASE("predictions are resized to the ground truth") {
  Tensord pred(Shape{1, 1, 4, 4}, 1.0);
  Tensord gt(Shape{1, 1, 8, 8}, 1.0);
  const EvalResult r = evaluate({pred}, {gt});
  CHECK(r.mae == 0.0);
  CHECK(r.f_max == 1.0);
}

TEST_CASE("directory evaluation pairs by stem") {
  test::TempDir dir("metrics");
  Rng rng(5);
  for (const char* stem : {"a/00000", "a/00001", "b/00000"}) {
    const Tensorf gt = test::random_binary({1, 1, 8, 8}, rng).cast<float>();
    write_gray8(dir.str(std::string("gt/") + stem + ".png"), gt);
    write_gray8(dir.str(std::string("pred/") + stem + ".png"), gt);
  }
  const EvalResult r = evaluate_directories(dir.str("pred"), dir.str("gt"));
  CHECK(r.frame_count == 3);
  CHECK(r.f_max == 1.0);
  CHECK(r.mae == 0.0);

  const auto report = nlohmann::json::parse(eval_report_json(r));
  CHECK(report.at("precision").size() == 256);
  CHECK(report.at("conventions").at("beta2") == 0.3);

  write_gray8(dir.str("pred/c/00000.png"), Tensorf(Shape{1, 1, 8, 8}));
  try {
    evaluate_directories(dir.str("pred"), dir.str("gt"));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("c/00000") != std::string::npos);
  }
}
