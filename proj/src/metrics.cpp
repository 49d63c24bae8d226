#include "skd/metrics.hpp"

#include "skd/error.hpp"
#include "skd/image_io.hpp"
#include "skd/nn_ops.hpp"
#include "skd/persistence.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

namespace fs = std::filesystem;

namespace skd {

namespace {

void check_binary(const Eigen::Ref<const ArrayX<double>>& gt) {
  if (((gt != 0.0) && (gt != 1.0)).any()) throw DataError("ground truth is not binary");
}

// Largest threshold at which a pixel with value p is still positive, plus one
// (0 means never positive, 256 means positive at every threshold).
int positive_bin(double p) {
  const double top = std::floor(256.0 * p - 0.5);
  return int(std::clamp(top + 1.0, 0.0, double(kThresholds)));
}

Tensord aligned_prediction(const Tensord& pred, const Tensord& gt) {
  if (pred.shape().n != 1 || pred.shape().c != 1 || gt.shape().n != 1 || gt.shape().c != 1)
    throw ShapeError("evaluate: maps must be 1x1xHxW, got " + pred.shape().str() + " and " + gt.shape().str());
  if (pred.shape() == gt.shape()) return pred;
  return resize_bilinear(pred, gt.shape().h, gt.shape().w);
}

void check_sets(const std::vector<Tensord>& preds, const std::vector<Tensord>& gts) {
  if (preds.empty()) throw DataError("evaluate: empty prediction set");
  if (preds.size() != gts.size())
    throw DataError("evaluate: " + std::to_string(preds.size()) + " predictions vs " + std::to_string(gts.size()) +
                    " ground-truth maps");
}

std::vector<std::pair<std::string, fs::path>> images_by_stem(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("'" + root.string() + "' is not a directory");
  std::vector<std::pair<std::string, fs::path>> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || !is_image_file(e.path().string())) continue;
    fs::path rel = fs::relative(e.path(), root);
    rel.replace_extension();
    out.emplace_back(rel.generic_string(), e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

PrecisionRecall pr_at_threshold(const Eigen::Ref<const ArrayX<double>>& pred,
                                const Eigen::Ref<const ArrayX<double>>& gt, int threshold) {
  if (pred.size() != gt.size()) throw ShapeError("pr_at_threshold: size mismatch");
  if (threshold < 0 || threshold >= kThresholds)
    throw ShapeError("pr_at_threshold: threshold " + std::to_string(threshold) + " outside 0..255");
  check_binary(gt);
  const double cut = (threshold + 0.5) / 256.0;
  const auto positive = (pred >= cut).cast<double>();
  const double tp = (positive * gt).sum();
  const double predicted = positive.sum();
  const double actual = gt.sum();
  return {predicted > 0 ? tp / predicted : 0.0, actual > 0 ? tp / actual : 1.0};
}

double f_measure(double precision, double recall, double beta2) {
  const double denom = beta2 * precision + recall;
  return denom > 0 ? (1 + beta2) * precision * recall / denom : 0.0;
}

EvalResult evaluate(const std::vector<Tensord>& preds, const std::vector<Tensord>& gts, double beta2) {
  check_sets(preds, gts);
  EvalResult r;
  r.beta2 = beta2;
  r.frame_count = int(preds.size());
  std::array<double, kThresholds> p_sum{}, r_sum{};
  double mae_sum = 0;
  int counted = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const Tensord pred = aligned_prediction(preds[k], gts[k]);
    const auto& p = pred.array();
    const auto& g = gts[k].array();
    check_binary(g);
    if ((p < 0.0).any() || (p > 1.0).any() || !p.allFinite()) throw DataError("prediction outside [0, 1]");
    mae_sum += (p - g).abs().mean();

    const double actual = g.sum();
    if (actual == 0) {
      ++r.empty_gt_frames;
      continue;
    }
    std::array<double, kThresholds + 1> pos{}, hit{};
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const int b = positive_bin(p[i]);
      pos[std::size_t(b)] += 1;
      hit[std::size_t(b)] += g[i];
    }
    // Positives at threshold t are the pixels with bin > t.
    double predicted = 0, tp = 0;
    for (int t = kThresholds - 1; t >= 0; --t) {
      predicted += pos[std::size_t(t + 1)];
      tp += hit[std::size_t(t + 1)];
      p_sum[std::size_t(t)] += predicted > 0 ? tp / predicted : 0.0;
      r_sum[std::size_t(t)] += tp / actual;
    }
    ++counted;
  }
  r.mae = mae_sum / double(preds.size());
  for (int t = 0; t < kThresholds; ++t) {
    const auto i = std::size_t(t);
    r.precision[i] = counted ? p_sum[i] / counted : 0.0;
    r.recall[i] = counted ? r_sum[i] / counted : 0.0;
    r.f[i] = f_measure(r.precision[i], r.recall[i], beta2);
    if (r.f[i] > r.f_max) {
      r.f_max = r.f[i];
      r.best_threshold = t;
    }
  }
  return r;
}

double max_f_measure(const std::vector<Tensord>& preds, const std::vector<Tensord>& gts, double beta2) {
  return evaluate(preds, gts, beta2).f_max;
}

double mae(const std::vector<Tensord>& preds, const std::vector<Tensord>& gts) {
  check_sets(preds, gts);
  double sum = 0;
  for (std::size_t k = 0; k < preds.size(); ++k)
    sum += (aligned_prediction(preds[k], gts[k]).array() - gts[k].array()).abs().mean();
  return sum / double(preds.size());
}

std::string eval_report_json(const EvalResult& r) {
  nlohmann::json j = {
      {"f_max", r.f_max},
      {"best_threshold", r.best_threshold},
      {"mae", r.mae},
      {"frame_count", r.frame_count},
      {"empty_gt_frames", r.empty_gt_frames},
      {"precision", r.precision},
      {"recall", r.recall},
      {"f_measure", r.f},
      {"conventions",
       {{"beta2", r.beta2},
        {"thresholds", "256 levels, positive when pred >= (t + 0.5) / 256"},
        {"averaging", "precision and recall averaged over frames, F computed from the averages"},
        {"empty_prediction_precision", 0},
        {"empty_gt", "excluded from precision/recall averages, included in mae"},
        {"resize", "predictions bilinearly resized to ground-truth size"}}}};
  return j.dump(2);
}

EvalResult evaluate_directories(const std::string& pred_dir, const std::string& gt_dir, double beta2) {
  const auto preds = images_by_stem(pred_dir);
  const auto gts = images_by_stem(gt_dir);
  std::map<std::string, fs::path> pred_map(preds.begin(), preds.end());
  std::map<std::string, fs::path> gt_map(gts.begin(), gts.end());
  std::vector<std::string> unpaired;
  for (const auto& [stem, path] : pred_map)
    if (!gt_map.count(stem)) unpaired.push_back(stem + " (prediction only)");
  for (const auto& [stem, path] : gt_map)
    if (!pred_map.count(stem)) unpaired.push_back(stem + " (ground truth only)");
  if (!unpaired.empty()) {
    std::string msg = "unpaired files:";
    for (const auto& u : unpaired) msg += "\n  " + u;
    throw DataError(msg);
  }
  if (pred_map.empty()) throw DataError("no images under '" + pred_dir + "'");
  std::vector<Tensord> p, g;
  for (const auto& [stem, path] : pred_map) {
    p.push_back(read_gray(path.string()).cast<double>());
    g.push_back(read_mask(gt_map.at(stem).string()).cast<double>());
  }
  return evaluate(p, g, beta2);
}

}  // namespace skd
