#pragma once

#include "skd/tensor.hpp"

#include <array>
#include <string>
#include <vector>

namespace skd {

inline constexpr int kThresholds = 256;

struct PrecisionRecall {
  double precision = 0;
  double recall = 0;
};

/// Binarizes `pred` at (threshold + 0.5) / 256. Precision is 0 when nothing
/// is predicted positive; recall is 1 when `gt` has no foreground.
PrecisionRecall pr_at_threshold(const Eigen::Ref<const ArrayX<double>>& pred,
                                const Eigen::Ref<const ArrayX<double>>& gt, int threshold);

struct EvalResult {
  std::array<double, kThresholds> precision{};
  std::array<double, kThresholds> recall{};
  std::array<double, kThresholds> f{};
  double f_max = 0;
  int best_threshold = 0;
  double mae = 0;
  int frame_count = 0;
  // Frames whose ground truth has no foreground; they count towards MAE but
  // not towards the precision/recall averages.
  int empty_gt_frames = 0;
  double beta2 = 0.3;
};

double f_measure(double precision, double recall, double beta2);

/// Per threshold, precision and recall are averaged over frames and F is
/// computed from the averages; f_max is the largest such F. Predictions whose
/// size differs from their ground truth are bilinearly resized first.
EvalResult evaluate(const std::vector<Tensord>& preds, const std::vector<Tensord>& gts, double beta2 = 0.3);

double max_f_measure(const std::vector<Tensord>& preds, const std::vector<Tensord>& gts, double beta2 = 0.3);

// Mean over frames of the mean absolute pixel difference.
double mae(const std::vector<Tensord>& preds, const std::vector<Tensord>& gts);

std::string eval_report_json(const EvalResult& r);

/// Pairs image files under the two directories by relative path without
/// extension. Unpaired stems raise DataError listing them.
EvalResult evaluate_directories(const std::string& pred_dir, const std::string& gt_dir, double beta2 = 0.3);

}  // namespace skd
