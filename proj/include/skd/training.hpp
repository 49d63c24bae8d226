#pragma once

#include "skd/config.hpp"
#include "skd/losses.hpp"
#include "skd/model.hpp"
#include "skd/persistence.hpp"
#include "skd/synthetic.hpp"

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace skd {

/// Labeled frames of one sequence held in memory. Still images are
/// one-frame sequences.
struct TrainingSequence {
  std::string name;
  SequenceKind kind = SequenceKind::video;
  std::vector<Tensorf> frames;  // 1 x 3 x h x w in [0, 1]
  std::vector<Tensorf> masks;   // 1 x 1 x h x w in {0, 1}
};

// Loads every labeled frame of the index; unlabeled frames are skipped.
std::vector<TrainingSequence> load_training_sequences(const DatasetIndex& index);

std::vector<TrainingSequence> to_training_sequences(const std::vector<SyntheticSequence>& synthetic);

/// base_lr * (1 - iter / max_iter)^power for 0 <= iter <= max_iter.
double poly_lr(double base_lr, int iter, int max_iter, double power = 0.9);

/// Geometric augmentation sampled once and applied to every frame and mask of
/// a pair. The crop window is taken from the image rotated by `angle_deg`
/// about its center, then mirrored horizontally when `flip` is set.
struct AugmentParams {
  int crop = 0;
  int offset_y = 0;
  int offset_x = 0;
  double angle_deg = 0;
  bool flip = false;
  // Source extent after upscaling images smaller than the crop.
  int height = 0;
  int width = 0;

  bool operator==(const AugmentParams&) const = default;
};

AugmentParams sample_augment(int height, int width, const TrainConfig& cfg, Rng& rng);

// Masks are interpolated like frames and re-binarized at 0.5.
Tensorf apply_transform(const Tensorf& image, const AugmentParams& params, bool is_mask);

struct FramePair {
  Tensorf frame_t;
  Tensorf frame_t0;
  Tensorf gt_t;
  Tensorf gt_t0;
  int t = 0;
  int offset = 0;
};

/// Draws t uniformly, then an offset uniformly from {-t0_max..-1, 1..t0_max}
/// restricted to indices inside the sequence.
std::pair<int, int> sample_pair_indices(int length, int t0_max, Rng& rng);

FramePair sample_pair(const TrainingSequence& seq, const TrainConfig& cfg, Rng& rng);

struct LossLogLine {
  int iter = 0;
  double lr = 0;
  double spatial = 0;
  double temporal = 0;
  double total = 0;
};

std::string format_log_line(const LossLogLine& line);

struct TrainOptions {
  std::string out_dir;  // empty: nothing is written
  bool write_checkpoints = true;
  // Parameters to start from. Stage 1 resumes at their recorded iteration;
  // stage 2 adopts matching keys and initializes the rest.
  const ParameterStore* init = nullptr;
  std::function<void(const LossLogLine&)> on_iteration;
};

struct TrainResult {
  ParameterStore params;
  std::vector<LossLogLine> log;
  AdoptionReport adoption;
};

// Single-frame training of the spatial branch.
TrainResult train_stage1(const std::vector<TrainingSequence>& data, const RunConfig& cfg, const TrainOptions& opts);

// Frame-pair finetuning with the temporal branch selected by the ablation flags.
TrainResult train_stage2(const std::vector<TrainingSequence>& data, const RunConfig& cfg, const TrainOptions& opts);

/// One SGD step with momentum and L2 weight decay:
///   g += wd * w;  v = momentum * v + g;  w -= lr * v
void sgd_step(ParameterStore& params, std::map<std::string, Tensorf>& velocity, double lr, double momentum,
              double weight_decay, double grad_clip = 0);

}  // namespace skd
