#include "skd/training.hpp"

#include "skd/error.hpp"
#include "skd/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

namespace fs = std::filesystem;

namespace skd {

namespace {

constexpr std::uint64_t kDataStream = 0x9E3779B97F4A7C15ull;

float sample_bilinear(const float* plane, int h, int w, double y, double x) {
  const double fy = std::floor(y), fx = std::floor(x);
  const int y0 = int(fy), x0 = int(fx);
  const double wy = y - fy, wx = x - fx;
  double acc = 0;
  for (int dy = 0; dy < 2; ++dy)
    for (int dx = 0; dx < 2; ++dx) {
      const int yy = y0 + dy, xx = x0 + dx;
      const double wgt = (dy ? wy : 1 - wy) * (dx ? wx : 1 - wx);
      if (wgt == 0 || yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
      acc += wgt * plane[std::int64_t(yy) * w + xx];
    }
  return float(acc);
}

Tensorf working_targets(const std::vector<Tensorf>& masks, const Shape& logits) {
  return resize_area(stack_batch(masks), logits.h, logits.w);
}

void check_finite(double v, int iter) {
  if (!std::isfinite(v))
    throw NumericError("loss became non-finite at iteration " + std::to_string(iter) +
                       "; lower the learning rate or enable train.grad_clip");
}

class RunWriter {
 public:
  RunWriter(const TrainOptions& opts, int stage) : opts_(opts), stage_(stage) {
    if (opts.out_dir.empty()) return;
    fs::create_directories(opts.out_dir);
    log_.open(fs::path(opts.out_dir) / ("stage" + std::to_string(stage) + "_loss.tsv"));
    if (!log_) throw DataError("cannot write the loss log under '" + opts.out_dir + "'");
    log_ << "iter\tlr\tL_s\tL_t\ttotal\n";
  }

  void record(const LossLogLine& line, std::vector<LossLogLine>& log) {
    log.push_back(line);
    if (log_.is_open()) log_ << format_log_line(line) << '\n' << std::flush;
    if (opts_.on_iteration) opts_.on_iteration(line);
  }

  void checkpoint(const ParameterStore& params, const RunConfig& cfg, const std::string& tag) {
    if (opts_.out_dir.empty() || !opts_.write_checkpoints) return;
    save_checkpoint((fs::path(opts_.out_dir) / ("stage" + std::to_string(stage_) + "_" + tag + ".skd")).string(),
                    params, cfg);
  }

  void periodic(const ParameterStore& params, const RunConfig& cfg, int done) {
    const int k = cfg.train.checkpoint_interval;
    if (k <= 0 || done % k != 0) return;
    char tag[32];
    std::snprintf(tag, sizeof tag, "iter%06d", done);
    checkpoint(params, cfg, tag);
  }

 private:
  const TrainOptions& opts_;
  int stage_;
  std::ofstream log_;
};

struct FrameRef {
  std::size_t sequence;
  std::size_t frame;
};

}  // namespace

std::vector<TrainingSequence> load_training_sequences(const DatasetIndex& index) {
  std::vector<TrainingSequence> out;
  for (const auto& entry : index.sequences) {
    TrainingSequence seq;
    seq.name = entry.name;
    seq.kind = entry.kind;
    for (std::size_t k = 0; k < entry.frames.size(); ++k) {
      if (entry.masks[k].empty()) continue;
      Tensorf frame = read_rgb(entry.frames[k]);
      Tensorf mask = read_mask(entry.masks[k]);
      if (!frame.shape().same_spatial(mask.shape()))
        throw DataError("'" + entry.frames[k] + "' and its mask differ in size");
      seq.frames.push_back(std::move(frame));
      seq.masks.push_back(std::move(mask));
    }
    if (!seq.frames.empty()) out.push_back(std::move(seq));
  }
  if (out.empty()) throw DataError("dataset '" + index.root + "' has no labeled frames");
  return out;
}

std::vector<TrainingSequence> to_training_sequences(const std::vector<SyntheticSequence>& synthetic) {
  std::vector<TrainingSequence> out;
  for (const auto& s : synthetic) out.push_back({s.name, SequenceKind::video, s.frames, s.masks});
  return out;
}

double poly_lr(double base_lr, int iter, int max_iter, double power) {
  if (max_iter <= 0 || iter < 0 || iter > max_iter)
    throw ConfigError("poly_lr: iteration " + std::to_string(iter) + " outside [0, " + std::to_string(max_iter) + "]");
  return base_lr * std::pow(1.0 - double(iter) / double(max_iter), power);
}

AugmentParams sample_augment(int height, int width, const TrainConfig& cfg, Rng& rng) {
  AugmentParams p;
  p.crop = cfg.crop;
  p.height = height;
  p.width = width;
  const int shorter = std::min(height, width);
  if (shorter < cfg.crop) {
    const double s = double(cfg.crop) / shorter;
    p.height = std::max(cfg.crop, int(std::ceil(height * s)));
    p.width = std::max(cfg.crop, int(std::ceil(width * s)));
  }
  p.offset_y = int(rng.below(std::uint64_t(p.height - cfg.crop + 1)));
  p.offset_x = int(rng.below(std::uint64_t(p.width - cfg.crop + 1)));
  p.angle_deg = cfg.rotation_deg > 0 ? rng.uniform(-cfg.rotation_deg, cfg.rotation_deg) : 0.0;
  p.flip = cfg.flip && rng.coin();
  return p;
}

Tensorf apply_transform(const Tensorf& image, const AugmentParams& p, bool is_mask) {
  const Shape in = image.shape();
  if (in.n != 1) throw ShapeError("apply_transform: expected a single image, got " + in.str());
  Tensorf src = (in.h == p.height && in.w == p.width) ? image : resize_bilinear(image, p.height, p.width);
  const double theta = p.angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double cy = (p.height - 1) / 2.0, cx = (p.width - 1) / 2.0;
  Tensorf out(Shape{1, in.c, p.crop, p.crop});
  for (int y = 0; y < p.crop; ++y)
    for (int x = 0; x < p.crop; ++x) {
      const double dy = (y + p.offset_y) - cy;
      const double dx = ((p.flip ? p.crop - 1 - x : x) + p.offset_x) - cx;
      const double sy = cy + cs * dy - sn * dx;
      const double sx = cx + sn * dy + cs * dx;
      for (int c = 0; c < in.c; ++c) {
        const float v = sample_bilinear(src.plane(0, c), p.height, p.width, sy, sx);
        out.at(0, c, y, x) = is_mask ? (v >= 0.5f ? 1.0f : 0.0f) : v;
      }
    }
  return out;
}

std::pair<int, int> sample_pair_indices(int length, int t0_max, Rng& rng) {
  if (length < 2) throw DataError("frame pairs need a sequence of at least 2 frames, got " + std::to_string(length));
  if (t0_max < 1) throw ConfigError("train.t0_max must be at least 1");
  const int t = int(rng.below(std::uint64_t(length)));
  std::vector<int> legal;
  for (int o = -t0_max; o <= t0_max; ++o)
    if (o != 0 && t + o >= 0 && t + o < length) legal.push_back(o);
  return {t, legal[rng.below(legal.size())]};
}

FramePair sample_pair(const TrainingSequence& seq, const TrainConfig& cfg, Rng& rng) {
  auto [t, offset] = sample_pair_indices(int(seq.frames.size()), cfg.t0_max, rng);
  const Shape s = seq.frames[std::size_t(t)].shape();
  const AugmentParams p = sample_augment(s.h, s.w, cfg, rng);
  FramePair pair;
  pair.t = t;
  pair.offset = offset;
  pair.frame_t = apply_transform(seq.frames[std::size_t(t)], p, false);
  pair.frame_t0 = apply_transform(seq.frames[std::size_t(t + offset)], p, false);
  pair.gt_t = apply_transform(seq.masks[std::size_t(t)], p, true);
  pair.gt_t0 = apply_transform(seq.masks[std::size_t(t + offset)], p, true);
  return pair;
}

std::string format_log_line(const LossLogLine& l) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d\t%.9g\t%.9g\t%.9g\t%.9g", l.iter, l.lr, l.spatial, l.temporal, l.total);
  return buf;
}

void sgd_step(ParameterStore& params, std::map<std::string, Tensorf>& velocity, double lr, double momentum,
              double weight_decay, double grad_clip) {
  float clip_scale = 1.0f;
  if (grad_clip > 0) {
    double sq = 0;
    for (const auto& [key, e] : params.entries())
      if (e.trainable && e.node->has_grad()) sq += e.node->grad.array().template cast<double>().square().sum();
    const double norm = std::sqrt(sq);
    if (norm > grad_clip) clip_scale = float(grad_clip / norm);
  }
  for (const auto& [key, e] : params.entries()) {
    if (!e.trainable || !e.node->has_grad()) continue;
    auto& w = e.node->value.array();
    auto it = velocity.find(key);
    if (it == velocity.end()) it = velocity.emplace(key, Tensorf(e.node->value.shape())).first;
    auto& v = it->second.array();
    v = float(momentum) * v + (clip_scale * e.node->grad.array() + float(weight_decay) * w);
    w -= float(lr) * v;
  }
}

TrainResult train_stage1(const std::vector<TrainingSequence>& data, const RunConfig& cfg, const TrainOptions& opts) {
  validate(cfg);
  const AblationFlags flags = cfg.train.ablation;
  flags.validate();
  const StageSchedule& sched = cfg.train.stage1;
  std::vector<FrameRef> frames;
  for (std::size_t s = 0; s < data.size(); ++s)
    for (std::size_t k = 0; k < data[s].frames.size(); ++k) frames.push_back({s, k});
  if (frames.empty()) throw DataError("stage 1: no labeled frames");

  TrainResult result;
  int start = 0;
  if (opts.init) {
    result.params = opts.init->clone();
    check_compatible(result.params, cfg.arch);
    start = int(result.params.metadata().iteration);
    if (result.params.metadata().stage != 1 || start > sched.max_iter)
      throw ConfigError("stage 1 can only resume from a stage-1 checkpoint within train.stage1.max_iter");
  } else {
    result.params = build_parameters(cfg.arch, false, cfg.train.seed);
  }
  ParameterStore& params = result.params;
  params.metadata().stage = 1;
  params.metadata().ablation = flags.str();
  params.metadata().removable_prefixes.clear();

  const LossConfig loss_cfg = cfg.loss_for_flags(flags);
  Rng rng(cfg.train.seed ^ kDataStream);
  std::map<std::string, Tensorf> velocity;
  RunWriter writer(opts, 1);

  for (int iter = start; iter < sched.max_iter; ++iter) {
    const double lr = poly_lr(sched.base_lr, iter, sched.max_iter, cfg.train.poly_power);
    std::vector<Tensorf> images, masks;
    for (int b = 0; b < cfg.train.batch_size; ++b) {
      const FrameRef ref = frames[rng.below(frames.size())];
      const Tensorf& frame = data[ref.sequence].frames[ref.frame];
      const AugmentParams p = sample_augment(frame.shape().h, frame.shape().w, cfg.train, rng);
      images.push_back(apply_transform(frame, p, false));
      masks.push_back(apply_transform(data[ref.sequence].masks[ref.frame], p, true));
    }
    ForwardContext ctx{params, true};
    const SpatialOutput out = forward_spatial(Varf(normalize_frames(stack_batch(images), cfg.arch)), ctx, cfg.arch);
    LossReport<float> report;
    const Varf loss = spatial_loss(out.phases, working_targets(masks, out.phases.logits[0].shape()), loss_cfg, &report);
    check_finite(report.total, iter);

    params.zero_grad();
    backward(loss);
    sgd_step(params, velocity, lr, sched.momentum, cfg.train.weight_decay, cfg.train.grad_clip);
    params.metadata().iteration = iter + 1;
    writer.record({iter, lr, report.total, 0.0, report.total}, result.log);
    writer.periodic(params, cfg, iter + 1);
  }
  writer.checkpoint(params, cfg, "final");
  return result;
}

TrainResult train_stage2(const std::vector<TrainingSequence>& data, const RunConfig& cfg, const TrainOptions& opts) {
  validate(cfg);
  const AblationFlags flags = cfg.train.ablation;
  flags.validate();
  if (!opts.init) throw ConfigError("stage 2 needs an initial checkpoint (stage 1 output)");
  const StageSchedule& sched = cfg.train.stage2;

  std::vector<FrameRef> frames;
  for (std::size_t s = 0; s < data.size(); ++s)
    if (data[s].frames.size() >= 2)
      for (std::size_t k = 0; k < data[s].frames.size(); ++k) frames.push_back({s, k});
  if (frames.empty()) throw DataError("stage 2: no sequence has two or more labeled frames");

  TrainResult result;
  result.params = build_parameters(cfg.arch, flags.encoder(), cfg.train.seed);
  result.adoption = adopt_parameters(result.params, *opts.init);
  ParameterStore& params = result.params;
  params.metadata() = StoreMetadata{2, flags.str(), 0, {}};
  if (flags.fe_o) params.metadata().removable_prefixes.push_back(kEncoderPrefix);

  const LossConfig loss_cfg = cfg.loss_for_flags(flags);
  Rng rng((cfg.train.seed + 2) ^ kDataStream);
  std::map<std::string, Tensorf> velocity;
  RunWriter writer(opts, 2);

  for (int iter = 0; iter < sched.max_iter; ++iter) {
    const double lr = poly_lr(sched.base_lr, iter, sched.max_iter, cfg.train.poly_power);
    std::vector<Tensorf> img_t, img_t0, gt_t, gt_t0;
    for (int b = 0; b < cfg.train.batch_size; ++b) {
      const FrameRef ref = frames[rng.below(frames.size())];
      FramePair pair = sample_pair(data[ref.sequence], cfg.train, rng);
      img_t.push_back(std::move(pair.frame_t));
      img_t0.push_back(std::move(pair.frame_t0));
      gt_t.push_back(std::move(pair.gt_t));
      gt_t0.push_back(std::move(pair.gt_t0));
    }
    ForwardContext ctx{params, true};
    const SpatialOutput out_t = forward_spatial(Varf(normalize_frames(stack_batch(img_t), cfg.arch)), ctx, cfg.arch);
    const SpatialOutput out_t0 = forward_spatial(Varf(normalize_frames(stack_batch(img_t0), cfg.arch)), ctx, cfg.arch);
    const Shape working = out_t.phases.logits[0].shape();
    const Tensorf target_t = working_targets(gt_t, working);
    const Tensorf target_t0 = working_targets(gt_t0, working);

    LossReport<float> rs, rt;
    const Varf ls = spatial_loss(out_t.phases, target_t, loss_cfg, &rs);
    Varf lt;
    switch (loss_cfg.temporal_mode) {
      case TemporalMode::none:
        lt = spatial_loss(out_t0.phases, target_t0, loss_cfg, &rt);
        break;
      case TemporalMode::plain:
        lt = temporal_loss(out_t0.phases, out_t.phases.final_logits(), target_t0, loss_cfg, &rt);
        break;
      case TemporalMode::encoded:
        lt = temporal_loss(forward_temporal(out_t, out_t0, ctx, cfg.arch), out_t.phases.final_logits(), target_t0,
                           loss_cfg, &rt);
        break;
    }
    const Varf total = add(ls, scale(lt, float(loss_cfg.temporal_weight)));
    const double total_value = total.value().data()[0];
    check_finite(total_value, iter);

    params.zero_grad();
    backward(total);
    sgd_step(params, velocity, lr, sched.momentum, cfg.train.weight_decay, cfg.train.grad_clip);
    params.metadata().iteration = iter + 1;
    writer.record({iter, lr, rs.total, rt.total, total_value}, result.log);
    writer.periodic(params, cfg, iter + 1);
  }
  writer.checkpoint(params, cfg, "final");
  return result;
}

}  // namespace skd
