#include "skd/inference.hpp"

#include "skd/error.hpp"
#include "skd/image_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>

namespace fs = std::filesystem;

namespace skd {

namespace {

Tensorf to_saliency(const Varf& logits, const Shape& frame) {
  Tensorf map = resize_bilinear(sigmoid(logits.value()), frame.h, frame.w);
  map.array() = map.array().max(0.0f).min(1.0f);
  return map;
}

void check_frame(const Tensorf& rgb) {
  validate_frames(rgb);
  if (rgb.shape().n != 1) throw ShapeError("inference takes one frame at a time, got " + rgb.shape().str());
}

Tensorf quantized(const Tensorf& map) {
  Tensorf out(map.shape());
  for (std::int64_t i = 0; i < map.numel(); ++i) out.data()[i] = float(quantize8(map.data()[i])) / 255.0f;
  return out;
}

}  // namespace

Tensorf infer_frame(const Tensorf& rgb, ParameterStore& params, const ArchitectureConfig& arch) {
  check_frame(rgb);
  NoGradGuard no_grad;
  ForwardContext ctx{params, false};
  const SpatialOutput out = forward_spatial(Varf(normalize_frames(rgb, arch)), ctx, arch);
  return to_saliency(out.phases.final_logits(), rgb.shape());
}

Tensorf infer_frame_temporal(const Tensorf& rgb, const Tensorf& previous, ParameterStore& params,
                             const ArchitectureConfig& arch) {
  check_frame(rgb);
  check_frame(previous);
  if (!(rgb.shape() == previous.shape()))
    throw ShapeError("temporal inference: frames differ in size " + rgb.shape().str() + " vs " +
                     previous.shape().str());
  if (!has_encoder(params)) throw MissingParameterError("temporal inference needs the encoder parameters");
  NoGradGuard no_grad;
  ForwardContext ctx{params, false};
  const SpatialOutput ref = forward_spatial(Varf(normalize_frames(previous, arch)), ctx, arch);
  const SpatialOutput cur = forward_spatial(Varf(normalize_frames(rgb, arch)), ctx, arch);
  return to_saliency(forward_temporal(ref, cur, ctx, arch).final_logits(), rgb.shape());
}

bool uses_temporal_inference(const ParameterStore& params) {
  const std::string& a = params.metadata().ablation;
  return a != "bs" && AblationFlags::parse(a).fe_t;
}

TimingReport summarize_timing(std::vector<double> seconds) {
  TimingReport r;
  r.seconds = std::move(seconds);
  if (r.seconds.empty()) return r;
  const double n = double(r.seconds.size());
  r.mean = std::accumulate(r.seconds.begin(), r.seconds.end(), 0.0) / n;
  std::vector<double> sorted = r.seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size() / 2;
  r.median = sorted.size() % 2 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
  double var = 0;
  for (double s : r.seconds) var += (s - r.mean) * (s - r.mean);
  r.stddev = std::sqrt(var / n);
  return r;
}

TimingReport infer_sequence(const SequenceEntry& sequence, ParameterStore& params, const ArchitectureConfig& arch,
                            const std::string& out_dir) {
  if (sequence.frames.empty()) throw DataError("sequence '" + sequence.name + "' has no frames");
  const bool temporal = uses_temporal_inference(params);
  fs::create_directories(out_dir);
  std::vector<double> seconds;
  std::vector<std::string> skipped;
  Tensorf previous;
  for (const auto& path : sequence.frames) {
    Tensorf rgb;
    try {
      rgb = read_rgb(path);
      validate_frames(rgb);
    } catch (const Error& e) {
      std::cerr << "warning: skipping " << path << ": " << e.what() << '\n';
      skipped.push_back(path);
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Tensorf map;
    if (temporal) {
      const Tensorf& ref = (previous.empty() || !(previous.shape() == rgb.shape())) ? rgb : previous;
      map = infer_frame_temporal(rgb, ref, params, arch);
    } else {
      map = infer_frame(rgb, params, arch);
    }
    seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    write_gray8((fs::path(out_dir) / (fs::path(path).stem().string() + ".png")).string(), map);
    previous = std::move(rgb);
  }
  TimingReport r = summarize_timing(std::move(seconds));
  r.skipped = std::move(skipped);
  r.written = r.seconds.size();
  return r;
}

std::string timing_report_json(const TimingReport& r) {
  nlohmann::json j = {{"frames", r.written},
                      {"mean_seconds", r.mean},
                      {"median_seconds", r.median},
                      {"stddev_seconds", r.stddev},
                      {"per_frame_seconds", r.seconds},
                      {"skipped", r.skipped}};
  return j.dump(2);
}

EvalResult evaluate_sequences(const std::vector<TrainingSequence>& sequences, ParameterStore& params,
                              const ArchitectureConfig& arch, double beta2) {
  const bool temporal = uses_temporal_inference(params);
  std::vector<Tensord> preds, gts;
  for (const auto& seq : sequences)
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
      const Tensorf map = temporal ? infer_frame_temporal(seq.frames[k], seq.frames[k == 0 ? 0 : k - 1], params, arch)
                                   : infer_frame(seq.frames[k], params, arch);
      preds.push_back(quantized(map).cast<double>());
      gts.push_back(seq.masks[k].cast<double>());
    }
  return evaluate(preds, gts, beta2);
}

}  // namespace skd
