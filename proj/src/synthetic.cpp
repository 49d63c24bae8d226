#include "skd/synthetic.hpp"

#include "skd/error.hpp"
#include "skd/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>

namespace skd {

namespace {

float level(double v) { return float(quantize8(float(v))) / 255.0f; }

std::string frame_name(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05d.png", k);
  return buf;
}

}  // namespace

SyntheticSequence moving_square(const std::string& name, const SyntheticSpec& spec, Rng& rng) {
  if (spec.frames < 1 || spec.square < 1 || spec.square >= std::min(spec.height, spec.width))
    throw ConfigError("synthetic: square must fit inside the frame");
  SyntheticSequence seq;
  seq.name = name;
  const int span_y = spec.height - spec.square;
  const int span_x = spec.width - spec.square;
  int y = int(rng.below(std::uint64_t(span_y + 1)));
  int x = int(rng.below(std::uint64_t(span_x + 1)));
  int vy = int(rng.below(std::uint64_t(2 * spec.max_step + 1))) - spec.max_step;
  int vx = int(rng.below(std::uint64_t(2 * spec.max_step + 1))) - spec.max_step;

  std::array<double, 3> bg{}, fg{};
  for (int c = 0; c < 3; ++c) {
    bg[std::size_t(c)] = rng.uniform(0.05, 0.4);
    fg[std::size_t(c)] = rng.uniform(0.6, 0.95);
  }
  for (int k = 0; k < spec.frames; ++k) {
    Tensorf frame(Shape{1, 3, spec.height, spec.width});
    Tensorf mask(Shape{1, 1, spec.height, spec.width});
    for (int r = 0; r < spec.height; ++r)
      for (int col = 0; col < spec.width; ++col) {
        const bool inside = r >= y && r < y + spec.square && col >= x && col < x + spec.square;
        mask.at(0, 0, r, col) = inside ? 1.0f : 0.0f;
        for (int c = 0; c < 3; ++c) {
          const double base = inside ? fg[std::size_t(c)] : bg[std::size_t(c)];
          frame.at(0, c, r, col) = level(base + rng.uniform(-0.05, 0.05));
        }
      }
    seq.frames.push_back(std::move(frame));
    seq.masks.push_back(std::move(mask));
    // Bounce off the borders.
    if (y + vy < 0 || y + vy > span_y) vy = -vy;
    if (x + vx < 0 || x + vx > span_x) vx = -vx;
    y = std::clamp(y + vy, 0, span_y);
    x = std::clamp(x + vx, 0, span_x);
  }
  return seq;
}

std::vector<SyntheticSequence> moving_square_set(int sequences, const SyntheticSpec& spec, std::uint64_t seed,
                                                 const std::string& prefix) {
  Rng rng(seed);
  std::vector<SyntheticSequence> out;
  for (int i = 0; i < sequences; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d", i);
    out.push_back(moving_square(prefix + buf, spec, rng));
  }
  return out;
}

void write_synthetic_dataset(const std::string& root, const std::vector<SyntheticSequence>& sequences) {
  const std::filesystem::path base(root);
  for (const auto& seq : sequences)
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
      write_rgb8((base / "frames" / seq.name / frame_name(int(k))).string(), seq.frames[k]);
      write_gray8((base / "masks" / seq.name / frame_name(int(k))).string(), seq.masks[k]);
    }
}

}  // namespace skd
