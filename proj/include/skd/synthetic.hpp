#pragma once

#include "skd/rng.hpp"
#include "skd/tensor.hpp"

#include <string>
#include <vector>

namespace skd {

struct SyntheticSpec {
  int frames = 5;
  int height = 64;
  int width = 64;
  int square = 16;  // side length in pixels
  int max_step = 4;  // per-frame displacement bound along each axis
};

/// A bright square drifting over a darker noisy background. Frames are
/// 1 x 3 x h x w in [0, 1], quantized to 8-bit levels; masks are 1 x 1 x h x w.
struct SyntheticSequence {
  std::string name;
  std::vector<Tensorf> frames;
  std::vector<Tensorf> masks;
};

SyntheticSequence moving_square(const std::string& name, const SyntheticSpec& spec, Rng& rng);

std::vector<SyntheticSequence> moving_square_set(int sequences, const SyntheticSpec& spec, std::uint64_t seed,
                                                 const std::string& prefix = "seq");

// Writes frames/<name>/<k>.png and masks/<name>/<k>.png under `root`.
void write_synthetic_dataset(const std::string& root, const std::vector<SyntheticSequence>& sequences);

}  // namespace skd
