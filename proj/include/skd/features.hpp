#pragma once

#include "skd/config.hpp"
#include "skd/parameters.hpp"

#include <array>
#include <vector>

namespace skd {

/// Side outputs S1..S5 of one batch of frames plus the fused low-level (L)
/// and high-level (H) maps.
struct FeaturePyramid {
  std::array<Varf, 5> side_outputs;
  Varf low_level;
  Varf high_level;
};

// Output stride of each side output relative to the input frame.
constexpr std::array<int, 5> kStridePlan{4, 4, 8, 8, 8};

// Spatial size of a side output at the given stride for an input extent.
int side_output_extent(Backbone backbone, int input_extent, int stride);

std::array<int, 5> side_output_channels(const ArchitectureConfig& arch);

/// Converts RGB frames in [0, 1] to the network input using the configured
/// per-channel mean and standard deviation.
Tensorf normalize_frames(const Tensorf& rgb, const ArchitectureConfig& arch);

// Throws ShapeError naming the offending dimension.
void validate_frames(const Tensorf& frames);

std::array<Varf, 5> extract_side_outputs(const Varf& frames, ForwardContext& ctx, const ArchitectureConfig& arch);

/// Atrous spatial pyramid pooling over the last backbone stage: a 1x1 branch,
/// one dilated 3x3 branch per configured rate and an image-pooling branch,
/// concatenated and projected back to `aspp_channels`. Preserves spatial size.
Varf aspp(const Varf& x, ForwardContext& ctx, const ArchitectureConfig& arch);

// Inputs must already share a spatial size (see align_to_coarsest).
Varf fuse_low_level(const Varf& s1, const Varf& s2, ForwardContext& ctx);
Varf fuse_high_level(const Varf& s3, const Varf& s4, const Varf& s5, ForwardContext& ctx);

// Bilinearly resamples every map to the smallest spatial size among them.
std::vector<Varf> align_to_coarsest(const std::vector<Varf>& maps);

FeaturePyramid extract_features(const Varf& frames, ForwardContext& ctx, const ArchitectureConfig& arch);

void declare_feature_parameters(ParameterStore& store, const ArchitectureConfig& arch, Rng& rng);

}  // namespace skd
