#pragma once

#include "skd/attention.hpp"
#include "skd/embedding.hpp"
#include "skd/features.hpp"

#include <cstdint>
#include <string>

namespace skd {

struct SpatialOutput {
  FeaturePyramid pyramid;
  PhasePredictions phases;
};

/// Fresh, initialized parameters for the spatial branch, plus the
/// inter-frame encoder (fusion + third embedding unit) when requested.
ParameterStore build_parameters(const ArchitectureConfig& arch, bool with_encoder, std::uint64_t seed);

void add_encoder_parameters(ParameterStore& store, const ArchitectureConfig& arch, Rng& rng);

bool has_encoder(const ParameterStore& store);

SpatialOutput forward_spatial(const Varf& frames, ForwardContext& ctx, const ArchitectureConfig& arch);

/// Phases of frame t+t0 extended with the encoder phase P3, which consumes the
/// fused high-level features of both frames.
PhasePredictions forward_temporal(const SpatialOutput& frame_t, const SpatialOutput& frame_t0, ForwardContext& ctx,
                                  const ArchitectureConfig& arch);

// Copies `backbone.*` weights from a parameter file into `store`, checking shapes.
std::size_t load_pretrained_backbone(ParameterStore& store, const std::string& path);

}  // namespace skd
