#include "skd/model.hpp"

#include "skd/error.hpp"
#include "skd/persistence.hpp"

namespace skd {

ParameterStore build_parameters(const ArchitectureConfig& arch, bool with_encoder, std::uint64_t seed) {
  ParameterStore store;
  Rng rng(seed);
  declare_feature_parameters(store, arch, rng);
  declare_embedding_parameters(store, arch, rng);
  if (with_encoder) add_encoder_parameters(store, arch, rng);
  return store;
}

void add_encoder_parameters(ParameterStore& store, const ArchitectureConfig& arch, Rng& rng) {
  declare_fusion_parameters(store, arch, rng);
  declare_temporal_unit(store, arch, rng);
}

bool has_encoder(const ParameterStore& store) { return !store.keys_with_prefix(kEncoderPrefix).empty(); }

SpatialOutput forward_spatial(const Varf& frames, ForwardContext& ctx, const ArchitectureConfig& arch) {
  SpatialOutput out;
  out.pyramid = extract_features(frames, ctx, arch);
  out.phases = spatial_forward(out.pyramid, ctx);
  return out;
}

PhasePredictions forward_temporal(const SpatialOutput& frame_t, const SpatialOutput& frame_t0, ForwardContext& ctx,
                                  const ArchitectureConfig& arch) {
  Varf fused = fuse_variant(frame_t.pyramid.high_level, frame_t0.pyramid.high_level, arch.fusion, ctx);
  PhasePredictions phases = frame_t0.phases;
  append_temporal_phase(phases, fused, ctx);
  return phases;
}

std::size_t load_pretrained_backbone(ParameterStore& store, const std::string& path) {
  Checkpoint source = load_checkpoint(path);
  std::size_t copied = 0;
  for (const auto& key : store.keys_with_prefix("backbone.")) {
    if (!source.params.contains(key)) throw CheckpointError("pretrained weights lack '" + key + "'");
    const Tensorf& src = source.params.tensor(key);
    if (!(src.shape() == store.tensor(key).shape()))
      throw CheckpointError("pretrained '" + key + "' has shape " + src.shape().str() + ", expected " +
                            store.tensor(key).shape().str());
    store.tensor(key) = src;
    ++copied;
  }
  return copied;
}

}  // namespace skd
