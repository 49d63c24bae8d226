#pragma once

#include "skd/features.hpp"

#include <string>
#include <utility>
#include <vector>

namespace skd {

/// Phase saliency logits P0..Pk at the working (1/4) resolution, with the
/// residuals R1..Rk that produced them: P_j = P_{j-1} + R_j.
struct PhasePredictions {
  std::vector<Varf> logits;
  std::vector<Varf> residuals;

  const Varf& final_logits() const { return logits.back(); }
};

// Parameter prefixes of the embedding units. The temporal branch reuses the
// two spatial units and adds one of its own.
const std::vector<std::string>& spatial_unit_prefixes();
const std::vector<std::string>& temporal_unit_prefixes();

// Prefix shared by every parameter that only the inter-frame encoder uses.
inline const std::string kEncoderPrefix = "encoder.";

/// First phase P0: a single 3x3 convolution over the high-level features.
Varf initial_prediction(const Varf& high_level, ForwardContext& ctx);

/// Adds `phi` to `prev` and returns (R, P) where R is the increment the
/// floating-point addition actually applied, so P - prev == R holds exactly.
/// Gradients pass straight through R to `phi`.
std::pair<Varf, Varf> residual_add(const Varf& prev, const Varf& phi);

/// One feature embedding unit: R = Phi(Cat(prev, features)), P = prev + R.
/// Phi is two 3x3 conv + batch norm + PReLU layers followed by a 3x3
/// convolution that emits the one-channel residual.
std::pair<Varf, Varf> embedding_unit(const Varf& prev_logits, const Varf& features_in, const std::string& unit,
                                     ForwardContext& ctx);

/// P0 from H, P1 from (P0, L), P2 from (P1, H). H is bilinearly upsampled to
/// the low-level resolution first.
PhasePredictions spatial_forward(const FeaturePyramid& pyramid, ForwardContext& ctx);

/// Appends the temporal phase P3 = P2 + Phi3(Cat(P2, O)) where O is the fused
/// inter-frame feature map (upsampled to the working resolution).
void append_temporal_phase(PhasePredictions& phases, const Varf& fused, ForwardContext& ctx);

void declare_embedding_parameters(ParameterStore& store, const ArchitectureConfig& arch, Rng& rng);
void declare_temporal_unit(ParameterStore& store, const ArchitectureConfig& arch, Rng& rng);

}  // namespace skd
