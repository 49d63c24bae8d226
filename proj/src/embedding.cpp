#include "skd/embedding.hpp"

#include "skd/error.hpp"

namespace skd {

const std::vector<std::string>& spatial_unit_prefixes() {
  static const std::vector<std::string> p{"embed.unit1", "embed.unit2"};
  return p;
}

const std::vector<std::string>& temporal_unit_prefixes() {
  static const std::vector<std::string> p{"embed.unit1", "embed.unit2", "encoder.unit3"};
  return p;
}

namespace {

void declare_unit(ParameterStore& store, const std::string& p, int in, int width, Rng& rng) {
  declare_conv(store, p + ".conv1", in + 1, width, 3, false, rng);
  declare_batch_norm(store, p + ".bn1", width);
  declare_prelu(store, p + ".prelu1", width);
  declare_conv(store, p + ".conv2", width, width, 3, false, rng);
  declare_batch_norm(store, p + ".bn2", width);
  declare_prelu(store, p + ".prelu2", width);
  declare_conv(store, p + ".conv3", width, 1, 3, true, rng);
}

}  // namespace

Varf initial_prediction(const Varf& high_level, ForwardContext& ctx) {
  return apply_conv(ctx, "embed.p0", high_level, {1, 1, 1});
}

std::pair<Varf, Varf> residual_add(const Varf& prev, const Varf& phi) {
  if (!(prev.shape() == phi.shape()))
    throw ShapeError("residual_add: " + prev.shape().str() + " vs " + phi.shape().str());
  const auto& a = prev.value().array();
  Tensorf applied(phi.shape(), ((a + phi.value().array()) - a).eval());
  Varf residual = make_result<float>(std::move(applied), {phi}, [](Node<float>& self) {
    self.inputs[0]->grad_buffer().array() += self.grad.array();
  });
  return {residual, add(prev, residual)};
}

std::pair<Varf, Varf> embedding_unit(const Varf& prev_logits, const Varf& features_in, const std::string& unit,
                                     ForwardContext& ctx) {
  if (!prev_logits.shape().same_spatial(features_in.shape()))
    throw ShapeError(unit + ": resolution mismatch between logits " + prev_logits.shape().str() + " and features " +
                     features_in.shape().str());
  if (prev_logits.shape().c != 1) throw ShapeError(unit + ": logits must have one channel");
  Varf x = concat_channels<float>({prev_logits, features_in});
  x = apply_prelu(ctx, unit + ".prelu1", apply_batch_norm(ctx, unit + ".bn1", apply_conv(ctx, unit + ".conv1", x, {1, 1, 1})));
  x = apply_prelu(ctx, unit + ".prelu2", apply_batch_norm(ctx, unit + ".bn2", apply_conv(ctx, unit + ".conv2", x, {1, 1, 1})));
  Varf phi = apply_conv(ctx, unit + ".conv3", x, {1, 1, 1});
  return residual_add(prev_logits, phi);
}

PhasePredictions spatial_forward(const FeaturePyramid& pyramid, ForwardContext& ctx) {
  const Shape& ls = pyramid.low_level.shape();
  Varf high = resize_bilinear(pyramid.high_level, ls.h, ls.w);
  PhasePredictions out;
  out.logits.push_back(initial_prediction(high, ctx));
  const std::vector<Varf> inputs{pyramid.low_level, high};
  for (std::size_t j = 0; j < spatial_unit_prefixes().size(); ++j) {
    auto [r, p] = embedding_unit(out.logits.back(), inputs[j], spatial_unit_prefixes()[j], ctx);
    out.residuals.push_back(r);
    out.logits.push_back(p);
  }
  return out;
}

void append_temporal_phase(PhasePredictions& phases, const Varf& fused, ForwardContext& ctx) {
  if (phases.logits.size() != 3)
    throw ShapeError("temporal phase needs the three spatial phases, got " + std::to_string(phases.logits.size()));
  const Shape& ps = phases.logits.back().shape();
  Varf o = resize_bilinear(fused, ps.h, ps.w);
  auto [r, p] = embedding_unit(phases.logits.back(), o, temporal_unit_prefixes()[2], ctx);
  phases.residuals.push_back(r);
  phases.logits.push_back(p);
}

void declare_embedding_parameters(ParameterStore& store, const ArchitectureConfig& arch, Rng& rng) {
  declare_conv(store, "embed.p0", arch.high_channels, 1, 3, true, rng);
  declare_unit(store, spatial_unit_prefixes()[0], arch.low_channels, arch.embed_channels, rng);
  declare_unit(store, spatial_unit_prefixes()[1], arch.high_channels, arch.embed_channels, rng);
}

void declare_temporal_unit(ParameterStore& store, const ArchitectureConfig& arch, Rng& rng) {
  declare_unit(store, temporal_unit_prefixes()[2], arch.high_channels, arch.embed_channels, rng);
}

}  // namespace skd
