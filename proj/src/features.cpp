#include "skd/features.hpp"

#include "skd/error.hpp"

#include <algorithm>

namespace skd {

namespace {

constexpr std::array<int, 5> kTinyChannels{16, 32, 64, 64, 64};
constexpr std::array<int, 4> kResnetBlocks{3, 4, 6, 3};
constexpr std::array<int, 4> kResnetWidths{64, 128, 256, 512};

struct TinyConv {
  int stride;
  int dilation;
};

// Two 3x3 convolutions per stage; strides put stages 1-2 at 1/4 and 3-5 at
// 1/8, with dilation standing in for further downsampling.
constexpr std::array<std::array<TinyConv, 2>, 5> kTinyPlan{{
    {{{2, 1}, {2, 1}}},
    {{{1, 1}, {1, 1}}},
    {{{2, 1}, {1, 1}}},
    {{{1, 2}, {1, 2}}},
    {{{1, 4}, {1, 4}}},
}};

std::string tiny_prefix(int block, int conv) {
  return "backbone.block" + std::to_string(block + 1) + ".conv" + std::to_string(conv + 1);
}
std::string tiny_bn(int block, int conv) {
  return "backbone.block" + std::to_string(block + 1) + ".bn" + std::to_string(conv + 1);
}

void declare_tiny(ParameterStore& store, Rng& rng) {
  int in = 3;
  for (int b = 0; b < 5; ++b) {
    for (int k = 0; k < 2; ++k) {
      const int out = kTinyChannels[b];
      declare_conv(store, tiny_prefix(b, k), k == 0 ? in : out, out, 3, false, rng);
      declare_batch_norm(store, tiny_bn(b, k), out);
    }
    in = kTinyChannels[b];
  }
}

std::array<Varf, 5> tiny_forward(const Varf& frames, ForwardContext& ctx) {
  std::array<Varf, 5> stages;
  Varf x = frames;
  for (int b = 0; b < 5; ++b) {
    for (int k = 0; k < 2; ++k) {
      const TinyConv tc = kTinyPlan[b][k];
      x = apply_conv(ctx, tiny_prefix(b, k), x, {tc.stride, tc.dilation, tc.dilation});
      x = relu(apply_batch_norm(ctx, tiny_bn(b, k), x));
    }
    stages[b] = x;
  }
  return stages;
}

// ResNet-50 with torchvision parameter names under `backbone.`; layer3 and
// layer4 trade their stride for dilation 2 and 4.
struct BottleneckPlan {
  int stride;
  int dilation;       // dilation of the 3x3 convolution
  bool downsample;
};

BottleneckPlan bottleneck_plan(int layer, int block) {
  const int layer_dilation = layer == 2 ? 2 : layer == 3 ? 4 : 1;
  const int previous_dilation = layer == 3 ? 2 : 1;
  if (block == 0) {
    const int stride = layer == 1 ? 2 : 1;
    return {stride, layer >= 2 ? previous_dilation : 1, true};
  }
  return {1, layer_dilation, false};
}

std::string layer_prefix(int layer, int block) {
  return "backbone.layer" + std::to_string(layer + 1) + "." + std::to_string(block);
}

void declare_resnet(ParameterStore& store, Rng& rng) {
  declare_conv(store, "backbone.conv1", 3, 64, 7, false, rng);
  declare_batch_norm(store, "backbone.bn1", 64);
  int in = 64;
  for (int l = 0; l < 4; ++l) {
    const int width = kResnetWidths[l];
    for (int b = 0; b < kResnetBlocks[l]; ++b) {
      const std::string p = layer_prefix(l, b);
      declare_conv(store, p + ".conv1", in, width, 1, false, rng);
      declare_batch_norm(store, p + ".bn1", width);
      declare_conv(store, p + ".conv2", width, width, 3, false, rng);
      declare_batch_norm(store, p + ".bn2", width);
      declare_conv(store, p + ".conv3", width, width * 4, 1, false, rng);
      declare_batch_norm(store, p + ".bn3", width * 4);
      if (b == 0) {
        declare_conv(store, p + ".downsample.0", in, width * 4, 1, false, rng);
        declare_batch_norm(store, p + ".downsample.1", width * 4);
      }
      in = width * 4;
    }
  }
}

Varf bottleneck(const Varf& x, const std::string& p, const BottleneckPlan& plan, ForwardContext& ctx) {
  Varf y = relu(apply_batch_norm(ctx, p + ".bn1", apply_conv(ctx, p + ".conv1", x)));
  y = relu(apply_batch_norm(ctx, p + ".bn2",
                            apply_conv(ctx, p + ".conv2", y, {plan.stride, plan.dilation, plan.dilation})));
  y = apply_batch_norm(ctx, p + ".bn3", apply_conv(ctx, p + ".conv3", y));
  Varf identity = x;
  if (plan.downsample)
    identity = apply_batch_norm(ctx, p + ".downsample.1",
                                apply_conv(ctx, p + ".downsample.0", x, {plan.stride, 0, 1}));
  return relu(add(y, identity));
}

std::array<Varf, 5> resnet_forward(const Varf& frames, ForwardContext& ctx) {
  std::array<Varf, 5> stages;
  Varf x = relu(apply_batch_norm(ctx, "backbone.bn1", apply_conv(ctx, "backbone.conv1", frames, {2, 3, 1})));
  stages[0] = max_pool2d(x, 3, 2, 1);
  x = stages[0];
  for (int l = 0; l < 4; ++l) {
    for (int b = 0; b < kResnetBlocks[l]; ++b) x = bottleneck(x, layer_prefix(l, b), bottleneck_plan(l, b), ctx);
    stages[l + 1] = x;
  }
  return stages;
}

Varf conv_bn_relu(ForwardContext& ctx, const std::string& p, const Varf& x, Conv2dSpec spec = {}) {
  return relu(apply_batch_norm(ctx, p + ".bn", apply_conv(ctx, p + ".conv", x, spec)));
}

void declare_gamma(ParameterStore& store, const std::string& p, int in, int out, Rng& rng) {
  declare_conv(store, p + ".conv", in, out, 3, false, rng);
  declare_batch_norm(store, p + ".bn", out);
  declare_prelu(store, p + ".prelu", out);
}

Varf apply_gamma(ForwardContext& ctx, const std::string& p, const Varf& x) {
  const int expected = ctx.params.tensor(p + ".conv.weight").shape().c;
  if (x.shape().c != expected)
    throw ShapeError(p + ": concatenated input has " + std::to_string(x.shape().c) + " channels, expected " +
                     std::to_string(expected));
  return apply_prelu(ctx, p + ".prelu", apply_batch_norm(ctx, p + ".bn", apply_conv(ctx, p + ".conv", x, {1, 1, 1})));
}

int last_stage_channels(const ArchitectureConfig& arch) { return arch.backbone == Backbone::tiny ? 64 : 2048; }

}  // namespace

int side_output_extent(Backbone, int input_extent, int stride) {
  // Both backbones halve with ceil rounding (3x3/7x7 convs and the 3x3 pool
  // use padding (k-1)/2).
  int e = input_extent;
  for (int s = 1; s < stride; s *= 2) e = (e + 1) / 2;
  return e;
}

std::array<int, 5> side_output_channels(const ArchitectureConfig& arch) {
  if (arch.backbone == Backbone::tiny)
    return {kTinyChannels[0], kTinyChannels[1], kTinyChannels[2], kTinyChannels[3], arch.aspp_channels};
  return {64, 256, 512, 1024, arch.aspp_channels};
}

Tensorf normalize_frames(const Tensorf& rgb, const ArchitectureConfig& arch) {
  validate_frames(rgb);
  Tensorf out(rgb.shape());
  for (int n = 0; n < rgb.shape().n; ++n)
    for (int c = 0; c < 3; ++c) {
      Eigen::Map<const ArrayX<float>> in(rgb.plane(n, c), rgb.shape().plane());
      Eigen::Map<ArrayX<float>>(out.plane(n, c), rgb.shape().plane()) = (in - arch.mean[c]) / arch.stddev[c];
    }
  return out;
}

void validate_frames(const Tensorf& frames) {
  const Shape& s = frames.shape();
  if (s.n < 1) throw ShapeError("frames: batch is empty");
  if (s.c != 3) throw ShapeError("frames: channels must be 3, got " + std::to_string(s.c));
  if (s.h < 32) throw ShapeError("frames: height must be >= 32, got " + std::to_string(s.h));
  if (s.w < 32) throw ShapeError("frames: width must be >= 32, got " + std::to_string(s.w));
  if (!frames.all_finite()) throw ShapeError("frames: values must be finite");
}

std::array<Varf, 5> extract_side_outputs(const Varf& frames, ForwardContext& ctx, const ArchitectureConfig& arch) {
  validate_frames(frames.value());
  std::array<Varf, 5> stages =
      arch.backbone == Backbone::tiny ? tiny_forward(frames, ctx) : resnet_forward(frames, ctx);
  stages[4] = aspp(stages[4], ctx, arch);
  return stages;
}

Varf aspp(const Varf& x, ForwardContext& ctx, const ArchitectureConfig& arch) {
  std::vector<Varf> branches;
  branches.push_back(conv_bn_relu(ctx, "aspp.branch0", x));
  for (std::size_t i = 0; i < arch.aspp_rates.size(); ++i) {
    const int r = arch.aspp_rates[i];
    branches.push_back(conv_bn_relu(ctx, "aspp.branch" + std::to_string(i + 1), x, {1, r, r}));
  }
  Varf pooled = conv_bn_relu(ctx, "aspp.pool", global_avg_pool(x));
  branches.push_back(resize_bilinear(pooled, x.shape().h, x.shape().w));
  return conv_bn_relu(ctx, "aspp.project", concat_channels(branches));
}

Varf fuse_low_level(const Varf& s1, const Varf& s2, ForwardContext& ctx) {
  if (!s1.shape().same_spatial(s2.shape()))
    throw ShapeError("fuse_low_level: spatial sizes differ (" + s1.shape().str() + " vs " + s2.shape().str() +
                     "); resample first");
  return apply_gamma(ctx, "fuse_low", concat_channels<float>({s1, s2}));
}

Varf fuse_high_level(const Varf& s3, const Varf& s4, const Varf& s5, ForwardContext& ctx) {
  if (!s3.shape().same_spatial(s4.shape()) || !s3.shape().same_spatial(s5.shape()))
    throw ShapeError("fuse_high_level: spatial sizes differ (" + s3.shape().str() + ", " + s4.shape().str() +
                     ", " + s5.shape().str() + "); resample first");
  return apply_gamma(ctx, "fuse_high", concat_channels<float>({s3, s4, s5}));
}

std::vector<Varf> align_to_coarsest(const std::vector<Varf>& maps) {
  int h = maps.front().shape().h;
  int w = maps.front().shape().w;
  for (const auto& m : maps) {
    h = std::min(h, m.shape().h);
    w = std::min(w, m.shape().w);
  }
  std::vector<Varf> out;
  out.reserve(maps.size());
  for (const auto& m : maps) out.push_back(resize_bilinear(m, h, w));
  return out;
}

FeaturePyramid extract_features(const Varf& frames, ForwardContext& ctx, const ArchitectureConfig& arch) {
  FeaturePyramid p;
  p.side_outputs = extract_side_outputs(frames, ctx, arch);
  const auto& s = p.side_outputs;
  auto low = align_to_coarsest({s[0], s[1]});
  p.low_level = fuse_low_level(low[0], low[1], ctx);
  auto high = align_to_coarsest({s[2], s[3], s[4]});
  p.high_level = fuse_high_level(high[0], high[1], high[2], ctx);
  return p;
}

void declare_feature_parameters(ParameterStore& store, const ArchitectureConfig& arch, Rng& rng) {
  if (arch.backbone == Backbone::tiny)
    declare_tiny(store, rng);
  else
    declare_resnet(store, rng);

  const int in = last_stage_channels(arch);
  const int a = arch.aspp_channels;
  declare_conv(store, "aspp.branch0.conv", in, a, 1, false, rng);
  declare_batch_norm(store, "aspp.branch0.bn", a);
  for (std::size_t i = 0; i < arch.aspp_rates.size(); ++i) {
    const std::string p = "aspp.branch" + std::to_string(i + 1);
    declare_conv(store, p + ".conv", in, a, 3, false, rng);
    declare_batch_norm(store, p + ".bn", a);
  }
  declare_conv(store, "aspp.pool.conv", in, a, 1, false, rng);
  declare_batch_norm(store, "aspp.pool.bn", a);
  declare_conv(store, "aspp.project.conv", a * int(arch.aspp_rates.size() + 2), a, 1, false, rng);
  declare_batch_norm(store, "aspp.project.bn", a);

  const auto ch = side_output_channels(arch);
  declare_gamma(store, "fuse_low", ch[0] + ch[1], arch.low_channels, rng);
  declare_gamma(store, "fuse_high", ch[2] + ch[3] + ch[4], arch.high_channels, rng);
}

}  // namespace skd
