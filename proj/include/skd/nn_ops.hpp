#pragma once

#include "skd/autograd.hpp"

#include <vector>

namespace skd {

struct Conv2dSpec {
  int stride = 1;
  int pad = 0;
  int dilation = 1;
};

int conv_output_size(int in, int kernel, const Conv2dSpec& spec);

/// 2-D cross-correlation. `weight` is out x in x kh x kw; `bias` may be an
/// undefined Var (no bias) or hold `out` elements.
template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias, Conv2dSpec spec);

/// Per-channel batch normalization. In training mode batch statistics are used
/// and the running estimates (if given) are updated; otherwise the running
/// estimates normalize the input.
template <typename Scalar>
Var<Scalar> batch_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta,
                       Tensor<Scalar>* running_mean, Tensor<Scalar>* running_var, bool training,
                       double momentum = 0.1, double eps = 1e-5);

// Slope holds either one value or one value per channel.
template <typename Scalar>
Var<Scalar> prelu(const Var<Scalar>& x, const Var<Scalar>& slope);

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x);

template <typename Scalar>
Var<Scalar> max_pool2d(const Var<Scalar>& x, int kernel, int stride, int pad);

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b);

template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b);

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& x, Scalar factor);

template <typename Scalar>
Var<Scalar> concat_channels(const std::vector<Var<Scalar>>& parts);

/// Bilinear resampling with half-pixel centers (the `align_corners = false`
/// convention). Resizing a 1x1 map broadcasts it.
template <typename Scalar>
Var<Scalar> resize_bilinear(const Var<Scalar>& x, int height, int width);

template <typename Scalar>
Tensor<Scalar> resize_bilinear(const Tensor<Scalar>& x, int height, int width);

template <typename Scalar>
Var<Scalar> global_avg_pool(const Var<Scalar>& x);

// Area-weighted downsampling; each output pixel is the mean of the input
// area it covers.
template <typename Scalar>
Tensor<Scalar> resize_area(const Tensor<Scalar>& x, int height, int width);

template <typename Scalar>
Tensor<Scalar> sigmoid(const Tensor<Scalar>& x);

}  // namespace skd
