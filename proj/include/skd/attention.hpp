#pragma once

#include "skd/config.hpp"
#include "skd/parameters.hpp"

#include <Eigen/Core>

#include <vector>

namespace skd {

/// Dot-product attention between two frames' c x n feature matrices
/// (n = height * width):
///
///   A = softmax_columns(T(h_t) * h_t0 / sqrt(c)),   weighted = h_t0 * A
///
/// Each column j of A is normalized over the reference-frame location i, so
/// every column of `weighted` is a convex combination of the columns of h_t0.
template <typename Scalar>
struct AttentionMaps {
  RowMatrix<Scalar> attention;  // n x n
  RowMatrix<Scalar> weighted;   // c x n
  Scalar scale = 0;
};

template <typename Scalar>
AttentionMaps<Scalar> mutual_attention(const Eigen::Ref<const RowMatrix<Scalar>>& h_t,
                                       const Eigen::Ref<const RowMatrix<Scalar>>& h_t0);

/// Batched, differentiable form over N x c x h x w grids. Returns the weighted
/// features with the input shape; per-sample attention matrices are copied to
/// `attention` when given.
template <typename Scalar>
Var<Scalar> mutual_attention(const Var<Scalar>& h_t, const Var<Scalar>& h_t0,
                             std::vector<RowMatrix<Scalar>>* attention = nullptr);

struct AttentionResult {
  std::vector<RowMatrix<float>> attention;
  Varf weighted;
  Varf fused;
  float scale = 0;
};

// O = Conv3x3(Cat(weighted, original)), 2c -> c channels.
Varf fuse(const Varf& weighted, const Varf& original, ForwardContext& ctx);

AttentionResult encode_pair(const Varf& h_t, const Varf& h_t0, ForwardContext& ctx);

/// Inter-frame fusion producing the encoder input for frame t+t0:
/// add / multiply are element-wise, concat is a 1x1 convolution over the
/// channel concatenation, mutual is attention followed by fuse().
Varf fuse_variant(const Varf& h_t, const Varf& h_t0, FusionKind kind, ForwardContext& ctx);

void declare_fusion_parameters(ParameterStore& store, const ArchitectureConfig& arch, Rng& rng);

}  // namespace skd
