#include "skd/attention.hpp"

#include "skd/embedding.hpp"
#include "skd/error.hpp"

#include <cmath>

namespace skd {

namespace {

template <typename Scalar>
void softmax_columns(RowMatrix<Scalar>& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    auto col = m.col(j);
    const Scalar top = col.maxCoeff();
    col = (col.array() - top).exp();
    col /= col.sum();
  }
}

void require_pair(const Shape& a, const Shape& b, const char* op) {
  if (!(a == b)) throw ShapeError(std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str());
}

}  // namespace

template <typename Scalar>
AttentionMaps<Scalar> mutual_attention(const Eigen::Ref<const RowMatrix<Scalar>>& h_t,
                                       const Eigen::Ref<const RowMatrix<Scalar>>& h_t0) {
  if (h_t.rows() != h_t0.rows() || h_t.cols() != h_t0.cols())
    throw ShapeError("mutual_attention: feature matrices differ in shape");
  AttentionMaps<Scalar> out;
  out.scale = Scalar(1) / std::sqrt(Scalar(h_t.rows()));
  out.attention.noalias() = out.scale * (h_t.transpose() * h_t0);
  softmax_columns(out.attention);
  out.weighted.noalias() = h_t0 * out.attention;
  return out;
}

template <typename Scalar>
Var<Scalar> mutual_attention(const Var<Scalar>& h_t, const Var<Scalar>& h_t0,
                             std::vector<RowMatrix<Scalar>>* attention) {
  require_pair(h_t.shape(), h_t0.shape(), "mutual_attention");
  const Shape s = h_t.shape();
  Tensor<Scalar> out(s);
  auto maps = std::make_shared<std::vector<RowMatrix<Scalar>>>();
  for (int n = 0; n < s.n; ++n) {
    auto r = mutual_attention<Scalar>(h_t.value().sample(n), h_t0.value().sample(n));
    out.sample(n) = r.weighted;
    maps->push_back(std::move(r.attention));
  }
  if (attention) *attention = *maps;
  const Scalar sc = Scalar(1) / std::sqrt(Scalar(s.c));
  return make_result<Scalar>(std::move(out), {h_t, h_t0}, [maps, sc](Node<Scalar>& self) {
    Node<Scalar>& tn = *self.inputs[0];
    Node<Scalar>& rn = *self.inputs[1];
    RowMatrix<Scalar> d_att, d_logits;
    for (int n = 0; n < self.value.shape().n; ++n) {
      const RowMatrix<Scalar>& a = (*maps)[std::size_t(n)];
      auto dy = std::as_const(self.grad).sample(n);
      auto ht = tn.value.sample(n);
      auto hr = std::as_const(rn.value).sample(n);
      d_att.noalias() = hr.transpose() * dy;
      // Column softmax backward: dL[:,j] = A[:,j] * (dA[:,j] - <A[:,j], dA[:,j]>).
      d_logits = a.array() * (d_att.array().rowwise() - (a.array() * d_att.array()).colwise().sum());
      if (rn.requires_grad) {
        auto g = rn.grad_buffer().sample(n);
        g.noalias() += dy * a.transpose();
        g.noalias() += sc * (ht * d_logits);
      }
      if (tn.requires_grad) tn.grad_buffer().sample(n).noalias() += sc * (hr * d_logits.transpose());
    }
  });
}

Varf fuse(const Varf& weighted, const Varf& original, ForwardContext& ctx) {
  require_pair(weighted.shape(), original.shape(), "fuse");
  return apply_conv(ctx, "encoder.fuse.conv", concat_channels<float>({weighted, original}), {1, 1, 1});
}

AttentionResult encode_pair(const Varf& h_t, const Varf& h_t0, ForwardContext& ctx) {
  AttentionResult r;
  r.weighted = mutual_attention(h_t, h_t0, &r.attention);
  r.fused = fuse(r.weighted, h_t0, ctx);
  r.scale = 1.0f / std::sqrt(float(h_t.shape().c));
  return r;
}

Varf fuse_variant(const Varf& h_t, const Varf& h_t0, FusionKind kind, ForwardContext& ctx) {
  require_pair(h_t.shape(), h_t0.shape(), "fuse_variant");
  switch (kind) {
    case FusionKind::add: return add(h_t, h_t0);
    case FusionKind::multiply: return mul(h_t, h_t0);
    case FusionKind::concat: return apply_conv(ctx, "encoder.concat.conv", concat_channels<float>({h_t, h_t0}));
    case FusionKind::mutual: return encode_pair(h_t, h_t0, ctx).fused;
  }
  throw ConfigError("fuse_variant: unknown fusion variant " + std::to_string(int(kind)));
}

void declare_fusion_parameters(ParameterStore& store, const ArchitectureConfig& arch, Rng& rng) {
  const int c = arch.high_channels;
  if (arch.fusion == FusionKind::mutual) declare_conv(store, "encoder.fuse.conv", 2 * c, c, 3, true, rng);
  if (arch.fusion == FusionKind::concat) declare_conv(store, "encoder.concat.conv", 2 * c, c, 1, true, rng);
}

template struct AttentionMaps<float>;
template struct AttentionMaps<double>;
template AttentionMaps<float> mutual_attention(const Eigen::Ref<const RowMatrix<float>>&,
                                               const Eigen::Ref<const RowMatrix<float>>&);
template AttentionMaps<double> mutual_attention(const Eigen::Ref<const RowMatrix<double>>&,
                                                const Eigen::Ref<const RowMatrix<double>>&);
template Var<float> mutual_attention(const Var<float>&, const Var<float>&, std::vector<RowMatrix<float>>*);
template Var<double> mutual_attention(const Var<double>&, const Var<double>&, std::vector<RowMatrix<double>>*);

}  // namespace skd
