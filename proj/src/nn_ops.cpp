#include "skd/nn_ops.hpp"

#include "skd/error.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>

namespace skd {

int conv_output_size(int in, int kernel, const Conv2dSpec& spec) {
  const int span = spec.dilation * (kernel - 1) + 1;
  return (in + 2 * spec.pad - span) / spec.stride + 1;
}

namespace {

template <typename Scalar>
using PlaneMap = Eigen::Map<RowMatrix<Scalar>>;
template <typename Scalar>
using ConstPlaneMap = Eigen::Map<const RowMatrix<Scalar>>;

struct ConvGeometry {
  int channels, height, width, kh, kw, out_h, out_w;
  Conv2dSpec spec;
  bool is_pointwise() const {
    return kh == 1 && kw == 1 && spec.stride == 1 && spec.pad == 0;
  }
};

// Rows of `col` are (channel, ky, kx); columns are output pixels.
template <typename Scalar>
void im2col(const Scalar* img, const ConvGeometry& g, Scalar* col) {
  const int out_plane = g.out_h * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    const Scalar* src = img + std::int64_t(c) * g.height * g.width;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        Scalar* row = col + (std::int64_t(c * g.kh + ky) * g.kw + kx) * out_plane;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.spec.stride - g.spec.pad + ky * g.spec.dilation;
          Scalar* dst = row + std::int64_t(oy) * g.out_w;
          if (iy < 0 || iy >= g.height) {
            std::fill(dst, dst + g.out_w, Scalar(0));
            continue;
          }
          const Scalar* line = src + std::int64_t(iy) * g.width;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.spec.stride - g.spec.pad + kx * g.spec.dilation;
            dst[ox] = (ix >= 0 && ix < g.width) ? line[ix] : Scalar(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatters column gradients back onto the image.
template <typename Scalar>
void col2im_add(const Scalar* col, const ConvGeometry& g, Scalar* img) {
  const int out_plane = g.out_h * g.out_w;
  for (int c = 0; c < g.channels; ++c) {
    Scalar* dst = img + std::int64_t(c) * g.height * g.width;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const Scalar* row = col + (std::int64_t(c * g.kh + ky) * g.kw + kx) * out_plane;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.spec.stride - g.spec.pad + ky * g.spec.dilation;
          if (iy < 0 || iy >= g.height) continue;
          Scalar* line = dst + std::int64_t(iy) * g.width;
          const Scalar* src = row + std::int64_t(oy) * g.out_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.spec.stride - g.spec.pad + kx * g.spec.dilation;
            if (ix >= 0 && ix < g.width) line[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename Scalar>
void require_same_shape(const Var<Scalar>& a, const Var<Scalar>& b, const char* op) {
  if (!(a.shape() == b.shape()))
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

// Separable bilinear interpolation weights along one axis.
template <typename Scalar>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> bilinear_axis(int out, int in) {
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> m(out, in);
  std::vector<Eigen::Triplet<Scalar>> entries;
  entries.reserve(std::size_t(out) * 2);
  const double ratio = double(in) / double(out);
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * ratio - 0.5;
    if (src < 0) src = 0;
    int i0 = std::min(int(std::floor(src)), in - 1);
    int i1 = std::min(i0 + 1, in - 1);
    const double frac = src - i0;
    entries.emplace_back(o, i0, Scalar(1.0 - frac));
    entries.emplace_back(o, i1, Scalar(frac));  // duplicates are summed
  }
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

template <typename Scalar>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> area_axis(int out, int in) {
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> m(out, in);
  std::vector<Eigen::Triplet<Scalar>> entries;
  const double ratio = double(in) / double(out);
  for (int o = 0; o < out; ++o) {
    const double lo = o * ratio;
    const double hi = (o + 1) * ratio;
    for (int i = int(std::floor(lo)); i < std::min(in, int(std::ceil(hi))); ++i) {
      const double overlap = std::min(hi, double(i + 1)) - std::max(lo, double(i));
      if (overlap > 0) entries.emplace_back(o, i, Scalar(overlap / ratio));
    }
  }
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

template <typename Scalar, typename Sparse>
Tensor<Scalar> separable_resample(const Tensor<Scalar>& x, const Sparse& rows, const Sparse& cols) {
  const Shape& s = x.shape();
  Shape os{s.n, s.c, int(rows.rows()), int(cols.rows())};
  Tensor<Scalar> out(os);
  const Sparse cols_t = cols.transpose();
  RowMatrix<Scalar> tmp;
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      ConstPlaneMap<Scalar> in(x.plane(n, c), s.h, s.w);
      PlaneMap<Scalar> dst(out.plane(n, c), os.h, os.w);
      tmp.noalias() = rows * in;
      dst.noalias() = tmp * cols_t;
    }
  }
  return out;
}

}  // namespace

template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias, Conv2dSpec spec) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (ws.c != xs.c)
    throw ShapeError("conv2d: input has " + std::to_string(xs.c) + " channels, weight expects " +
                     std::to_string(ws.c));
  if (bias.defined() && bias.value().numel() != ws.n)
    throw ShapeError("conv2d: bias size " + std::to_string(bias.value().numel()) + " != out channels " +
                     std::to_string(ws.n));
  ConvGeometry g{xs.c, xs.h, xs.w, ws.h, ws.w, conv_output_size(xs.h, ws.h, spec),
                 conv_output_size(xs.w, ws.w, spec), spec};
  if (g.out_h <= 0 || g.out_w <= 0)
    throw ShapeError("conv2d: input " + xs.str() + " too small for kernel " + ws.str());

  const int k = xs.c * ws.h * ws.w;
  const int p = g.out_h * g.out_w;
  Tensor<Scalar> out(Shape{xs.n, ws.n, g.out_h, g.out_w});
  Eigen::Map<const RowMatrix<Scalar>> wm(weight.value().data(), ws.n, k);
  RowMatrix<Scalar> col;
  for (int n = 0; n < xs.n; ++n) {
    auto y = out.sample(n);
    if (g.is_pointwise()) {
      y.noalias() = wm * x.value().sample(n);
    } else {
      col.resize(k, p);
      im2col(x.value().plane(n, 0), g, col.data());
      y.noalias() = wm * col;
    }
    if (bias.defined()) y.colwise() += Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(bias.value().data(), ws.n);
  }

  std::vector<Var<Scalar>> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_result<Scalar>(std::move(out), std::move(inputs), [g, k, p](Node<Scalar>& self) {
    Node<Scalar>& xn = *self.inputs[0];
    Node<Scalar>& wn = *self.inputs[1];
    const Shape& ws = wn.value.shape();
    Eigen::Map<const RowMatrix<Scalar>> wm(wn.value.data(), ws.n, k);
    RowMatrix<Scalar> col(k, p);
    RowMatrix<Scalar> dcol;
    for (int n = 0; n < self.value.shape().n; ++n) {
      auto dy = std::as_const(self.grad).sample(n);
      if (wn.requires_grad) {
        Eigen::Map<RowMatrix<Scalar>> dw(wn.grad_buffer().data(), ws.n, k);
        if (g.is_pointwise()) {
          dw.noalias() += dy * xn.value.sample(n).transpose();
        } else {
          im2col(xn.value.plane(n, 0), g, col.data());
          dw.noalias() += dy * col.transpose();
        }
      }
      if (self.inputs.size() > 2 && self.inputs[2]->requires_grad) {
        auto& db = self.inputs[2]->grad_buffer().array();
        db += dy.rowwise().sum().array();
      }
      if (xn.requires_grad) {
        if (g.is_pointwise()) {
          xn.grad_buffer().sample(n).noalias() += wm.transpose() * dy;
        } else {
          dcol.noalias() = wm.transpose() * dy;
          col2im_add(dcol.data(), g, xn.grad_buffer().plane(n, 0));
        }
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> batch_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta,
                       Tensor<Scalar>* running_mean, Tensor<Scalar>* running_var, bool training,
                       double momentum, double eps) {
  const Shape& s = x.shape();
  if (gamma.value().numel() != s.c || beta.value().numel() != s.c)
    throw ShapeError("batch_norm: affine parameters do not match " + std::to_string(s.c) + " channels");
  if (!training && (!running_mean || !running_var))
    throw MissingParameterError("batch_norm: evaluation mode needs running statistics");

  const std::int64_t count = std::int64_t(s.n) * s.plane();
  ArrayX<Scalar> mean(s.c), inv_std(s.c);
  for (int c = 0; c < s.c; ++c) {
    if (training) {
      double sum = 0, sq = 0;
      for (int n = 0; n < s.n; ++n) {
        Eigen::Map<const ArrayX<Scalar>> p(x.value().plane(n, c), s.plane());
        sum += double(p.sum());
      }
      const double m = sum / double(count);
      for (int n = 0; n < s.n; ++n) {
        Eigen::Map<const ArrayX<Scalar>> p(x.value().plane(n, c), s.plane());
        sq += double((p - Scalar(m)).square().sum());
      }
      const double var = sq / double(count);
      mean[c] = Scalar(m);
      inv_std[c] = Scalar(1.0 / std::sqrt(var + eps));
      if (running_mean && running_var) {
        const double unbiased = count > 1 ? sq / double(count - 1) : var;
        running_mean->data()[c] = Scalar((1 - momentum) * running_mean->data()[c] + momentum * m);
        running_var->data()[c] = Scalar((1 - momentum) * running_var->data()[c] + momentum * unbiased);
      }
    } else {
      mean[c] = running_mean->data()[c];
      inv_std[c] = Scalar(1.0 / std::sqrt(double(running_var->data()[c]) + eps));
    }
  }

  Tensor<Scalar> out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      Eigen::Map<const ArrayX<Scalar>> in(x.value().plane(n, c), s.plane());
      Eigen::Map<ArrayX<Scalar>> o(out.plane(n, c), s.plane());
      o = (in - mean[c]) * (inv_std[c] * gamma.value().data()[c]) + beta.value().data()[c];
    }
  }

  return make_result<Scalar>(std::move(out), {x, gamma, beta}, [mean, inv_std, training, count](Node<Scalar>& self) {
    Node<Scalar>& xn = *self.inputs[0];
    Node<Scalar>& gn = *self.inputs[1];
    Node<Scalar>& bn = *self.inputs[2];
    const Shape& s = xn.value.shape();
    for (int c = 0; c < s.c; ++c) {
      double sum_dy = 0, sum_dy_xhat = 0;
      for (int n = 0; n < s.n; ++n) {
        Eigen::Map<const ArrayX<Scalar>> dy(self.grad.plane(n, c), s.plane());
        Eigen::Map<const ArrayX<Scalar>> in(xn.value.plane(n, c), s.plane());
        sum_dy += double(dy.sum());
        sum_dy_xhat += double((dy * (in - mean[c])).sum()) * double(inv_std[c]);
      }
      if (gn.requires_grad) gn.grad_buffer().data()[c] += Scalar(sum_dy_xhat);
      if (bn.requires_grad) bn.grad_buffer().data()[c] += Scalar(sum_dy);
      if (!xn.requires_grad) continue;
      const Scalar g = gn.value.data()[c];
      for (int n = 0; n < s.n; ++n) {
        Eigen::Map<const ArrayX<Scalar>> dy(self.grad.plane(n, c), s.plane());
        Eigen::Map<ArrayX<Scalar>> dx(xn.grad_buffer().plane(n, c), s.plane());
        if (training) {
          Eigen::Map<const ArrayX<Scalar>> in(xn.value.plane(n, c), s.plane());
          const Scalar mdy = Scalar(sum_dy / double(count));
          const Scalar mdyx = Scalar(sum_dy_xhat / double(count));
          dx += (g * inv_std[c]) * (dy - mdy - (in - mean[c]) * inv_std[c] * mdyx);
        } else {
          dx += (g * inv_std[c]) * dy;
        }
      }
    }
  });
}

template <typename Scalar>
Var<Scalar> prelu(const Var<Scalar>& x, const Var<Scalar>& slope) {
  const Shape& s = x.shape();
  const std::int64_t slopes = slope.value().numel();
  if (slopes != 1 && slopes != s.c)
    throw ShapeError("prelu: slope count " + std::to_string(slopes) + " for " + std::to_string(s.c) + " channels");
  Tensor<Scalar> out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const Scalar a = slope.value().data()[slopes == 1 ? 0 : c];
      Eigen::Map<const ArrayX<Scalar>> in(x.value().plane(n, c), s.plane());
      Eigen::Map<ArrayX<Scalar>>(out.plane(n, c), s.plane()) = (in > Scalar(0)).select(in, a * in);
    }
  return make_result<Scalar>(std::move(out), {x, slope}, [slopes](Node<Scalar>& self) {
    Node<Scalar>& xn = *self.inputs[0];
    Node<Scalar>& an = *self.inputs[1];
    const Shape& s = xn.value.shape();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const int ai = slopes == 1 ? 0 : c;
        const Scalar a = an.value.data()[ai];
        Eigen::Map<const ArrayX<Scalar>> in(xn.value.plane(n, c), s.plane());
        Eigen::Map<const ArrayX<Scalar>> dy(self.grad.plane(n, c), s.plane());
        if (xn.requires_grad)
          Eigen::Map<ArrayX<Scalar>>(xn.grad_buffer().plane(n, c), s.plane()) += (in > Scalar(0)).select(dy, a * dy);
        if (an.requires_grad)
          an.grad_buffer().data()[ai] += (in > Scalar(0)).select(ArrayX<Scalar>::Zero(in.size()), dy * in).sum();
      }
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x) {
  Tensor<Scalar> out(x.shape(), x.value().array().max(Scalar(0)));
  return make_result<Scalar>(std::move(out), {x}, [](Node<Scalar>& self) {
    Node<Scalar>& xn = *self.inputs[0];
    xn.grad_buffer().array() += (xn.value.array() > Scalar(0)).select(self.grad.array(), Scalar(0));
  });
}

template <typename Scalar>
Var<Scalar> max_pool2d(const Var<Scalar>& x, int kernel, int stride, int pad) {
  const Shape& s = x.shape();
  Conv2dSpec spec{stride, pad, 1};
  const int oh = conv_output_size(s.h, kernel, spec);
  const int ow = conv_output_size(s.w, kernel, spec);
  if (oh <= 0 || ow <= 0) throw ShapeError("max_pool2d: input " + s.str() + " too small");
  Tensor<Scalar> out(Shape{s.n, s.c, oh, ow});
  std::vector<std::int64_t> argmax(std::size_t(out.numel()));
  std::int64_t idx = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const Scalar* in = x.value().plane(n, c);
      const std::int64_t base = in - x.value().data();
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox, ++idx) {
          Scalar best = -std::numeric_limits<Scalar>::infinity();
          std::int64_t where = -1;
          for (int ky = 0; ky < kernel; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= s.h) continue;
            for (int kx = 0; kx < kernel; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= s.w) continue;
              const Scalar v = in[iy * s.w + ix];
              if (v > best || where < 0) {
                best = v;
                where = base + iy * s.w + ix;
              }
            }
          }
          out.data()[idx] = best;
          argmax[std::size_t(idx)] = where;
        }
    }
  return make_result<Scalar>(std::move(out), {x}, [argmax = std::move(argmax)](Node<Scalar>& self) {
    Scalar* dx = self.inputs[0]->grad_buffer().data();
    const Scalar* dy = self.grad.data();
    for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += dy[i];
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a, b, "add");
  Tensor<Scalar> out(a.shape(), a.value().array() + b.value().array());
  return make_result<Scalar>(std::move(out), {a, b}, [](Node<Scalar>& self) {
    for (auto& in : self.inputs)
      if (in->requires_grad) in->grad_buffer().array() += self.grad.array();
  });
}

template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_shape(a, b, "mul");
  Tensor<Scalar> out(a.shape(), a.value().array() * b.value().array());
  return make_result<Scalar>(std::move(out), {a, b}, [](Node<Scalar>& self) {
    Node<Scalar>& an = *self.inputs[0];
    Node<Scalar>& bn = *self.inputs[1];
    if (an.requires_grad) an.grad_buffer().array() += self.grad.array() * bn.value.array();
    if (bn.requires_grad) bn.grad_buffer().array() += self.grad.array() * an.value.array();
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& x, Scalar factor) {
  Tensor<Scalar> out(x.shape(), x.value().array() * factor);
  return make_result<Scalar>(std::move(out), {x}, [factor](Node<Scalar>& self) {
    self.inputs[0]->grad_buffer().array() += self.grad.array() * factor;
  });
}

template <typename Scalar>
Var<Scalar> concat_channels(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  Shape s = parts.front().shape();
  s.c = 0;
  for (const auto& p : parts) {
    const Shape& ps = p.shape();
    if (ps.n != s.n || !ps.same_spatial(s))
      throw ShapeError("concat_channels: " + ps.str() + " incompatible with " + parts.front().shape().str());
    s.c += ps.c;
  }
  Tensor<Scalar> out(s);
  for (int n = 0; n < s.n; ++n) {
    int c0 = 0;
    for (const auto& p : parts) {
      out.sample(n).middleRows(c0, p.shape().c) = p.value().sample(n);
      c0 += p.shape().c;
    }
  }
  return make_result<Scalar>(std::move(out), parts, [](Node<Scalar>& self) {
    for (int n = 0; n < self.value.shape().n; ++n) {
      int c0 = 0;
      for (auto& in : self.inputs) {
        const int c = in->value.shape().c;
        if (in->requires_grad) in->grad_buffer().sample(n) += std::as_const(self.grad).sample(n).middleRows(c0, c);
        c0 += c;
      }
    }
  });
}

template <typename Scalar>
Tensor<Scalar> resize_bilinear(const Tensor<Scalar>& x, int height, int width) {
  const Shape& s = x.shape();
  if (s.h == height && s.w == width) return x;
  return separable_resample(x, bilinear_axis<Scalar>(height, s.h), bilinear_axis<Scalar>(width, s.w));
}

template <typename Scalar>
Var<Scalar> resize_bilinear(const Var<Scalar>& x, int height, int width) {
  const Shape& s = x.shape();
  if (height <= 0 || width <= 0) throw ShapeError("resize_bilinear: non-positive target size");
  if (s.h == height && s.w == width) return x;
  auto rows = bilinear_axis<Scalar>(height, s.h);
  auto cols = bilinear_axis<Scalar>(width, s.w);
  Tensor<Scalar> out = separable_resample(x.value(), rows, cols);
  return make_result<Scalar>(std::move(out), {x}, [rows, cols](Node<Scalar>& self) {
    Node<Scalar>& xn = *self.inputs[0];
    const Shape& s = xn.value.shape();
    const Shape& os = self.value.shape();
    RowMatrix<Scalar> tmp;
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        ConstPlaneMap<Scalar> dy(self.grad.plane(n, c), os.h, os.w);
        PlaneMap<Scalar> dx(xn.grad_buffer().plane(n, c), s.h, s.w);
        tmp.noalias() = dy * cols;
        dx.noalias() += rows.transpose() * tmp;
      }
  });
}

template <typename Scalar>
Var<Scalar> global_avg_pool(const Var<Scalar>& x) {
  const Shape& s = x.shape();
  Tensor<Scalar> out(Shape{s.n, s.c, 1, 1});
  for (int n = 0; n < s.n; ++n) out.sample(n).col(0) = x.value().sample(n).rowwise().mean();
  return make_result<Scalar>(std::move(out), {x}, [](Node<Scalar>& self) {
    Node<Scalar>& xn = *self.inputs[0];
    const Shape& s = xn.value.shape();
    const Scalar inv = Scalar(1) / Scalar(s.plane());
    for (int n = 0; n < s.n; ++n)
      xn.grad_buffer().sample(n).colwise() += std::as_const(self.grad).sample(n).col(0) * inv;
  });
}

template <typename Scalar>
Tensor<Scalar> resize_area(const Tensor<Scalar>& x, int height, int width) {
  const Shape& s = x.shape();
  if (s.h == height && s.w == width) return x;
  return separable_resample(x, area_axis<Scalar>(height, s.h), area_axis<Scalar>(width, s.w));
}

template <typename Scalar>
Tensor<Scalar> sigmoid(const Tensor<Scalar>& x) {
  return Tensor<Scalar>(x.shape(), (Scalar(1) / (Scalar(1) + (-x.array()).exp())).eval());
}

#define SKD_INSTANTIATE(S)                                                                              \
  template Var<S> conv2d(const Var<S>&, const Var<S>&, const Var<S>&, Conv2dSpec);                      \
  template Var<S> batch_norm(const Var<S>&, const Var<S>&, const Var<S>&, Tensor<S>*, Tensor<S>*, bool, \
                             double, double);                                                           \
  template Var<S> prelu(const Var<S>&, const Var<S>&);                                                  \
  template Var<S> relu(const Var<S>&);                                                                  \
  template Var<S> max_pool2d(const Var<S>&, int, int, int);                                             \
  template Var<S> add(const Var<S>&, const Var<S>&);                                                    \
  template Var<S> mul(const Var<S>&, const Var<S>&);                                                    \
  template Var<S> scale(const Var<S>&, S);                                                              \
  template Var<S> concat_channels(const std::vector<Var<S>>&);                                          \
  template Var<S> resize_bilinear(const Var<S>&, int, int);                                             \
  template Tensor<S> resize_bilinear(const Tensor<S>&, int, int);                                       \
  template Var<S> global_avg_pool(const Var<S>&);                                                       \
  template Tensor<S> resize_area(const Tensor<S>&, int, int);                                           \
  template Tensor<S> sigmoid(const Tensor<S>&);

SKD_INSTANTIATE(float)
SKD_INSTANTIATE(double)

}  // namespace skd
