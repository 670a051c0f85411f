#include "veinseg/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "veinseg/parallel.hpp"

namespace veinseg {

namespace {

// Patch matrix of one sample: row (c*kh + u)*kw + v, column oy*wo + ox.
template <typename Scalar>
void im2col(const Scalar* x, Index channels, Index h, Index w, Index kh, Index kw, int stride,
            int pad, int dil, Index ho, Index wo, Scalar* cols) {
  Index row = 0;
  for (Index c = 0; c < channels; ++c) {
    const Scalar* plane = x + c * h * w;
    for (Index u = 0; u < kh; ++u) {
      for (Index v = 0; v < kw; ++v, ++row) {
        Scalar* out = cols + row * ho * wo;
        for (Index oy = 0; oy < ho; ++oy) {
          const Index iy = oy * stride - pad + u * dil;
          Scalar* line = out + oy * wo;
          if (iy < 0 || iy >= h) {
            std::fill_n(line, wo, Scalar(0));
            continue;
          }
          const Scalar* src = plane + iy * w;
          for (Index ox = 0; ox < wo; ++ox) {
            const Index ix = ox * stride - pad + v * dil;
            line[ox] = (ix >= 0 && ix < w) ? src[ix] : Scalar(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col; accumulates into x.
template <typename Scalar>
void col2im(const Scalar* cols, Index channels, Index h, Index w, Index kh, Index kw, int stride,
            int pad, int dil, Index ho, Index wo, Scalar* x) {
  Index row = 0;
  for (Index c = 0; c < channels; ++c) {
    Scalar* plane = x + c * h * w;
    for (Index u = 0; u < kh; ++u) {
      for (Index v = 0; v < kw; ++v, ++row) {
        const Scalar* in = cols + row * ho * wo;
        for (Index oy = 0; oy < ho; ++oy) {
          const Index iy = oy * stride - pad + u * dil;
          if (iy < 0 || iy >= h) continue;
          Scalar* dst = plane + iy * w;
          const Scalar* line = in + oy * wo;
          for (Index ox = 0; ox < wo; ++ox) {
            const Index ix = ox * stride - pad + v * dil;
            if (ix >= 0 && ix < w) dst[ix] += line[ox];
          }
        }
      }
    }
  }
}

template <typename Scalar>
bool is_pointwise(const Conv2dParams<Scalar>& p) {
  return p.kernel_h() == 1 && p.kernel_w() == 1 && p.stride == 1 && p.padding == 0;
}

}  // namespace

Index conv_output_size(Index in, Index kernel, int stride, int padding, int dilation) {
  if (stride < 1 || dilation < 1 || padding < 0) {
    throw ArgumentError("conv: stride and dilation must be positive, padding non-negative");
  }
  const Index span = in + 2 * padding - static_cast<Index>(dilation) * (kernel - 1) - 1;
  if (span < 0) {
    throw ShapeError("conv: non-positive output size for input extent " + std::to_string(in));
  }
  return span / stride + 1;
}

template <typename Scalar>
Conv2dParams<Scalar> make_conv2d(Index c_in, Index c_out, Index kernel, int stride, int padding,
                                 int dilation) {
  Conv2dParams<Scalar> p;
  p.weight = Tensor4<Scalar>(c_out, c_in, kernel, kernel, Scalar(0));
  p.bias = Vector<Scalar>::Zero(c_out);
  p.stride = stride;
  p.padding = padding;
  p.dilation = dilation;
  return p;
}

template <typename Scalar>
std::pair<Tensor4<Scalar>, Conv2dContext<Scalar>> conv2d_forward(const Tensor4<Scalar>& x,
                                                                  const Conv2dParams<Scalar>& p) {
  if (x.c() != p.c_in()) {
    throw ShapeError("conv2d: input has " + std::to_string(x.c()) + " channels, weight expects " +
                     std::to_string(p.c_in()));
  }
  if (p.bias.size() != p.c_out()) throw ShapeError("conv2d: bias length differs from c_out");
  const Index kh = p.kernel_h(), kw = p.kernel_w();
  const Index ho = conv_output_size(x.h(), kh, p.stride, p.padding, p.dilation);
  const Index wo = conv_output_size(x.w(), kw, p.stride, p.padding, p.dilation);
  const Index k = p.c_in() * kh * kw;

  Tensor4<Scalar> y;
  y.reset(Shape4{x.n(), p.c_out(), ho, wo});
  ConstRowMatrixMap<Scalar> weights(p.weight.data().data(), p.c_out(), k);
  const bool pointwise = is_pointwise(p);

  parallel_for(static_cast<std::size_t>(x.n()), [&](std::size_t idx) {
    const auto i = static_cast<Index>(idx);
    RowMatrixMap<Scalar> out(y.sample_data(i), p.c_out(), ho * wo);
    if (pointwise) {
      out.noalias() = weights * x.sample_matrix(i);
    } else {
      RowMatrix<Scalar> cols(k, ho * wo);
      im2col(x.sample_data(i), x.c(), x.h(), x.w(), kh, kw, p.stride, p.padding, p.dilation, ho,
             wo, cols.data());
      out.noalias() = weights * cols;
    }
    out.colwise() += p.bias;
  });

  Conv2dContext<Scalar> ctx{x, &p, y.shape()};
  return {std::move(y), std::move(ctx)};
}

template <typename Scalar>
ConvGrads<Scalar> conv2d_backward(const Tensor4<Scalar>& grad_y, const Conv2dContext<Scalar>& ctx) {
  if (ctx.params == nullptr) throw ArgumentError("conv2d_backward: empty context");
  if (!(grad_y.shape() == ctx.output_shape)) {
    throw ShapeError("conv2d_backward: gradient shape " + grad_y.shape().str() +
                     " does not match forward output " + ctx.output_shape.str());
  }
  const auto& p = *ctx.params;
  const auto& x = ctx.input;
  const Index kh = p.kernel_h(), kw = p.kernel_w();
  const Index ho = grad_y.h(), wo = grad_y.w();
  const Index k = p.c_in() * kh * kw;
  const Index n = x.n();
  ConstRowMatrixMap<Scalar> weights(p.weight.data().data(), p.c_out(), k);
  const bool pointwise = is_pointwise(p);

  ConvGrads<Scalar> g;
  g.input = Tensor4<Scalar>(x.shape(), Scalar(0));
  g.weight = Tensor4<Scalar>(p.weight.shape(), Scalar(0));
  g.bias = Vector<Scalar>::Zero(p.c_out());

  // Per-sample partials are summed in sample order below, independent of the
  // number of workers.
  const bool threaded = thread_count() > 1 && n > 1;
  std::vector<RowMatrix<Scalar>> weight_parts(threaded ? n : 1);
  std::vector<Vector<Scalar>> bias_parts(threaded ? n : 1);
  RowMatrixMap<Scalar> grad_w(g.weight.data().data(), p.c_out(), k);

  auto sample = [&](Index i, RowMatrix<Scalar>& wpart, Vector<Scalar>& bpart) {
    ConstRowMatrixMap<Scalar> gy(grad_y.sample_data(i), p.c_out(), ho * wo);
    bpart = gy.rowwise().sum();
    if (pointwise) {
      wpart.noalias() = gy * x.sample_matrix(i).transpose();
      g.input.sample_matrix(i).noalias() = weights.transpose() * gy;
    } else {
      RowMatrix<Scalar> cols(k, ho * wo);
      im2col(x.sample_data(i), x.c(), x.h(), x.w(), kh, kw, p.stride, p.padding, p.dilation, ho,
             wo, cols.data());
      wpart.noalias() = gy * cols.transpose();
      cols.noalias() = weights.transpose() * gy;
      col2im(cols.data(), x.c(), x.h(), x.w(), kh, kw, p.stride, p.padding, p.dilation, ho, wo,
             g.input.sample_data(i));
    }
  };

  if (threaded) {
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t idx) {
      sample(static_cast<Index>(idx), weight_parts[idx], bias_parts[idx]);
    });
    for (Index i = 0; i < n; ++i) {
      grad_w += weight_parts[i];
      g.bias += bias_parts[i];
    }
  } else {
    for (Index i = 0; i < n; ++i) {
      sample(i, weight_parts[0], bias_parts[0]);
      grad_w += weight_parts[0];
      g.bias += bias_parts[0];
    }
  }
  return g;
}

template <typename Scalar>
BatchNormParams<Scalar> make_batchnorm(Index channels) {
  BatchNormParams<Scalar> p;
  p.gamma = Vector<Scalar>::Ones(channels);
  p.beta = Vector<Scalar>::Zero(channels);
  p.running_mean = Vector<Scalar>::Zero(channels);
  p.running_var = Vector<Scalar>::Ones(channels);
  return p;
}

template <typename Scalar>
std::pair<Tensor4<Scalar>, BatchNormContext<Scalar>> batchnorm2d_forward(
    const Tensor4<Scalar>& x, BatchNormParams<Scalar>& p, Mode mode) {
  if (x.c() != p.channels()) {
    throw ShapeError("batchnorm2d: input has " + std::to_string(x.c()) +
                     " channels, parameters have " + std::to_string(p.channels()));
  }
  const Index n = x.n(), c = x.c(), plane = x.plane();
  const auto count = static_cast<Scalar>(n * plane);

  BatchNormContext<Scalar> ctx;
  ctx.mode = mode;
  ctx.gamma = p.gamma;
  ctx.inv_std.resize(c);
  ctx.normalized.reset(x.shape());
  Tensor4<Scalar> y;
  y.reset(x.shape());

  for (Index j = 0; j < c; ++j) {
    Scalar mean, var;
    if (mode == Mode::train) {
      Scalar sum(0);
      for (Index i = 0; i < n; ++i) {
        const Scalar* src = x.sample_data(i) + j * plane;
        for (Index k = 0; k < plane; ++k) sum += src[k];
      }
      mean = sum / count;
      Scalar sq(0);
      for (Index i = 0; i < n; ++i) {
        const Scalar* src = x.sample_data(i) + j * plane;
        for (Index k = 0; k < plane; ++k) sq += (src[k] - mean) * (src[k] - mean);
      }
      var = sq / count;
      p.running_mean[j] = p.momentum * p.running_mean[j] + (Scalar(1) - p.momentum) * mean;
      p.running_var[j] = p.momentum * p.running_var[j] + (Scalar(1) - p.momentum) * var;
    } else {
      mean = p.running_mean[j];
      var = p.running_var[j];
    }
    const Scalar inv_std = Scalar(1) / std::sqrt(var + p.epsilon);
    ctx.inv_std[j] = inv_std;
    for (Index i = 0; i < n; ++i) {
      const Scalar* src = x.sample_data(i) + j * plane;
      Scalar* xn = ctx.normalized.sample_data(i) + j * plane;
      Scalar* dst = y.sample_data(i) + j * plane;
      for (Index k = 0; k < plane; ++k) {
        xn[k] = (src[k] - mean) * inv_std;
        dst[k] = p.gamma[j] * xn[k] + p.beta[j];
      }
    }
  }
  return {std::move(y), std::move(ctx)};
}

template <typename Scalar>
BatchNormGrads<Scalar> batchnorm2d_backward(const Tensor4<Scalar>& grad_y,
                                            const BatchNormContext<Scalar>& ctx) {
  require_same_shape(grad_y.shape(), ctx.normalized.shape(), "batchnorm2d_backward");
  const Index n = grad_y.n(), c = grad_y.c(), plane = grad_y.plane();
  const auto count = static_cast<Scalar>(n * plane);

  BatchNormGrads<Scalar> g;
  g.input.reset(grad_y.shape());
  g.gamma = Vector<Scalar>::Zero(c);
  g.beta = Vector<Scalar>::Zero(c);

  for (Index j = 0; j < c; ++j) {
    Scalar sum_g(0), sum_gx(0);
    for (Index i = 0; i < n; ++i) {
      const Scalar* gy = grad_y.sample_data(i) + j * plane;
      const Scalar* xn = ctx.normalized.sample_data(i) + j * plane;
      for (Index k = 0; k < plane; ++k) {
        sum_g += gy[k];
        sum_gx += gy[k] * xn[k];
      }
    }
    g.beta[j] = sum_g;
    g.gamma[j] = sum_gx;
    const Scalar scale = ctx.gamma[j] * ctx.inv_std[j];
    for (Index i = 0; i < n; ++i) {
      const Scalar* gy = grad_y.sample_data(i) + j * plane;
      const Scalar* xn = ctx.normalized.sample_data(i) + j * plane;
      Scalar* gx = g.input.sample_data(i) + j * plane;
      if (ctx.mode == Mode::train) {
        for (Index k = 0; k < plane; ++k) {
          gx[k] = scale * (gy[k] - (sum_g + xn[k] * sum_gx) / count);
        }
      } else {
        for (Index k = 0; k < plane; ++k) gx[k] = scale * gy[k];
      }
    }
  }
  return g;
}

template <typename Scalar>
std::pair<Tensor4<Scalar>, ActivationContext<Scalar>> relu_forward(const Tensor4<Scalar>& x) {
  Tensor4<Scalar> y;
  y.reset(x.shape());
  y.data() = x.data().cwiseMax(Scalar(0));
  return {std::move(y), ActivationContext<Scalar>{x}};
}

template <typename Scalar>
Tensor4<Scalar> relu_backward(const Tensor4<Scalar>& grad_y, const ActivationContext<Scalar>& ctx) {
  require_same_shape(grad_y.shape(), ctx.saved.shape(), "relu_backward");
  Tensor4<Scalar> g;
  g.reset(grad_y.shape());
  g.data() = (ctx.saved.data().array() > Scalar(0)).select(grad_y.data(), Scalar(0));
  return g;
}

template <typename Scalar>
std::pair<Tensor4<Scalar>, ActivationContext<Scalar>> sigmoid_forward(const Tensor4<Scalar>& x) {
  constexpr Scalar lo = std::numeric_limits<Scalar>::min();
  constexpr Scalar hi = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / 2;
  Tensor4<Scalar> y;
  y.reset(x.shape());
  for (Index k = 0; k < x.size(); ++k) {
    const Scalar v = x.data()[k];
    Scalar s;
    if (v >= Scalar(0)) {
      s = Scalar(1) / (Scalar(1) + std::exp(-v));
    } else {
      const Scalar e = std::exp(v);
      s = e / (Scalar(1) + e);
    }
    y.data()[k] = std::clamp(s, lo, hi);
  }
  ActivationContext<Scalar> ctx{y};
  return {std::move(y), std::move(ctx)};
}

template <typename Scalar>
Tensor4<Scalar> sigmoid_backward(const Tensor4<Scalar>& grad_y,
                                 const ActivationContext<Scalar>& ctx) {
  require_same_shape(grad_y.shape(), ctx.saved.shape(), "sigmoid_backward");
  Tensor4<Scalar> g;
  g.reset(grad_y.shape());
  const auto& y = ctx.saved.data().array();
  g.data() = (grad_y.data().array() * y * (Scalar(1) - y)).matrix();
  return g;
}

template <typename Scalar>
std::pair<Tensor4<Scalar>, PoolContext> maxpool2x_forward(const Tensor4<Scalar>& x) {
  if (x.h() % 2 != 0 || x.w() % 2 != 0) {
    throw ShapeError("maxpool2x: spatial dims must be even, got " + x.shape().str());
  }
  const Index ho = x.h() / 2, wo = x.w() / 2;
  Tensor4<Scalar> y;
  y.reset(Shape4{x.n(), x.c(), ho, wo});
  PoolContext ctx{x.shape(), std::vector<Index>(static_cast<std::size_t>(y.size()))};
  Index out = 0;
  for (Index i = 0; i < x.n(); ++i) {
    for (Index j = 0; j < x.c(); ++j) {
      for (Index oy = 0; oy < ho; ++oy) {
        for (Index ox = 0; ox < wo; ++ox, ++out) {
          Index best = x.offset(i, j, 2 * oy, 2 * ox);
          for (Index u = 0; u < 2; ++u) {
            for (Index v = 0; v < 2; ++v) {
              const Index at = x.offset(i, j, 2 * oy + u, 2 * ox + v);
              if (x.data()[at] > x.data()[best]) best = at;
            }
          }
          ctx.argmax[static_cast<std::size_t>(out)] = best;
          y.data()[out] = x.data()[best];
        }
      }
    }
  }
  return {std::move(y), std::move(ctx)};
}

template <typename Scalar>
Tensor4<Scalar> maxpool2x_backward(const Tensor4<Scalar>& grad_y, const PoolContext& ctx) {
  if (static_cast<std::size_t>(grad_y.size()) != ctx.argmax.size()) {
    throw ShapeError("maxpool2x_backward: gradient " + grad_y.shape().str() +
                     " does not match forward output");
  }
  Tensor4<Scalar> g(ctx.input_shape, Scalar(0));
  for (Index k = 0; k < grad_y.size(); ++k) {
    g.data()[ctx.argmax[static_cast<std::size_t>(k)]] += grad_y.data()[k];
  }
  return g;
}

template <typename Scalar>
std::pair<Tensor4<Scalar>, UpsampleContext> upsample_nearest2x_forward(const Tensor4<Scalar>& x) {
  Tensor4<Scalar> y;
  y.reset(Shape4{x.n(), x.c(), 2 * x.h(), 2 * x.w()});
  for (Index i = 0; i < x.n(); ++i) {
    for (Index j = 0; j < x.c(); ++j) {
      for (Index oy = 0; oy < y.h(); ++oy) {
        for (Index ox = 0; ox < y.w(); ++ox) y(i, j, oy, ox) = x(i, j, oy / 2, ox / 2);
      }
    }
  }
  return {std::move(y), UpsampleContext{x.shape()}};
}

template <typename Scalar>
Tensor4<Scalar> upsample_nearest2x_backward(const Tensor4<Scalar>& grad_y,
                                            const UpsampleContext& ctx) {
  const Shape4& s = ctx.input_shape;
  require_same_shape(grad_y.shape(), Shape4{s.n, s.c, 2 * s.h, 2 * s.w},
                     "upsample_nearest2x_backward");
  Tensor4<Scalar> g(s, Scalar(0));
  for (Index i = 0; i < s.n; ++i) {
    for (Index j = 0; j < s.c; ++j) {
      for (Index oy = 0; oy < grad_y.h(); ++oy) {
        for (Index ox = 0; ox < grad_y.w(); ++ox) g(i, j, oy / 2, ox / 2) += grad_y(i, j, oy, ox);
      }
    }
  }
  return g;
}

template <typename Scalar>
ConvTranspose2xParams<Scalar> make_conv_transpose2x(Index c_in, Index c_out) {
  ConvTranspose2xParams<Scalar> p;
  p.weight = Tensor4<Scalar>(c_in, c_out, 2, 2, Scalar(0));
  p.bias = Vector<Scalar>::Zero(c_out);
  return p;
}

// With W viewed as (c_in, c_out*4), each input pixel contributes the column
// W^T x[:, a, b] to the 2x2 output block at (2a, 2b).
template <typename Scalar>
std::pair<Tensor4<Scalar>, ConvTransposeContext<Scalar>> conv_transpose2x_forward(
    const Tensor4<Scalar>& x, const ConvTranspose2xParams<Scalar>& p) {
  if (x.c() != p.c_in()) {
    throw ShapeError("conv_transpose2x: input has " + std::to_string(x.c()) +
                     " channels, weight expects " + std::to_string(p.c_in()));
  }
  const Index c_out = p.c_out(), h = x.h(), w = x.w();
  ConstRowMatrixMap<Scalar> weights(p.weight.data().data(), p.c_in(), c_out * 4);
  Tensor4<Scalar> y;
  y.reset(Shape4{x.n(), c_out, 2 * h, 2 * w});
  parallel_for(static_cast<std::size_t>(x.n()), [&](std::size_t idx) {
    const auto i = static_cast<Index>(idx);
    const RowMatrix<Scalar> blocks = weights.transpose() * x.sample_matrix(i);
    for (Index o = 0; o < c_out; ++o) {
      for (Index u = 0; u < 2; ++u) {
        for (Index v = 0; v < 2; ++v) {
          const Scalar* row = blocks.data() + ((o * 2 + u) * 2 + v) * h * w;
          for (Index a = 0; a < h; ++a) {
            for (Index b = 0; b < w; ++b) y(i, o, 2 * a + u, 2 * b + v) = row[a * w + b] + p.bias[o];
          }
        }
      }
    }
  });
  ConvTransposeContext<Scalar> ctx{x, &p};
  return {std::move(y), std::move(ctx)};
}

template <typename Scalar>
ConvGrads<Scalar> conv_transpose2x_backward(const Tensor4<Scalar>& grad_y,
                                            const ConvTransposeContext<Scalar>& ctx) {
  if (ctx.params == nullptr) throw ArgumentError("conv_transpose2x_backward: empty context");
  const auto& p = *ctx.params;
  const auto& x = ctx.input;
  const Index c_out = p.c_out(), h = x.h(), w = x.w();
  require_same_shape(grad_y.shape(), Shape4{x.n(), c_out, 2 * h, 2 * w},
                     "conv_transpose2x_backward");
  ConstRowMatrixMap<Scalar> weights(p.weight.data().data(), p.c_in(), c_out * 4);

  ConvGrads<Scalar> g;
  g.input = Tensor4<Scalar>(x.shape(), Scalar(0));
  g.weight = Tensor4<Scalar>(p.weight.shape(), Scalar(0));
  g.bias = Vector<Scalar>::Zero(c_out);
  RowMatrixMap<Scalar> grad_w(g.weight.data().data(), p.c_in(), c_out * 4);

  RowMatrix<Scalar> blocks(c_out * 4, h * w);
  RowMatrix<Scalar> part;
  for (Index i = 0; i < x.n(); ++i) {
    for (Index o = 0; o < c_out; ++o) {
      for (Index u = 0; u < 2; ++u) {
        for (Index v = 0; v < 2; ++v) {
          Scalar* row = blocks.data() + ((o * 2 + u) * 2 + v) * h * w;
          for (Index a = 0; a < h; ++a) {
            for (Index b = 0; b < w; ++b) row[a * w + b] = grad_y(i, o, 2 * a + u, 2 * b + v);
          }
        }
      }
      Scalar s(0);
      const Scalar* plane = grad_y.sample_data(i) + o * 4 * h * w;
      for (Index k = 0; k < 4 * h * w; ++k) s += plane[k];
      g.bias[o] += s;
    }
    g.input.sample_matrix(i).noalias() = weights * blocks;
    part.noalias() = x.sample_matrix(i) * blocks.transpose();
    grad_w += part;
  }
  return g;
}

#define VEINSEG_LAYERS_INSTANTIATE(S)                                                          \
  template Conv2dParams<S> make_conv2d<S>(Index, Index, Index, int, int, int);                 \
  template std::pair<Tensor4<S>, Conv2dContext<S>> conv2d_forward<S>(const Tensor4<S>&,        \
                                                                     const Conv2dParams<S>&);  \
  template ConvGrads<S> conv2d_backward<S>(const Tensor4<S>&, const Conv2dContext<S>&);        \
  template BatchNormParams<S> make_batchnorm<S>(Index);                                        \
  template std::pair<Tensor4<S>, BatchNormContext<S>> batchnorm2d_forward<S>(                  \
      const Tensor4<S>&, BatchNormParams<S>&, Mode);                                           \
  template BatchNormGrads<S> batchnorm2d_backward<S>(const Tensor4<S>&,                        \
                                                     const BatchNormContext<S>&);              \
  template std::pair<Tensor4<S>, ActivationContext<S>> relu_forward<S>(const Tensor4<S>&);     \
  template Tensor4<S> relu_backward<S>(const Tensor4<S>&, const ActivationContext<S>&);        \
  template std::pair<Tensor4<S>, ActivationContext<S>> sigmoid_forward<S>(const Tensor4<S>&);  \
  template Tensor4<S> sigmoid_backward<S>(const Tensor4<S>&, const ActivationContext<S>&);     \
  template std::pair<Tensor4<S>, PoolContext> maxpool2x_forward<S>(const Tensor4<S>&);         \
  template Tensor4<S> maxpool2x_backward<S>(const Tensor4<S>&, const PoolContext&);            \
  template std::pair<Tensor4<S>, UpsampleContext> upsample_nearest2x_forward<S>(               \
      const Tensor4<S>&);                                                                      \
  template Tensor4<S> upsample_nearest2x_backward<S>(const Tensor4<S>&, const UpsampleContext&); \
  template ConvTranspose2xParams<S> make_conv_transpose2x<S>(Index, Index);                    \
  template std::pair<Tensor4<S>, ConvTransposeContext<S>> conv_transpose2x_forward<S>(         \
      const Tensor4<S>&, const ConvTranspose2xParams<S>&);                                     \
  template ConvGrads<S> conv_transpose2x_backward<S>(const Tensor4<S>&,                        \
                                                     const ConvTransposeContext<S>&);

VEINSEG_LAYERS_INSTANTIATE(float)
VEINSEG_LAYERS_INSTANTIATE(double)

}  // namespace veinseg
