#pragma once

#include <utility>
#include <vector>

#include "veinseg/tensor.hpp"

namespace veinseg {

enum class Mode { train, eval };

/// 2-D convolution with symmetric zero padding and dilation (atrous rate).
///
/// The effective kernel extent along an axis is dilation*(k-1)+1; the number
/// of trainable values does not depend on the dilation.
template <typename Scalar>
struct Conv2dParams {
  Tensor4<Scalar> weight;  // (c_out, c_in, k_h, k_w)
  Vector<Scalar> bias;     // c_out
  int stride = 1;
  int padding = 0;
  int dilation = 1;

  Index c_out() const { return weight.n(); }
  Index c_in() const { return weight.c(); }
  Index kernel_h() const { return weight.h(); }
  Index kernel_w() const { return weight.w(); }
  Index parameter_count() const { return weight.size() + bias.size(); }
};

// Zero-initialized square-kernel convolution.
template <typename Scalar>
Conv2dParams<Scalar> make_conv2d(Index c_in, Index c_out, Index kernel, int stride = 1,
                                 int padding = 0, int dilation = 1);

// floor((in + 2*padding - dilation*(kernel-1) - 1) / stride) + 1, or a
// ShapeError when that is below 1.
Index conv_output_size(Index in, Index kernel, int stride, int padding, int dilation);

// Keeps a pointer to the parameters: they must outlive the context and stay
// unchanged until the matching backward call.
template <typename Scalar>
struct Conv2dContext {
  Tensor4<Scalar> input;
  const Conv2dParams<Scalar>* params = nullptr;
  Shape4 output_shape;
};

template <typename Scalar>
struct ConvGrads {
  Tensor4<Scalar> input;
  Tensor4<Scalar> weight;
  Vector<Scalar> bias;
};

template <typename Scalar>
std::pair<Tensor4<Scalar>, Conv2dContext<Scalar>> conv2d_forward(const Tensor4<Scalar>& x,
                                                                  const Conv2dParams<Scalar>& p);

template <typename Scalar>
ConvGrads<Scalar> conv2d_backward(const Tensor4<Scalar>& grad_y, const Conv2dContext<Scalar>& ctx);

template <typename Scalar>
struct BatchNormParams {
  Vector<Scalar> gamma;
  Vector<Scalar> beta;
  Vector<Scalar> running_mean;
  Vector<Scalar> running_var;
  Scalar epsilon = Scalar(1e-5);
  Scalar momentum = Scalar(0.9);

  Index channels() const { return gamma.size(); }
  Index parameter_count() const { return gamma.size() + beta.size(); }
};

// gamma = 1, beta = 0, running mean 0, running variance 1.
template <typename Scalar>
BatchNormParams<Scalar> make_batchnorm(Index channels);

template <typename Scalar>
struct BatchNormContext {
  Tensor4<Scalar> normalized;
  Vector<Scalar> inv_std;
  Vector<Scalar> gamma;
  Mode mode = Mode::train;
};

template <typename Scalar>
struct BatchNormGrads {
  Tensor4<Scalar> input;
  Vector<Scalar> gamma;
  Vector<Scalar> beta;
};

// Train mode normalizes with the biased per-channel batch statistics over
// (n, h, w) and folds them into the running estimates as
// running = momentum*running + (1-momentum)*batch. Eval mode only reads the
// running estimates.
template <typename Scalar>
std::pair<Tensor4<Scalar>, BatchNormContext<Scalar>> batchnorm2d_forward(
    const Tensor4<Scalar>& x, BatchNormParams<Scalar>& p, Mode mode);

template <typename Scalar>
BatchNormGrads<Scalar> batchnorm2d_backward(const Tensor4<Scalar>& grad_y,
                                            const BatchNormContext<Scalar>& ctx);

// ReLU keeps its input, sigmoid its output.
template <typename Scalar>
struct ActivationContext {
  Tensor4<Scalar> saved;
};

template <typename Scalar>
std::pair<Tensor4<Scalar>, ActivationContext<Scalar>> relu_forward(const Tensor4<Scalar>& x);

// Subgradient 0 at exactly 0.
template <typename Scalar>
Tensor4<Scalar> relu_backward(const Tensor4<Scalar>& grad_y, const ActivationContext<Scalar>& ctx);

// Output clamped to [smallest normal, 1 - epsilon/2] so probabilities stay
// strictly inside (0, 1) at either precision.
template <typename Scalar>
std::pair<Tensor4<Scalar>, ActivationContext<Scalar>> sigmoid_forward(const Tensor4<Scalar>& x);

template <typename Scalar>
Tensor4<Scalar> sigmoid_backward(const Tensor4<Scalar>& grad_y,
                                 const ActivationContext<Scalar>& ctx);

struct PoolContext {
  Shape4 input_shape;
  std::vector<Index> argmax;  // flat input offset per output element
};

// 2x2 window, stride 2. Ties go to the first maximum in row-major order.
template <typename Scalar>
std::pair<Tensor4<Scalar>, PoolContext> maxpool2x_forward(const Tensor4<Scalar>& x);

template <typename Scalar>
Tensor4<Scalar> maxpool2x_backward(const Tensor4<Scalar>& grad_y, const PoolContext& ctx);

struct UpsampleContext {
  Shape4 input_shape;
};

template <typename Scalar>
std::pair<Tensor4<Scalar>, UpsampleContext> upsample_nearest2x_forward(const Tensor4<Scalar>& x);

template <typename Scalar>
Tensor4<Scalar> upsample_nearest2x_backward(const Tensor4<Scalar>& grad_y,
                                            const UpsampleContext& ctx);

/// 2x2 stride-2 transposed convolution, the adjoint of a 2x2 stride-2
/// convolution whose weight has the same (c_in, c_out, 2, 2) tensor:
///   y[i, o, 2a+u, 2b+v] = bias[o] + sum_j x[i, j, a, b] * weight[j, o, u, v]
template <typename Scalar>
struct ConvTranspose2xParams {
  Tensor4<Scalar> weight;  // (c_in, c_out, 2, 2)
  Vector<Scalar> bias;     // c_out

  Index c_in() const { return weight.n(); }
  Index c_out() const { return weight.c(); }
  Index parameter_count() const { return weight.size() + bias.size(); }
};

template <typename Scalar>
ConvTranspose2xParams<Scalar> make_conv_transpose2x(Index c_in, Index c_out);

template <typename Scalar>
struct ConvTransposeContext {
  Tensor4<Scalar> input;
  const ConvTranspose2xParams<Scalar>* params = nullptr;
};

template <typename Scalar>
std::pair<Tensor4<Scalar>, ConvTransposeContext<Scalar>> conv_transpose2x_forward(
    const Tensor4<Scalar>& x, const ConvTranspose2xParams<Scalar>& p);

template <typename Scalar>
ConvGrads<Scalar> conv_transpose2x_backward(const Tensor4<Scalar>& grad_y,
                                            const ConvTransposeContext<Scalar>& ctx);

#define VEINSEG_LAYERS_EXTERN(S)                                                              \
  extern template Conv2dParams<S> make_conv2d<S>(Index, Index, Index, int, int, int);         \
  extern template std::pair<Tensor4<S>, Conv2dContext<S>> conv2d_forward<S>(                  \
      const Tensor4<S>&, const Conv2dParams<S>&);                                             \
  extern template ConvGrads<S> conv2d_backward<S>(const Tensor4<S>&, const Conv2dContext<S>&); \
  extern template BatchNormParams<S> make_batchnorm<S>(Index);                                \
  extern template std::pair<Tensor4<S>, BatchNormContext<S>> batchnorm2d_forward<S>(          \
      const Tensor4<S>&, BatchNormParams<S>&, Mode);                                          \
  extern template BatchNormGrads<S> batchnorm2d_backward<S>(const Tensor4<S>&,                \
                                                            const BatchNormContext<S>&);      \
  extern template std::pair<Tensor4<S>, ActivationContext<S>> relu_forward<S>(                \
      const Tensor4<S>&);                                                                     \
  extern template Tensor4<S> relu_backward<S>(const Tensor4<S>&, const ActivationContext<S>&); \
  extern template std::pair<Tensor4<S>, ActivationContext<S>> sigmoid_forward<S>(             \
      const Tensor4<S>&);                                                                     \
  extern template Tensor4<S> sigmoid_backward<S>(const Tensor4<S>&,                           \
                                                 const ActivationContext<S>&);                \
  extern template std::pair<Tensor4<S>, PoolContext> maxpool2x_forward<S>(const Tensor4<S>&); \
  extern template Tensor4<S> maxpool2x_backward<S>(const Tensor4<S>&, const PoolContext&);    \
  extern template std::pair<Tensor4<S>, UpsampleContext> upsample_nearest2x_forward<S>(       \
      const Tensor4<S>&);                                                                     \
  extern template Tensor4<S> upsample_nearest2x_backward<S>(const Tensor4<S>&,                \
                                                            const UpsampleContext&);          \
  extern template ConvTranspose2xParams<S> make_conv_transpose2x<S>(Index, Index);            \
  extern template std::pair<Tensor4<S>, ConvTransposeContext<S>> conv_transpose2x_forward<S>( \
      const Tensor4<S>&, const ConvTranspose2xParams<S>&);                                    \
  extern template ConvGrads<S> conv_transpose2x_backward<S>(const Tensor4<S>&,                \
                                                            const ConvTransposeContext<S>&);

VEINSEG_LAYERS_EXTERN(float)
VEINSEG_LAYERS_EXTERN(double)

}  // namespace veinseg
