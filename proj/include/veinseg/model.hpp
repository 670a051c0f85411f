#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "veinseg/layers.hpp"

namespace veinseg {

enum class ModelKind { unet_baseline, resunet_baseline, proposed };

// The f applied to F(x) + h(x) at the end of every residual unit.
enum class ResidualActivation { identity, relu };

std::string to_string(ModelKind kind);
std::string to_string(ResidualActivation f);
ModelKind parse_model_kind(std::string_view text);
ResidualActivation parse_residual_activation(std::string_view text);

// How a block obtains its input from the previous block's output.
enum class BlockInput { direct, maxpool, upsample_nearest, upconv };

enum class BlockBody { residual_unit, double_conv };

struct BlockSpec {
  std::string name;
  BlockInput input = BlockInput::direct;
  Index upconv_c_in = 0;  // channels entering the transposed conv (upconv only)
  int skip_from = -1;     // block whose output is concatenated after the input
  Index skip_channels = 0;
  BlockBody body = BlockBody::residual_unit;
  Index c_in = 0;         // channels entering the body, after any concat
  Index c_out = 0;
  int stride = 1;
  int dilation = 1;

  // Channels of the resampled input, i.e. the part of c_in not coming from the skip.
  Index resampled_channels() const;
};

/// Architecture description: the ordered blocks, their wiring and the
/// 1x1 + sigmoid head. Carries no parameter values.
struct ModelGraph {
  ModelKind kind = ModelKind::proposed;
  Index in_channels = 1;
  std::vector<Index> widths;
  int bridge_dilation = 1;
  ResidualActivation post_activation = ResidualActivation::identity;
  std::vector<BlockSpec> blocks;

  Index head_channels() const { return blocks.back().c_out; }
  // Input height and width must be multiples of this.
  Index downsampling_factor() const;
};

std::vector<Index> default_widths(ModelKind kind);

// Three stride-1/2/2 encoder residual units, a stride-2 bridge unit whose two
// 3x3 convolutions use bridge_dilation, three upsample+concat decoder units.
ModelGraph build_proposed(Index in_channels, const std::vector<Index>& widths,
                          int bridge_dilation = 2,
                          ResidualActivation post_activation = ResidualActivation::identity);

ModelGraph build_resunet(Index in_channels, const std::vector<Index>& widths,
                         ResidualActivation post_activation = ResidualActivation::identity);

// Classic padded U-Net with four 2x2 max-pool descents and 2x2 up-convolutions.
ModelGraph build_unet(Index in_channels, const std::vector<Index>& widths5);

ModelGraph build_model(ModelKind kind, Index in_channels, const std::vector<Index>& widths,
                       int bridge_dilation,
                       ResidualActivation post_activation = ResidualActivation::identity);

struct ParameterInfo {
  std::string name;
  std::vector<Index> shape;
  Index size() const;
};

// Trainable tensors in canonical order; running statistics excluded.
std::vector<ParameterInfo> parameter_layout(const ModelGraph& g);

std::int64_t count_parameters(const ModelGraph& g);

// Per-block text table plus the total, as printed by `veinseg summary`.
std::string summary_table(const ModelGraph& g);

template <typename Scalar>
struct ResidualUnitParams {
  BatchNormParams<Scalar> bn1;
  Conv2dParams<Scalar> conv1;
  BatchNormParams<Scalar> bn2;
  Conv2dParams<Scalar> conv2;
  std::optional<Conv2dParams<Scalar>> shortcut;  // absent means identity
};

template <typename Scalar>
struct DoubleConvParams {
  Conv2dParams<Scalar> conv1;
  Conv2dParams<Scalar> conv2;
};

template <typename Scalar>
struct BlockParams {
  std::optional<ConvTranspose2xParams<Scalar>> upconv;
  std::optional<ResidualUnitParams<Scalar>> residual;
  std::optional<DoubleConvParams<Scalar>> double_conv;
};

template <typename Scalar>
struct Model {
  ModelGraph graph;
  std::vector<BlockParams<Scalar>> blocks;
  Conv2dParams<Scalar> head;
};

// All weights and biases zero, batch norm at identity statistics.
template <typename Scalar>
Model<Scalar> make_model(const ModelGraph& g);

// He-normal weights (std sqrt(2/fan_in)) drawn in canonical parameter order
// from SplitMix64(derive_seed(seed, 2^32)); biases zero; gamma 1, beta 0.
template <typename Scalar>
void initialize(Model<Scalar>& m, std::uint64_t seed);

namespace detail {

template <typename Scalar, typename Fn>
void visit_conv(const std::string& prefix, Conv2dParams<Scalar>& c, Fn& fn) {
  const auto& s = c.weight.shape();
  fn(prefix + ".weight", std::vector<Index>{s.n, s.c, s.h, s.w}, c.weight.data());
  fn(prefix + ".bias", std::vector<Index>{c.bias.size()}, c.bias);
}

}  // namespace detail

/// Calls fn(name, shape, values) for every trainable tensor, in the same
/// order as parameter_layout().
template <typename Scalar, typename Fn>
void for_each_parameter(Model<Scalar>& m, Fn&& fn) {
  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    const std::string& name = m.graph.blocks[b].name;
    auto& blk = m.blocks[b];
    if (blk.upconv) {
      auto& u = *blk.upconv;
      const auto& s = u.weight.shape();
      fn(name + ".upconv.weight", std::vector<Index>{s.n, s.c, s.h, s.w}, u.weight.data());
      fn(name + ".upconv.bias", std::vector<Index>{u.bias.size()}, u.bias);
    }
    if (blk.residual) {
      auto& r = *blk.residual;
      fn(name + ".bn1.gamma", std::vector<Index>{r.bn1.gamma.size()}, r.bn1.gamma);
      fn(name + ".bn1.beta", std::vector<Index>{r.bn1.beta.size()}, r.bn1.beta);
      detail::visit_conv(name + ".conv1", r.conv1, fn);
      fn(name + ".bn2.gamma", std::vector<Index>{r.bn2.gamma.size()}, r.bn2.gamma);
      fn(name + ".bn2.beta", std::vector<Index>{r.bn2.beta.size()}, r.bn2.beta);
      detail::visit_conv(name + ".conv2", r.conv2, fn);
      if (r.shortcut) detail::visit_conv(name + ".shortcut", *r.shortcut, fn);
    }
    if (blk.double_conv) {
      detail::visit_conv(name + ".conv1", blk.double_conv->conv1, fn);
      detail::visit_conv(name + ".conv2", blk.double_conv->conv2, fn);
    }
  }
  detail::visit_conv(std::string("head"), m.head, fn);
}

// Batch-norm running statistics: fn(name, shape, values).
template <typename Scalar, typename Fn>
void for_each_buffer(Model<Scalar>& m, Fn&& fn) {
  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    if (!m.blocks[b].residual) continue;
    const std::string& name = m.graph.blocks[b].name;
    auto& r = *m.blocks[b].residual;
    for (auto [tag, bn] : {std::pair{".bn1", &r.bn1}, std::pair{".bn2", &r.bn2}}) {
      fn(name + tag + ".running_mean", std::vector<Index>{bn->running_mean.size()},
         bn->running_mean);
      fn(name + tag + ".running_var", std::vector<Index>{bn->running_var.size()},
         bn->running_var);
    }
  }
}

template <typename Scalar>
struct NamedArray {
  std::string name;
  std::vector<Index> shape;
  Vector<Scalar> values;
};

// One entry per trainable tensor, in canonical order.
template <typename Scalar>
using ParamGrads = std::vector<NamedArray<Scalar>>;

template <typename Scalar>
struct ResidualUnitContext {
  BatchNormContext<Scalar> bn1;
  ActivationContext<Scalar> relu1;
  Conv2dContext<Scalar> conv1;
  BatchNormContext<Scalar> bn2;
  ActivationContext<Scalar> relu2;
  Conv2dContext<Scalar> conv2;
  std::optional<Conv2dContext<Scalar>> shortcut;
  std::optional<ActivationContext<Scalar>> post;
};

template <typename Scalar>
struct DoubleConvContext {
  Conv2dContext<Scalar> conv1;
  ActivationContext<Scalar> relu1;
  Conv2dContext<Scalar> conv2;
  ActivationContext<Scalar> relu2;
};

template <typename Scalar>
struct BlockContext {
  std::optional<PoolContext> pool;
  std::optional<UpsampleContext> upsample;
  std::optional<ConvTransposeContext<Scalar>> upconv;
  std::optional<ResidualUnitContext<Scalar>> residual;
  std::optional<DoubleConvContext<Scalar>> double_conv;
};

template <typename Scalar>
struct ModelContext {
  const Model<Scalar>* model = nullptr;
  Mode mode = Mode::eval;
  Shape4 input_shape;
  std::vector<BlockContext<Scalar>> blocks;
  Conv2dContext<Scalar> head;
  ActivationContext<Scalar> sigmoid;
};

// Probabilities of shape (n, 1, h, w). Train mode updates batch-norm
// running statistics.
template <typename Scalar>
std::pair<Tensor4<Scalar>, ModelContext<Scalar>> model_forward(Model<Scalar>& m,
                                                               const Tensor4<Scalar>& x, Mode mode);

template <typename Scalar>
ParamGrads<Scalar> model_backward(const Model<Scalar>& m, const Tensor4<Scalar>& grad_probs,
                                  const ModelContext<Scalar>& ctx);

#define VEINSEG_MODEL_EXTERN(S)                                                                \
  extern template Model<S> make_model<S>(const ModelGraph&);                                   \
  extern template void initialize<S>(Model<S>&, std::uint64_t);                                \
  extern template std::pair<Tensor4<S>, ModelContext<S>> model_forward<S>(Model<S>&,           \
                                                                          const Tensor4<S>&,   \
                                                                          Mode);               \
  extern template ParamGrads<S> model_backward<S>(const Model<S>&, const Tensor4<S>&,          \
                                                  const ModelContext<S>&);

VEINSEG_MODEL_EXTERN(float)
VEINSEG_MODEL_EXTERN(double)

}  // namespace veinseg
