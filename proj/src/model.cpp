#include "veinseg/model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "veinseg/rng.hpp"

namespace veinseg {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::unet_baseline: return "unet";
    case ModelKind::resunet_baseline: return "resunet";
    case ModelKind::proposed: return "proposed";
  }
  return "?";
}

std::string to_string(ResidualActivation f) {
  return f == ResidualActivation::relu ? "relu" : "identity";
}

ModelKind parse_model_kind(std::string_view text) {
  if (text == "unet" || text == "unet_baseline") return ModelKind::unet_baseline;
  if (text == "resunet" || text == "resunet_baseline") return ModelKind::resunet_baseline;
  if (text == "proposed") return ModelKind::proposed;
  throw ArgumentError("unknown model kind '" + std::string(text) +
                      "' (expected proposed, resunet or unet)");
}

ResidualActivation parse_residual_activation(std::string_view text) {
  if (text == "identity") return ResidualActivation::identity;
  if (text == "relu") return ResidualActivation::relu;
  throw ArgumentError("unknown residual activation '" + std::string(text) + "'");
}

Index BlockSpec::resampled_channels() const { return c_in - skip_channels; }

Index ModelGraph::downsampling_factor() const {
  Index f = 1;
  for (const auto& b : blocks) {
    if (b.input == BlockInput::maxpool || b.stride == 2) f *= 2;
  }
  return f;
}

std::vector<Index> default_widths(ModelKind kind) {
  if (kind == ModelKind::unet_baseline) return {64, 128, 256, 512, 1024};
  return {64, 128, 256, 512};
}

namespace {

void check_widths(const std::vector<Index>& widths, std::size_t expected, const char* who) {
  if (widths.size() != expected) {
    throw ArgumentError(std::string(who) + ": expected " + std::to_string(expected) +
                        " widths, got " + std::to_string(widths.size()));
  }
  for (Index w : widths) {
    if (w < 1) throw ArgumentError(std::string(who) + ": widths must be >= 1");
  }
}

BlockSpec residual_block(std::string name, Index c_in, Index c_out, int stride, int dilation) {
  BlockSpec b;
  b.name = std::move(name);
  b.body = BlockBody::residual_unit;
  b.c_in = c_in;
  b.c_out = c_out;
  b.stride = stride;
  b.dilation = dilation;
  return b;
}

bool has_identity_shortcut(const BlockSpec& b) { return b.c_in == b.c_out && b.stride == 1; }

}  // namespace

ModelGraph build_proposed(Index in_channels, const std::vector<Index>& widths, int bridge_dilation,
                          ResidualActivation post_activation) {
  check_widths(widths, 4, "build_proposed");
  if (in_channels < 1) throw ArgumentError("build_proposed: in_channels must be >= 1");
  if (bridge_dilation < 1) throw ArgumentError("build_proposed: bridge dilation must be >= 1");
  ModelGraph g;
  g.kind = ModelKind::proposed;
  g.in_channels = in_channels;
  g.widths = widths;
  g.bridge_dilation = bridge_dilation;
  g.post_activation = post_activation;
  g.blocks.push_back(residual_block("enc1", in_channels, widths[0], 1, 1));
  g.blocks.push_back(residual_block("enc2", widths[0], widths[1], 2, 1));
  g.blocks.push_back(residual_block("enc3", widths[1], widths[2], 2, 1));
  g.blocks.push_back(residual_block("bridge", widths[2], widths[3], 2, bridge_dilation));
  for (int level = 2; level >= 0; --level) {
    auto b = residual_block("dec" + std::to_string(7 - level), widths[level + 1] + widths[level],
                            widths[level], 1, 1);
    b.input = BlockInput::upsample_nearest;
    b.skip_from = level;
    b.skip_channels = widths[level];
    g.blocks.push_back(std::move(b));
  }
  return g;
}

ModelGraph build_resunet(Index in_channels, const std::vector<Index>& widths,
                         ResidualActivation post_activation) {
  check_widths(widths, 4, "build_resunet");
  ModelGraph g = build_proposed(in_channels, widths, 1, post_activation);
  g.kind = ModelKind::resunet_baseline;
  return g;
}

ModelGraph build_unet(Index in_channels, const std::vector<Index>& widths5) {
  check_widths(widths5, 5, "build_unet");
  if (in_channels < 1) throw ArgumentError("build_unet: in_channels must be >= 1");
  ModelGraph g;
  g.kind = ModelKind::unet_baseline;
  g.in_channels = in_channels;
  g.widths = widths5;
  g.bridge_dilation = 1;
  const auto& w = widths5;
  auto conv_block = [](std::string name, BlockInput input, Index c_in, Index c_out) {
    BlockSpec b;
    b.name = std::move(name);
    b.input = input;
    b.body = BlockBody::double_conv;
    b.c_in = c_in;
    b.c_out = c_out;
    return b;
  };
  g.blocks.push_back(conv_block("enc1", BlockInput::direct, in_channels, w[0]));
  for (int level = 1; level < 4; ++level) {
    g.blocks.push_back(conv_block("enc" + std::to_string(level + 1), BlockInput::maxpool,
                                  w[level - 1], w[level]));
  }
  g.blocks.push_back(conv_block("bottleneck", BlockInput::maxpool, w[3], w[4]));
  for (int level = 3; level >= 0; --level) {
    auto b = conv_block("dec" + std::to_string(level + 1), BlockInput::upconv, 2 * w[level],
                        w[level]);
    b.upconv_c_in = w[level + 1];
    b.skip_from = level;
    b.skip_channels = w[level];
    g.blocks.push_back(std::move(b));
  }
  return g;
}

ModelGraph build_model(ModelKind kind, Index in_channels, const std::vector<Index>& widths,
                       int bridge_dilation, ResidualActivation post_activation) {
  switch (kind) {
    case ModelKind::unet_baseline: return build_unet(in_channels, widths);
    case ModelKind::resunet_baseline: return build_resunet(in_channels, widths, post_activation);
    case ModelKind::proposed:
      return build_proposed(in_channels, widths, bridge_dilation, post_activation);
  }
  throw ArgumentError("build_model: unknown kind");
}

Index ParameterInfo::size() const {
  Index s = 1;
  for (Index d : shape) s *= d;
  return s;
}

std::vector<ParameterInfo> parameter_layout(const ModelGraph& g) {
  std::vector<ParameterInfo> out;
  auto conv = [&](const std::string& prefix, Index c_in, Index c_out, Index k) {
    out.push_back({prefix + ".weight", {c_out, c_in, k, k}});
    out.push_back({prefix + ".bias", {c_out}});
  };
  auto bn = [&](const std::string& prefix, Index c) {
    out.push_back({prefix + ".gamma", {c}});
    out.push_back({prefix + ".beta", {c}});
  };
  for (const auto& b : g.blocks) {
    if (b.input == BlockInput::upconv) {
      const Index up_out = b.resampled_channels();
      out.push_back({b.name + ".upconv.weight", {b.upconv_c_in, up_out, 2, 2}});
      out.push_back({b.name + ".upconv.bias", {up_out}});
    }
    if (b.body == BlockBody::residual_unit) {
      bn(b.name + ".bn1", b.c_in);
      conv(b.name + ".conv1", b.c_in, b.c_out, 3);
      bn(b.name + ".bn2", b.c_out);
      conv(b.name + ".conv2", b.c_out, b.c_out, 3);
      if (!has_identity_shortcut(b)) conv(b.name + ".shortcut", b.c_in, b.c_out, 1);
    } else {
      conv(b.name + ".conv1", b.c_in, b.c_out, 3);
      conv(b.name + ".conv2", b.c_out, b.c_out, 3);
    }
  }
  conv("head", g.head_channels(), 1, 1);
  return out;
}

std::int64_t count_parameters(const ModelGraph& g) {
  std::int64_t total = 0;
  for (const auto& p : parameter_layout(g)) total += p.size();
  return total;
}

std::string summary_table(const ModelGraph& g) {
  std::ostringstream os;
  os << "model: " << to_string(g.kind) << "  in_channels: " << g.in_channels << "  widths:";
  for (Index w : g.widths) os << ' ' << w;
  os << "  bridge_dilation: " << g.bridge_dilation << '\n';
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %-14s %-9s %6s %6s %6s %4s %12s\n", "block", "input",
                "body", "c_in", "c_out", "stride", "dil", "params");
  os << line;
  const auto layout = parameter_layout(g);
  auto block_params = [&](const std::string& name) {
    std::int64_t n = 0;
    for (const auto& p : layout) {
      if (p.name.compare(0, name.size() + 1, name + ".") == 0) n += p.size();
    }
    return n;
  };
  static const char* inputs[] = {"direct", "maxpool", "upsample", "upconv"};
  for (const auto& b : g.blocks) {
    std::string input = inputs[static_cast<int>(b.input)];
    if (b.skip_from >= 0) input += "+" + g.blocks[static_cast<std::size_t>(b.skip_from)].name;
    std::snprintf(line, sizeof line, "%-12s %-14s %-9s %6ld %6ld %6d %4d %12lld\n",
                  b.name.c_str(), input.c_str(),
                  b.body == BlockBody::residual_unit ? "residual" : "2xconv",
                  static_cast<long>(b.c_in), static_cast<long>(b.c_out), b.stride, b.dilation,
                  static_cast<long long>(block_params(b.name)));
    os << line;
  }
  std::snprintf(line, sizeof line, "%-12s %-14s %-9s %6ld %6d %6d %4d %12lld\n", "head", "direct",
                "1x1+sig", static_cast<long>(g.head_channels()), 1, 1, 1,
                static_cast<long long>(block_params("head")));
  os << line;
  os << "total parameters: " << count_parameters(g) << '\n';
  return os.str();
}

template <typename Scalar>
Model<Scalar> make_model(const ModelGraph& g) {
  Model<Scalar> m;
  m.graph = g;
  for (const auto& b : g.blocks) {
    BlockParams<Scalar> p;
    if (b.input == BlockInput::upconv) {
      p.upconv = make_conv_transpose2x<Scalar>(b.upconv_c_in, b.resampled_channels());
    }
    if (b.body == BlockBody::residual_unit) {
      ResidualUnitParams<Scalar> r;
      r.bn1 = make_batchnorm<Scalar>(b.c_in);
      r.conv1 = make_conv2d<Scalar>(b.c_in, b.c_out, 3, b.stride, b.dilation, b.dilation);
      r.bn2 = make_batchnorm<Scalar>(b.c_out);
      r.conv2 = make_conv2d<Scalar>(b.c_out, b.c_out, 3, 1, b.dilation, b.dilation);
      if (!has_identity_shortcut(b)) r.shortcut = make_conv2d<Scalar>(b.c_in, b.c_out, 1, b.stride);
      p.residual = std::move(r);
    } else {
      p.double_conv = DoubleConvParams<Scalar>{make_conv2d<Scalar>(b.c_in, b.c_out, 3, 1, 1),
                                               make_conv2d<Scalar>(b.c_out, b.c_out, 3, 1, 1)};
    }
    m.blocks.push_back(std::move(p));
  }
  m.head = make_conv2d<Scalar>(g.head_channels(), 1, 1);
  return m;
}

constexpr std::uint64_t kInitStream = std::uint64_t{1} << 32;

template <typename Scalar>
void initialize(Model<Scalar>& m, std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, kInitStream));
  for_each_parameter(m, [&](const std::string& name, const std::vector<Index>& shape,
                            Vector<Scalar>& values) {
    const bool weight = name.size() > 7 && name.compare(name.size() - 7, 7, ".weight") == 0;
    if (!weight) {
      const bool gamma = name.size() > 6 && name.compare(name.size() - 6, 6, ".gamma") == 0;
      values.setConstant(gamma ? Scalar(1) : Scalar(0));
      return;
    }
    const bool transposed = name.find(".upconv.") != std::string::npos;
    const Index fan_in = transposed ? shape[0] : shape[1] * shape[2] * shape[3];
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (Index k = 0; k < values.size(); ++k) values[k] = static_cast<Scalar>(stddev * rng.normal());
  });
}

namespace {

template <typename Scalar>
Tensor4<Scalar> residual_forward(ResidualUnitParams<Scalar>& p, ResidualActivation f,
                                 const Tensor4<Scalar>& x, Mode mode,
                                 ResidualUnitContext<Scalar>& ctx) {
  auto [a, bn1] = batchnorm2d_forward(x, p.bn1, mode);
  auto [r1, relu1] = relu_forward(a);
  auto [c1, conv1] = conv2d_forward(r1, p.conv1);
  auto [b2, bn2] = batchnorm2d_forward(c1, p.bn2, mode);
  auto [r2, relu2] = relu_forward(b2);
  auto [y, conv2] = conv2d_forward(r2, p.conv2);
  ctx.bn1 = std::move(bn1);
  ctx.relu1 = std::move(relu1);
  ctx.conv1 = std::move(conv1);
  ctx.bn2 = std::move(bn2);
  ctx.relu2 = std::move(relu2);
  ctx.conv2 = std::move(conv2);
  if (p.shortcut) {
    auto [h, sc] = conv2d_forward(x, *p.shortcut);
    y.data() += h.data();
    ctx.shortcut = std::move(sc);
  } else {
    require_same_shape(y.shape(), x.shape(), "residual unit");
    y.data() += x.data();
  }
  if (f == ResidualActivation::relu) {
    auto [out, post] = relu_forward(y);
    ctx.post = std::move(post);
    return std::move(out);
  }
  return y;
}

template <typename Scalar>
Tensor4<Scalar> residual_backward(ResidualUnitParams<Scalar>& grads, const Tensor4<Scalar>& grad_y,
                                  const ResidualUnitContext<Scalar>& ctx) {
  Tensor4<Scalar> g = ctx.post ? relu_backward(grad_y, *ctx.post) : grad_y;
  auto c2 = conv2d_backward(g, ctx.conv2);
  grads.conv2.weight = std::move(c2.weight);
  grads.conv2.bias = std::move(c2.bias);
  auto b2 = batchnorm2d_backward(relu_backward(c2.input, ctx.relu2), ctx.bn2);
  grads.bn2.gamma = std::move(b2.gamma);
  grads.bn2.beta = std::move(b2.beta);
  auto c1 = conv2d_backward(b2.input, ctx.conv1);
  grads.conv1.weight = std::move(c1.weight);
  grads.conv1.bias = std::move(c1.bias);
  auto b1 = batchnorm2d_backward(relu_backward(c1.input, ctx.relu1), ctx.bn1);
  grads.bn1.gamma = std::move(b1.gamma);
  grads.bn1.beta = std::move(b1.beta);
  Tensor4<Scalar> grad_x = std::move(b1.input);
  if (ctx.shortcut) {
    auto sc = conv2d_backward(g, *ctx.shortcut);
    grads.shortcut->weight = std::move(sc.weight);
    grads.shortcut->bias = std::move(sc.bias);
    grad_x.data() += sc.input.data();
  } else {
    grad_x.data() += g.data();
  }
  return grad_x;
}

template <typename Scalar>
Tensor4<Scalar> double_conv_forward(DoubleConvParams<Scalar>& p, const Tensor4<Scalar>& x,
                                    DoubleConvContext<Scalar>& ctx) {
  auto [c1, conv1] = conv2d_forward(x, p.conv1);
  auto [r1, relu1] = relu_forward(c1);
  auto [c2, conv2] = conv2d_forward(r1, p.conv2);
  auto [r2, relu2] = relu_forward(c2);
  ctx = DoubleConvContext<Scalar>{std::move(conv1), std::move(relu1), std::move(conv2),
                                  std::move(relu2)};
  return std::move(r2);
}

template <typename Scalar>
Tensor4<Scalar> double_conv_backward(DoubleConvParams<Scalar>& grads,
                                     const Tensor4<Scalar>& grad_y,
                                     const DoubleConvContext<Scalar>& ctx) {
  auto c2 = conv2d_backward(relu_backward(grad_y, ctx.relu2), ctx.conv2);
  grads.conv2.weight = std::move(c2.weight);
  grads.conv2.bias = std::move(c2.bias);
  auto c1 = conv2d_backward(relu_backward(c2.input, ctx.relu1), ctx.conv1);
  grads.conv1.weight = std::move(c1.weight);
  grads.conv1.bias = std::move(c1.bias);
  return std::move(c1.input);
}

void accumulate(auto& slot, auto&& grad) {
  if (slot.empty()) {
    slot = std::move(grad);
  } else {
    slot.data() += grad.data();
  }
}

}  // namespace

template <typename Scalar>
std::pair<Tensor4<Scalar>, ModelContext<Scalar>> model_forward(Model<Scalar>& m,
                                                               const Tensor4<Scalar>& x,
                                                               Mode mode) {
  const ModelGraph& g = m.graph;
  if (x.c() != g.in_channels) {
    throw ShapeError("model_forward: input has " + std::to_string(x.c()) +
                     " channels, model expects " + std::to_string(g.in_channels));
  }
  const Index factor = g.downsampling_factor();
  if (x.h() % factor != 0 || x.w() % factor != 0) {
    throw ShapeError("model_forward: input " + x.shape().str() +
                     " spatial dims must be divisible by " + std::to_string(factor));
  }
  ModelContext<Scalar> ctx;
  ctx.model = &m;
  ctx.mode = mode;
  ctx.input_shape = x.shape();
  ctx.blocks.resize(g.blocks.size());

  std::vector<bool> skip_source(g.blocks.size(), false);
  for (const auto& b : g.blocks) {
    if (b.skip_from >= 0) skip_source[static_cast<std::size_t>(b.skip_from)] = true;
  }
  std::vector<Tensor4<Scalar>> saved(g.blocks.size());

  Tensor4<Scalar> prev = x;
  for (std::size_t k = 0; k < g.blocks.size(); ++k) {
    const BlockSpec& spec = g.blocks[k];
    BlockParams<Scalar>& params = m.blocks[k];
    BlockContext<Scalar>& bctx = ctx.blocks[k];
    Tensor4<Scalar> in;
    switch (spec.input) {
      case BlockInput::direct: in = std::move(prev); break;
      case BlockInput::maxpool: {
        auto [y, c] = maxpool2x_forward(prev);
        in = std::move(y);
        bctx.pool = std::move(c);
        break;
      }
      case BlockInput::upsample_nearest: {
        auto [y, c] = upsample_nearest2x_forward(prev);
        in = std::move(y);
        bctx.upsample = std::move(c);
        break;
      }
      case BlockInput::upconv: {
        auto [y, c] = conv_transpose2x_forward(prev, *params.upconv);
        in = std::move(y);
        bctx.upconv = std::move(c);
        break;
      }
    }
    if (spec.skip_from >= 0) in = concat_channels(in, saved[static_cast<std::size_t>(spec.skip_from)]);

    Tensor4<Scalar> out;
    if (spec.body == BlockBody::residual_unit) {
      bctx.residual.emplace();
      out = residual_forward(*params.residual, g.post_activation, in, mode, *bctx.residual);
    } else {
      bctx.double_conv.emplace();
      out = double_conv_forward(*params.double_conv, in, *bctx.double_conv);
    }
    if (skip_source[k]) saved[k] = out;
    prev = std::move(out);
  }

  auto [logits, head] = conv2d_forward(prev, m.head);
  auto [probs, sig] = sigmoid_forward(logits);
  ctx.head = std::move(head);
  ctx.sigmoid = std::move(sig);
  return {std::move(probs), std::move(ctx)};
}

template <typename Scalar>
ParamGrads<Scalar> model_backward(const Model<Scalar>& m, const Tensor4<Scalar>& grad_probs,
                                  const ModelContext<Scalar>& ctx) {
  if (ctx.model != &m) throw ArgumentError("model_backward: context belongs to another model");
  if (ctx.mode != Mode::train) throw ArgumentError("model_backward: context is not train-mode");
  const ModelGraph& g = m.graph;
  Model<Scalar> grads = make_model<Scalar>(g);

  auto head = conv2d_backward(sigmoid_backward(grad_probs, ctx.sigmoid), ctx.head);
  grads.head.weight = std::move(head.weight);
  grads.head.bias = std::move(head.bias);

  std::vector<Tensor4<Scalar>> out_grad(g.blocks.size());
  out_grad.back() = std::move(head.input);
  for (std::size_t k = g.blocks.size(); k-- > 0;) {
    const BlockSpec& spec = g.blocks[k];
    const BlockContext<Scalar>& bctx = ctx.blocks[k];
    BlockParams<Scalar>& bgrad = grads.blocks[k];
    Tensor4<Scalar> gin = spec.body == BlockBody::residual_unit
                              ? residual_backward(*bgrad.residual, out_grad[k], *bctx.residual)
                              : double_conv_backward(*bgrad.double_conv, out_grad[k],
                                                     *bctx.double_conv);
    out_grad[k] = Tensor4<Scalar>();
    if (spec.skip_from >= 0) {
      const Index split = spec.resampled_channels();
      accumulate(out_grad[static_cast<std::size_t>(spec.skip_from)],
                 slice_channels(gin, split, gin.c()));
      gin = slice_channels(gin, 0, split);
    }
    Tensor4<Scalar> gprev;
    switch (spec.input) {
      case BlockInput::direct: gprev = std::move(gin); break;
      case BlockInput::maxpool: gprev = maxpool2x_backward(gin, *bctx.pool); break;
      case BlockInput::upsample_nearest:
        gprev = upsample_nearest2x_backward(gin, *bctx.upsample);
        break;
      case BlockInput::upconv: {
        auto up = conv_transpose2x_backward(gin, *bctx.upconv);
        bgrad.upconv->weight = std::move(up.weight);
        bgrad.upconv->bias = std::move(up.bias);
        gprev = std::move(up.input);
        break;
      }
    }
    if (k > 0) accumulate(out_grad[k - 1], std::move(gprev));
  }

  ParamGrads<Scalar> out;
  for_each_parameter(grads, [&](const std::string& name, const std::vector<Index>& shape,
                                Vector<Scalar>& values) {
    out.push_back(NamedArray<Scalar>{name, shape, std::move(values)});
  });
  return out;
}

#define VEINSEG_MODEL_INSTANTIATE(S)                                                          \
  template Model<S> make_model<S>(const ModelGraph&);                                         \
  template void initialize<S>(Model<S>&, std::uint64_t);                                      \
  template std::pair<Tensor4<S>, ModelContext<S>> model_forward<S>(Model<S>&,                 \
                                                                   const Tensor4<S>&, Mode);  \
  template ParamGrads<S> model_backward<S>(const Model<S>&, const Tensor4<S>&,                \
                                           const ModelContext<S>&);

VEINSEG_MODEL_INSTANTIATE(float)
VEINSEG_MODEL_INSTANTIATE(double)

}  // namespace veinseg
