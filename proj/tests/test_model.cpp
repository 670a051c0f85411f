#include <set>

#include "doctest.h"
#include "gradcheck.hpp"
#include "veinseg/model.hpp"

using namespace veinseg;
using T = Tensor4<double>;

namespace {

// Per-layer parameter sums written out from the architecture description.
std::int64_t residual_count(std::int64_t ci, std::int64_t co, int stride) {
  std::int64_t n = 2 * ci + 9 * ci * co + co + 2 * co + 9 * co * co + co;
  if (ci != co || stride != 1) n += ci * co + co;
  return n;
}

std::int64_t residual_model_count(const std::vector<Index>& w) {
  return residual_count(1, w[0], 1) + residual_count(w[0], w[1], 2) + residual_count(w[1], w[2], 2) +
         residual_count(w[2], w[3], 2) + residual_count(w[3] + w[2], w[2], 1) +
         residual_count(w[2] + w[1], w[1], 1) + residual_count(w[1] + w[0], w[0], 1) + w[0] + 1;
}

std::int64_t double_conv_count(std::int64_t ci, std::int64_t co) { return 9 * ci * co + co + 9 * co * co + co; }

std::int64_t unet_count(const std::vector<Index>& w) {
  std::int64_t n = double_conv_count(1, w[0]);
  for (int k = 1; k < 5; ++k) n += double_conv_count(w[k - 1], w[k]);
  for (int k = 4; k >= 1; --k) n += 4 * w[k] * w[k - 1] + w[k - 1] + double_conv_count(2 * w[k - 1], w[k - 1]);
  return n + w[0] + 1;
}

std::vector<std::string> layout_names(const ModelGraph& g) {
  std::vector<std::string> out;
  for (const auto& p : parameter_layout(g)) out.push_back(p.name);
  return out;
}

T random_input(const Shape4& s, std::uint64_t seed) {
  SplitMix64 rng(seed);
  T x(s, 0.0);
  oracle::fill_uniform(x, rng, 0.0, 1.0);
  return x;
}

}  // namespace

TEST_CASE("proposed graph structure") {
  const auto g = build_proposed(1, {64, 128, 256, 512}, 2);
  REQUIRE(g.blocks.size() == 7);
  CHECK(g.blocks[3].dilation == 2);
  for (std::size_t b = 0; b < 7; ++b) {
    CHECK(g.blocks[b].body == BlockBody::residual_unit);
    if (b != 3) CHECK(g.blocks[b].dilation == 1);
  }
  CHECK(g.blocks[0].stride == 1);
  CHECK(g.blocks[1].stride == 2);
  CHECK(g.blocks[2].stride == 2);
  CHECK(g.head_channels() == 64);
  for (std::size_t b = 4; b < 7; ++b) CHECK(g.blocks[b].input == BlockInput::upsample_nearest);
}

TEST_CASE("dilation changes no parameter shapes") {
  for (auto w : {std::vector<Index>{64, 128, 256, 512}, std::vector<Index>{3, 5, 7, 11}}) {
    const auto a = parameter_layout(build_proposed(1, w, 1));
    const auto b = parameter_layout(build_resunet(1, w));
    const auto c = parameter_layout(build_proposed(1, w, 2));
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == c.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].name == b[k].name);
      CHECK(a[k].shape == b[k].shape);
      CHECK(a[k].shape == c[k].shape);
    }
  }
}

TEST_CASE("parameter counts match the analytic summation") {
  CHECK(count_parameters(build_proposed(1, {64, 128, 256, 512}, 2)) == 8219715);
  CHECK(count_parameters(build_resunet(1, {64, 128, 256, 512})) == 8219715);
  CHECK(count_parameters(build_unet(1, {64, 128, 256, 512, 1024})) == 31030593);
  CHECK(count_parameters(build_proposed(1, {1, 1, 1, 1}, 2)) == 218);
  CHECK(count_parameters(build_unet(1, {2, 4, 8, 16, 32})) == 30531);

  SplitMix64 rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<Index> w(4), u(5);
    for (auto& x : w) x = Index(1 + rng.below(40));
    for (auto& x : u) x = Index(1 + rng.below(40));
    CHECK(count_parameters(build_proposed(1, w, 2)) == residual_model_count(w));
    CHECK(count_parameters(build_resunet(1, w)) == residual_model_count(w));
    CHECK(count_parameters(build_unet(1, u)) == unet_count(u));
  }
  for (auto kind : {ModelKind::proposed, ModelKind::resunet_baseline, ModelKind::unet_baseline}) {
    auto m = make_model<double>(build_model(kind, 1, default_widths(kind), 2));
    std::int64_t n = 0;
    for_each_parameter(m, [&](const std::string&, const std::vector<Index>&, Vector<double>& v) { n += v.size(); });
    CHECK(n == count_parameters(m.graph));
  }
}

TEST_CASE("graph construction errors") {
  CHECK_THROWS_AS(build_proposed(1, {8, 16, 32}, 2), ArgumentError);
  CHECK_THROWS_AS(build_proposed(1, {8, 16, 0, 64}, 2), ArgumentError);
  CHECK_THROWS_AS(build_proposed(1, {8, 16, 32, 64}, 0), ArgumentError);
  CHECK_THROWS_AS(build_unet(1, {8, 16, 32, 64}), ArgumentError);
  CHECK_THROWS_AS(parse_model_kind("vgg"), ArgumentError);
  CHECK(parse_model_kind("resunet") == ModelKind::resunet_baseline);
}

TEST_CASE("forward shapes and probability range") {
  const std::vector<std::pair<ModelGraph, Index>> cases = {
      {build_proposed(1, {4, 8, 16, 32}, 2), 32},
      {build_resunet(1, {4, 8, 16, 32}), 32},
      {build_unet(1, {2, 4, 8, 16, 32}), 32},
      {build_proposed(1, {8, 16, 32, 64}, 2), 64},
  };
  for (const auto& [g, size] : cases) {
    auto m = make_model<double>(g);
    initialize(m, 5);
    for (Mode mode : {Mode::train, Mode::eval}) {
      auto y = model_forward(m, random_input({2, 1, size, size}, 1), mode).first;
      CHECK(y.shape() == Shape4{2, 1, size, size});
      CHECK(y.data().minCoeff() > 0.0);
      CHECK(y.data().maxCoeff() < 1.0);
    }
  }
  auto m = make_model<double>(build_proposed(1, {4, 8, 16, 32}, 2));
  CHECK_THROWS_AS(model_forward(m, T(1, 1, 36, 32), Mode::eval), ShapeError);
  CHECK_THROWS_AS(model_forward(m, T(1, 2, 32, 32), Mode::eval), ShapeError);
}

TEST_CASE("eval mode is pure and per-sample independent") {
  auto m = make_model<double>(build_proposed(1, {4, 8, 16, 32}, 2));
  initialize(m, 12);
  // Non-trivial running statistics.
  model_forward(m, random_input({3, 1, 32, 32}, 4), Mode::train);
  const T x = random_input({1, 1, 32, 32}, 5);
  const auto a = model_forward(m, x, Mode::eval).first;
  const auto b = model_forward(m, x, Mode::eval).first;
  CHECK(a.data() == b.data());

  T pair(2, 1, 32, 32);
  pair.data() << x.data(), x.data();
  const auto p = model_forward(m, pair, Mode::eval).first;
  for (Index k = 0; k < a.size(); ++k) {
    CHECK(std::abs(p.data()[k] - a.data()[k]) <= 1e-12);
    CHECK(std::abs(p.data()[a.size() + k] - a.data()[k]) <= 1e-12);
  }
}

TEST_CASE("initialization is seed-determined") {
  auto a = make_model<double>(build_proposed(1, {4, 8, 16, 32}, 2));
  auto b = make_model<double>(a.graph);
  auto c = make_model<double>(a.graph);
  initialize(a, 1);
  initialize(b, 1);
  initialize(c, 2);
  std::vector<Vector<double>> va, vb, vc;
  for_each_parameter(a, [&](const std::string&, const std::vector<Index>&, Vector<double>& v) { va.push_back(v); });
  for_each_parameter(b, [&](const std::string&, const std::vector<Index>&, Vector<double>& v) { vb.push_back(v); });
  for_each_parameter(c, [&](const std::string&, const std::vector<Index>&, Vector<double>& v) { vc.push_back(v); });
  CHECK(va == vb);
  CHECK_FALSE(va == vc);
}

TEST_CASE("backward gradient names and zero upstream") {
  auto m = make_model<double>(build_proposed(1, {2, 4, 8, 16}, 2));
  initialize(m, 8);
  const T x = random_input({2, 1, 16, 16}, 3);
  auto [y, ctx] = model_forward(m, x, Mode::train);
  auto g0 = model_backward(m, zeros_like(y), ctx);
  for (const auto& g : g0) CHECK(g.values.isZero(0));

  std::vector<std::string> names;
  for (const auto& g : g0) names.push_back(g.name);
  CHECK(names == layout_names(m.graph));
  auto [y2, ctx2] = model_forward(m, x, Mode::train);
  auto g1 = model_backward(m, T(y2.shape(), 1.0), ctx2);
  std::vector<std::string> names2;
  for (const auto& g : g1) names2.push_back(g.name);
  CHECK(names == names2);
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());

  auto [ye, ctxe] = model_forward(m, x, Mode::eval);
  CHECK_THROWS_AS(model_backward(m, ye, ctxe), ArgumentError);
}

TEST_CASE("end-to-end finite differences") {
  CHECK(gradcheck::check_model(build_proposed(1, {1, 2, 4, 8}, 2), {1, 1, 8, 8}, 17) <= 1e-3);
  CHECK(gradcheck::check_model(build_proposed(1, {1, 2, 4, 8}, 2, ResidualActivation::relu), {2, 1, 8, 8}, 18) <=
        1e-3);
  CHECK(gradcheck::check_model(build_resunet(1, {2, 2, 3, 4}), {2, 1, 8, 8}, 19) <= 1e-3);
  CHECK(gradcheck::check_model(build_unet(1, {1, 2, 2, 3, 4}), {1, 1, 16, 16}, 20) <= 1e-3);
}
