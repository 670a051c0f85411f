#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "veinseg/optim.hpp"

using namespace veinseg;

namespace {

void step(std::vector<Vector<double>>& params, const std::vector<Vector<double>>& grads,
          AdamState<double>& st, double lr) {
  std::vector<Vector<double>*> ptrs;
  for (auto& p : params) ptrs.push_back(&p);
  adam_step<double>(ptrs, grads, st, lr);
}

}  // namespace

TEST_CASE("adam examples") {
  std::vector<Vector<double>> p{Vector<double>::Constant(3, 0.5)};
  AdamState<double> st;
  step(p, {Vector<double>::Zero(3)}, st, 1e-3);
  CHECK(p[0] == Vector<double>::Constant(3, 0.5));

  std::vector<Vector<double>> q{Vector<double>::Zero(1)};
  AdamState<double> st2;
  step(q, {Vector<double>::Ones(1)}, st2, 1e-4);
  CHECK(std::abs(q[0][0] + 1e-4) <= 1e-9);
  CHECK(st2.step == 1);
}

TEST_CASE("adam matches the scalar reference over several steps") {
  SplitMix64 rng(17);
  std::vector<Vector<double>> p{Vector<double>(4), Vector<double>(2)};
  oracle::fill_uniform(p[0], rng);
  oracle::fill_uniform(p[1], rng);
  std::vector<double> ref;
  for (auto& v : p)
    for (Index k = 0; k < v.size(); ++k) ref.push_back(v[k]);
  std::vector<oracle::ScalarAdam> ref_state(ref.size());
  AdamState<double> st;
  for (int t = 0; t < 5; ++t) {
    std::vector<Vector<double>> g{Vector<double>(4), Vector<double>(2)};
    oracle::fill_uniform(g[0], rng);
    oracle::fill_uniform(g[1], rng);
    step(p, g, st, 1e-2);
    std::size_t k = 0;
    for (auto& v : g)
      for (Index j = 0; j < v.size(); ++j, ++k) ref[k] = ref_state[k].step(ref[k], v[j], 1e-2);
  }
  std::size_t k = 0;
  for (auto& v : p)
    for (Index j = 0; j < v.size(); ++j, ++k) CHECK(std::abs(v[j] - ref[k]) <= 1e-15);
}

TEST_CASE("adam drives a quadratic toward its minimum") {
  std::vector<Vector<double>> p{Vector<double>::Constant(1, 1.0)};
  AdamState<double> st;
  double last = 1.0;
  for (int t = 0; t < 50; ++t) {
    step(p, {Vector<double>::Constant(1, 2 * p[0][0])}, st, 1e-2);
    CHECK(std::abs(p[0][0]) < std::abs(last) + 1e-15);
    last = p[0][0];
  }
  CHECK(last < 0.6);
}

TEST_CASE("adam errors") {
  std::vector<Vector<double>> p{Vector<double>::Zero(2)};
  AdamState<double> st;
  CHECK_THROWS_AS(step(p, {Vector<double>::Zero(3)}, st, 1e-3), ShapeError);
  CHECK_THROWS_AS(step(p, {Vector<double>::Zero(2), Vector<double>::Zero(2)}, st, 1e-3), ShapeError);
  CHECK_THROWS_AS(step(p, {Vector<double>::Zero(2)}, st, -1.0), ArgumentError);
}

TEST_CASE("batch schedule") {
  const auto a = make_schedule(3, 600, 16, 4);
  const auto b = make_schedule(3, 600, 16, 4);
  CHECK(a.batches_per_epoch() == 37);
  CHECK(a.epochs == b.epochs);
  std::vector<std::size_t> iota(600);
  std::iota(iota.begin(), iota.end(), 0);
  for (std::size_t e = 0; e < 4; ++e) {
    auto perm = a.epochs[e];
    REQUIRE(perm.size() == 600);
    std::sort(perm.begin(), perm.end());
    CHECK(perm == iota);
    CHECK(a.batch(e, 36).size() == 16);
  }
  CHECK(a.epochs[0] != a.epochs[1]);
  CHECK(epoch_permutation(3, 2, 600) == a.epochs[2]);
  CHECK_THROWS_AS(a.batch(0, 37), IndexError);
  CHECK_THROWS_AS(make_schedule(3, 10, 11, 1), ArgumentError);
  CHECK_THROWS_AS(make_schedule(3, 10, 0, 1), ArgumentError);
}
