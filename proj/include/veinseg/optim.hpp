#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "veinseg/tensor.hpp"

namespace veinseg {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moments mirror the parameter list; empty until the first step.
template <typename Scalar>
struct AdamState {
  AdamHyper hyper;
  std::uint64_t step = 0;
  std::vector<Vector<Scalar>> m;
  std::vector<Vector<Scalar>> v;
};

/// One bias-corrected Adam update of every parameter:
///   t += 1
///   m = b1*m + (1-b1)*g,   v = b2*v + (1-b2)*g^2
///   p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
template <typename Scalar>
void adam_step(std::span<Vector<Scalar>* const> params, std::span<const Vector<Scalar>> grads,
               AdamState<Scalar>& state, double lr);

// Per-epoch shuffles of [0, n_samples). Epoch e's permutation is
// permutation(n, SplitMix64(derive_seed(seed, e))); the trailing partial
// batch is dropped.
struct BatchSchedule {
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  std::size_t batch_size = 0;
  std::vector<std::vector<std::size_t>> epochs;

  std::size_t batches_per_epoch() const { return n_samples / batch_size; }
  std::span<const std::size_t> batch(std::size_t epoch, std::size_t index) const;
};

std::vector<std::size_t> epoch_permutation(std::uint64_t seed, std::size_t epoch,
                                           std::size_t n_samples);

BatchSchedule make_schedule(std::uint64_t seed, std::size_t n_samples, std::size_t batch_size,
                            std::size_t n_epochs);

}  // namespace veinseg
