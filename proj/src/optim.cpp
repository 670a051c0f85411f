#include "veinseg/optim.hpp"

#include <cmath>
#include <string>

#include "veinseg/rng.hpp"

namespace veinseg {

template <typename Scalar>
void adam_step(std::span<Vector<Scalar>* const> params, std::span<const Vector<Scalar>> grads,
               AdamState<Scalar>& state, double lr) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  if (!(lr > 0)) throw ArgumentError("adam_step: learning rate must be positive");
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Vector<Scalar>::Zero(p->size()));
      state.v.push_back(Vector<Scalar>::Zero(p->size()));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam_step: state/parameter count differs");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->size() != grads[k].size() || state.m[k].size() != grads[k].size()) {
      throw ShapeError("adam_step: size mismatch for parameter " + std::to_string(k));
    }
  }

  state.step += 1;
  const auto& h = state.hyper;
  const double t = static_cast<double>(state.step);
  const auto b1 = static_cast<Scalar>(h.beta1);
  const auto b2 = static_cast<Scalar>(h.beta2);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(h.beta1, t));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(h.beta2, t));
  const auto eps = static_cast<Scalar>(h.eps);
  const auto rate = static_cast<Scalar>(lr);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto m = state.m[k].array();
    auto v = state.v[k].array();
    const auto g = grads[k].array();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    params[k]->array() -= rate * (m / c1) / ((v / c2).sqrt() + eps);
  }
}

template void adam_step<float>(std::span<Vector<float>* const>, std::span<const Vector<float>>,
                               AdamState<float>&, double);
template void adam_step<double>(std::span<Vector<double>* const>, std::span<const Vector<double>>,
                                AdamState<double>&, double);

std::span<const std::size_t> BatchSchedule::batch(std::size_t epoch, std::size_t index) const {
  if (epoch >= epochs.size() || index >= batches_per_epoch()) {
    throw IndexError("batch (" + std::to_string(epoch) + ", " + std::to_string(index) +
                     ") outside schedule");
  }
  return std::span<const std::size_t>(epochs[epoch]).subspan(index * batch_size, batch_size);
}

std::vector<std::size_t> epoch_permutation(std::uint64_t seed, std::size_t epoch,
                                           std::size_t n_samples) {
  SplitMix64 rng(derive_seed(seed, epoch));
  return permutation(n_samples, rng);
}

BatchSchedule make_schedule(std::uint64_t seed, std::size_t n_samples, std::size_t batch_size,
                            std::size_t n_epochs) {
  if (batch_size < 1) throw ArgumentError("make_schedule: batch size must be >= 1");
  if (batch_size > n_samples) {
    throw ArgumentError("make_schedule: batch size " + std::to_string(batch_size) +
                        " exceeds sample count " + std::to_string(n_samples));
  }
  BatchSchedule s{seed, n_samples, batch_size, {}};
  s.epochs.reserve(n_epochs);
  for (std::size_t e = 0; e < n_epochs; ++e) s.epochs.push_back(epoch_permutation(seed, e, n_samples));
  return s;
}

}  // namespace veinseg
