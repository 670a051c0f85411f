#pragma once

#include <cstdint>
#include <optional>

#include "veinseg/tensor.hpp"

namespace veinseg {

// global: one dice over every pixel of the batch. per_sample: mean of the
// per-sample losses.
enum class DiceMode { global, per_sample };

// 1 - (2*sum(pred*target) + smooth) / (sum(pred) + sum(target) + smooth).
// Throws on shape mismatch, a non-binary target or smooth <= 0.
template <typename Scalar>
Scalar dice_loss(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target, Scalar smooth,
                 DiceMode mode = DiceMode::global);

// d loss / d pred[k] = -(2*target[k]*D - (2*I + smooth)) / D^2,
// I = sum(pred*target), D = sum(pred) + sum(target) + smooth.
template <typename Scalar>
Tensor4<Scalar> dice_loss_grad(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target,
                               Scalar smooth, DiceMode mode = DiceMode::global);

// Running sums for a dice computed over several batches.
struct DiceTerms {
  double intersection = 0;
  double pred_sum = 0;
  double target_sum = 0;

  template <typename Scalar>
  void add(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target);
  double loss(double smooth) const {
    return 1.0 - (2.0 * intersection + smooth) / (pred_sum + target_sum + smooth);
  }
};

struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t total() const { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// A pixel is predicted positive iff pred > threshold; target positive iff > 0.5.
template <typename Scalar>
ConfusionCounts confusion(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target,
                          double threshold);

// An empty class leaves its rate undefined (nullopt) instead of reporting 0.
struct Rates {
  double acc = 0;
  std::optional<double> tpr;
  std::optional<double> tnr;
};

Rates metrics(const ConfusionCounts& c);

}  // namespace veinseg
