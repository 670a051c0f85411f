#include "veinseg/loss_metrics.hpp"

#include <string>

namespace veinseg {

namespace {

template <typename Scalar>
void check_inputs(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target, Scalar smooth) {
  require_same_shape(pred.shape(), target.shape(), "dice_loss");
  if (!(smooth > Scalar(0))) throw ArgumentError("dice_loss: smooth must be positive");
  for (Index k = 0; k < target.size(); ++k) {
    const Scalar t = target.data()[k];
    if (t != Scalar(0) && t != Scalar(1)) {
      throw ArgumentError("dice_loss: target is not binary at element " + std::to_string(k));
    }
  }
}

// Sums over the flat range [begin, end), accumulated left to right.
template <typename Scalar>
void sums(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target, Index begin, Index end,
          Scalar& inter, Scalar& denom_pred, Scalar& denom_target) {
  inter = denom_pred = denom_target = Scalar(0);
  const Scalar* p = pred.data().data();
  const Scalar* t = target.data().data();
  for (Index k = begin; k < end; ++k) {
    inter += p[k] * t[k];
    denom_pred += p[k];
    denom_target += t[k];
  }
}

}  // namespace

template <typename Scalar>
Scalar dice_loss(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target, Scalar smooth,
                 DiceMode mode) {
  check_inputs(pred, target, smooth);
  const Index groups = mode == DiceMode::global ? 1 : pred.n();
  const Index span = pred.size() / groups;
  Scalar total(0);
  for (Index s = 0; s < groups; ++s) {
    Scalar inter, sp, st;
    sums(pred, target, s * span, (s + 1) * span, inter, sp, st);
    total += Scalar(1) - (Scalar(2) * inter + smooth) / (sp + st + smooth);
  }
  return total / static_cast<Scalar>(groups);
}

template <typename Scalar>
Tensor4<Scalar> dice_loss_grad(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target,
                               Scalar smooth, DiceMode mode) {
  check_inputs(pred, target, smooth);
  const Index groups = mode == DiceMode::global ? 1 : pred.n();
  const Index span = pred.size() / groups;
  Tensor4<Scalar> grad;
  grad.reset(pred.shape());
  for (Index s = 0; s < groups; ++s) {
    Scalar inter, sp, st;
    sums(pred, target, s * span, (s + 1) * span, inter, sp, st);
    const Scalar d = sp + st + smooth;
    const Scalar num = Scalar(2) * inter + smooth;
    const Scalar scale = Scalar(1) / (d * d * static_cast<Scalar>(groups));
    for (Index k = s * span; k < (s + 1) * span; ++k) {
      grad.data()[k] = -(Scalar(2) * target.data()[k] * d - num) * scale;
    }
  }
  return grad;
}

template <typename Scalar>
void DiceTerms::add(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target) {
  require_same_shape(pred.shape(), target.shape(), "DiceTerms::add");
  for (Index k = 0; k < pred.size(); ++k) {
    const double p = static_cast<double>(pred.data()[k]);
    const double t = static_cast<double>(target.data()[k]);
    intersection += p * t;
    pred_sum += p;
    target_sum += t;
  }
}

template <typename Scalar>
ConfusionCounts confusion(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target,
                          double threshold) {
  require_same_shape(pred.shape(), target.shape(), "confusion");
  const auto predicted = (pred.data().array() > static_cast<Scalar>(threshold));
  const auto actual = (target.data().array() > Scalar(0.5));
  ConfusionCounts c;
  c.tp = (predicted && actual).count();
  c.fp = (predicted && !actual).count();
  c.fn = (!predicted && actual).count();
  c.tn = pred.size() - c.tp - c.fp - c.fn;
  return c;
}

Rates metrics(const ConfusionCounts& c) {
  Rates r;
  const std::int64_t total = c.total();
  r.acc = total > 0 ? static_cast<double>(c.tp + c.tn) / static_cast<double>(total) : 0.0;
  if (c.tp + c.fn > 0) r.tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.tn + c.fp > 0) r.tnr = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  return r;
}

template float dice_loss<float>(const Tensor4<float>&, const Tensor4<float>&, float, DiceMode);
template double dice_loss<double>(const Tensor4<double>&, const Tensor4<double>&, double, DiceMode);
template Tensor4<float> dice_loss_grad<float>(const Tensor4<float>&, const Tensor4<float>&, float,
                                              DiceMode);
template Tensor4<double> dice_loss_grad<double>(const Tensor4<double>&, const Tensor4<double>&,
                                                double, DiceMode);
template void DiceTerms::add<float>(const Tensor4<float>&, const Tensor4<float>&);
template void DiceTerms::add<double>(const Tensor4<double>&, const Tensor4<double>&);
template ConfusionCounts confusion<float>(const Tensor4<float>&, const Tensor4<float>&, double);
template ConfusionCounts confusion<double>(const Tensor4<double>&, const Tensor4<double>&, double);

}  // namespace veinseg
