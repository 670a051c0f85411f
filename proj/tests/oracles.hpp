#pragma once

// Independent reference implementations used only by tests. None of these
// call into the code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "veinseg/layers.hpp"
#include "veinseg/loss_metrics.hpp"
#include "veinseg/rng.hpp"

namespace veinseg::oracle {

template <typename Scalar>
void fill_uniform(Tensor4<Scalar>& t, SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
  for (Index k = 0; k < t.size(); ++k) t.data()[k] = static_cast<Scalar>(rng.uniform(lo, hi));
}

template <typename Scalar>
void fill_uniform(Vector<Scalar>& v, SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
  for (Index k = 0; k < v.size(); ++k) v[k] = static_cast<Scalar>(rng.uniform(lo, hi));
}

// Seven nested loops straight from the definition, padding by bounds test.
inline Tensor4<double> direct_conv2d(const Tensor4<double>& x, const Tensor4<double>& w,
                                     const Vector<double>& bias, int stride, int pad, int dil) {
  const Index kh = w.h(), kw = w.w();
  const Index ho = (x.h() + 2 * pad - dil * (kh - 1) - 1) / stride + 1;
  const Index wo = (x.w() + 2 * pad - dil * (kw - 1) - 1) / stride + 1;
  Tensor4<double> y(x.n(), w.n(), ho, wo);
  for (Index i = 0; i < x.n(); ++i)
    for (Index o = 0; o < w.n(); ++o)
      for (Index oy = 0; oy < ho; ++oy)
        for (Index ox = 0; ox < wo; ++ox) {
          double acc = bias[o];
          for (Index j = 0; j < x.c(); ++j)
            for (Index u = 0; u < kh; ++u)
              for (Index v = 0; v < kw; ++v) {
                const Index iy = oy * stride + u * dil - pad;
                const Index ix = ox * stride + v * dil - pad;
                if (iy >= 0 && iy < x.h() && ix >= 0 && ix < x.w()) acc += w(o, j, u, v) * x(i, j, iy, ix);
              }
          y(i, o, oy, ox) = acc;
        }
  return y;
}

// Undilated convolution written against an explicitly zero-padded copy.
inline Tensor4<double> plain_conv2d(const Tensor4<double>& x, const Tensor4<double>& w,
                                    const Vector<double>& bias, int stride, int pad) {
  Tensor4<double> padded(x.n(), x.c(), x.h() + 2 * pad, x.w() + 2 * pad, 0.0);
  for (Index i = 0; i < x.n(); ++i)
    for (Index j = 0; j < x.c(); ++j)
      for (Index y = 0; y < x.h(); ++y)
        for (Index z = 0; z < x.w(); ++z) padded(i, j, y + pad, z + pad) = x(i, j, y, z);
  const Index ho = (padded.h() - w.h()) / stride + 1;
  const Index wo = (padded.w() - w.w()) / stride + 1;
  Tensor4<double> out(x.n(), w.n(), ho, wo);
  for (Index i = 0; i < x.n(); ++i)
    for (Index o = 0; o < w.n(); ++o)
      for (Index oy = 0; oy < ho; ++oy)
        for (Index ox = 0; ox < wo; ++ox) {
          double acc = bias[o];
          for (Index j = 0; j < x.c(); ++j)
            for (Index u = 0; u < w.h(); ++u)
              for (Index v = 0; v < w.w(); ++v)
                acc += w(o, j, u, v) * padded(i, j, oy * stride + u, ox * stride + v);
          out(i, o, oy, ox) = acc;
        }
  return out;
}

inline Tensor4<double> brute_maxpool(const Tensor4<double>& x) {
  Tensor4<double> y(x.n(), x.c(), x.h() / 2, x.w() / 2);
  for (Index i = 0; i < x.n(); ++i)
    for (Index j = 0; j < x.c(); ++j)
      for (Index a = 0; a < y.h(); ++a)
        for (Index b = 0; b < y.w(); ++b)
          y(i, j, a, b) = std::max({x(i, j, 2 * a, 2 * b), x(i, j, 2 * a, 2 * b + 1),
                                    x(i, j, 2 * a + 1, 2 * b), x(i, j, 2 * a + 1, 2 * b + 1)});
  return y;
}

template <typename Scalar>
ConfusionCounts loop_confusion(const Tensor4<Scalar>& pred, const Tensor4<Scalar>& target,
                               double threshold) {
  ConfusionCounts c;
  for (Index i = 0; i < pred.n(); ++i)
    for (Index j = 0; j < pred.c(); ++j)
      for (Index y = 0; y < pred.h(); ++y)
        for (Index x = 0; x < pred.w(); ++x) {
          const bool p = static_cast<double>(pred(i, j, y, x)) > threshold;
          const bool t = target(i, j, y, x) > Scalar(0.5);
          if (p && t) ++c.tp;
          else if (p) ++c.fp;
          else if (t) ++c.fn;
          else ++c.tn;
        }
  return c;
}

// Linear interpolation of a row at one output index, half-pixel centres.
inline double interp_row(const std::vector<double>& row, std::size_t out_len, std::size_t i) {
  const double scale = static_cast<double>(row.size()) / static_cast<double>(out_len);
  double s = (static_cast<double>(i) + 0.5) * scale - 0.5;
  if (s < 0) s = 0;
  if (s > static_cast<double>(row.size() - 1)) s = static_cast<double>(row.size() - 1);
  const auto lo = static_cast<std::size_t>(s);
  const std::size_t hi = std::min(lo + 1, row.size() - 1);
  const double f = s - static_cast<double>(lo);
  return row[lo] + f * (row[hi] - row[lo]);
}

// Scalar Adam, one variable at a time.
struct ScalarAdam {
  double m = 0, v = 0;
  int t = 0;
  double step(double p, double g, double lr, double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    return p - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

}  // namespace veinseg::oracle
