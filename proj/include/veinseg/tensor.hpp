#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>

#include "veinseg/errors.hpp"

namespace veinseg {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowMatrixMap = Eigen::Map<RowMatrix<Scalar>>;

template <typename Scalar>
using ConstRowMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

enum class Precision { f32, f64 };

struct Shape4 {
  Index n = 0;
  Index c = 0;
  Index h = 0;
  Index w = 0;

  Index size() const { return n * c * h * w; }
  Index plane() const { return h * w; }
  std::string str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
           std::to_string(w);
  }
  friend bool operator==(const Shape4&, const Shape4&) = default;
};

// Throws on a zero/negative dimension or when n*c*h*w overflows Index.
inline Index checked_element_count(const Shape4& s) {
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
    throw ShapeError("zero dimension in tensor shape " + s.str());
  }
  Index count = 1;
  for (Index d : {s.n, s.c, s.h, s.w}) {
    if (__builtin_mul_overflow(count, d, &count)) {
      throw ShapeError("element count overflow for tensor shape " + s.str());
    }
  }
  return count;
}

/// Dense rank-4 array in row-major NCHW order.
///
/// Element (i, j, y, x) lives at ((i*c + j)*h + y)*w + x of data(). Each
/// sample's channels form a contiguous (c, h*w) row-major block, which the
/// layers map directly onto Eigen matrices.
template <typename Scalar>
class Tensor4 {
 public:
  using value_type = Scalar;

  Tensor4() = default;

  Tensor4(const Shape4& shape, Scalar fill) : shape_(shape) {
    data_.setConstant(checked_element_count(shape), fill);
  }

  Tensor4(Index n, Index c, Index h, Index w, Scalar fill = Scalar(0))
      : Tensor4(Shape4{n, c, h, w}, fill) {}

  const Shape4& shape() const { return shape_; }
  Index n() const { return shape_.n; }
  Index c() const { return shape_.c; }
  Index h() const { return shape_.h; }
  Index w() const { return shape_.w; }
  Index size() const { return data_.size(); }
  Index plane() const { return shape_.plane(); }
  bool empty() const { return data_.size() == 0; }

  Index offset(Index i, Index j, Index y, Index x) const {
    return ((i * shape_.c + j) * shape_.h + y) * shape_.w + x;
  }

  // Unchecked element access.
  Scalar operator()(Index i, Index j, Index y, Index x) const { return data_[offset(i, j, y, x)]; }
  Scalar& operator()(Index i, Index j, Index y, Index x) { return data_[offset(i, j, y, x)]; }

  Scalar get(Index i, Index j, Index y, Index x) const {
    check_index(i, j, y, x);
    return data_[offset(i, j, y, x)];
  }

  void set(Index i, Index j, Index y, Index x, Scalar v) {
    check_index(i, j, y, x);
    data_[offset(i, j, y, x)] = v;
  }

  Vector<Scalar>& data() { return data_; }
  const Vector<Scalar>& data() const { return data_; }

  Scalar* sample_data(Index i) { return data_.data() + i * shape_.c * shape_.plane(); }
  const Scalar* sample_data(Index i) const { return data_.data() + i * shape_.c * shape_.plane(); }

  // Sample i viewed as a (c, h*w) matrix.
  RowMatrixMap<Scalar> sample_matrix(Index i) {
    return RowMatrixMap<Scalar>(sample_data(i), shape_.c, shape_.plane());
  }
  ConstRowMatrixMap<Scalar> sample_matrix(Index i) const {
    return ConstRowMatrixMap<Scalar>(sample_data(i), shape_.c, shape_.plane());
  }

  template <typename Other>
  Tensor4<Other> cast() const {
    Tensor4<Other> out;
    out.reset(shape_);
    out.data() = data_.template cast<Other>();
    return out;
  }

  void reset(const Shape4& shape) {
    data_.resize(checked_element_count(shape));
    shape_ = shape;
  }

  void set_zero() { data_.setZero(); }

 private:
  void check_index(Index i, Index j, Index y, Index x) const {
    if (i < 0 || i >= shape_.n || j < 0 || j >= shape_.c || y < 0 || y >= shape_.h || x < 0 ||
        x >= shape_.w) {
      throw IndexError("index (" + std::to_string(i) + "," + std::to_string(j) + "," +
                       std::to_string(y) + "," + std::to_string(x) + ") out of range for " +
                       shape_.str());
    }
  }

  Shape4 shape_{};
  Vector<Scalar> data_;
};

template <typename Scalar>
Tensor4<Scalar> make(Index n, Index c, Index h, Index w, Scalar fill) {
  return Tensor4<Scalar>(Shape4{n, c, h, w}, fill);
}

template <typename Scalar>
Tensor4<Scalar> zeros_like(const Tensor4<Scalar>& t) {
  return Tensor4<Scalar>(t.shape(), Scalar(0));
}

inline void require_same_shape(const Shape4& a, const Shape4& b, const char* what) {
  if (!(a == b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.str() + " vs " + b.str());
  }
}

enum class BinaryOp { add, sub, mul };

template <typename Scalar>
Tensor4<Scalar> map2(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b, BinaryOp op) {
  require_same_shape(a.shape(), b.shape(), "map2");
  Tensor4<Scalar> out;
  out.reset(a.shape());
  switch (op) {
    case BinaryOp::add: out.data() = a.data() + b.data(); break;
    case BinaryOp::sub: out.data() = a.data() - b.data(); break;
    case BinaryOp::mul: out.data() = a.data().cwiseProduct(b.data()); break;
  }
  return out;
}

template <typename Scalar>
Tensor4<Scalar> operator+(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b) {
  return map2(a, b, BinaryOp::add);
}

template <typename Scalar>
Tensor4<Scalar> operator-(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b) {
  return map2(a, b, BinaryOp::sub);
}

enum class Reduction { sum, mean };

// Sequential left-to-right accumulation so results never depend on
// vectorization width.
template <typename Scalar>
Scalar reduce(const Tensor4<Scalar>& t, Reduction kind) {
  Scalar acc(0);
  const Scalar* p = t.data().data();
  for (Index k = 0; k < t.size(); ++k) acc += p[k];
  if (kind == Reduction::mean && t.size() > 0) acc /= static_cast<Scalar>(t.size());
  return acc;
}

template <typename Scalar>
Tensor4<Scalar> concat_channels(const Tensor4<Scalar>& a, const Tensor4<Scalar>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw ShapeError("concat_channels: incompatible shapes " + a.shape().str() + " and " +
                     b.shape().str());
  }
  Tensor4<Scalar> out;
  out.reset(Shape4{a.n(), a.c() + b.c(), a.h(), a.w()});
  const Index pa = a.c() * a.h() * a.w();
  const Index pb = b.c() * b.h() * b.w();
  for (Index i = 0; i < a.n(); ++i) {
    std::copy_n(a.sample_data(i), pa, out.sample_data(i));
    std::copy_n(b.sample_data(i), pb, out.sample_data(i) + pa);
  }
  return out;
}

// Channels [begin, end) of t.
template <typename Scalar>
Tensor4<Scalar> slice_channels(const Tensor4<Scalar>& t, Index begin, Index end) {
  if (begin < 0 || end > t.c() || begin >= end) {
    throw IndexError("slice_channels: range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") invalid for " + t.shape().str());
  }
  Tensor4<Scalar> out;
  out.reset(Shape4{t.n(), end - begin, t.h(), t.w()});
  const Index plane = t.h() * t.w();
  for (Index i = 0; i < t.n(); ++i) {
    std::copy_n(t.sample_data(i) + begin * plane, (end - begin) * plane, out.sample_data(i));
  }
  return out;
}

template <typename Scalar>
bool all_finite(const Tensor4<Scalar>& t) {
  return t.data().allFinite();
}

}  // namespace veinseg
