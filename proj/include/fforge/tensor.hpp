#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace fforge {

/// NCHW extent of a tensor.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  [[nodiscard]] std::ptrdiff_t size() const {
    return static_cast<std::ptrdiff_t>(n) * c * h * w;
  }
  [[nodiscard]] std::ptrdiff_t plane() const { return static_cast<std::ptrdiff_t>(h) * w; }
  [[nodiscard]] std::ptrdiff_t sample() const { return c * plane(); }

  friend bool operator==(const Shape&, const Shape&) = default;
};

inline std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
         std::to_string(s.w) + ")";
}

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense row-major NCHW array. The storage is an Eigen column array so that
/// elementwise work stays in Eigen expressions.
template <typename Scalar>
struct Tensor {
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using PlaneMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstPlaneMap = Eigen::Map<const RowMatrix<Scalar>>;

  Shape shape;
  Array data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(s), data(Array::Zero(s.size())) {}
  Tensor(Shape s, Scalar fill) : shape(s), data(Array::Constant(s.size(), fill)) {}

  [[nodiscard]] std::ptrdiff_t size() const { return data.size(); }
  [[nodiscard]] bool empty() const { return data.size() == 0; }

  Scalar& at(int n, int c, int y, int x) {
    return data[((static_cast<std::ptrdiff_t>(n) * shape.c + c) * shape.h + y) * shape.w + x];
  }
  Scalar at(int n, int c, int y, int x) const {
    return data[((static_cast<std::ptrdiff_t>(n) * shape.c + c) * shape.h + y) * shape.w + x];
  }

  /// Sample `n` viewed as a (channels, height*width) matrix.
  PlaneMap sample(int n) {
    return PlaneMap(data.data() + n * shape.sample(), shape.c, shape.plane());
  }
  ConstPlaneMap sample(int n) const {
    return ConstPlaneMap(data.data() + n * shape.sample(), shape.c, shape.plane());
  }

  void set_zero() { data.setZero(); }
};

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  Tensor<To> out;
  out.shape = t.shape;
  out.data = t.data.template cast<To>();
  return out;
}

inline void require_shape(const Shape& got, const Shape& want, const char* what) {
  if (!(got == want)) {
    throw std::invalid_argument(std::string(what) + ": shape " + to_string(got) + " != " +
                                to_string(want));
  }
}

}  // namespace fforge
