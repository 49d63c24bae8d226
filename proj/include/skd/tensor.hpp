#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace skd {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using ArrayX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

// Batch x channels x height x width.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::int64_t numel() const { return std::int64_t(n) * c * h * w; }
  std::int64_t plane() const { return std::int64_t(h) * w; }
  bool same_spatial(const Shape& o) const { return h == o.h && w == o.w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense NCHW tensor backed by a contiguous Eigen array. Each sample can be
/// viewed as a row-major `channels x (height*width)` matrix.
template <typename Scalar>
class Tensor {
 public:
  using Array = ArrayX<Scalar>;
  using SampleMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstSampleMap = Eigen::Map<const RowMatrix<Scalar>>;

  Tensor() = default;
  explicit Tensor(Shape shape) : shape_(shape), data_(Array::Zero(shape.numel())) {}
  Tensor(Shape shape, Scalar fill) : shape_(shape), data_(Array::Constant(shape.numel(), fill)) {}
  Tensor(Shape shape, Array data);

  const Shape& shape() const { return shape_; }
  std::int64_t numel() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Array& array() { return data_; }
  const Array& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  SampleMap sample(int n) { return {data() + offset(n), shape_.c, int(shape_.plane())}; }
  ConstSampleMap sample(int n) const { return {data() + offset(n), shape_.c, int(shape_.plane())}; }

  Scalar* plane(int n, int c) { return data() + offset(n) + std::int64_t(c) * shape_.plane(); }
  const Scalar* plane(int n, int c) const { return data() + offset(n) + std::int64_t(c) * shape_.plane(); }

  Scalar& at(int n, int c, int y, int x) { return plane(n, c)[std::int64_t(y) * shape_.w + x]; }
  Scalar at(int n, int c, int y, int x) const { return plane(n, c)[std::int64_t(y) * shape_.w + x]; }

  void set_zero() { data_.setZero(); }
  bool all_finite() const { return data_.allFinite(); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  // Reinterprets the storage under a new shape with the same element count.
  Tensor reshaped(Shape shape) const;

  // Copies sample `n` out as a batch of one.
  Tensor slice_sample(int n) const;

 private:
  std::int64_t offset(int n) const { return std::int64_t(n) * shape_.c * shape_.plane(); }

  Shape shape_;
  Array data_;
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

// Stacks batch-of-one (or larger) tensors along the batch axis.
template <typename Scalar>
Tensor<Scalar> stack_batch(const std::vector<Tensor<Scalar>>& parts);

}  // namespace skd
