#include "skd/tensor.hpp"

#include "skd/error.hpp"

#include <sstream>
#include <vector>

namespace skd {

std::string Shape::str() const {
  std::ostringstream os;
  os << n << "x" << c << "x" << h << "x" << w;
  return os.str();
}

template <typename Scalar>
Tensor<Scalar>::Tensor(Shape shape, Array data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.numel())
    throw ShapeError("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
                     shape_.str());
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::reshaped(Shape shape) const {
  if (shape.numel() != shape_.numel())
    throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
  return Tensor(shape, data_);
}

template <typename Scalar>
Tensor<Scalar> Tensor<Scalar>::slice_sample(int n) const {
  if (n < 0 || n >= shape_.n) throw ShapeError("sample index out of range for " + shape_.str());
  Shape s = shape_;
  s.n = 1;
  const std::int64_t count = s.numel();
  return Tensor(s, data_.segment(offset(n), count));
}

template <typename Scalar>
Tensor<Scalar> stack_batch(const std::vector<Tensor<Scalar>>& parts) {
  if (parts.empty()) throw ShapeError("cannot stack an empty batch");
  Shape s = parts.front().shape();
  s.n = 0;
  for (const auto& p : parts) {
    const Shape& ps = p.shape();
    if (ps.c != s.c || ps.h != s.h || ps.w != s.w)
      throw ShapeError("stack_batch: " + ps.str() + " incompatible with " + parts.front().shape().str());
    s.n += ps.n;
  }
  Tensor<Scalar> out(s);
  std::int64_t pos = 0;
  for (const auto& p : parts) {
    out.array().segment(pos, p.numel()) = p.array();
    pos += p.numel();
  }
  return out;
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> stack_batch(const std::vector<Tensor<float>>&);
template Tensor<double> stack_batch(const std::vector<Tensor<double>>&);

}  // namespace skd
