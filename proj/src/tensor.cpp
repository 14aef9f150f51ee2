#include "unicam/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>
#include <sstream>

#include "unicam/errors.hpp"

namespace unicam {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_.empty()) throw ContractError("tensor shape must have at least one axis");
  if (std::any_of(shape_.begin(), shape_.end(), [](std::size_t s) { return s == 0; }))
    throw ContractError("tensor axes must be positive, got " + shape_str(shape_));
  if (data_.size() != shape_size(shape_))
    throw ContractError("tensor data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_str(shape_));
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
  const auto n = shape_size(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size())
    throw ContractError("axis " + std::to_string(axis) + " out of range for shape " +
                        shape_str(shape_));
  return shape_[axis];
}

std::span<const double> Tensor::row(std::size_t i) const {
  const auto d = row_size();
  return std::span<const double>(data_).subspan(i * d, d);
}

Tensor Tensor::reshape(Shape shape) const& { return Tensor(std::move(shape), data_); }

Tensor Tensor::reshape(Shape shape) && {
  return Tensor(std::move(shape), std::move(data_));
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

Tensor flatten_batch(const Tensor& t) {
  if (t.rank() < 2)
    throw ContractError("flatten_batch requires rank >= 2, got " + shape_str(t.shape()));
  return t.reshape({t.dim(0), t.row_size()});
}

Tensor as_samples(const Tensor& t) {
  if (t.rank() == 1) return t.reshape({t.dim(0), 1});
  return flatten_batch(t);
}

Tensor concat_batches(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_batches needs at least one tensor");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t rows = 0;
  std::vector<double> data;
  for (const auto& p : parts) {
    if (Shape(p.shape().begin() + 1, p.shape().end()) != tail)
      throw ContractError("concat_batches: trailing shape " + shape_str(p.shape()) +
                          " differs from " + shape_str(parts[0].shape()));
    rows += p.dim(0);
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  Shape shape{rows};
  shape.insert(shape.end(), tail.begin(), tail.end());
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace unicam
