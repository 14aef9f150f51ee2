#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace unicam {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles. Immutable once constructed: kernels
/// build a std::vector and move it in.
class Tensor {
 public:
  Tensor(Shape shape, std::vector<double> data);

  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double value);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const double> data() const noexcept { return data_; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  // Number of elements per leading-axis slice.
  std::size_t row_size() const noexcept { return data_.size() / shape_[0]; }
  std::span<const double> row(std::size_t i) const;

  Tensor reshape(Shape shape) const&;
  Tensor reshape(Shape shape) &&;

  bool all_finite() const noexcept;

  std::vector<double> release() && { return std::move(data_); }

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Bitwise equality of shape and payload (distinguishes -0.0 from 0.0).
bool bitwise_equal(const Tensor& a, const Tensor& b);

/// [n, ...] -> [n, d] with d the product of the trailing axes.
Tensor flatten_batch(const Tensor& t);

/// Sample-matrix view used by the statistics: rank 1 becomes [n, 1],
/// higher ranks are flattened.
Tensor as_samples(const Tensor& t);

/// Concatenates along the leading axis; trailing shapes must agree.
Tensor concat_batches(std::span<const Tensor> parts);

}  // namespace unicam
