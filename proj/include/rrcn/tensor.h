#ifndef RRCN_TENSOR_H_
#define RRCN_TENSOR_H_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rrcn {

using Shape = std::vector<std::size_t>;

std::size_t ShapeSize(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Thrown when operand shapes do not conform to an op's shape rule.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a NaN or Inf reaches an operation boundary.
class NumericError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Dense row-major array of doubles. A rank-0 tensor holds one scalar.
class Tensor {
 public:
  Tensor() : data_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value) { return Tensor(Shape{}, {value}); }
  static Tensor Vector(std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const;

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  // Row-major accessors for rank 2 and rank 3 tensors; unchecked.
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * shape_[1] + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * shape_[1] + j];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t l) const {
    return data_[(i * shape_[1] + j) * shape_[2] + l];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t l) {
    return data_[(i * shape_[1] + j) * shape_[2] + l];
  }

  // Value of a single-element tensor.
  double item() const;

  Tensor Reshape(Shape shape) const;
  bool AllFinite() const;
  void Fill(double value);

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

}  // namespace rrcn

#endif  // RRCN_TENSOR_H_
