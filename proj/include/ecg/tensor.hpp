#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ecg {

// Dense row-major tensor of 64-bit reals. Every numeric object in the
// project (beats, parameters, activations, gradients) is carried in one of
// these. The invariant product(shape) == values.size() holds at all times.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);  // zero-filled
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor zeros(std::vector<std::size_t> shape);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  double& operator()(std::size_t i, std::size_t j) {
    return values_[i * shape_[1] + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return values_[i * shape_[1] + j];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return values_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[(i * shape_[1] + j) * shape_[2] + k];
  }

  void fill(double v);
  bool all_finite() const;

  // same data, new shape; element count must match
  Tensor reshaped(std::vector<std::size_t> shape) const&;
  Tensor reshaped(std::vector<std::size_t> shape) &&;

  std::string shape_str() const;

  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

// out = alpha * op(a) x op(b) + beta * out, all operands rank-2.
// op is transpose when the corresponding flag is set. beta is 0 or 1.
void gemm(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b,
          Tensor& out, double beta = 0.0, double alpha = 1.0);

Tensor matmul(const Tensor& a, const Tensor& b);

// throws ShapeError when shapes differ; context goes into the message
void check_same_shape(const Tensor& a, const Tensor& b, const char* context);

std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace ecg
