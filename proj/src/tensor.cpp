#include "ecg/tensor.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>

#include "ecg/errors.hpp"

namespace ecg {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

using MatMap = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                   Eigen::Dynamic,
                                                   Eigen::RowMajor>>;

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_product(shape_) != values_.size()) {
    throw ShapeError("tensor shape " + shape_to_string(shape_) +
                     " does not match value count " +
                     std::to_string(values_.size()));
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  return Tensor(std::move(shape));
}

void Tensor::fill(double v) {
  std::fill(values_.begin(), values_.end(), v);
}

bool Tensor::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const& {
  if (shape_product(shape) != values_.size()) {
    throw ShapeError("cannot reshape " + shape_str() + " to " +
                     shape_to_string(shape));
  }
  return Tensor(std::move(shape), values_);
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) && {
  if (shape_product(shape) != values_.size()) {
    throw ShapeError("cannot reshape " + shape_str() + " to " +
                     shape_to_string(shape));
  }
  return Tensor(std::move(shape), std::move(values_));
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* context) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(context) + ": shape mismatch " +
                     a.shape_str() + " vs " + b.shape_str());
  }
}

void gemm(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b,
          Tensor& out, double beta, double alpha) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("gemm: operands must be rank-2, got " + a.shape_str() +
                     " and " + b.shape_str());
  }
  const std::size_t m = trans_a ? a.dim(1) : a.dim(0);
  const std::size_t k = trans_a ? a.dim(0) : a.dim(1);
  const std::size_t kb = trans_b ? b.dim(1) : b.dim(0);
  const std::size_t n = trans_b ? b.dim(0) : b.dim(1);
  if (k != kb) {
    throw ShapeError("gemm: inner dimensions disagree, " + a.shape_str() +
                     (trans_a ? "^T" : "") + " x " + b.shape_str() +
                     (trans_b ? "^T" : ""));
  }
  if (out.rank() != 2 || out.dim(0) != m || out.dim(1) != n) {
    if (beta != 0.0) {
      throw ShapeError("gemm: accumulate target has shape " + out.shape_str() +
                       " but product is [" + std::to_string(m) + "," +
                       std::to_string(n) + "]");
    }
    out = Tensor({m, n});
  }

  ConstMatMap ma(a.data(), static_cast<Eigen::Index>(a.dim(0)),
                 static_cast<Eigen::Index>(a.dim(1)));
  ConstMatMap mb(b.data(), static_cast<Eigen::Index>(b.dim(0)),
                 static_cast<Eigen::Index>(b.dim(1)));
  MatMap mo(out.data(), static_cast<Eigen::Index>(m),
            static_cast<Eigen::Index>(n));

  auto assign = [&](const auto& prod) {
    if (beta == 0.0) {
      mo.noalias() = alpha * prod;
    } else {
      mo.noalias() += alpha * prod;
    }
  };
  if (!trans_a && !trans_b) {
    assign(ma * mb);
  } else if (trans_a && !trans_b) {
    assign(ma.transpose() * mb);
  } else if (!trans_a && trans_b) {
    assign(ma * mb.transpose());
  } else {
    assign(ma.transpose() * mb.transpose());
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tensor out;
  gemm(a, false, b, false, out);
  return out;
}

}  // namespace ecg
