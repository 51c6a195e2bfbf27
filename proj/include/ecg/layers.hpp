#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecg/rng.hpp"
#include "ecg/tensor.hpp"

namespace ecg::nn {

// Elementwise / row-wise activations as pure functions. SoftmaxRows requires
// rank-2 input and uses the shifted (overflow-safe) formulation.
enum class Activation { Sigmoid, Tanh, Relu, SoftmaxRows };

Tensor activation(Activation kind, const Tensor& x);

// One parameter tensor with its gradient buffer of identical shape.
struct ParamTensor {
  std::string name;
  Tensor value;
  Tensor grad;

  ParamTensor() = default;
  ParamTensor(std::string n, std::vector<std::size_t> shape)
      : name(std::move(n)), value(shape), grad(std::move(shape)) {}

  void zero_grad() { grad.fill(0.0); }
};

// Fully connected layer: y = x W + b with x [batch,in], W [in,out], b [out].
// forward caches its input; backward accumulates parameter gradients (unless
// accumulate_grads is off) and returns the gradient w.r.t. the input.
// One training thread per layer instance; the caches are not shared.
class Dense {
 public:
  Dense(std::string name, std::size_t in, std::size_t out);

  // weights uniform in +-1/sqrt(in), biases zero
  void init(Rng& rng);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);

  std::vector<ParamTensor*> params() { return {&weight, &bias}; }

  std::size_t input_size() const { return in_; }
  std::size_t output_size() const { return out_; }

  ParamTensor weight;  // [in,out]
  ParamTensor bias;    // [out]
  bool accumulate_grads = true;

 private:
  std::size_t in_, out_;
  Tensor x_cache_;
};

// ReLU with cached sign mask.
class Relu {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out) const;

 private:
  std::vector<std::uint8_t> mask_;
};

// Single LSTM layer unrolled over time with full backpropagation through
// time. Input is [batch,T,in]; forward returns all hidden states [batch,T,H]
// or the last hidden state [batch,H]. The four gates share one weight matrix
// over the concatenated [x_t, h_{t-1}] with column blocks ordered i, f, o, g.
// Initial hidden and cell states are zero.
class Lstm {
 public:
  Lstm(std::string name, std::size_t input_size, std::size_t hidden_size);

  // weights uniform in +-1/sqrt(in+H), biases zero
  void init(Rng& rng);

  Tensor forward(const Tensor& x, bool return_all_steps);
  // grad_out matches the shape forward returned; returns grad w.r.t. x
  Tensor backward(const Tensor& grad_out);

  // One cell step without caching: h_t, c_t from x_t [batch,in] and the
  // previous state [batch,H] each.
  void step(const Tensor& x_t, const Tensor& h_prev, const Tensor& c_prev,
            Tensor& h_out, Tensor& c_out) const;

  std::vector<ParamTensor*> params() { return {&weight, &bias}; }

  std::size_t input_size() const { return in_; }
  std::size_t hidden_size() const { return hidden_; }

  ParamTensor weight;  // [in+H, 4H]
  ParamTensor bias;    // [4H]
  bool accumulate_grads = true;

 private:
  std::size_t in_, hidden_;
  // forward caches, one [batch,*] block per timestep
  std::size_t batch_ = 0, steps_ = 0;
  bool cached_all_ = false;
  std::vector<double> xh_;      // [T][B, in+H]
  std::vector<double> gates_;   // [T][B, 4H], post-activation
  std::vector<double> cells_;   // [T][B, H]
  std::vector<double> tanh_c_;  // [T][B, H]
  std::vector<double> hidden_states_;  // [T][B, H]
};

// 1D convolution, stride 1, no padding, cross-correlation convention:
// y[b,co,l] = bias[co] + sum_{ci,t} x[b,ci,l+t] * kernel[co,ci,t].
// Output length is L - k + 1. Implemented as im2col + matrix product.
class Conv1d {
 public:
  Conv1d(std::string name, std::size_t in_channels, std::size_t out_channels,
         std::size_t kernel);

  // kernels uniform in +-1/sqrt(in_channels*kernel), biases zero
  void init(Rng& rng);

  Tensor forward(const Tensor& x);          // [B,Cin,L] -> [B,Cout,L-k+1]
  Tensor backward(const Tensor& grad_out);  // -> grad wrt x

  std::vector<ParamTensor*> params() { return {&kernels, &bias}; }

  std::size_t out_length(std::size_t in_length) const {
    return in_length - kernel_ + 1;
  }

  ParamTensor kernels;  // [Cout, Cin, k]
  ParamTensor bias;     // [Cout]
  bool accumulate_grads = true;

 private:
  std::size_t cin_, cout_, kernel_;
  std::size_t b_ = 0, len_ = 0;
  Tensor cols_;     // [B*Lout, Cin*k]
  Tensor y_rows_;   // [B*Lout, Cout] scratch
};

// Non-overlapping max pooling over the last axis; a trailing remainder
// shorter than the window is dropped. Backward routes each gradient to the
// argmax position, first position on ties.
class MaxPool1d {
 public:
  explicit MaxPool1d(std::size_t window);

  Tensor forward(const Tensor& x);          // [B,C,L] -> [B,C,L/window]
  Tensor backward(const Tensor& grad_out) const;

  std::size_t window() const { return window_; }

 private:
  std::size_t window_;
  std::vector<std::size_t> in_shape_;
  std::vector<std::uint32_t> argmax_;
};

// In-place elementwise kernels shared by the layers. Vectorized; tanh is
// computed through exp so both ride the same SIMD path.
void sigmoid_inplace(double* data, std::size_t n);
void tanh_inplace(double* data, std::size_t n);

// grad wrt the pre-sigmoid activation given the sigmoid output p:
// out[i] = grad_p[i] * p[i] * (1 - p[i])
Tensor sigmoid_backward_from_output(const Tensor& p, const Tensor& grad_p);

}  // namespace ecg::nn
