#pragma once

#include <span>

#include "ecg/tensor.hpp"

namespace ecg::nn {

// Probabilities are clamped into [kProbEps, 1-kProbEps] before any log.
inline constexpr double kProbEps = 1e-7;

double clamp_probability(double p);

struct Loss {
  double value = 0.0;
  Tensor grad;  // d value / d input, same shape as the input
};

// Mean over all elements of -[t log p + (1-t) log(1-p)]. Gradients are taken
// on the clamped probabilities.
Loss bce_loss(const Tensor& p, const Tensor& target);

// Mean over the batch of -log softmax(logits)[label]. The gradient w.r.t.
// the logits is (softmax - onehot) / batch.
Loss cross_entropy_loss(const Tensor& logits, std::span<const int> labels);

}  // namespace ecg::nn
