#include "ecg/losses.hpp"

#include <algorithm>
#include <cmath>

#include "ecg/errors.hpp"

namespace ecg::nn {

double clamp_probability(double p) {
  return std::min(1.0 - kProbEps, std::max(kProbEps, p));
}

Loss bce_loss(const Tensor& p, const Tensor& target) {
  check_same_shape(p, target, "bce_loss");
  if (p.empty()) {
    throw ShapeError("bce_loss: empty input");
  }
  const std::size_t n = p.size();
  Loss out;
  out.grad = Tensor(p.shape());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pc = clamp_probability(p[i]);
    const double t = target[i];
    sum -= t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc);
    out.grad[i] = (pc - t) / (pc * (1.0 - pc) * static_cast<double>(n));
  }
  out.value = sum / static_cast<double>(n);
  return out;
}

Loss cross_entropy_loss(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2) {
    throw ShapeError("cross_entropy_loss: expected logits [batch,K], got " +
                     logits.shape_str());
  }
  const std::size_t batch = logits.dim(0), k = logits.dim(1);
  if (labels.size() != batch) {
    throw ShapeError("cross_entropy_loss: " + std::to_string(labels.size()) +
                     " labels for batch " + std::to_string(batch));
  }
  for (std::size_t b = 0; b < batch; ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= k) {
      throw DataError("cross_entropy_loss: label " +
                      std::to_string(labels[b]) + " at row " +
                      std::to_string(b) + " outside [0," + std::to_string(k) +
                      ")");
    }
  }

  Loss out;
  out.grad = Tensor(logits.shape());
  double sum = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = logits.data() + b * k;
    double* grow = out.grad.data() + b * k;
    const double m = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - m);
    const double log_z = std::log(z) + m;
    sum += log_z - row[static_cast<std::size_t>(labels[b])];
    for (std::size_t j = 0; j < k; ++j) {
      grow[j] = std::exp(row[j] - log_z) / static_cast<double>(batch);
    }
    grow[static_cast<std::size_t>(labels[b])] -= 1.0 / static_cast<double>(batch);
  }
  out.value = sum / static_cast<double>(batch);
  return out;
}

}  // namespace ecg::nn
