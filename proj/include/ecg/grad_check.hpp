#pragma once

#include <functional>
#include <span>
#include <string>

#include "ecg/tensor.hpp"

namespace ecg::nn {

// One tensor whose analytic gradient is under test. `value` is perturbed in
// place by the checker; `grad` holds the analytic gradient computed by the
// caller beforehand.
struct GradCheckSlot {
  std::string name;
  Tensor* value;
  const Tensor* grad;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_slot;
  std::size_t worst_index = 0;

  bool passed(double tolerance) const { return max_rel_error < tolerance; }
  std::string describe() const;
};

// Compares the analytic gradients in `slots` against central finite
// differences of `loss` (which must recompute the forward pass from the
// current slot values). Relative error per element is
// |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check(const std::function<double()>& loss,
                           std::span<const GradCheckSlot> slots,
                           double fd_step = 1e-5);

// Convenience: checks and throws std::runtime_error naming the failing
// parameter when the tolerance is exceeded.
void require_grad_check(const std::function<double()>& loss,
                        std::span<const GradCheckSlot> slots, double tolerance,
                        double fd_step = 1e-5);

}  // namespace ecg::nn
