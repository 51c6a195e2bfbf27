#include "ecg/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace ecg::nn {

std::string GradCheckReport::describe() const {
  return "max relative error " + std::to_string(max_rel_error) + " at " +
         worst_slot + "[" + std::to_string(worst_index) + "]";
}

GradCheckReport grad_check(const std::function<double()>& loss,
                           std::span<const GradCheckSlot> slots,
                           double fd_step) {
  GradCheckReport report;
  for (const GradCheckSlot& slot : slots) {
    Tensor& value = *slot.value;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + fd_step;
      const double f_plus = loss();
      value[i] = saved - fd_step;
      const double f_minus = loss();
      value[i] = saved;
      const double numeric = (f_plus - f_minus) / (2.0 * fd_step);
      const double analytic = (*slot.grad)[i];
      const double denom =
          std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      const double rel = std::fabs(analytic - numeric) / denom;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_slot = slot.name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

void require_grad_check(const std::function<double()>& loss,
                        std::span<const GradCheckSlot> slots, double tolerance,
                        double fd_step) {
  const GradCheckReport report = grad_check(loss, slots, fd_step);
  if (!report.passed(tolerance)) {
    throw std::runtime_error("gradient check failed: " + report.describe() +
                             " (tolerance " + std::to_string(tolerance) + ")");
  }
}

}  // namespace ecg::nn
