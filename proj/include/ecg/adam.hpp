#pragma once

#include <cstdint>
#include <vector>

#include "ecg/layers.hpp"
#include "ecg/tensor.hpp"

namespace ecg::nn {

// Adam with bias correction. One instance owns the moment estimates for a
// fixed list of parameters; step() consumes whatever is in each parameter's
// grad buffer. Fully deterministic: identical (state, params, grads) produce
// bit-identical updates.
class Adam {
 public:
  struct Config {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  // adversarial-training defaults: lower beta1
  static Config for_gan(double lr) { return Config{lr, 0.5, 0.999, 1e-8}; }

  Adam(std::vector<ParamTensor*> params, const Config& cfg);

  void zero_grad();
  void step();

  std::uint64_t steps_taken() const { return t_; }
  const Config& config() const { return cfg_; }

 private:
  std::vector<ParamTensor*> params_;
  Config cfg_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace ecg::nn
