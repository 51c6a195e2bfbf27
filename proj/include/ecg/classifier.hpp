#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecg/dataset.hpp"
#include "ecg/layers.hpp"
#include "ecg/tensor.hpp"

namespace ecg {

// 1D CNN for 5-way beat classification: two conv/relu/maxpool stages, then a
// relu hidden layer and a 5-logit output. With the defaults the widths run
// 187 -> 183 -> 91 -> 87 -> 43, flattening to 43*32 = 1376.
struct CnnConfig {
  std::size_t conv1_filters = 16;
  std::size_t conv1_kernel = 5;
  std::size_t pool1 = 2;
  std::size_t conv2_filters = 32;
  std::size_t conv2_kernel = 5;
  std::size_t pool2 = 2;
  std::size_t dense_hidden = 64;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  double lr = 1e-3;
  std::uint64_t seed = 1;
};

inline constexpr std::uint64_t kCnnInitTag = 11;
inline constexpr std::uint64_t kCnnShuffleTagBase = std::uint64_t{3} << 32;

class CnnModel {
 public:
  explicit CnnModel(const CnnConfig& cfg);

  Tensor forward(const Tensor& x);           // [n,1,187] -> [n,5] logits
  void backward(const Tensor& grad_logits);  // accumulates parameter grads

  std::vector<nn::ParamTensor*> params();
  std::vector<const nn::ParamTensor*> params() const;

  const CnnConfig& config() const { return cfg_; }
  std::size_t flatten_width() const { return flat_; }

  void init(Rng& rng);

 private:
  CnnConfig cfg_;
  nn::Conv1d conv1_;
  nn::Relu relu1_;
  nn::MaxPool1d pool1_;
  nn::Conv1d conv2_;
  nn::Relu relu2_;
  nn::MaxPool1d pool2_;
  nn::Dense fc1_;
  nn::Relu relu3_;
  nn::Dense fc2_;
  std::size_t flat_ = 0;
  std::size_t batch_ = 0;
};

// Seeded, reproducible initialization.
CnnModel init_cnn(const CnnConfig& cfg);

struct TrainedCnn {
  CnnModel model;
  std::vector<double> loss_trace;  // per-epoch mean cross-entropy
};

// cfg.epochs of seeded shuffled batches minimizing cross-entropy with Adam.
// Requires at least two distinct classes. Deterministic given (ds, cfg).
TrainedCnn train_classifier(const Dataset& ds, const CnnConfig& cfg);

// Argmax of the logits per beat, ties toward the lower class id.
std::vector<int> predict(CnnModel& model, const Dataset& ds);

Tensor beats_to_tensor(const Dataset& ds, std::size_t start, std::size_t n);

void save_cnn(const CnnModel& model, const std::string& path);
CnnModel load_cnn(const std::string& path);

void write_loss_trace_csv(const std::vector<double>& trace,
                          const std::string& path);

}  // namespace ecg
