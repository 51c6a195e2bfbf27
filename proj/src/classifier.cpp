#include "ecg/classifier.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "ecg/checkpoint.hpp"
#include "ecg/errors.hpp"
#include "ecg/losses.hpp"
#include "ecg/rng.hpp"

namespace ecg {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

CnnModel::CnnModel(const CnnConfig& cfg)
    : cfg_(cfg),
      conv1_("cnn.conv1", 1, cfg.conv1_filters, cfg.conv1_kernel),
      pool1_(cfg.pool1),
      conv2_("cnn.conv2", cfg.conv1_filters, cfg.conv2_filters,
             cfg.conv2_kernel),
      pool2_(cfg.pool2),
      fc1_("cnn.fc1",
           ((kBeatLength - cfg.conv1_kernel + 1) / cfg.pool1 -
            cfg.conv2_kernel + 1) /
               cfg.pool2 * cfg.conv2_filters,
           cfg.dense_hidden),
      fc2_("cnn.fc2", cfg.dense_hidden, kNumClasses) {
  const std::size_t w1 = kBeatLength - cfg.conv1_kernel + 1;
  const std::size_t w2 = w1 / cfg.pool1;
  const std::size_t w3 = w2 - cfg.conv2_kernel + 1;
  const std::size_t w4 = w3 / cfg.pool2;
  flat_ = w4 * cfg.conv2_filters;
}

void CnnModel::init(Rng& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
  fc1_.init(rng);
  fc2_.init(rng);
}

Tensor CnnModel::forward(const Tensor& x) {
  if (x.rank() != 3 || x.dim(1) != 1 || x.dim(2) != kBeatLength) {
    throw ShapeError("cnn: expected input [n,1," +
                     std::to_string(kBeatLength) + "], got " + x.shape_str());
  }
  batch_ = x.dim(0);
  Tensor h = conv1_.forward(x);
  h = relu1_.forward(h);
  h = pool1_.forward(h);
  h = conv2_.forward(h);
  h = relu2_.forward(h);
  h = pool2_.forward(h);
  h = std::move(h).reshaped({batch_, flat_});
  h = fc1_.forward(h);
  h = relu3_.forward(h);
  return fc2_.forward(h);
}

void CnnModel::backward(const Tensor& grad_logits) {
  Tensor g = fc2_.backward(grad_logits);
  g = relu3_.backward(g);
  g = fc1_.backward(g);
  g = std::move(g).reshaped(
      {batch_, cfg_.conv2_filters, flat_ / cfg_.conv2_filters});
  g = pool2_.backward(g);
  g = relu2_.backward(g);
  g = conv2_.backward(g);
  g = pool1_.backward(g);
  g = relu1_.backward(g);
  conv1_.backward(g);
}

std::vector<nn::ParamTensor*> CnnModel::params() {
  return {&conv1_.kernels, &conv1_.bias, &conv2_.kernels, &conv2_.bias,
          &fc1_.weight,    &fc1_.bias,   &fc2_.weight,    &fc2_.bias};
}

std::vector<const nn::ParamTensor*> CnnModel::params() const {
  return {&conv1_.kernels, &conv1_.bias, &conv2_.kernels, &conv2_.bias,
          &fc1_.weight,    &fc1_.bias,   &fc2_.weight,    &fc2_.bias};
}

CnnModel init_cnn(const CnnConfig& cfg) {
  CnnModel model(cfg);
  Rng rng(Rng::mix(cfg.seed, kCnnInitTag));
  model.init(rng);
  return model;
}

Tensor beats_to_tensor(const Dataset& ds, std::size_t start, std::size_t n) {
  Tensor x({n, 1, kBeatLength});
  for (std::size_t i = 0; i < n; ++i) {
    std::memcpy(x.data() + i * kBeatLength, ds.beats[start + i].samples.data(),
                kBeatLength * sizeof(double));
  }
  return x;
}

TrainedCnn train_classifier(const Dataset& ds, const CnnConfig& cfg) {
  if (ds.empty()) {
    throw TrainingError("classifier: empty training set");
  }
  std::set<int> classes;
  for (const Beat& b : ds.beats) classes.insert(b.label);
  if (classes.size() < 2) {
    throw TrainingError("classifier: training set has " +
                        std::to_string(classes.size()) +
                        " class(es), need at least 2");
  }

  CnnModel model = init_cnn(cfg);
  nn::Adam opt(model.params(), nn::Adam::Config{cfg.lr, 0.9, 0.999, 1e-8});

  std::vector<double> trace;
  trace.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    BatchIterator batches(ds, cfg.batch_size,
                          Rng::mix(cfg.seed, kCnnShuffleTagBase + epoch));
    Batch batch;
    double loss_sum = 0.0;
    std::size_t steps = 0;
    while (batches.next(batch)) {
      const std::size_t n = batch.labels.size();
      Tensor x = std::move(batch.inputs).reshaped({n, 1, kBeatLength});
      Tensor logits = model.forward(x);
      const nn::Loss loss = nn::cross_entropy_loss(logits, batch.labels);
      opt.zero_grad();
      model.backward(loss.grad);
      opt.step();
      loss_sum += loss.value;
      ++steps;
    }
    const double mean_loss = loss_sum / static_cast<double>(steps);
    if (!std::isfinite(mean_loss)) {
      throw TrainingError("classifier: non-finite loss in epoch " +
                          std::to_string(epoch + 1));
    }
    trace.push_back(mean_loss);
  }
  return TrainedCnn{std::move(model), std::move(trace)};
}

std::vector<int> predict(CnnModel& model, const Dataset& ds) {
  std::vector<int> out;
  out.reserve(ds.size());
  const std::size_t chunk = model.config().batch_size;
  for (std::size_t start = 0; start < ds.size(); start += chunk) {
    const std::size_t n = std::min(chunk, ds.size() - start);
    const Tensor logits = model.forward(beats_to_tensor(ds, start, n));
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = logits.data() + i * kNumClasses;
      int best = 0;
      for (int j = 1; j < kNumClasses; ++j) {
        if (row[j] > row[best]) best = j;  // ties keep the lower id
      }
      out.push_back(best);
    }
  }
  return out;
}

void save_cnn(const CnnModel& model, const std::string& path) {
  const CnnConfig& c = model.config();
  CheckpointMeta meta{
      {"kind", "cnn"},
      {"conv1_filters", std::to_string(c.conv1_filters)},
      {"conv1_kernel", std::to_string(c.conv1_kernel)},
      {"pool1", std::to_string(c.pool1)},
      {"conv2_filters", std::to_string(c.conv2_filters)},
      {"conv2_kernel", std::to_string(c.conv2_kernel)},
      {"pool2", std::to_string(c.pool2)},
      {"dense_hidden", std::to_string(c.dense_hidden)},
      {"batch_size", std::to_string(c.batch_size)},
      {"epochs", std::to_string(c.epochs)},
      {"lr", format_double(c.lr)},
      {"seed", std::to_string(c.seed)},
  };
  save_checkpoint(path, model.params(), meta);
}

CnnModel load_cnn(const std::string& path) {
  const CheckpointMeta meta = read_checkpoint_meta(path);
  CnnConfig cfg;
  bool is_cnn = false;
  for (const auto& [key, value] : meta) {
    if (key == "kind") {
      is_cnn = (value == "cnn");
    } else if (key == "conv1_filters") {
      cfg.conv1_filters = std::stoul(value);
    } else if (key == "conv1_kernel") {
      cfg.conv1_kernel = std::stoul(value);
    } else if (key == "pool1") {
      cfg.pool1 = std::stoul(value);
    } else if (key == "conv2_filters") {
      cfg.conv2_filters = std::stoul(value);
    } else if (key == "conv2_kernel") {
      cfg.conv2_kernel = std::stoul(value);
    } else if (key == "pool2") {
      cfg.pool2 = std::stoul(value);
    } else if (key == "dense_hidden") {
      cfg.dense_hidden = std::stoul(value);
    } else if (key == "batch_size") {
      cfg.batch_size = std::stoul(value);
    } else if (key == "epochs") {
      cfg.epochs = std::stoul(value);
    } else if (key == "lr") {
      cfg.lr = std::stod(value);
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    }
  }
  if (!is_cnn) {
    throw DataError("checkpoint " + path + ": not a cnn checkpoint");
  }
  CnnModel model(cfg);
  load_checkpoint(path, model.params());
  return model;
}

void write_loss_trace_csv(const std::vector<double>& trace,
                          const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw DataError("cannot open '" + path + "' for writing");
  }
  out << "epoch,mean_loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << (i + 1) << ',' << format_double(trace[i]) << '\n';
  }
}

}  // namespace ecg
