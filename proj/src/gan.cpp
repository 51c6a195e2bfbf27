#include "ecg/gan.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "ecg/checkpoint.hpp"
#include "ecg/errors.hpp"
#include "ecg/losses.hpp"
#include "ecg/rng.hpp"

namespace ecg {

namespace {

Tensor constant_like(const Tensor& t, double v) {
  Tensor out(t.shape());
  out.fill(v);
  return out;
}

double mean(const double* d, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += d[i];
  return s / static_cast<double>(n);
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

// ------------------------------------------------------------ Generator --

Generator::Generator(const GanConfig& cfg)
    : cfg_(cfg),
      proj_("gen.proj", cfg.latent_dim, cfg.gen_step_input),
      lstm_("gen.lstm", cfg.gen_step_input, cfg.lstm_hidden),
      head_("gen.head", cfg.lstm_hidden, 1) {}

void Generator::init(Rng& rng) {
  proj_.init(rng);
  lstm_.init(rng);
  head_.init(rng);
}

Tensor Generator::forward(const Tensor& z) {
  if (z.rank() != 2 || z.dim(1) != cfg_.latent_dim) {
    throw ShapeError("generator: expected latent [n," +
                     std::to_string(cfg_.latent_dim) + "], got " +
                     z.shape_str());
  }
  const std::size_t n = z.dim(0), t_steps = kBeatLength;
  const std::size_t p = cfg_.gen_step_input, h = cfg_.lstm_hidden;

  Tensor u = proj_.forward(z);  // [n,P]
  Tensor x({n, t_steps, p});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t t = 0; t < t_steps; ++t) {
      std::memcpy(x.data() + (b * t_steps + t) * p, u.data() + b * p,
                  p * sizeof(double));
    }
  }
  Tensor hidden = lstm_.forward(x, /*return_all_steps=*/true);  // [n,T,H]
  Tensor a = head_.forward(std::move(hidden).reshaped({n * t_steps, h}));
  nn::sigmoid_inplace(a.data(), a.size());
  probs_ = std::move(a).reshaped({n, t_steps});
  return probs_;
}

void Generator::backward(const Tensor& grad_probs) {
  check_same_shape(grad_probs, probs_, "generator backward");
  const std::size_t n = probs_.dim(0), t_steps = kBeatLength;
  const std::size_t p = cfg_.gen_step_input, h = cfg_.lstm_hidden;

  Tensor ga = nn::sigmoid_backward_from_output(probs_, grad_probs);
  Tensor gh = head_.backward(std::move(ga).reshaped({n * t_steps, 1}));
  Tensor gx = lstm_.backward(std::move(gh).reshaped({n, t_steps, h}));

  // the projected latent is broadcast over time, so its gradient is the sum
  // over timesteps
  Tensor gu({n, p});
  for (std::size_t b = 0; b < n; ++b) {
    double* dst = gu.data() + b * p;
    for (std::size_t t = 0; t < t_steps; ++t) {
      const double* src = gx.data() + (b * t_steps + t) * p;
      for (std::size_t j = 0; j < p; ++j) dst[j] += src[j];
    }
  }
  proj_.backward(gu);
}

std::vector<nn::ParamTensor*> Generator::params() {
  return {&proj_.weight, &proj_.bias, &lstm_.weight, &lstm_.bias,
          &head_.weight, &head_.bias};
}

std::vector<const nn::ParamTensor*> Generator::params() const {
  return {&proj_.weight, &proj_.bias, &lstm_.weight, &lstm_.bias,
          &head_.weight, &head_.bias};
}

// -------------------------------------------------------- Discriminator --

Discriminator::Discriminator(const GanConfig& cfg)
    : cfg_(cfg),
      lstm_("dis.lstm", 1, cfg.lstm_hidden),
      head_("dis.head", cfg.lstm_hidden, 1) {}

void Discriminator::init(Rng& rng) {
  lstm_.init(rng);
  head_.init(rng);
}

Tensor Discriminator::forward(const Tensor& x) {
  if (x.rank() != 2 || x.dim(1) != kBeatLength) {
    throw ShapeError("discriminator: expected beats [n," +
                     std::to_string(kBeatLength) + "], got " + x.shape_str());
  }
  const std::size_t n = x.dim(0);
  Tensor h = lstm_.forward(x.reshaped({n, kBeatLength, 1}),
                           /*return_all_steps=*/false);
  Tensor a = head_.forward(h);
  nn::sigmoid_inplace(a.data(), a.size());
  probs_ = std::move(a);
  return probs_;
}

Tensor Discriminator::backward(const Tensor& grad_probs) {
  check_same_shape(grad_probs, probs_, "discriminator backward");
  const std::size_t n = probs_.dim(0);
  Tensor ga = nn::sigmoid_backward_from_output(probs_, grad_probs);
  Tensor gh = head_.backward(ga);
  Tensor gx = lstm_.backward(gh);  // [n,187,1]
  return std::move(gx).reshaped({n, kBeatLength});
}

void Discriminator::set_trainable(bool trainable) {
  lstm_.accumulate_grads = trainable;
  head_.accumulate_grads = trainable;
}

std::vector<nn::ParamTensor*> Discriminator::params() {
  return {&lstm_.weight, &lstm_.bias, &head_.weight, &head_.bias};
}

std::vector<const nn::ParamTensor*> Discriminator::params() const {
  return {&lstm_.weight, &lstm_.bias, &head_.weight, &head_.bias};
}

// -------------------------------------------------------------- GanModel --

GanModel::GanModel(const GanConfig& cfg_in, int cls)
    : cfg(cfg_in), class_id(cls), generator(cfg_in), discriminator(cfg_in) {}

std::vector<nn::ParamTensor*> GanModel::params() {
  auto g = generator.params();
  auto d = discriminator.params();
  g.insert(g.end(), d.begin(), d.end());
  return g;
}

std::vector<const nn::ParamTensor*> GanModel::params() const {
  auto g = generator.params();
  auto d = discriminator.params();
  g.insert(g.end(), d.begin(), d.end());
  return g;
}

GanModel init_gan(const GanConfig& cfg, int class_id) {
  if (cfg.latent_dim == 0 || cfg.lstm_hidden == 0 || cfg.gen_step_input == 0 ||
      cfg.batch_size == 0) {
    throw std::invalid_argument("init_gan: config dimensions must be >= 1");
  }
  GanModel model(cfg, class_id);
  Rng rng(Rng::mix(cfg.seed, kGanInitTag));
  model.generator.init(rng);
  model.discriminator.init(rng);
  return model;
}

Tensor sample_latent(const GanConfig& cfg, std::size_t n, std::uint64_t seed) {
  if (n == 0) {
    throw std::invalid_argument("sample_latent: n must be >= 1");
  }
  Tensor z({n, cfg.latent_dim});
  Rng rng(seed);
  for (double& v : z.values()) v = rng.normal();
  return z;
}

double discriminator_loss(GanModel& model, const Tensor& real_batch,
                          const Tensor& fake_batch) {
  Tensor p_real = model.discriminator.forward(real_batch);
  const double l_real = nn::bce_loss(p_real, constant_like(p_real, 1.0)).value;
  Tensor p_fake = model.discriminator.forward(fake_batch);
  const double l_fake = nn::bce_loss(p_fake, constant_like(p_fake, 0.0)).value;
  return l_real + l_fake;
}

double generator_loss(GanModel& model, const Tensor& fake_batch) {
  Tensor p = model.discriminator.forward(fake_batch);
  return nn::bce_loss(p, constant_like(p, 1.0)).value;
}

DiscUpdateStats discriminator_update(GanModel& model, nn::Adam& opt_d,
                                     const Tensor& real_batch,
                                     std::uint64_t latent_seed) {
  if (real_batch.rank() != 2 || real_batch.dim(0) == 0) {
    throw ShapeError("discriminator_update: real batch must be [n,187], n>=1");
  }
  const std::size_t n = real_batch.dim(0);

  Tensor z = sample_latent(model.cfg, n, latent_seed);
  Tensor fake = model.generator.forward(z);

  // one pass over [real; fake] — per-row results match separate passes
  Tensor x_cat({2 * n, kBeatLength});
  std::memcpy(x_cat.data(), real_batch.data(),
              n * kBeatLength * sizeof(double));
  std::memcpy(x_cat.data() + n * kBeatLength, fake.data(),
              n * kBeatLength * sizeof(double));
  Tensor p = model.discriminator.forward(x_cat);

  Tensor p_real({n, 1}, {p.values().begin(), p.values().begin() + n});
  Tensor p_fake({n, 1}, {p.values().begin() + n, p.values().end()});
  const nn::Loss l_real = nn::bce_loss(p_real, constant_like(p_real, 1.0));
  const nn::Loss l_fake = nn::bce_loss(p_fake, constant_like(p_fake, 0.0));

  Tensor grad({2 * n, 1});
  std::memcpy(grad.data(), l_real.grad.data(), n * sizeof(double));
  std::memcpy(grad.data() + n, l_fake.grad.data(), n * sizeof(double));

  opt_d.zero_grad();
  model.discriminator.backward(grad);
  opt_d.step();

  return DiscUpdateStats{l_real.value + l_fake.value, mean(p_real.data(), n),
                         mean(p_fake.data(), n)};
}

double generator_update(GanModel& model, nn::Adam& opt_g, std::size_t batch,
                        std::uint64_t latent_seed) {
  Tensor z = sample_latent(model.cfg, batch, latent_seed);
  Tensor fake = model.generator.forward(z);
  Tensor p = model.discriminator.forward(fake);
  const nn::Loss loss = nn::bce_loss(p, constant_like(p, 1.0));

  opt_g.zero_grad();
  model.discriminator.set_trainable(false);
  Tensor grad_fake = model.discriminator.backward(loss.grad);
  model.discriminator.set_trainable(true);
  model.generator.backward(grad_fake);
  opt_g.step();
  return loss.value;
}

StepStats train_step(GanModel& model, nn::Adam& opt_g, nn::Adam& opt_d,
                     const Tensor& real_batch, std::uint64_t seed) {
  const DiscUpdateStats d =
      discriminator_update(model, opt_d, real_batch, Rng::mix(seed, 0));
  const double loss_g =
      generator_update(model, opt_g, real_batch.dim(0), Rng::mix(seed, 1));
  return StepStats{d.loss_d, loss_g, d.d_real, d.d_fake};
}

TrainedGan train_gan(const std::vector<Beat>& real_beats, const GanConfig& cfg,
                     int class_id) {
  if (real_beats.size() < 2) {
    throw TrainingError("gan class " + std::to_string(class_id) +
                        ": need at least 2 real beats, have " +
                        std::to_string(real_beats.size()));
  }
  GanModel model = init_gan(cfg, class_id);
  nn::Adam opt_g(model.generator.params(), nn::Adam::for_gan(cfg.lr_g));
  nn::Adam opt_d(model.discriminator.params(), nn::Adam::for_gan(cfg.lr_d));

  const std::size_t n = real_beats.size();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);

  TrainingTrace trace;
  trace.epochs.reserve(cfg.epochs);
  std::uint64_t step_counter = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::mix(cfg.seed, kGanShuffleTagBase + epoch));
    shuffle_rng.shuffle(order);

    EpochStats stats;
    std::size_t steps_this_epoch = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t b = std::min(cfg.batch_size, n - start);
      Tensor batch({b, kBeatLength});
      for (std::size_t i = 0; i < b; ++i) {
        std::memcpy(batch.data() + i * kBeatLength,
                    real_beats[order[start + i]].samples.data(),
                    kBeatLength * sizeof(double));
      }
      const StepStats s = train_step(
          model, opt_g, opt_d, batch,
          Rng::mix(cfg.seed, kGanStepTagBase + step_counter));
      ++step_counter;
      stats.loss_d += s.loss_d;
      stats.loss_g += s.loss_g;
      stats.d_real += s.d_real;
      stats.d_fake += s.d_fake;
      ++steps_this_epoch;
    }
    const double denom = static_cast<double>(steps_this_epoch);
    stats.loss_d /= denom;
    stats.loss_g /= denom;
    stats.d_real /= denom;
    stats.d_fake /= denom;
    if (!std::isfinite(stats.loss_d) || !std::isfinite(stats.loss_g)) {
      throw TrainingError("gan class " + std::to_string(class_id) +
                          ": non-finite loss in epoch " +
                          std::to_string(epoch + 1));
    }
    trace.epochs.push_back(stats);
  }
  return TrainedGan{std::move(model), std::move(trace)};
}

std::vector<Beat> synthesize(GanModel& model, std::size_t n,
                             std::uint64_t seed) {
  std::vector<Beat> out;
  if (n == 0) return out;
  out.reserve(n);
  const Tensor z_all = sample_latent(model.cfg, n, seed);
  const std::size_t chunk = model.cfg.batch_size;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t b = std::min(chunk, n - start);
    Tensor z({b, model.cfg.latent_dim});
    std::memcpy(z.data(), z_all.data() + start * model.cfg.latent_dim,
                b * model.cfg.latent_dim * sizeof(double));
    const Tensor beats = model.generator.forward(z);
    for (std::size_t i = 0; i < b; ++i) {
      Beat beat;
      std::memcpy(beat.samples.data(), beats.data() + i * kBeatLength,
                  kBeatLength * sizeof(double));
      beat.label = model.class_id;
      beat.origin = Origin::Synthetic;
      out.push_back(beat);
    }
  }
  return out;
}

void save_gan(const GanModel& model, const std::string& path) {
  CheckpointMeta meta{
      {"kind", "gan"},
      {"class_id", std::to_string(model.class_id)},
      {"latent_dim", std::to_string(model.cfg.latent_dim)},
      {"lstm_hidden", std::to_string(model.cfg.lstm_hidden)},
      {"gen_step_input", std::to_string(model.cfg.gen_step_input)},
      {"lr_g", format_double(model.cfg.lr_g)},
      {"lr_d", format_double(model.cfg.lr_d)},
      {"batch_size", std::to_string(model.cfg.batch_size)},
      {"epochs", std::to_string(model.cfg.epochs)},
      {"seed", std::to_string(model.cfg.seed)},
  };
  save_checkpoint(path, model.params(), meta);
}

GanModel load_gan(const std::string& path) {
  const CheckpointMeta meta = read_checkpoint_meta(path);
  GanConfig cfg;
  int class_id = 0;
  bool is_gan = false;
  for (const auto& [key, value] : meta) {
    if (key == "kind") {
      is_gan = (value == "gan");
    } else if (key == "class_id") {
      class_id = std::stoi(value);
    } else if (key == "latent_dim") {
      cfg.latent_dim = std::stoul(value);
    } else if (key == "lstm_hidden") {
      cfg.lstm_hidden = std::stoul(value);
    } else if (key == "gen_step_input") {
      cfg.gen_step_input = std::stoul(value);
    } else if (key == "lr_g") {
      cfg.lr_g = std::stod(value);
    } else if (key == "lr_d") {
      cfg.lr_d = std::stod(value);
    } else if (key == "batch_size") {
      cfg.batch_size = std::stoul(value);
    } else if (key == "epochs") {
      cfg.epochs = std::stoul(value);
    } else if (key == "seed") {
      cfg.seed = std::stoull(value);
    }
  }
  if (!is_gan) {
    throw DataError("checkpoint " + path + ": not a gan checkpoint");
  }
  GanModel model(cfg, class_id);
  load_checkpoint(path, model.params());
  return model;
}

void write_trace_csv(const TrainingTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw DataError("cannot open '" + path + "' for writing");
  }
  out << "epoch,loss_d,loss_g,d_real,d_fake\n";
  for (std::size_t i = 0; i < trace.epochs.size(); ++i) {
    const EpochStats& e = trace.epochs[i];
    out << (i + 1) << ',' << format_double(e.loss_d) << ','
        << format_double(e.loss_g) << ',' << format_double(e.d_real) << ','
        << format_double(e.d_fake) << '\n';
  }
}

}  // namespace ecg
