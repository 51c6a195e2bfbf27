#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ecg/adam.hpp"
#include "ecg/dataset.hpp"
#include "ecg/layers.hpp"
#include "ecg/tensor.hpp"

namespace ecg {

// One LSTM-GAN per heartbeat class. The generator projects a latent vector
// and feeds it to an LSTM at every timestep; a shared per-step sigmoid head
// emits the 187 samples. The discriminator reads a beat one sample per step
// and scores realness from its final hidden state.
struct GanConfig {
  std::size_t latent_dim = 50;
  std::size_t lstm_hidden = 64;
  std::size_t gen_step_input = 32;  // width of the projected latent input
  double lr_g = 2e-4;
  double lr_d = 2e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 200;
  std::uint64_t seed = 1;
};

// Seed stream tags used by the GAN (see Rng::mix): parameter init, one
// shuffle per epoch, one latent pair per training step.
inline constexpr std::uint64_t kGanInitTag = 1;
inline constexpr std::uint64_t kGanShuffleTagBase = std::uint64_t{1} << 32;
inline constexpr std::uint64_t kGanStepTagBase = std::uint64_t{2} << 32;

class Generator {
 public:
  explicit Generator(const GanConfig& cfg);

  void init(Rng& rng);  // order: projection, lstm, head

  Tensor forward(const Tensor& z);         // [n,latent] -> [n,187] in (0,1)
  void backward(const Tensor& grad_probs);  // accumulates parameter grads

  std::vector<nn::ParamTensor*> params();
  std::vector<const nn::ParamTensor*> params() const;

 private:
  GanConfig cfg_;
  nn::Dense proj_;
  nn::Lstm lstm_;
  nn::Dense head_;
  Tensor probs_;
};

class Discriminator {
 public:
  explicit Discriminator(const GanConfig& cfg);

  void init(Rng& rng);  // order: lstm, head

  Tensor forward(const Tensor& x);         // [n,187] -> [n,1] in (0,1)
  Tensor backward(const Tensor& grad_probs);  // returns grad wrt the input

  // With trainable off, backward still propagates input gradients but does
  // not touch the parameter gradient buffers.
  void set_trainable(bool trainable);

  std::vector<nn::ParamTensor*> params();
  std::vector<const nn::ParamTensor*> params() const;

 private:
  GanConfig cfg_;
  nn::Lstm lstm_;
  nn::Dense head_;
  Tensor probs_;
};

struct GanModel {
  GanModel(const GanConfig& cfg, int class_id);

  GanConfig cfg;
  int class_id;
  Generator generator;
  Discriminator discriminator;

  std::vector<nn::ParamTensor*> params();
  std::vector<const nn::ParamTensor*> params() const;
};

// Seeded initialization; equal (cfg.seed, class_id) give bit-identical
// parameters.
GanModel init_gan(const GanConfig& cfg, int class_id);

// [n, latent_dim] of i.i.d. standard normal draws.
Tensor sample_latent(const GanConfig& cfg, std::size_t n, std::uint64_t seed);

// Forward-only loss evaluations: bce(D(real),1) + bce(D(fake),0) and
// bce(D(fake),1) respectively.
double discriminator_loss(GanModel& model, const Tensor& real_batch,
                          const Tensor& fake_batch);
double generator_loss(GanModel& model, const Tensor& fake_batch);

struct DiscUpdateStats {
  double loss_d = 0.0;
  double d_real = 0.0;  // mean D(x) over the real half
  double d_fake = 0.0;  // mean D(G(z)) over the fake half
};

// One discriminator step on fresh fakes; generator parameters untouched.
DiscUpdateStats discriminator_update(GanModel& model, nn::Adam& opt_d,
                                     const Tensor& real_batch,
                                     std::uint64_t latent_seed);

// One generator step on fresh fakes with the discriminator frozen; returns
// the generator loss before the update. Discriminator bytes are unchanged.
double generator_update(GanModel& model, nn::Adam& opt_g, std::size_t batch,
                        std::uint64_t latent_seed);

struct StepStats {
  double loss_d = 0.0;
  double loss_g = 0.0;
  double d_real = 0.0;
  double d_fake = 0.0;
};

// One discriminator update followed by one generator update, each on its own
// fresh latent batch. Losses are the pre-update values.
StepStats train_step(GanModel& model, nn::Adam& opt_g, nn::Adam& opt_d,
                     const Tensor& real_batch, std::uint64_t seed);

struct EpochStats {
  double loss_d = 0.0;
  double loss_g = 0.0;
  double d_real = 0.0;
  double d_fake = 0.0;
};

// Per-epoch means over the training steps; d_real/d_fake come from the
// discriminator-update phase.
struct TrainingTrace {
  std::vector<EpochStats> epochs;
};

struct TrainedGan {
  GanModel model;
  TrainingTrace trace;
};

// Trains one GAN on the real beats of a single class over seeded shuffled
// batches. Deterministic given (beats, cfg, class_id).
TrainedGan train_gan(const std::vector<Beat>& real_beats, const GanConfig& cfg,
                     int class_id);

// n synthetic beats labeled with the model's class, origin Synthetic.
std::vector<Beat> synthesize(GanModel& model, std::size_t n,
                             std::uint64_t seed);

// Checkpoint I/O; the file carries the config in its metadata so load_gan
// can rebuild the model without external configuration.
void save_gan(const GanModel& model, const std::string& path);
GanModel load_gan(const std::string& path);

void write_trace_csv(const TrainingTrace& trace, const std::string& path);

}  // namespace ecg
