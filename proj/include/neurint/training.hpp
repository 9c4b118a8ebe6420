#pragma once

// Minimax training: endpoint reconstruction plus an adversarial loss on
// trajectory samples, optimized by alternating gradient descent-ascent.

#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "neurint/bundle.hpp"
#include "neurint/data.hpp"
#include "neurint/model.hpp"
#include "neurint/optim.hpp"

namespace neurint {

enum class GeneratorLoss {
  NonSaturating,  // -log D(G(z))
  Saturating,     // log(1 - D(G(z))), the literal minimax fake term
};

std::string to_string(GeneratorLoss loss);
GeneratorLoss generator_loss_from_string(const std::string& name);

struct TrainConfig {
  double lambda_start = 1000.0;
  double lambda_end = 100.0;
  int lambda_decay_epochs = 40;
  int time_samples = 4;  // N per pair
  std::size_t batch_size = 64;
  int epochs = 200;
  /// 0 derives it from the training split: max(1, n_train / batch_size).
  std::size_t steps_per_epoch = 0;
  /// 0 runs epochs * steps_per_epoch steps.
  long total_steps = 0;
  OptimizerConfig generator_optimizer{OptimizerKind::Adam, 1e-3, 0.5, 0.999, 1e-8};
  OptimizerConfig discriminator_optimizer{OptimizerKind::Adam, 1e-3, 0.5, 0.999, 1e-8};
  SolverConfig solver;
  std::uint64_t seed = 1;
  int disc_steps = 1;
  GeneratorLoss generator_loss = GeneratorLoss::NonSaturating;
  /// false drops the adversarial terms entirely (pure endpoint autoencoder).
  bool adversarial = true;

  void validate() const;
  std::size_t resolved_steps_per_epoch(std::size_t n_train) const;
  long resolved_total_steps(std::size_t n_train) const;
};

struct LossReport {
  double reconstruction = 0.0;
  double discriminator = 0.0;
  double generator = 0.0;
  double lambda = 0.0;
  int epoch = 0;
  long step = 0;
};

class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const LossReport& report, const std::string& why);
  const LossReport& report() const { return report_; }

 private:
  LossReport report_;
};

/// Batch mean of |x_S - G(z_0)|^2 + |x_T - G(z_T)|^2.
Tensor reconstruction_loss(const ModelBundle& bundle, const Tensor& source, const Tensor& target,
                           const LatentPath& path);

/// N distinct interior grid nodes (indices in 1..steps-1), uniformly without replacement.
std::vector<std::size_t> sample_timepoints(std::mt19937_64& rng, int count, const SolverConfig& solver);

struct AdversarialLosses {
  Tensor discriminator;  // -mean[log D(x) + log(1 - D(G(z)))]
  Tensor generator;
};

inline constexpr double kLogFloor = 1e-7;

AdversarialLosses adversarial_losses(const Mlp& discriminator, const Tensor& real, const Tensor& fake,
                                     GeneratorLoss kind);

struct ObjectiveTerms {
  Tensor reconstruction;  // L_AE
  Tensor discriminator;   // minimized by D
  Tensor generator;       // adversarial term minimized by G, E, V, f
  Tensor descent;         // lambda * L_AE + generator
};

/// The training objective with the noise draw and time nodes held fixed.
/// `eps` may be null for kinds without a stochastic channel.
ObjectiveTerms training_objective(const ModelBundle& bundle, const Tensor& source, const Tensor& target,
                                  const Tensor& real, const Tensor* eps, std::span<const std::size_t> nodes,
                                  double lambda, const SolverConfig& solver, GeneratorLoss kind);

/// Linear from lambda_start to lambda_end over lambda_decay_epochs, then flat.
double lambda_at(const TrainConfig& config, int epoch);

class Trainer {
 public:
  Trainer(ModelBundle bundle, TrainConfig config);

  /// One discriminator ascent phase followed by one descent step of the
  /// generator side.
  LossReport train_step(const Tensor& source, const Tensor& target, const Tensor& real, int epoch);

  ModelBundle& bundle() { return bundle_; }
  const ModelBundle& bundle() const { return bundle_; }
  const TrainConfig& config() const { return config_; }
  std::mt19937_64& rng() { return rng_; }
  const std::mt19937_64& rng() const { return rng_; }
  Optimizer& generator_optimizer() { return gen_opt_; }
  Optimizer& discriminator_optimizer() { return disc_opt_; }
  const Optimizer& generator_optimizer() const { return gen_opt_; }
  const Optimizer& discriminator_optimizer() const { return disc_opt_; }
  long steps() const { return step_; }
  void set_steps(long steps) { step_ = steps; }

  /// Frozen networks keep their parameters bit-identical.
  void freeze_generator(bool frozen) { generator_frozen_ = frozen; }
  void freeze_discriminator(bool frozen) { discriminator_frozen_ = frozen; }

 private:
  std::vector<Tensor*> descent_parameters();

  ModelBundle bundle_;
  TrainConfig config_;
  std::mt19937_64 rng_;
  Optimizer gen_opt_;
  Optimizer disc_opt_;
  long step_ = 0;
  bool generator_frozen_ = false;
  bool discriminator_frozen_ = false;
};

struct TrainResult {
  ModelBundle bundle;
  std::vector<LossReport> history;
};

using StepCallback = std::function<void(const Trainer&, const LossReport&)>;

/// Runs epochs * steps_per_epoch training steps on the training split.
TrainResult train(ModelBundle initial, const Dataset& data, const TrainConfig& config,
                  const StepCallback& on_step = {});
TrainResult train(const Dataset& data, const BundleConfig& bundle_config, const TrainConfig& config,
                  const StepCallback& on_step = {});

/// Stream of pair and real-item draws used by `train` for a given seed.
std::mt19937_64 training_data_rng(std::uint64_t seed);

/// Trains with an already constructed trainer (for resuming from checkpoints).
std::vector<LossReport> run_training(Trainer& trainer, const Dataset& data, std::mt19937_64& data_rng,
                                     long total_steps, const StepCallback& on_step = {});

}  // namespace neurint
