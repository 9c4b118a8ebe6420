#include "neurint/training.hpp"

#include <algorithm>
#include <cmath>

namespace neurint {

std::string to_string(GeneratorLoss loss) {
  return loss == GeneratorLoss::Saturating ? "saturating" : "non_saturating";
}

GeneratorLoss generator_loss_from_string(const std::string& name) {
  if (name == "saturating") return GeneratorLoss::Saturating;
  if (name == "non_saturating" || name == "nonsaturating") return GeneratorLoss::NonSaturating;
  throw std::invalid_argument("unknown generator loss '" + name + "'");
}

void TrainConfig::validate() const {
  solver.validate();
  if (!(lambda_end > 0.0) || !(lambda_start >= lambda_end)) {
    throw std::invalid_argument("train: need lambda_start >= lambda_end > 0");
  }
  if (lambda_decay_epochs < 0) throw std::invalid_argument("train: lambda_decay_epochs must be >= 0");
  if (time_samples < 1 || time_samples > solver.steps - 1) {
    throw std::invalid_argument("train: time_samples must lie in [1, steps-1], got " + std::to_string(time_samples));
  }
  if (batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (total_steps < 0) throw std::invalid_argument("train: total_steps must be >= 0");
  if (disc_steps < 1) throw std::invalid_argument("train: disc_steps must be >= 1");
}

std::size_t TrainConfig::resolved_steps_per_epoch(std::size_t n_train) const {
  if (steps_per_epoch > 0) return steps_per_epoch;
  return std::max<std::size_t>(1, n_train / batch_size);
}

long TrainConfig::resolved_total_steps(std::size_t n_train) const {
  if (total_steps > 0) return total_steps;
  return static_cast<long>(resolved_steps_per_epoch(n_train)) * epochs;
}

TrainingAborted::TrainingAborted(const LossReport& report, const std::string& why)
    : NumericError("training aborted at step " + std::to_string(report.step) + " (epoch " +
                   std::to_string(report.epoch) + "): " + why + "; L_AE=" + std::to_string(report.reconstruction) +
                   " L_D=" + std::to_string(report.discriminator) + " L_G=" + std::to_string(report.generator)),
      report_(report) {}

Tensor reconstruction_loss(const ModelBundle& bundle, const Tensor& source, const Tensor& target,
                           const LatentPath& path) {
  if (source.shape() != target.shape() || source.cols() != bundle.config.data_dim) {
    throw ShapeError("reconstruction_loss: source " + shape_str(source.shape()) + ", target " +
                     shape_str(target.shape()));
  }
  const Tensor start = decode(bundle, path.initial());
  const Tensor end = decode(bundle, path.terminal());
  const Tensor err = add(sum(square(sub(source, start))), sum(square(sub(target, end))));
  return scale(err, 1.0 / static_cast<double>(source.rows()));
}

std::vector<std::size_t> sample_timepoints(std::mt19937_64& rng, int count, const SolverConfig& solver) {
  solver.validate();
  const int interior = solver.steps - 1;
  if (count < 1 || count > interior) {
    throw std::invalid_argument("sample_timepoints: need 1 <= N <= " + std::to_string(interior) + ", got " +
                                std::to_string(count));
  }
  std::vector<std::size_t> pool(static_cast<std::size_t>(interior));
  for (std::size_t k = 0; k < pool.size(); ++k) pool[k] = k + 1;
  for (std::size_t k = 0; k < static_cast<std::size_t>(count); ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
    std::swap(pool[k], pool[pick(rng)]);
  }
  pool.resize(static_cast<std::size_t>(count));
  std::sort(pool.begin(), pool.end());
  return pool;
}

AdversarialLosses adversarial_losses(const Mlp& discriminator, const Tensor& real, const Tensor& fake,
                                     GeneratorLoss kind) {
  if (real.shape() != fake.shape()) {
    throw ShapeError("adversarial_losses: real " + shape_str(real.shape()) + " vs fake " + shape_str(fake.shape()));
  }
  const Tensor d_real = clamp(discriminator.forward(real), kLogFloor, 1.0 - kLogFloor);
  const Tensor d_fake = clamp(discriminator.forward(fake), kLogFloor, 1.0 - kLogFloor);
  const Tensor log_real = log(d_real);
  const Tensor log_not_fake = log(offset(scale(d_fake, -1.0), 1.0));

  AdversarialLosses out;
  out.discriminator = scale(add(mean(log_real), mean(log_not_fake)), -1.0);
  out.generator = kind == GeneratorLoss::Saturating ? mean(log_not_fake) : scale(mean(log(d_fake)), -1.0);
  return out;
}

ObjectiveTerms training_objective(const ModelBundle& bundle, const Tensor& source, const Tensor& target,
                                  const Tensor& real, const Tensor* eps, std::span<const std::size_t> nodes,
                                  double lambda, const SolverConfig& solver, GeneratorLoss kind) {
  std::mt19937_64 unused(0);
  const LatentPath path = LatentPath::build(bundle, source, target, solver, eps, eps ? nullptr : &unused);
  if (path.epsilon() && eps == nullptr) throw std::invalid_argument("training_objective: this kind needs eps");
  std::vector<Tensor> latents;
  latents.reserve(nodes.size());
  for (std::size_t k : nodes) latents.push_back(path.at_grid(k));
  ObjectiveTerms out;
  out.reconstruction = reconstruction_loss(bundle, source, target, path);
  const AdversarialLosses adv = adversarial_losses(bundle.discriminator, real, decode(bundle, concat_rows(latents)), kind);
  out.discriminator = adv.discriminator;
  out.generator = adv.generator;
  out.descent = add(scale(out.reconstruction, lambda), adv.generator);
  return out;
}

double lambda_at(const TrainConfig& config, int epoch) {
  if (epoch < 0) throw std::invalid_argument("lambda_at: negative epoch");
  if (config.lambda_decay_epochs == 0 || epoch >= config.lambda_decay_epochs) return config.lambda_end;
  const double frac = static_cast<double>(epoch) / static_cast<double>(config.lambda_decay_epochs);
  return config.lambda_start + (config.lambda_end - config.lambda_start) * frac;
}

Trainer::Trainer(ModelBundle bundle, TrainConfig config)
    : bundle_(std::move(bundle)),
      config_(std::move(config)),
      rng_(config_.seed * 0x9E3779B97F4A7C15ULL + 0x51ED27F1ULL),
      gen_opt_(config_.generator_optimizer),
      disc_opt_(config_.discriminator_optimizer) {
  config_.validate();
}

std::vector<Tensor*> Trainer::descent_parameters() {
  return generator_frozen_ ? bundle_.interpolator_parameters() : bundle_.generator_side_parameters();
}

LossReport Trainer::train_step(const Tensor& source, const Tensor& target, const Tensor& real, int epoch) {
  LossReport report;
  report.epoch = epoch;
  report.step = step_;
  report.lambda = lambda_at(config_, epoch);

  const std::size_t fake_rows = source.rows() * static_cast<std::size_t>(config_.time_samples);
  if (config_.adversarial && real.rows() != fake_rows) {
    throw ShapeError("train_step: expected " + std::to_string(fake_rows) + " real samples, got " +
                     std::to_string(real.rows()));
  }

  auto params = descent_parameters();
  Tape gen_tape;
  Tensor recon;
  Tensor fake;
  {
    Recording rec(gen_tape);
    for (Tensor* p : params) gen_tape.watch(*p);
    const LatentPath path = LatentPath::build(bundle_, source, target, config_.solver, nullptr, &rng_);
    recon = reconstruction_loss(bundle_, source, target, path);
    if (config_.adversarial) {
      const auto nodes = sample_timepoints(rng_, config_.time_samples, config_.solver);
      std::vector<Tensor> latents;
      latents.reserve(nodes.size());
      for (std::size_t k : nodes) latents.push_back(path.at_grid(k));
      fake = decode(bundle_, concat_rows(latents));
    }
  }
  report.reconstruction = recon.item();

  if (config_.adversarial) {
    const Tensor fake_values = fake.detach();
    if (discriminator_frozen_) {
      report.discriminator =
          adversarial_losses(bundle_.discriminator, real, fake_values, config_.generator_loss).discriminator.item();
    } else {
      auto dparams = bundle_.discriminator_parameters();
      for (int k = 0; k < config_.disc_steps; ++k) {
        Tape disc_tape;
        Recording rec(disc_tape);
        for (Tensor* p : dparams) disc_tape.watch(*p);
        const Tensor loss =
            adversarial_losses(bundle_.discriminator, real, fake_values, config_.generator_loss).discriminator;
        report.discriminator = loss.item();
        if (!std::isfinite(report.discriminator)) throw TrainingAborted(report, "non-finite discriminator loss");
        const Gradients g = disc_tape.backward(loss);
        std::vector<Tensor> grads;
        grads.reserve(dparams.size());
        for (Tensor* p : dparams) grads.push_back(g.of(*p));
        if (!disc_opt_.step(dparams, grads)) throw TrainingAborted(report, "non-finite discriminator gradient");
      }
    }
  }

  Gradients grads;
  {
    Recording rec(gen_tape);
    Tensor total = scale(recon, report.lambda);
    if (config_.adversarial) {
      const Tensor gen = adversarial_losses(bundle_.discriminator, real, fake, config_.generator_loss).generator;
      report.generator = gen.item();
      total = add(total, gen);
    }
    if (!std::isfinite(total.item())) throw TrainingAborted(report, "non-finite generator objective");
    grads = gen_tape.backward(total);
  }
  std::vector<Tensor> gvec;
  gvec.reserve(params.size());
  for (Tensor* p : params) gvec.push_back(grads.of(*p));
  if (!gen_opt_.step(params, gvec)) throw TrainingAborted(report, "non-finite generator gradient");

  ++step_;
  return report;
}

std::vector<LossReport> run_training(Trainer& trainer, const Dataset& data, std::mt19937_64& data_rng,
                                     long total_steps, const StepCallback& on_step) {
  const TrainConfig& cfg = trainer.config();
  const std::size_t spe = cfg.resolved_steps_per_epoch(data.indices(Support::Train).size());
  const std::size_t real_rows = cfg.batch_size * static_cast<std::size_t>(cfg.time_samples);
  std::vector<LossReport> history;
  for (long s = trainer.steps(); s < total_steps; ++s) {
    const int epoch = static_cast<int>(static_cast<std::size_t>(s) / spe);
    const PairBatch pairs = sample_pairs(data, Support::Train, cfg.batch_size, data_rng);
    const Tensor real = sample_items(data, Support::Train, real_rows, data_rng);
    history.push_back(trainer.train_step(pairs.source, pairs.target, real, epoch));
    if (on_step) on_step(trainer, history.back());
  }
  return history;
}

std::mt19937_64 training_data_rng(std::uint64_t seed) { return std::mt19937_64(seed * 0xD1B54A32D192ED03ULL + 7); }

TrainResult train(ModelBundle initial, const Dataset& data, const TrainConfig& config, const StepCallback& on_step) {
  config.validate();
  if (data.n < 2) throw std::invalid_argument("train: dataset needs at least 2 items");
  if (initial.config.data_dim != data.dim()) {
    throw ShapeError("train: bundle data dim " + std::to_string(initial.config.data_dim) + " vs dataset dim " +
                     std::to_string(data.dim()));
  }
  Trainer trainer(std::move(initial), config);
  std::mt19937_64 data_rng = training_data_rng(config.seed);
  const long total = config.resolved_total_steps(data.indices(Support::Train).size());
  auto history = run_training(trainer, data, data_rng, total, on_step);
  return {std::move(trainer.bundle()), std::move(history)};
}

TrainResult train(const Dataset& data, const BundleConfig& bundle_config, const TrainConfig& config,
                  const StepCallback& on_step) {
  return train(ModelBundle::create(bundle_config, config.seed), data, config, on_step);
}

}  // namespace neurint
