#include "neurint/baselines.hpp"

#include <cmath>

namespace neurint {

TrainResult train_variant(InterpolatorKind kind, const Dataset& data, BundleConfig bundle_config,
                          const TrainConfig& config, const StepCallback& on_step) {
  bundle_config.kind = kind;
  return train(data, bundle_config, config, on_step);
}

PretrainSchedule PretrainSchedule::from_budget(long total_steps) {
  const long gan = 3 * total_steps / 8;
  const long encoder = total_steps / 8;
  return {gan, encoder, total_steps - gan - encoder};
}

Tensor sample_prior(const ModelBundle& bundle, std::size_t count, std::mt19937_64& rng) {
  return decode(bundle, standard_normal(count, bundle.config.latent_dim, rng));
}

namespace {

std::vector<Tensor> gradients_for(const Gradients& g, const std::vector<Tensor*>& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (Tensor* p : params) out.push_back(g.of(*p));
  return out;
}

void require_step(Optimizer& opt, const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
                  LossReport& report, const char* what) {
  if (!opt.step(params, grads)) throw TrainingAborted(report, what);
}

}  // namespace

PretrainResult train_neurint_pt(const Dataset& data, BundleConfig bundle_config, const TrainConfig& config,
                                const PretrainSchedule& schedule, const StepCallback& on_step) {
  config.validate();
  bundle_config.kind = InterpolatorKind::NeurintPT;
  ModelBundle bundle = ModelBundle::create(bundle_config, config.seed);
  std::mt19937_64 rng(config.seed * 0x9E3779B97F4A7C15ULL + 0xA11CEULL);
  std::mt19937_64 data_rng(config.seed * 0xD1B54A32D192ED03ULL + 7);
  const std::size_t rows = config.batch_size * static_cast<std::size_t>(config.time_samples);

  PretrainResult result;

  // Phase 1: generator and discriminator as a plain GAN on the fixed prior.
  Optimizer gen_opt(config.generator_optimizer);
  Optimizer disc_opt(config.discriminator_optimizer);
  auto gparams = std::vector<Tensor*>{};
  for (Tensor* p : bundle.generator.parameters()) gparams.push_back(p);
  auto dparams = bundle.discriminator_parameters();
  for (long s = 0; s < schedule.gan_steps; ++s) {
    LossReport report;
    report.step = s;
    const Tensor real = sample_items(data, Support::Train, rows, data_rng);
    const Tensor z = standard_normal(rows, bundle_config.latent_dim, rng);
    Tape gen_tape;
    Tensor fake;
    {
      Recording rec(gen_tape);
      for (Tensor* p : gparams) gen_tape.watch(*p);
      fake = decode(bundle, z);
    }
    {
      Tape disc_tape;
      Recording rec(disc_tape);
      for (Tensor* p : dparams) disc_tape.watch(*p);
      const Tensor loss = adversarial_losses(bundle.discriminator, real, fake.detach(), config.generator_loss).discriminator;
      report.discriminator = loss.item();
      require_step(disc_opt, dparams, gradients_for(disc_tape.backward(loss), dparams), report,
                   "non-finite discriminator gradient");
    }
    {
      Recording rec(gen_tape);
      const Tensor loss = adversarial_losses(bundle.discriminator, real, fake, config.generator_loss).generator;
      report.generator = loss.item();
      require_step(gen_opt, gparams, gradients_for(gen_tape.backward(loss), gparams), report,
                   "non-finite generator gradient");
    }
    result.history.push_back(report);
  }

  // Phase 1b: encoder inverts the frozen generator by pixel MSE.
  Optimizer enc_opt(config.generator_optimizer);
  auto eparams = std::vector<Tensor*>{};
  for (Tensor* p : bundle.encoder.parameters()) eparams.push_back(p);
  for (long s = 0; s < schedule.encoder_steps; ++s) {
    LossReport report;
    report.step = schedule.gan_steps + s;
    const Tensor x = sample_items(data, Support::Train, config.batch_size, data_rng);
    Tape tape;
    Recording rec(tape);
    for (Tensor* p : eparams) tape.watch(*p);
    const Tensor loss = scale(sum(square(sub(x, decode(bundle, encode_position(bundle, x))))),
                              1.0 / static_cast<double>(x.rows()));
    report.reconstruction = loss.item();
    require_step(enc_opt, eparams, gradients_for(tape.backward(loss), eparams), report, "non-finite encoder gradient");
    result.history.push_back(report);
  }
  result.pretrained = bundle;

  // Phase 2: the interpolator learns paths on the frozen latent space.
  Trainer trainer(std::move(bundle), config);
  trainer.freeze_generator(true);
  trainer.freeze_discriminator(true);
  const long offset = schedule.gan_steps + schedule.encoder_steps;
  const std::size_t spe = config.resolved_steps_per_epoch(data.indices(Support::Train).size());
  for (long s = 0; s < schedule.interpolator_steps; ++s) {
    const int epoch = static_cast<int>(static_cast<std::size_t>(s) / spe);
    const PairBatch pairs = sample_pairs(data, Support::Train, config.batch_size, data_rng);
    const Tensor real = sample_items(data, Support::Train, rows, data_rng);
    LossReport report = trainer.train_step(pairs.source, pairs.target, real, epoch);
    report.step += offset;
    result.history.push_back(report);
    if (on_step) on_step(trainer, report);
  }
  result.bundle = std::move(trainer.bundle());
  return result;
}

}  // namespace neurint
