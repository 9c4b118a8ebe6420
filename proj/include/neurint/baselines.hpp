#pragma once

// Training for the comparison variants: latent-path ablations of the
// interpolator and the decoupled pretrain-then-interpolate model.

#include "neurint/interpolators.hpp"
#include "neurint/training.hpp"

namespace neurint {

/// Same objective as `train`, with the latent path built by `kind`.
TrainResult train_variant(InterpolatorKind kind, const Dataset& data, BundleConfig bundle_config,
                          const TrainConfig& config, const StepCallback& on_step = {});

struct PretrainSchedule {
  long gan_steps = 0;          // phase 1: plain GAN with a standard-normal prior
  long encoder_steps = 0;      // phase 1b: encoder fitted by pixel MSE against the frozen generator
  long interpolator_steps = 0; // phase 2: E, V, f only; G and D frozen

  /// Splits a total step budget: 3/8 GAN, 1/8 encoder fit, the remaining half interpolator.
  static PretrainSchedule from_budget(long total_steps);
};

struct PretrainResult {
  ModelBundle pretrained;  // state at the end of phase 1
  ModelBundle bundle;      // final model
  std::vector<LossReport> history;
};

PretrainResult train_neurint_pt(const Dataset& data, BundleConfig bundle_config, const TrainConfig& config,
                                const PretrainSchedule& schedule, const StepCallback& on_step = {});

/// G(z) with z drawn from the standard-normal prior.
Tensor sample_prior(const ModelBundle& bundle, std::size_t count, std::mt19937_64& rng);

}  // namespace neurint
