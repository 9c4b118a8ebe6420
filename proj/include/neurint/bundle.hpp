#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "neurint/mlp.hpp"

namespace neurint {

/// Latent-path construction used between the encoders and the generator.
enum class InterpolatorKind {
  Neurint,                // second-order ODE with sampled initial velocity
  Lerp,                   // straight line E(x_S) -> E(x_T)
  Slerp,                  // great circle E(x_S) -> E(x_T)
  FirstOrderPlain,        // dz/dt = f(z)
  FirstOrderConditioned,  // dz/dt = f(z, z_C), z_C drawn from the velocity prior
  NeurintPT,              // NeurInt interpolator on a pretrained, frozen generator
};

std::string to_string(InterpolatorKind kind);
/// Accepts CLI names (neurint, lerp, slerp, fo1, fo2, neurint-pt).
InterpolatorKind interpolator_kind_from_string(const std::string& name);
bool is_second_order(InterpolatorKind kind);
bool is_first_order(InterpolatorKind kind);
bool is_closed_form(InterpolatorKind kind);

struct BundleConfig {
  std::size_t data_dim = 2;
  std::size_t latent_dim = 8;
  std::size_t encoder_hidden = 64;
  std::size_t velocity_hidden = 64;
  std::size_t field_hidden = 32;
  std::vector<std::size_t> generator_hidden{64, 64};
  std::vector<std::size_t> discriminator_hidden{64, 64};
  Activation generator_output = Activation::None;
  double leaky_slope = 0.2;
  double field_init_scale = 0.1;
  InterpolatorKind kind = InterpolatorKind::Neurint;

  void validate() const;
  MlpSpec encoder_spec() const;
  MlpSpec velocity_spec() const;
  MlpSpec field_spec() const;
  MlpSpec generator_spec() const;
  MlpSpec discriminator_spec() const;
};

inline constexpr double kLogSigmaMin = -8.0;
inline constexpr double kLogSigmaMax = 4.0;

/// Position encoder E, velocity encoder V, vector field f, generator G and
/// discriminator D.
struct ModelBundle {
  BundleConfig config;
  Mlp encoder;
  Mlp velocity;
  Mlp field;
  Mlp generator;
  Mlp discriminator;

  static ModelBundle create(const BundleConfig& config, std::uint64_t seed);

  std::vector<std::pair<std::string, Mlp*>> networks();
  std::vector<std::pair<std::string, const Mlp*>> networks() const;

  /// G, E, V and f: everything trained by the descent player.
  std::vector<Tensor*> generator_side_parameters();
  std::vector<Tensor*> interpolator_parameters();  // E, V, f
  std::vector<Tensor*> discriminator_parameters();
};

struct VelocityPrior {
  Tensor mean;
  Tensor sigma;
};

/// z0 = E(x).
Tensor encode_position(const ModelBundle& bundle, const Tensor& x);
/// (mu_v, sigma_v) = V(z0 ++ target_feature), sigma_v = exp(clamp(log_sigma, -8, 4)).
VelocityPrior encode_velocity(const ModelBundle& bundle, const Tensor& z0, const Tensor& target_feature);
/// Reparameterized draw mu + eps * sigma.
Tensor sample_initial_velocity(const VelocityPrior& prior, const Tensor& eps);
Tensor decode(const ModelBundle& bundle, const Tensor& z);
Tensor discriminate(const ModelBundle& bundle, const Tensor& x);

/// Standard-normal matrix drawn from `rng`.
Tensor standard_normal(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

}  // namespace neurint
