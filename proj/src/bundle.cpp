#include "neurint/bundle.hpp"

#include <array>

namespace neurint {

std::string to_string(InterpolatorKind kind) {
  switch (kind) {
    case InterpolatorKind::Neurint: return "neurint";
    case InterpolatorKind::Lerp: return "lerp";
    case InterpolatorKind::Slerp: return "slerp";
    case InterpolatorKind::FirstOrderPlain: return "fo1";
    case InterpolatorKind::FirstOrderConditioned: return "fo2";
    case InterpolatorKind::NeurintPT: return "neurint-pt";
  }
  return "neurint";
}

InterpolatorKind interpolator_kind_from_string(const std::string& name) {
  if (name == "neurint") return InterpolatorKind::Neurint;
  if (name == "lerp") return InterpolatorKind::Lerp;
  if (name == "slerp") return InterpolatorKind::Slerp;
  if (name == "fo1" || name == "first_order_plain") return InterpolatorKind::FirstOrderPlain;
  if (name == "fo2" || name == "first_order_conditioned") return InterpolatorKind::FirstOrderConditioned;
  if (name == "neurint-pt" || name == "neurint_pt") return InterpolatorKind::NeurintPT;
  throw std::invalid_argument("unknown interpolation method '" + name + "'");
}

bool is_second_order(InterpolatorKind kind) {
  return kind == InterpolatorKind::Neurint || kind == InterpolatorKind::NeurintPT;
}

bool is_first_order(InterpolatorKind kind) {
  return kind == InterpolatorKind::FirstOrderPlain || kind == InterpolatorKind::FirstOrderConditioned;
}

bool is_closed_form(InterpolatorKind kind) {
  return kind == InterpolatorKind::Lerp || kind == InterpolatorKind::Slerp;
}

void BundleConfig::validate() const {
  if (data_dim == 0 || latent_dim == 0) throw std::invalid_argument("bundle: dimensions must be positive");
  if (!(field_init_scale >= 0.0)) throw std::invalid_argument("bundle: field_init_scale must be >= 0");
}

MlpSpec BundleConfig::encoder_spec() const {
  return {{data_dim, encoder_hidden, latent_dim}, Activation::LeakyRelu, Activation::None, leaky_slope};
}

MlpSpec BundleConfig::velocity_spec() const {
  return {{2 * latent_dim, velocity_hidden, 2 * latent_dim}, Activation::LeakyRelu, Activation::None, leaky_slope};
}

MlpSpec BundleConfig::field_spec() const {
  const std::size_t in = kind == InterpolatorKind::FirstOrderPlain ? latent_dim : 2 * latent_dim;
  return {{in, field_hidden, field_hidden, latent_dim}, Activation::Tanh, Activation::None, leaky_slope};
}

MlpSpec BundleConfig::generator_spec() const {
  MlpSpec s{{latent_dim}, Activation::LeakyRelu, generator_output, leaky_slope};
  s.widths.insert(s.widths.end(), generator_hidden.begin(), generator_hidden.end());
  s.widths.push_back(data_dim);
  return s;
}

MlpSpec BundleConfig::discriminator_spec() const {
  MlpSpec s{{data_dim}, Activation::LeakyRelu, Activation::Sigmoid, leaky_slope};
  s.widths.insert(s.widths.end(), discriminator_hidden.begin(), discriminator_hidden.end());
  s.widths.push_back(1);
  return s;
}

ModelBundle ModelBundle::create(const BundleConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ModelBundle b;
  b.config = config;
  b.encoder = Mlp(config.encoder_spec(), rng);
  b.velocity = Mlp(config.velocity_spec(), rng);
  b.field = Mlp(config.field_spec(), rng, config.field_init_scale);
  b.generator = Mlp(config.generator_spec(), rng);
  b.discriminator = Mlp(config.discriminator_spec(), rng);
  return b;
}

std::vector<std::pair<std::string, Mlp*>> ModelBundle::networks() {
  return {{"encoder", &encoder},
          {"velocity", &velocity},
          {"field", &field},
          {"generator", &generator},
          {"discriminator", &discriminator}};
}

std::vector<std::pair<std::string, const Mlp*>> ModelBundle::networks() const {
  return {{"encoder", &encoder},
          {"velocity", &velocity},
          {"field", &field},
          {"generator", &generator},
          {"discriminator", &discriminator}};
}

namespace {
void append(std::vector<Tensor*>& out, Mlp& net) {
  for (Tensor* p : net.parameters()) out.push_back(p);
}
}  // namespace

std::vector<Tensor*> ModelBundle::generator_side_parameters() {
  std::vector<Tensor*> out;
  append(out, generator);
  append(out, encoder);
  append(out, velocity);
  append(out, field);
  return out;
}

std::vector<Tensor*> ModelBundle::interpolator_parameters() {
  std::vector<Tensor*> out;
  append(out, encoder);
  append(out, velocity);
  append(out, field);
  return out;
}

std::vector<Tensor*> ModelBundle::discriminator_parameters() {
  std::vector<Tensor*> out;
  append(out, discriminator);
  return out;
}

Tensor encode_position(const ModelBundle& bundle, const Tensor& x) {
  if (x.rank() != 2 || x.cols() != bundle.config.data_dim) {
    throw ShapeError("encode_position: expected [batch," + std::to_string(bundle.config.data_dim) + "], got " +
                     shape_str(x.shape()));
  }
  return bundle.encoder.forward(x);
}

VelocityPrior encode_velocity(const ModelBundle& bundle, const Tensor& z0, const Tensor& target_feature) {
  const std::size_t L = bundle.config.latent_dim;
  if (z0.rank() != 2 || z0.cols() != L || target_feature.shape() != z0.shape()) {
    throw ShapeError("encode_velocity: z0 " + shape_str(z0.shape()) + ", target feature " +
                     shape_str(target_feature.shape()) + ", latent dim " + std::to_string(L));
  }
  const std::array<Tensor, 2> parts{z0, target_feature};
  const Tensor h = bundle.velocity.forward(concat_cols(parts));
  VelocityPrior prior;
  prior.mean = slice_cols(h, 0, L);
  prior.sigma = exp(clamp(slice_cols(h, L, L), kLogSigmaMin, kLogSigmaMax));
  return prior;
}

Tensor sample_initial_velocity(const VelocityPrior& prior, const Tensor& eps) {
  if (eps.shape() != prior.mean.shape() || prior.sigma.shape() != prior.mean.shape()) {
    throw ShapeError("sample_initial_velocity: mean " + shape_str(prior.mean.shape()) + ", sigma " +
                     shape_str(prior.sigma.shape()) + ", eps " + shape_str(eps.shape()));
  }
  return add(prior.mean, mul(eps, prior.sigma));
}

Tensor decode(const ModelBundle& bundle, const Tensor& z) { return bundle.generator.forward(z); }

Tensor discriminate(const ModelBundle& bundle, const Tensor& x) { return bundle.discriminator.forward(x); }

Tensor standard_normal(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = n(rng);
  return Tensor({rows, cols}, std::move(v));
}

}  // namespace neurint
