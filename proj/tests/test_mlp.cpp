#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "neurint/bundle.hpp"
#include "neurint/mlp.hpp"

using namespace neurint;
using neurint::testing::check_gradients;
using neurint::testing::uniform;

namespace {

BundleConfig small_config() {
  BundleConfig c;
  c.data_dim = 2;
  c.latent_dim = 3;
  c.encoder_hidden = 8;
  c.velocity_hidden = 8;
  c.field_hidden = 6;
  c.generator_hidden = {8, 8};
  c.discriminator_hidden = {8};
  return c;
}

}  // namespace

TEST(Mlp, ZeroFinalLayerGivesZeroPreactivation) {
  std::mt19937_64 rng(1);
  Mlp net({{3, 5, 4}, Activation::LeakyRelu, Activation::Sigmoid, 0.2}, rng);
  net.zero_final_layer();
  const Tensor out = net.forward_preactivation(uniform({6, 3}, rng, -5, 5));
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(Mlp, IdentityLayer) {
  std::mt19937_64 rng(1);
  Mlp net({{3, 3}, Activation::LeakyRelu, Activation::None, 0.2}, rng);
  net.weight(0) = Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  net.bias(0) = Tensor::zeros({3});
  const Tensor x = uniform({4, 3}, rng);
  EXPECT_EQ(net.forward(x).values(), x.values());
}

TEST(Mlp, GradientCheckThreeFourTwo) {
  std::mt19937_64 rng(2);
  Mlp net({{3, 4, 2}, Activation::Tanh, Activation::Sigmoid, 0.2}, rng);
  Tensor x = uniform({5, 3}, rng);
  const Tensor w = uniform({5, 2}, rng);
  auto params = net.parameters();
  params.push_back(&x);
  const auto r = check_gradients(params, [&] { return sum(mul(net.forward(x), w)); });
  EXPECT_LT(r.worst, 1e-5);
}

TEST(Mlp, GradientCheckLeakyRelu) {
  std::mt19937_64 rng(5);
  Mlp net({{3, 4, 2}, Activation::LeakyRelu, Activation::None, 0.2}, rng);
  Tensor x = uniform({5, 3}, rng);
  const auto r = check_gradients(net.parameters(), [&] { return sum(square(net.forward(x))); });
  EXPECT_LT(r.worst, 1e-5);
}

TEST(Mlp, WidthMismatchRejected) {
  std::mt19937_64 rng(1);
  Mlp net({{3, 4, 2}}, rng);
  EXPECT_THROW(net.forward(Tensor::zeros({2, 4})), ShapeError);
  EXPECT_THROW(MlpSpec{{3}}.validate(), std::invalid_argument);
}

TEST(Mlp, GlorotInitialization) {
  std::mt19937_64 rng(9);
  Mlp net({{5, 7, 3}}, rng, 0.1);
  const double b0 = std::sqrt(6.0 / 12.0);
  const double b1 = 0.1 * std::sqrt(6.0 / 10.0);
  for (double v : net.weight(0).data()) EXPECT_LE(std::abs(v), b0);
  for (double v : net.weight(1).data()) EXPECT_LE(std::abs(v), b1);
  for (double v : net.bias(0).data()) EXPECT_EQ(v, 0.0);
}

TEST(Bundle, Shapes) {
  const ModelBundle b = ModelBundle::create(small_config(), 3);
  EXPECT_EQ(b.encoder.spec().in(), 2u);
  EXPECT_EQ(b.encoder.spec().out(), 3u);
  EXPECT_EQ(b.velocity.spec().in(), 6u);
  EXPECT_EQ(b.velocity.spec().out(), 6u);
  EXPECT_EQ(b.field.spec().in(), 6u);
  EXPECT_EQ(b.field.spec().out(), 3u);
  EXPECT_EQ(b.field.layers(), 3u);  // two hidden layers
  EXPECT_EQ(b.field.spec().hidden, Activation::Tanh);
  EXPECT_EQ(b.discriminator.spec().output, Activation::Sigmoid);
  EXPECT_EQ(b.generator.spec().out(), 2u);
}

TEST(EncodePosition, BatchingAndDeterminism) {
  const ModelBundle b = ModelBundle::create(small_config(), 4);
  std::mt19937_64 rng(4);
  const Tensor x = uniform({8, 2}, rng);
  const Tensor all = encode_position(b, x);
  EXPECT_EQ(all.values(), encode_position(b, x).values());
  for (std::size_t r = 0; r < 8; ++r) {
    const Tensor one = encode_position(b, slice_rows(x, r, 1));
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(one(0, c), all(r, c));
  }
  EXPECT_THROW(encode_position(b, Tensor::zeros({2, 3})), ShapeError);
}

TEST(EncodeVelocity, SigmaPositive) {
  const ModelBundle b = ModelBundle::create(small_config(), 5);
  std::mt19937_64 rng(5);
  const VelocityPrior p = encode_velocity(b, uniform({1000, 3}, rng, -3, 3), uniform({1000, 3}, rng, -3, 3));
  for (double s : p.sigma.data()) EXPECT_GT(s, 0.0);
}

TEST(EncodeVelocity, LogSigmaClamp) {
  ModelBundle b = ModelBundle::create(small_config(), 6);
  const std::size_t last = b.velocity.layers() - 1;
  b.velocity.weight(last) = Tensor::zeros(b.velocity.weight(last).shape());
  b.velocity.bias(last) = Tensor::vector({0.5, -0.5, 0.0, 10.0, -20.0, 1.0});
  std::mt19937_64 rng(6);
  const VelocityPrior p = encode_velocity(b, uniform({2, 3}, rng), uniform({2, 3}, rng));
  EXPECT_DOUBLE_EQ(p.sigma(0, 0), std::exp(4.0));
  EXPECT_DOUBLE_EQ(p.sigma(0, 1), std::exp(-8.0));
  EXPECT_DOUBLE_EQ(p.sigma(0, 2), std::exp(1.0));
  EXPECT_DOUBLE_EQ(p.mean(1, 0), 0.5);
}

TEST(SampleVelocity, ZeroNoiseAndSigmaFloor) {
  VelocityPrior p{Tensor::matrix({{0.3, -1.2}}), Tensor::matrix({{0.5, 2.0}})};
  EXPECT_EQ(sample_initial_velocity(p, Tensor::zeros({1, 2})).values(), p.mean.values());
  VelocityPrior floor{p.mean, Tensor::full({1, 2}, std::exp(kLogSigmaMin))};
  const Tensor v = sample_initial_velocity(floor, Tensor::matrix({{2.5, -3.0}}));
  const double floor_sigma = std::exp(kLogSigmaMin);
  EXPECT_NEAR(v(0, 0), 0.3 + 2.5 * floor_sigma, 1e-15);
  EXPECT_NEAR(v(0, 1), -1.2 - 3.0 * floor_sigma, 1e-15);
  EXPECT_LT(std::abs(v(0, 1) + 1.2), 1.1e-3);
  EXPECT_THROW(sample_initial_velocity(p, Tensor::zeros({2, 2})), ShapeError);
}

TEST(SampleVelocity, MonteCarloMean) {
  const ModelBundle b = ModelBundle::create(small_config(), 7);
  std::mt19937_64 rng(7);
  const VelocityPrior one = encode_velocity(b, uniform({1, 3}, rng), uniform({1, 3}, rng));
  const std::size_t n = 100000;
  std::vector<Tensor> mu(n, one.mean), sig(n, one.sigma);
  const VelocityPrior p{concat_rows(mu), concat_rows(sig)};
  const Tensor v = sample_initial_velocity(p, standard_normal(n, 3, rng));
  const Tensor m = mean(v, 0);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_LT(std::abs(m.data()[c] - one.mean(0, c)), 3.0 * one.sigma(0, c) / std::sqrt(double(n))) << c;
  }
}

TEST(SampleVelocity, ReparameterizationGradient) {
  Tensor mu = Tensor::matrix({{0.3, -1.2, 0.7}});
  Tensor sigma = Tensor::matrix({{0.5, 2.0, 0.1}});
  const Tensor eps = Tensor::matrix({{1.1, -0.4, 0.2}});
  Tape tape;
  Gradients g;
  Tensor v0;
  {
    Recording rec(tape);
    tape.watch(mu);
    tape.watch(sigma);
    v0 = sample_initial_velocity({mu, sigma}, eps);
    g = tape.backward(sum(square(v0)));
  }
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_DOUBLE_EQ(g.of(mu).data()[c], 2.0 * v0.data()[c]);
    EXPECT_DOUBLE_EQ(g.of(sigma).data()[c], 2.0 * v0.data()[c] * eps.data()[c]);
  }
  const auto r = check_gradients({&mu, &sigma}, [&] { return sum(square(sample_initial_velocity({mu, sigma}, eps))); });
  EXPECT_LT(r.worst, 1e-6);
}

TEST(Discriminator, OutputsInUnitInterval) {
  const ModelBundle b = ModelBundle::create(small_config(), 8);
  std::mt19937_64 rng(8);
  const Tensor d = discriminate(b, uniform({500, 2}, rng, -10, 10));
  for (double v : d.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Bundle, SeededCreationIsDeterministic) {
  const ModelBundle a = ModelBundle::create(small_config(), 11);
  const ModelBundle b = ModelBundle::create(small_config(), 11);
  const ModelBundle c = ModelBundle::create(small_config(), 12);
  EXPECT_EQ(a.generator.weight(0).values(), b.generator.weight(0).values());
  EXPECT_NE(a.generator.weight(0).values(), c.generator.weight(0).values());
}
