#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "neurint/tensor.hpp"

namespace neurint {

enum class Activation { None, LeakyRelu, Tanh, Sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct MlpSpec {
  std::vector<std::size_t> widths;  // input, hidden..., output
  Activation hidden = Activation::LeakyRelu;
  Activation output = Activation::None;
  double leaky_slope = 0.2;

  void validate() const;
  std::size_t in() const { return widths.front(); }
  std::size_t out() const { return widths.back(); }
};

/// Fully connected network: affine layers with `hidden` between them and
/// `output` after the last one.
class Mlp {
 public:
  Mlp() = default;
  /// Glorot-uniform weights, zero biases; the last layer's weights are
  /// multiplied by `final_layer_scale`.
  Mlp(MlpSpec spec, std::mt19937_64& rng, double final_layer_scale = 1.0);

  Tensor forward(const Tensor& x) const;
  /// Output of the final affine layer, before the output nonlinearity.
  Tensor forward_preactivation(const Tensor& x) const;

  const MlpSpec& spec() const { return spec_; }
  std::size_t layers() const { return weights_.size(); }

  /// Parameter order: W0, b0, W1, b1, ...
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t parameter_count() const;

  Tensor& weight(std::size_t layer) { return weights_.at(layer); }
  Tensor& bias(std::size_t layer) { return biases_.at(layer); }
  const Tensor& weight(std::size_t layer) const { return weights_.at(layer); }
  const Tensor& bias(std::size_t layer) const { return biases_.at(layer); }

  void zero_final_layer();

 private:
  MlpSpec spec_;
  std::vector<Tensor> weights_;
  std::vector<Tensor> biases_;
};

Tensor apply_activation(const Tensor& x, Activation a, double leaky_slope);

}  // namespace neurint
