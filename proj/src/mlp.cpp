#include "neurint/mlp.hpp"

#include <cmath>

namespace neurint {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::None: return "none";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "none";
}

Activation activation_from_string(const std::string& name) {
  if (name == "none") return Activation::None;
  if (name == "leaky_relu") return Activation::LeakyRelu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("mlp: need at least input and output widths");
  for (std::size_t w : widths) {
    if (w == 0) throw std::invalid_argument("mlp: widths must be positive");
  }
}

Tensor apply_activation(const Tensor& x, Activation a, double leaky_slope) {
  switch (a) {
    case Activation::None: return x;
    case Activation::LeakyRelu: return leaky_relu(x, leaky_slope);
    case Activation::Tanh: return tanh(x);
    case Activation::Sigmoid: return sigmoid(x);
  }
  return x;
}

Mlp::Mlp(MlpSpec spec, std::mt19937_64& rng, double final_layer_scale) : spec_(std::move(spec)) {
  spec_.validate();
  for (std::size_t l = 0; l + 1 < spec_.widths.size(); ++l) {
    const std::size_t fan_in = spec_.widths[l];
    const std::size_t fan_out = spec_.widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-bound, bound);
    const bool last = l + 2 == spec_.widths.size();
    std::vector<double> w(fan_in * fan_out);
    for (double& v : w) v = u(rng) * (last ? final_layer_scale : 1.0);
    weights_.emplace_back(Shape{fan_in, fan_out}, std::move(w));
    biases_.push_back(Tensor::zeros({fan_out}));
  }
}

Tensor Mlp::forward_preactivation(const Tensor& x) const {
  if (x.rank() != 2 || x.cols() != spec_.in()) {
    throw ShapeError("mlp: expected input [batch," + std::to_string(spec_.in()) + "], got " + shape_str(x.shape()));
  }
  Tensor h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = linear(h, weights_[l], biases_[l]);
    if (l + 1 < weights_.size()) h = apply_activation(h, spec_.hidden, spec_.leaky_slope);
  }
  return h;
}

Tensor Mlp::forward(const Tensor& x) const {
  return apply_activation(forward_preactivation(x), spec_.output, spec_.leaky_slope);
}

std::vector<Tensor*> Mlp::parameters() {
  std::vector<Tensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::vector<const Tensor*> Mlp::parameters() const {
  std::vector<const Tensor*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Tensor* p : parameters()) n += p->size();
  return n;
}

void Mlp::zero_final_layer() {
  for (double& v : weights_.back().data()) v = 0.0;
  for (double& v : biases_.back().data()) v = 0.0;
}

}  // namespace neurint
