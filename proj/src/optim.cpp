#include "neurint/optim.hpp"

#include <cmath>

namespace neurint {

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0)) throw std::invalid_argument("optimizer: learning rate must be positive");
}

bool Optimizer::step(std::span<Tensor* const> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("optimizer: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape()) {
      throw ShapeError("optimizer: parameter " + shape_str(params[i]->shape()) + " vs gradient " +
                       shape_str(grads[i].shape()));
    }
  }
  for (const Tensor& g : grads) {
    if (!g.all_finite()) {
      ++refused_;
      return false;
    }
  }

  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i]->data();
      auto g = grads[i].data();
      for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * g[k];
    }
    ++steps_;
    return true;
  }

  if (m_.empty()) {
    for (Tensor* p : params) {
      m_.push_back(Tensor::zeros(p->shape()));
      v_.push_back(Tensor::zeros(p->shape()));
    }
  } else if (m_.size() != params.size()) {
    throw ShapeError("optimizer: parameter list changed size");
  }

  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (m_[i].shape() != params[i]->shape()) {
      throw ShapeError("optimizer: moment " + shape_str(m_[i].shape()) + " vs parameter " +
                       shape_str(params[i]->shape()));
    }
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0 - b1) * g[k];
      v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      p[k] -= lr * mhat / (std::sqrt(vhat) + config_.epsilon);
    }
  }
  return true;
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_kind_from_string(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw std::invalid_argument("unknown optimizer '" + name + "'");
}

}  // namespace neurint
