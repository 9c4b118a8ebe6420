#pragma once

#include <span>
#include <string>
#include <vector>

#include "neurint/tensor.hpp"

namespace neurint {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First-order optimizer over a fixed, ordered parameter list.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {});

  /// Applies one update. Returns false, leaving every parameter untouched,
  /// when any gradient is non-finite.
  bool step(std::span<Tensor* const> params, std::span<const Tensor> grads);

  const OptimizerConfig& config() const { return config_; }
  long steps_taken() const { return steps_; }
  long refused_steps() const { return refused_; }

  // Moment buffers, exposed for checkpointing.
  std::vector<Tensor>& first_moments() { return m_; }
  std::vector<Tensor>& second_moments() { return v_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }
  void set_steps_taken(long steps) { steps_ = steps; }

 private:
  OptimizerConfig config_;
  std::vector<Tensor> m_, v_;
  long steps_ = 0;
  long refused_ = 0;
};

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& name);

}  // namespace neurint
