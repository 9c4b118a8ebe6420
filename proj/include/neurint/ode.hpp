#pragma once

// Fixed-step Euler/RK4 integration of first- and second-order latent ODEs.
//
// Every step is composed of recorded tensor operations, so gradients flow
// back to the initial state and to anything the vector field closes over.

#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurint/tensor.hpp"

namespace neurint {

enum class SolverMethod { Euler, Rk4 };

std::string to_string(SolverMethod method);
SolverMethod solver_method_from_string(const std::string& name);

struct SolverConfig {
  SolverMethod method = SolverMethod::Rk4;
  int steps = 32;
  double total_time = 1.0;

  double step_size() const { return total_time / steps; }
  void validate() const;
};

/// Position z and velocity v, both [batch, latent].
struct AugmentedState {
  Tensor z;
  Tensor v;
};

/// Acceleration f(z, v) of a second-order system.
using SecondOrderField = std::function<Tensor(const Tensor& z, const Tensor& v)>;
/// Right-hand side dz/dt = f(z) of a first-order system.
using FirstOrderField = std::function<Tensor(const Tensor& z)>;

/// Integration stopped on a non-finite value.
class SolverAbort : public NumericError {
 public:
  SolverAbort(int step, const std::string& what);
  int step() const { return step_; }

 private:
  int step_;
};

/// (dz, dv) = (v, f(z, v)).
AugmentedState coupled_field(const SecondOrderField& f, const AugmentedState& s);

AugmentedState euler_step(const SecondOrderField& f, const AugmentedState& s, double h);
AugmentedState rk4_step(const SecondOrderField& f, const AugmentedState& s, double h);
Tensor euler_step(const FirstOrderField& f, const Tensor& z, double h);
Tensor rk4_step(const FirstOrderField& f, const Tensor& z, double h);

/// Solution on the uniform grid t_k = k*T/steps, with cubic-Hermite dense output.
class LatentTrajectory {
 public:
  LatentTrajectory(SolverConfig config, std::vector<Tensor> positions, std::vector<Tensor> derivatives,
                   bool second_order);

  const SolverConfig& config() const { return config_; }
  std::size_t nodes() const { return positions_.size(); }
  double time(std::size_t k) const { return config_.step_size() * static_cast<double>(k); }
  std::vector<double> times() const;

  const Tensor& position(std::size_t k) const { return positions_.at(k); }
  /// dz/dt at node k. For second-order systems this is the velocity state.
  const Tensor& derivative(std::size_t k) const { return derivatives_.at(k); }
  const Tensor& initial() const { return positions_.front(); }
  const Tensor& terminal() const { return positions_.back(); }
  /// True when a velocity channel is part of the integrated state.
  bool has_velocity() const { return second_order_; }

  /// z(t) for t in [0, T]; exact at grid nodes.
  Tensor evaluate_at(double t) const;
  /// Row b evaluated at times[b]. Values only, never recorded.
  Tensor evaluate_rows(std::span<const double> times) const;

  /// Columns t, z_0..z_{d-1}, then v_0..v_{d-1} when a velocity channel exists.
  /// Only row `batch_row` of the batch is written.
  void write_csv(std::ostream& os, std::size_t batch_row = 0) const;

 private:
  SolverConfig config_;
  std::vector<Tensor> positions_;
  std::vector<Tensor> derivatives_;
  bool second_order_;
};

LatentTrajectory integrate(const SecondOrderField& f, const AugmentedState& initial, const SolverConfig& config);
LatentTrajectory integrate_first_order(const FirstOrderField& f, const Tensor& z0, const SolverConfig& config);

}  // namespace neurint
