#pragma once

// The generative process: (x_S, x_T) -> distribution over interpolation curves.

#include <optional>
#include <random>
#include <span>
#include <vector>

#include "neurint/bundle.hpp"
#include "neurint/ode.hpp"

namespace neurint {

/// Latent path between a batch of sources and targets, for any interpolator kind.
class LatentPath {
 public:
  /// Builds the path. `eps` is the standard-normal draw for kinds with a
  /// stochastic channel; when null it is drawn from `rng`.
  static LatentPath build(const ModelBundle& bundle, const Tensor& source, const Tensor& target,
                          const SolverConfig& solver, const Tensor* eps, std::mt19937_64* rng);

  InterpolatorKind kind() const { return kind_; }
  const SolverConfig& solver() const { return solver_; }
  double total_time() const { return solver_.total_time; }
  std::size_t grid_nodes() const { return static_cast<std::size_t>(solver_.steps) + 1; }

  /// z at grid node k.
  Tensor at_grid(std::size_t k) const;
  /// z(t) for t in [0, T].
  Tensor at(double t) const;
  /// Row b at times[b]. Values only, never recorded.
  Tensor at_rows(std::span<const double> times) const;
  const Tensor& initial() const { return z0_; }
  Tensor terminal() const { return at_grid(grid_nodes() - 1); }

  /// Noise used for the stochastic channel; empty optional for deterministic kinds.
  const std::optional<Tensor>& epsilon() const { return eps_; }
  /// Integrated trajectory; absent for closed-form kinds.
  const std::optional<LatentTrajectory>& trajectory() const { return trajectory_; }

 private:
  InterpolatorKind kind_ = InterpolatorKind::Neurint;
  SolverConfig solver_;
  Tensor z0_;
  Tensor z_target_;  // closed-form kinds only
  std::optional<Tensor> eps_;
  std::optional<LatentTrajectory> trajectory_;
};

/// x(t) = G(z(t)) over [0, T]. Holds its own copy of the generator.
class InterpolationCurve {
 public:
  InterpolationCurve(LatentPath path, Mlp generator, Tensor source, Tensor target);

  const LatentPath& path() const { return path_; }
  const Tensor& source() const { return source_; }
  const Tensor& target() const { return target_; }
  const std::optional<Tensor>& epsilon() const { return path_.epsilon(); }
  double total_time() const { return path_.total_time(); }
  std::size_t batch() const { return source_.rows(); }

  Tensor latent_at(double t) const { return path_.at(t); }
  /// Data-space point(s) at time t, [batch, data].
  Tensor at(double t) const;
  /// Rows ordered time-major: row i*batch + b is curve b at times[i].
  Tensor sample_images(std::span<const double> times) const;

 private:
  LatentPath path_;
  Mlp generator_;
  Tensor source_;
  Tensor target_;
};

InterpolationCurve generate_curve(const ModelBundle& bundle, const Tensor& source, const Tensor& target,
                                  const SolverConfig& solver, std::mt19937_64& rng);
InterpolationCurve generate_curve(const ModelBundle& bundle, const Tensor& source, const Tensor& target,
                                  const Tensor& eps, const SolverConfig& solver);

/// K curves for one source/target batch with independent noise draws.
std::vector<InterpolationCurve> sample_trajectory_family(const ModelBundle& bundle, const Tensor& source,
                                                         const Tensor& target, int count,
                                                         const SolverConfig& solver, std::mt19937_64& rng);

/// Second-order vector field f(z, v) = field(z ++ v) of a bundle.
SecondOrderField second_order_field(const Mlp& field);

}  // namespace neurint
