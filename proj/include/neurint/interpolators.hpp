#pragma once

// Closed-form latent interpolators and first-order ODE paths used by the
// baseline variants.

#include "neurint/mlp.hpp"
#include "neurint/ode.hpp"
#include "neurint/tensor.hpp"

namespace neurint {

/// Angles closer than this to 0 or pi fall back to linear interpolation.
inline constexpr double kSlerpAngleEps = 1e-6;

/// (1 - t/T) z0 + (t/T) zT. Rows of z0 and zT are paired.
Tensor lerp(const Tensor& z0, const Tensor& zT, double t, double T);

/// Row-wise great-circle interpolation; differentiable in z0 and zT.
Tensor slerp(const Tensor& z0, const Tensor& zT, double t, double T);

/// dz/dt = field(z) when `conditioning` is null, else dz/dt = field(z ++ conditioning)
/// with the conditioning held fixed along the whole trajectory.
LatentTrajectory first_order_integrate(const Mlp& field, const Tensor& z0, const Tensor* conditioning,
                                       const SolverConfig& solver);

}  // namespace neurint
