#include "neurint/ode.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace neurint {

std::string to_string(SolverMethod method) { return method == SolverMethod::Euler ? "euler" : "rk4"; }

SolverMethod solver_method_from_string(const std::string& name) {
  if (name == "euler") return SolverMethod::Euler;
  if (name == "rk4") return SolverMethod::Rk4;
  throw std::invalid_argument("unknown solver '" + name + "'");
}

void SolverConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("solver: steps must be >= 1, got " + std::to_string(steps));
  if (!(total_time > 0.0) || !std::isfinite(total_time)) {
    throw std::invalid_argument("solver: total time must be positive");
  }
}

SolverAbort::SolverAbort(int step, const std::string& what)
    : NumericError("integration aborted at step " + std::to_string(step) + ": " + what), step_(step) {}

namespace {

// x + h*k
Tensor axpy(const Tensor& x, double h, const Tensor& k) { return add(x, scale(k, h)); }

// x + h/6 (k1 + 2 k2 + 2 k3 + k4)
Tensor rk4_combine(const Tensor& x, double h, const Tensor& k1, const Tensor& k2, const Tensor& k3,
                   const Tensor& k4) {
  const Tensor inner = add(add(k1, scale(add(k2, k3), 2.0)), k4);
  return axpy(x, h / 6.0, inner);
}

Tensor checked_acceleration(const SecondOrderField& f, const Tensor& z, const Tensor& v) {
  Tensor a = f(z, v);
  if (a.shape() != z.shape()) {
    throw ShapeError("vector field returned " + shape_str(a.shape()) + " for state " + shape_str(z.shape()));
  }
  return a;
}

Tensor checked_rate(const FirstOrderField& f, const Tensor& z) {
  Tensor r = f(z);
  if (r.shape() != z.shape()) {
    throw ShapeError("vector field returned " + shape_str(r.shape()) + " for state " + shape_str(z.shape()));
  }
  return r;
}

void require_positive_step(double h) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
}

}  // namespace

AugmentedState coupled_field(const SecondOrderField& f, const AugmentedState& s) {
  if (s.z.shape() != s.v.shape()) {
    throw ShapeError("augmented state: z " + shape_str(s.z.shape()) + " vs v " + shape_str(s.v.shape()));
  }
  return {s.v, checked_acceleration(f, s.z, s.v)};
}

AugmentedState euler_step(const SecondOrderField& f, const AugmentedState& s, double h) {
  require_positive_step(h);
  const AugmentedState k = coupled_field(f, s);
  return {axpy(s.z, h, k.z), axpy(s.v, h, k.v)};
}

AugmentedState rk4_step(const SecondOrderField& f, const AugmentedState& s, double h) {
  require_positive_step(h);
  const AugmentedState k1 = coupled_field(f, s);
  const AugmentedState k2 = coupled_field(f, {axpy(s.z, h / 2, k1.z), axpy(s.v, h / 2, k1.v)});
  const AugmentedState k3 = coupled_field(f, {axpy(s.z, h / 2, k2.z), axpy(s.v, h / 2, k2.v)});
  const AugmentedState k4 = coupled_field(f, {axpy(s.z, h, k3.z), axpy(s.v, h, k3.v)});
  return {rk4_combine(s.z, h, k1.z, k2.z, k3.z, k4.z), rk4_combine(s.v, h, k1.v, k2.v, k3.v, k4.v)};
}

Tensor euler_step(const FirstOrderField& f, const Tensor& z, double h) {
  require_positive_step(h);
  return axpy(z, h, checked_rate(f, z));
}

Tensor rk4_step(const FirstOrderField& f, const Tensor& z, double h) {
  require_positive_step(h);
  const Tensor k1 = checked_rate(f, z);
  const Tensor k2 = checked_rate(f, axpy(z, h / 2, k1));
  const Tensor k3 = checked_rate(f, axpy(z, h / 2, k2));
  const Tensor k4 = checked_rate(f, axpy(z, h, k3));
  return rk4_combine(z, h, k1, k2, k3, k4);
}

LatentTrajectory integrate(const SecondOrderField& f, const AugmentedState& initial, const SolverConfig& config) {
  config.validate();
  if (initial.z.shape() != initial.v.shape()) {
    throw ShapeError("integrate: z " + shape_str(initial.z.shape()) + " vs v " + shape_str(initial.v.shape()));
  }
  const double h = config.step_size();
  std::vector<Tensor> zs{initial.z};
  std::vector<Tensor> vs{initial.v};
  zs.reserve(static_cast<std::size_t>(config.steps) + 1);
  vs.reserve(static_cast<std::size_t>(config.steps) + 1);

  AugmentedState s = initial;
  for (int k = 0; k < config.steps; ++k) {
    try {
      s = config.method == SolverMethod::Euler ? euler_step(f, s, h) : rk4_step(f, s, h);
    } catch (const SolverAbort&) {
      throw;
    } catch (const NumericError& e) {
      throw SolverAbort(k, e.what());
    }
    if (!s.z.all_finite() || !s.v.all_finite()) throw SolverAbort(k, "non-finite state");
    zs.push_back(s.z);
    vs.push_back(s.v);
  }
  return LatentTrajectory(config, std::move(zs), std::move(vs), true);
}

LatentTrajectory integrate_first_order(const FirstOrderField& f, const Tensor& z0, const SolverConfig& config) {
  config.validate();
  const double h = config.step_size();
  std::vector<Tensor> zs{z0};
  std::vector<Tensor> rates;
  zs.reserve(static_cast<std::size_t>(config.steps) + 1);
  rates.reserve(static_cast<std::size_t>(config.steps) + 1);

  Tensor z = z0;
  for (int k = 0; k < config.steps; ++k) {
    try {
      // The first stage of either method is f(z_k): keep it as the node derivative.
      Tensor k1 = checked_rate(f, z);
      if (!k1.all_finite()) throw SolverAbort(k, "non-finite field output");
      if (config.method == SolverMethod::Euler) {
        z = axpy(z, h, k1);
      } else {
        const Tensor k2 = checked_rate(f, axpy(z, h / 2, k1));
        const Tensor k3 = checked_rate(f, axpy(z, h / 2, k2));
        const Tensor k4 = checked_rate(f, axpy(z, h, k3));
        z = rk4_combine(z, h, k1, k2, k3, k4);
      }
      rates.push_back(std::move(k1));
    } catch (const SolverAbort&) {
      throw;
    } catch (const NumericError& e) {
      throw SolverAbort(k, e.what());
    }
    if (!z.all_finite()) throw SolverAbort(k, "non-finite state");
    zs.push_back(z);
  }
  Tensor last = checked_rate(f, z);
  if (!last.all_finite()) throw SolverAbort(config.steps, "non-finite field output");
  rates.push_back(std::move(last));
  return LatentTrajectory(config, std::move(zs), std::move(rates), false);
}

LatentTrajectory::LatentTrajectory(SolverConfig config, std::vector<Tensor> positions,
                                   std::vector<Tensor> derivatives, bool second_order)
    : config_(config),
      positions_(std::move(positions)),
      derivatives_(std::move(derivatives)),
      second_order_(second_order) {
  if (positions_.size() != static_cast<std::size_t>(config_.steps) + 1 || derivatives_.size() != positions_.size()) {
    throw std::invalid_argument("trajectory: node count does not match the solver grid");
  }
}

std::vector<double> LatentTrajectory::times() const {
  std::vector<double> t(positions_.size());
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = time(k);
  return t;
}

Tensor LatentTrajectory::evaluate_at(double t) const {
  const double T = config_.total_time;
  if (!(t >= 0.0 && t <= T)) {
    throw std::out_of_range("evaluate_at: t=" + std::to_string(t) + " outside [0, " + std::to_string(T) + "]");
  }
  const double h = config_.step_size();
  const auto steps = static_cast<std::size_t>(config_.steps);
  const auto nearest = static_cast<std::size_t>(std::llround(t / h));
  if (nearest <= steps && time(nearest) == t) return positions_[nearest];
  if (t == T) return positions_.back();

  const std::size_t k = std::min(static_cast<std::size_t>(std::floor(t / h)), steps - 1);
  const double s = (t - time(k)) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return add(add(scale(positions_[k], h00), scale(derivatives_[k], h10 * h)),
             add(scale(positions_[k + 1], h01), scale(derivatives_[k + 1], h11 * h)));
}

Tensor LatentTrajectory::evaluate_rows(std::span<const double> times) const {
  const std::size_t rows = positions_.front().rows();
  const std::size_t d = positions_.front().cols();
  if (times.size() != rows) {
    throw ShapeError("evaluate_rows: " + std::to_string(times.size()) + " times for " + std::to_string(rows) + " rows");
  }
  const double T = config_.total_time;
  const double h = config_.step_size();
  const auto steps = static_cast<std::size_t>(config_.steps);
  Tensor out = Tensor::zeros(positions_.front().shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double t = times[r];
    if (!(t >= 0.0 && t <= T)) throw std::out_of_range("evaluate_rows: t=" + std::to_string(t) + " outside [0, T]");
    const std::size_t k = std::min(static_cast<std::size_t>(std::floor(t / h)), steps - 1);
    const double s = (t - time(k)) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = (s3 - 2 * s2 + s) * h;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = (s3 - s2) * h;
    for (std::size_t j = 0; j < d; ++j) {
      out(r, j) = h00 * positions_[k](r, j) + h10 * derivatives_[k](r, j) + h01 * positions_[k + 1](r, j) +
                  h11 * derivatives_[k + 1](r, j);
    }
  }
  return out;
}

void LatentTrajectory::write_csv(std::ostream& os, std::size_t batch_row) const {
  const std::size_t d = positions_.front().cols();
  if (batch_row >= positions_.front().rows()) throw std::out_of_range("write_csv: batch row out of range");
  os << 't';
  for (std::size_t j = 0; j < d; ++j) os << ",z_" << j;
  if (second_order_)
    for (std::size_t j = 0; j < d; ++j) os << ",v_" << j;
  os << '\n';
  os << std::setprecision(17);
  for (std::size_t k = 0; k < positions_.size(); ++k) {
    os << time(k);
    for (std::size_t j = 0; j < d; ++j) os << ',' << positions_[k](batch_row, j);
    if (second_order_)
      for (std::size_t j = 0; j < d; ++j) os << ',' << derivatives_[k](batch_row, j);
    os << '\n';
  }
}

}  // namespace neurint
