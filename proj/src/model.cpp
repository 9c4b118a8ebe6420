#include "neurint/model.hpp"

#include <array>

#include "neurint/interpolators.hpp"

namespace neurint {

SecondOrderField second_order_field(const Mlp& field) {
  return [&field](const Tensor& z, const Tensor& v) {
    const std::array<Tensor, 2> parts{z, v};
    return field.forward(concat_cols(parts));
  };
}

LatentPath LatentPath::build(const ModelBundle& bundle, const Tensor& source, const Tensor& target,
                             const SolverConfig& solver, const Tensor* eps, std::mt19937_64* rng) {
  solver.validate();
  if (source.shape() != target.shape()) {
    throw ShapeError("latent path: source " + shape_str(source.shape()) + " vs target " + shape_str(target.shape()));
  }
  LatentPath p;
  p.kind_ = bundle.config.kind;
  p.solver_ = solver;
  p.z0_ = encode_position(bundle, source);
  const Tensor target_feature = encode_position(bundle, target);

  if (is_closed_form(p.kind_)) {
    p.z_target_ = target_feature;
    return p;
  }
  if (p.kind_ == InterpolatorKind::FirstOrderPlain) {
    p.trajectory_ = first_order_integrate(bundle.field, p.z0_, nullptr, solver);
    return p;
  }

  const VelocityPrior prior = encode_velocity(bundle, p.z0_, target_feature);
  if (eps != nullptr) {
    if (eps->shape() != prior.mean.shape()) {
      throw ShapeError("latent path: eps " + shape_str(eps->shape()) + " vs prior " + shape_str(prior.mean.shape()));
    }
    p.eps_ = eps->detach();
  } else {
    if (rng == nullptr) throw std::invalid_argument("latent path: need eps or an rng");
    p.eps_ = standard_normal(prior.mean.rows(), prior.mean.cols(), *rng);
  }
  const Tensor draw = sample_initial_velocity(prior, *p.eps_);

  if (p.kind_ == InterpolatorKind::FirstOrderConditioned) {
    p.trajectory_ = first_order_integrate(bundle.field, p.z0_, &draw, solver);
  } else {
    p.trajectory_ = integrate(second_order_field(bundle.field), {p.z0_, draw}, solver);
  }
  return p;
}

Tensor LatentPath::at_grid(std::size_t k) const {
  if (k >= grid_nodes()) throw std::out_of_range("latent path: grid node " + std::to_string(k));
  if (trajectory_) return trajectory_->position(k);
  const double t = solver_.step_size() * static_cast<double>(k);
  const double T = solver_.total_time;
  const double tk = k + 1 == grid_nodes() ? T : t;
  return kind_ == InterpolatorKind::Slerp ? slerp(z0_, z_target_, tk, T) : lerp(z0_, z_target_, tk, T);
}

Tensor LatentPath::at(double t) const {
  if (trajectory_) return trajectory_->evaluate_at(t);
  const double T = solver_.total_time;
  return kind_ == InterpolatorKind::Slerp ? slerp(z0_, z_target_, t, T) : lerp(z0_, z_target_, t, T);
}

Tensor LatentPath::at_rows(std::span<const double> times) const {
  if (trajectory_) return trajectory_->evaluate_rows(times);
  const std::size_t rows = z0_.rows();
  if (times.size() != rows) {
    throw ShapeError("at_rows: " + std::to_string(times.size()) + " times for " + std::to_string(rows) + " rows");
  }
  std::vector<Tensor> parts;
  parts.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const Tensor a = slice_rows(z0_, r, 1).detach();
    const Tensor b = slice_rows(z_target_, r, 1).detach();
    parts.push_back(kind_ == InterpolatorKind::Slerp ? slerp(a, b, times[r], total_time())
                                                     : lerp(a, b, times[r], total_time()));
  }
  return concat_rows(parts).detach();
}

InterpolationCurve::InterpolationCurve(LatentPath path, Mlp generator, Tensor source, Tensor target)
    : path_(std::move(path)), generator_(std::move(generator)), source_(std::move(source)), target_(std::move(target)) {}

Tensor InterpolationCurve::at(double t) const { return generator_.forward(path_.at(t)); }

Tensor InterpolationCurve::sample_images(std::span<const double> times) const {
  if (times.empty()) throw std::invalid_argument("sample_images: no times");
  std::vector<Tensor> latents;
  latents.reserve(times.size());
  for (double t : times) latents.push_back(path_.at(t));
  return generator_.forward(concat_rows(latents));
}

InterpolationCurve generate_curve(const ModelBundle& bundle, const Tensor& source, const Tensor& target,
                                  const SolverConfig& solver, std::mt19937_64& rng) {
  return InterpolationCurve(LatentPath::build(bundle, source, target, solver, nullptr, &rng), bundle.generator,
                            source, target);
}

InterpolationCurve generate_curve(const ModelBundle& bundle, const Tensor& source, const Tensor& target,
                                  const Tensor& eps, const SolverConfig& solver) {
  return InterpolationCurve(LatentPath::build(bundle, source, target, solver, &eps, nullptr), bundle.generator,
                            source, target);
}

std::vector<InterpolationCurve> sample_trajectory_family(const ModelBundle& bundle, const Tensor& source,
                                                         const Tensor& target, int count,
                                                         const SolverConfig& solver, std::mt19937_64& rng) {
  if (count < 1) throw std::invalid_argument("trajectory family: count must be >= 1");
  std::vector<InterpolationCurve> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) out.push_back(generate_curve(bundle, source, target, solver, rng));
  return out;
}

}  // namespace neurint
