#include "neurint/eval.hpp"

#include "neurint/interpolators.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace neurint {

namespace {

Eigen::MatrixXd as_matrix(const Tensor& rows) {
  Eigen::MatrixXd m(rows.rows(), rows.cols());
  for (std::size_t r = 0; r < rows.rows(); ++r)
    for (std::size_t c = 0; c < rows.cols(); ++c) m(r, c) = rows(r, c);
  return m;
}

double row_distance(const Tensor& a, const Tensor& b, std::size_t row) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const double d = a(row, j) - b(row, j);
    s += d * d;
  }
  return std::sqrt(s);
}

// Mean over rows of the mean pairwise distance between K same-shaped point sets.
double mean_pairwise(const std::vector<Tensor>& points) {
  const std::size_t k = points.size();
  const std::size_t rows = points.front().rows();
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b)
      for (std::size_t r = 0; r < rows; ++r) {
        total += row_distance(points[a], points[b], r);
        ++count;
      }
  return total / static_cast<double>(count);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

GaussianFit fit_gaussian(const Tensor& rows) {
  if (rows.rank() != 2 || rows.rows() < 2) throw std::invalid_argument("fit_gaussian: need at least two rows");
  const Eigen::MatrixXd m = as_matrix(rows);
  GaussianFit fit;
  fit.mean = m.colwise().mean().transpose();
  const Eigen::MatrixXd centred = m.rowwise() - fit.mean.transpose();
  fit.covariance = (centred.transpose() * centred) / static_cast<double>(m.rows() - 1);
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose());
  return fit;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ShapeError("psd_sqrt: matrix is not square");
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw NumericError("psd_sqrt: eigendecomposition did not converge");
  const Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

double frechet_gaussian_distance(const GaussianFit& a, const GaussianFit& b) {
  if (a.mean.size() != b.mean.size() || a.covariance.rows() != b.covariance.rows()) {
    throw ShapeError("frechet distance: dimension " + std::to_string(a.mean.size()) + " vs " +
                     std::to_string(b.mean.size()));
  }
  const Eigen::MatrixXd root_a = psd_sqrt(a.covariance);
  const Eigen::MatrixXd cross = psd_sqrt(root_a * b.covariance * root_a);
  const double d = (a.mean - b.mean).squaredNorm() + a.covariance.trace() + b.covariance.trace() - 2.0 * cross.trace();
  return std::max(d, 0.0);
}

Tensor generate_intermediates(const ModelBundle& bundle, const Dataset& data, const GenerationSettings& settings) {
  if (settings.pairs == 0 || settings.samples_per_pair == 0) throw std::invalid_argument("generation: empty request");
  std::mt19937_64 rng(settings.seed);
  const PairBatch pairs = sample_pairs(data, settings.support, settings.pairs, rng);
  const LatentPath path = LatentPath::build(bundle, pairs.source, pairs.target, settings.solver, nullptr, &rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Tensor> latents;
  std::vector<double> times(settings.pairs);
  for (std::size_t s = 0; s < settings.samples_per_pair; ++s) {
    for (double& t : times) t = unit(rng) * settings.solver.total_time;
    latents.push_back(path.at_rows(times));
  }
  return decode(bundle, concat_rows(latents));
}

double eval_generation(const ModelBundle& bundle, const Dataset& data, const GenerationSettings& settings) {
  const std::vector<std::size_t> idx = data.indices(settings.support);
  if (idx.size() < 2) throw std::invalid_argument("generation: support has fewer than two items");
  const GaussianFit real = fit_gaussian(data.rows(idx));
  const GaussianFit fake = fit_gaussian(generate_intermediates(bundle, data, settings));
  return frechet_gaussian_distance(real, fake);
}

double smoothness(const CurveFunction& curve, double total_time, int samples) {
  if (samples < 3) throw std::invalid_argument("smoothness: need at least 3 samples, got " + std::to_string(samples));
  const double dt = total_time / (samples - 1);
  std::vector<Tensor> xs;
  xs.reserve(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) xs.push_back(curve(i + 1 == samples ? total_time : dt * i));
  double total = 0.0;
  std::size_t count = 0;
  const double dt4 = dt * dt * dt * dt;
  for (int i = 1; i + 1 < samples; ++i) {
    const auto a = xs[i - 1].data();
    const auto b = xs[i].data();
    const auto c = xs[i + 1].data();
    const std::size_t rows = xs[i].rank() == 2 ? xs[i].rows() : 1;
    double energy = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d2 = c[j] - 2.0 * b[j] + a[j];
      energy += d2 * d2;
    }
    total += energy / rows / dt4;
    ++count;
  }
  return total / static_cast<double>(count);
}

double smoothness(const InterpolationCurve& curve, int samples) {
  return smoothness([&curve](double t) { return curve.at(t); }, curve.total_time(), samples);
}

DiversityReport diversity(std::span<const CurveFunction> curves, double total_time, int times) {
  if (curves.size() < 2) throw std::invalid_argument("diversity: need at least two curves");
  if (times < 1) throw std::invalid_argument("diversity: need at least one interior time");
  auto at = [&](double t) {
    std::vector<Tensor> pts;
    pts.reserve(curves.size());
    for (const auto& c : curves) pts.push_back(c(t));
    return pts;
  };
  DiversityReport out;
  out.at_start = mean_pairwise(at(0.0));
  out.at_end = mean_pairwise(at(total_time));
  double total = 0.0;
  for (int j = 1; j <= times; ++j) total += mean_pairwise(at(total_time * j / (times + 1)));
  out.interior = total / times;
  return out;
}

DiversityReport diversity(std::span<const InterpolationCurve> curves, int times) {
  if (curves.empty()) throw std::invalid_argument("diversity: need at least two curves");
  std::vector<CurveFunction> fns;
  fns.reserve(curves.size());
  for (const auto& c : curves) fns.emplace_back([&c](double t) { return c.at(t); });
  return diversity(fns, curves.front().total_time(), times);
}

PrincipalComponent leading_component(const Eigen::MatrixXd& covariance, double tolerance, int max_iterations) {
  const Eigen::Index n = covariance.rows();
  if (n == 0 || covariance.cols() != n) throw ShapeError("leading_component: covariance is not square");
  if (covariance.diagonal().maxCoeff() <= 0.0) throw NumericError("pca: zero-variance pool");

  Eigen::Index start = 0;
  covariance.diagonal().maxCoeff(&start);
  Eigen::VectorXd v = covariance.col(start);
  if (v.norm() == 0.0) v = Eigen::VectorXd::Unit(n, start);
  v.normalize();

  PrincipalComponent pc;
  for (int it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd w = covariance * v;
    const double norm = w.norm();
    if (norm == 0.0) break;
    w /= norm;
    if (w.dot(v) < 0.0) w = -w;
    const double change = (w - v).norm();
    v = w;
    pc.iterations = it;
    if (change < tolerance) {
      pc.converged = true;
      break;
    }
  }
  Eigen::Index big = 0;
  v.cwiseAbs().maxCoeff(&big);
  if (v(big) < 0.0) v = -v;
  pc.direction = v;
  pc.variance = v.dot(covariance * v);
  return pc;
}

PcaSeries pca_over_time(const std::vector<std::vector<Eigen::VectorXd>>& points, std::vector<double> times) {
  if (points.empty() || times.empty()) throw std::invalid_argument("pca: no points");
  if (points.size() < 2 && times.size() < 2) throw std::invalid_argument("pca: need two series or two times");
  const Eigen::Index d = points.front().front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  std::size_t count = 0;
  for (const auto& series : points) {
    if (series.size() != times.size()) throw ShapeError("pca: series length does not match the time grid");
    for (const auto& p : series) {
      if (p.size() != d) throw ShapeError("pca: mixed latent dimensions");
      mean += p;
      ++count;
    }
  }
  mean /= static_cast<double>(count);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& series : points)
    for (const auto& p : series) cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(count);

  PcaSeries out;
  out.times = std::move(times);
  out.mean = mean;
  out.component = leading_component(cov);
  for (const auto& series : points) {
    std::vector<double> s;
    s.reserve(series.size());
    for (const auto& p : series) s.push_back(out.component.direction.dot(p - mean));
    out.scores.push_back(std::move(s));
  }
  return out;
}

PcaSeries pca_over_time(std::span<const InterpolationCurve> curves, int times) {
  if (curves.empty()) throw std::invalid_argument("pca: no curves");
  if (times < 2) throw std::invalid_argument("pca: need at least two times");
  const double T = curves.front().total_time();
  std::vector<double> grid(static_cast<std::size_t>(times));
  for (int i = 0; i < times; ++i) grid[i] = i + 1 == times ? T : T * i / (times - 1);

  std::vector<std::vector<Eigen::VectorXd>> points;
  for (const auto& c : curves) {
    const std::size_t first = points.size();
    points.resize(first + c.batch());
    for (double t : grid) {
      const Tensor z = c.latent_at(t);
      for (std::size_t b = 0; b < c.batch(); ++b) {
        Eigen::VectorXd p(z.cols());
        for (std::size_t j = 0; j < z.cols(); ++j) p(j) = z(b, j);
        points[first + b].push_back(std::move(p));
      }
    }
  }
  return pca_over_time(points, grid);
}

void write_pca_csv(std::ostream& os, const PcaSeries& pca) {
  os << 't';
  for (std::size_t s = 0; s < pca.scores.size(); ++s) os << ",pc1_" << s;
  os << '\n' << std::setprecision(17);
  for (std::size_t k = 0; k < pca.times.size(); ++k) {
    os << pca.times[k];
    for (const auto& s : pca.scores) os << ',' << s[k];
    os << '\n';
  }
}

std::string to_string(BenchKind kind) {
  switch (kind) {
    case BenchKind::Rk4: return "rk4";
    case BenchKind::Euler: return "euler";
    case BenchKind::Lerp: return "lerp";
    case BenchKind::Slerp: return "slerp";
  }
  return "rk4";
}

BenchKind bench_kind_from_string(const std::string& name) {
  if (name == "rk4") return BenchKind::Rk4;
  if (name == "euler") return BenchKind::Euler;
  if (name == "lerp") return BenchKind::Lerp;
  if (name == "slerp") return BenchKind::Slerp;
  throw std::invalid_argument("unknown bench kind '" + name + "'");
}

std::vector<TimingRow> bench_interpolants(const ModelBundle& bundle, std::span<const BenchKind> kinds,
                                          std::span<const int> steps, std::size_t items, int repeats,
                                          std::uint64_t seed) {
  if (steps.empty()) throw std::invalid_argument("bench: empty steps list");
  if (items == 0 || repeats < 1) throw std::invalid_argument("bench: need items and repeats");
  std::mt19937_64 rng(seed);
  const std::size_t dim = bundle.config.data_dim;
  const Tensor source = standard_normal(items, dim, rng);
  const Tensor target = standard_normal(items, dim, rng);
  const Tensor z0 = encode_position(bundle, source);
  const Tensor feature = encode_position(bundle, target);
  const Tensor eps = standard_normal(items, bundle.config.latent_dim, rng);
  const SecondOrderField field = second_order_field(bundle.field);

  auto run = [&](BenchKind kind, int n) {
    SolverConfig solver;
    solver.steps = n;
    solver.method = kind == BenchKind::Euler ? SolverMethod::Euler : SolverMethod::Rk4;
    if (kind == BenchKind::Lerp || kind == BenchKind::Slerp) {
      // One latent per grid node, matching the sample count of the ODE runs.
      for (int k = 0; k <= n; ++k) {
        const double t = k == n ? solver.total_time : solver.step_size() * k;
        const Tensor z = kind == BenchKind::Lerp ? lerp(z0, feature, t, solver.total_time)
                                                 : slerp(z0, feature, t, solver.total_time);
        if (!z.all_finite()) throw NumericError("bench: non-finite interpolant");
      }
      return;
    }
    const VelocityPrior prior = encode_velocity(bundle, z0, feature);
    const Tensor v0 = sample_initial_velocity(prior, eps);
    const LatentTrajectory traj = integrate(field, {z0, v0}, solver);
    if (!traj.terminal().all_finite()) throw NumericError("bench: non-finite interpolant");
  };

  std::vector<TimingRow> out;
  for (BenchKind kind : kinds) {
    run(kind, steps.front());  // warm-up
    for (int n : steps) {
      std::vector<double> samples;
      for (int r = 0; r < repeats; ++r) {
        const auto start = std::chrono::steady_clock::now();
        run(kind, n);
        samples.push_back(seconds_since(start));
      }
      double mean = 0.0;
      for (double s : samples) mean += s;
      mean /= repeats;
      double var = 0.0;
      for (double s : samples) var += (s - mean) * (s - mean);
      const double sd = repeats > 1 ? std::sqrt(var / (repeats - 1)) : 0.0;
      out.push_back({kind, n, mean, sd});
    }
  }
  return out;
}

void write_timing_csv(std::ostream& os, std::span<const TimingRow> rows) {
  std::vector<BenchKind> kinds;
  std::vector<int> steps;
  for (const auto& r : rows) {
    if (std::find(kinds.begin(), kinds.end(), r.kind) == kinds.end()) kinds.push_back(r.kind);
    if (std::find(steps.begin(), steps.end(), r.steps) == steps.end()) steps.push_back(r.steps);
  }
  os << "steps";
  for (BenchKind k : kinds) os << ',' << to_string(k) << "_mean," << to_string(k) << "_std";
  os << '\n' << std::setprecision(9);
  for (int n : steps) {
    os << n;
    for (BenchKind k : kinds) {
      const auto it = std::find_if(rows.begin(), rows.end(), [&](const TimingRow& r) { return r.kind == k && r.steps == n; });
      if (it == rows.end()) {
        os << ",,";
      } else {
        os << ',' << it->mean_seconds << ',' << it->std_seconds;
      }
    }
    os << '\n';
  }
}

std::vector<SweepRow> eval_step_sweep(const ModelBundle& bundle, const Dataset& data, std::span<const int> steps,
                                      std::span<const SolverMethod> methods, const GenerationSettings& base) {
  if (steps.empty() || methods.empty()) throw std::invalid_argument("sweep: empty configuration list");
  std::vector<SweepRow> out;
  for (SolverMethod m : methods) {
    for (int n : steps) {
      GenerationSettings s = base;
      s.solver.method = m;
      s.solver.steps = n;
      out.push_back({m, n, eval_generation(bundle, data, s)});
    }
  }
  return out;
}

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
  std::vector<SolverMethod> methods;
  std::vector<int> steps;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    if (std::find(steps.begin(), steps.end(), r.steps) == steps.end()) steps.push_back(r.steps);
  }
  os << "steps";
  for (SolverMethod m : methods) os << ',' << to_string(m);
  os << '\n' << std::setprecision(9);
  for (int n : steps) {
    os << n;
    for (SolverMethod m : methods) {
      const auto it = std::find_if(rows.begin(), rows.end(), [&](const SweepRow& r) { return r.method == m && r.steps == n; });
      os << ',';
      if (it != rows.end()) os << it->fid;
    }
    os << '\n';
  }
}

EvalReport evaluate(const ModelBundle& bundle, const Dataset& data, const ReportSettings& settings) {
  const GenerationSettings& gen = settings.generation;
  EvalReport report;
  report.method = to_string(bundle.config.kind);
  report.support = to_string(gen.support);
  report.solver = to_string(gen.solver.method);
  report.steps = gen.solver.steps;

  auto start = std::chrono::steady_clock::now();
  report.surrogate_fid = eval_generation(bundle, data, gen);
  report.generation_seconds = seconds_since(start);

  std::mt19937_64 rng(gen.seed + 1);
  const PairBatch pairs = sample_pairs(data, gen.support, settings.curve_pairs, rng);
  const InterpolationCurve curve = generate_curve(bundle, pairs.source, pairs.target, gen.solver, rng);
  report.smoothness = smoothness(curve, settings.smoothness_samples);

  const Tensor x0 = curve.at(0.0);
  const Tensor xT = curve.at(curve.total_time());
  double sq = 0.0;
  for (std::size_t r = 0; r < x0.rows(); ++r) {
    const double a = row_distance(x0, pairs.source, r);
    const double b = row_distance(xT, pairs.target, r);
    sq += a * a + b * b;
  }
  report.endpoint_mse = sq / (2.0 * static_cast<double>(x0.rows()));

  const std::vector<double> res = manifold_residuals(data.name, curve.at(0.5 * curve.total_time()));
  double total = 0.0;
  for (double r : res) total += r;
  report.midpoint_residual = total / static_cast<double>(res.size());

  const PairBatch fam = sample_pairs(data, gen.support, settings.family_pairs, rng);
  const auto family =
      sample_trajectory_family(bundle, fam.source, fam.target, settings.family_size, gen.solver, rng);
  const DiversityReport div = diversity(family, settings.diversity_times);
  report.diversity = div.interior;
  report.endpoint_disagreement = div.at_end;
  return report;
}

void write_report(std::ostream& os, const EvalReport& r) {
  os << std::setprecision(12);
  os << "method = " << r.method << '\n'
     << "support = " << r.support << '\n'
     << "solver = " << r.solver << '\n'
     << "steps = " << r.steps << '\n'
     << "surrogate_fid = " << r.surrogate_fid << '\n'
     << "smoothness = " << r.smoothness << '\n'
     << "diversity = " << r.diversity << '\n'
     << "endpoint_disagreement = " << r.endpoint_disagreement << '\n'
     << "endpoint_mse = " << r.endpoint_mse << '\n'
     << "midpoint_residual = " << r.midpoint_residual << '\n'
     << "generation_seconds = " << r.generation_seconds << '\n';
}

void write_report_csv_header(std::ostream& os) {
  os << "method,support,solver,steps,surrogate_fid,smoothness,diversity,endpoint_disagreement,endpoint_mse,"
        "midpoint_residual,generation_seconds\n";
}

void write_report_csv_row(std::ostream& os, const EvalReport& r) {
  os << std::setprecision(12) << r.method << ',' << r.support << ',' << r.solver << ',' << r.steps << ','
     << r.surrogate_fid << ',' << r.smoothness << ',' << r.diversity << ',' << r.endpoint_disagreement << ','
     << r.endpoint_mse << ',' << r.midpoint_residual << ',' << r.generation_seconds << '\n';
}

}  // namespace neurint
