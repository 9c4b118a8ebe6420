#pragma once

// Evaluation: surrogate Frechet distance, curve smoothness and diversity,
// PCA-over-time of trajectory families, timing and solver sweeps.

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "neurint/bundle.hpp"
#include "neurint/data.hpp"
#include "neurint/model.hpp"

namespace neurint {

struct GaussianFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // symmetric PSD
};

/// Sample mean and unbiased covariance of the rows (needs >= 2 rows).
GaussianFit fit_gaussian(const Tensor& rows);

/// |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2).
double frechet_gaussian_distance(const GaussianFit& a, const GaussianFit& b);

/// Symmetric PSD square root with negative eigenvalues clamped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m);

struct GenerationSettings {
  Support support = Support::Train;
  std::size_t pairs = 2000;
  std::size_t samples_per_pair = 2;
  SolverConfig solver;
  std::uint64_t seed = 1234;
};

/// Curve samples at uniformly random interior times, `samples_per_pair` per pair.
Tensor generate_intermediates(const ModelBundle& bundle, const Dataset& data, const GenerationSettings& settings);

/// Surrogate FID between the support items and generated intermediates.
double eval_generation(const ModelBundle& bundle, const Dataset& data, const GenerationSettings& settings);

using CurveFunction = std::function<Tensor(double)>;

/// Mean of |x(t+dt) - 2x(t) + x(t-dt)|^2 / dt^4 over an n-point uniform grid of [0, T].
double smoothness(const CurveFunction& curve, double total_time, int samples);
double smoothness(const InterpolationCurve& curve, int samples);

struct DiversityReport {
  double interior = 0.0;  // mean over interior times of mean pairwise distance
  double at_start = 0.0;
  double at_end = 0.0;
};

DiversityReport diversity(std::span<const CurveFunction> curves, double total_time, int times);
DiversityReport diversity(std::span<const InterpolationCurve> curves, int times);

struct PrincipalComponent {
  Eigen::VectorXd direction;  // unit norm, largest-magnitude entry positive
  double variance = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Power iteration for the leading eigenvector of a covariance matrix.
PrincipalComponent leading_component(const Eigen::MatrixXd& covariance, double tolerance = 1e-9,
                                     int max_iterations = 10000);

struct PcaSeries {
  std::vector<double> times;
  Eigen::VectorXd mean;
  PrincipalComponent component;
  std::vector<std::vector<double>> scores;  // [series][time]
};

/// First-principal-component scores of latent series pooled over all series.
/// `points[s][k]` is series s at times[k].
PcaSeries pca_over_time(const std::vector<std::vector<Eigen::VectorXd>>& points, std::vector<double> times);
/// Latent points of each curve (every batch row is its own series) at n uniform times over [0, T].
PcaSeries pca_over_time(std::span<const InterpolationCurve> curves, int times);

void write_pca_csv(std::ostream& os, const PcaSeries& pca);

enum class BenchKind { Rk4, Euler, Lerp, Slerp };
std::string to_string(BenchKind kind);
BenchKind bench_kind_from_string(const std::string& name);

struct TimingRow {
  BenchKind kind;
  int steps;
  double mean_seconds;
  double std_seconds;
};

/// Wall-clock of latent-interpolant generation only, for `items` pairs.
std::vector<TimingRow> bench_interpolants(const ModelBundle& bundle, std::span<const BenchKind> kinds,
                                          std::span<const int> steps, std::size_t items, int repeats,
                                          std::uint64_t seed = 99);

/// Table with one row per steps value, one column per kind.
void write_timing_csv(std::ostream& os, std::span<const TimingRow> rows);

struct SweepRow {
  SolverMethod method;
  int steps;
  double fid;
};

/// Same trained model evaluated at each solver config. Every config reuses
/// the same seed, so pairs, noise and sample times are shared.
std::vector<SweepRow> eval_step_sweep(const ModelBundle& bundle, const Dataset& data, std::span<const int> steps,
                                      std::span<const SolverMethod> methods, const GenerationSettings& base);

void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows);

struct EvalReport {
  std::string method;
  std::string support;
  std::string solver;
  int steps = 0;
  double surrogate_fid = 0.0;
  double smoothness = 0.0;
  double diversity = 0.0;
  double endpoint_disagreement = 0.0;
  double endpoint_mse = 0.0;
  double midpoint_residual = 0.0;
  double generation_seconds = 0.0;
};

struct ReportSettings {
  GenerationSettings generation;
  std::size_t curve_pairs = 200;  // pairs used for smoothness/endpoint/residual
  int family_size = 6;
  std::size_t family_pairs = 20;
  int smoothness_samples = 65;
  int diversity_times = 15;
};

/// Every metric for one model.
EvalReport evaluate(const ModelBundle& bundle, const Dataset& data, const ReportSettings& settings);

/// `key = value` lines.
void write_report(std::ostream& os, const EvalReport& report);
void write_report_csv_header(std::ostream& os);
void write_report_csv_row(std::ostream& os, const EvalReport& report);

}  // namespace neurint
