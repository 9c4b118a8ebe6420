#include "neurint/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include "neurint/baselines.hpp"
#include "neurint/io.hpp"

namespace neurint {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct Options {
  std::string checkpoint;
  std::string resume;
  std::string method;
  std::optional<int> steps;
  std::string solver;
  std::optional<std::size_t> source;
  std::optional<std::size_t> target;
  int frames = 9;
  std::optional<int> k;
  std::optional<std::size_t> count;
  std::string support;
};

struct Context {
  RunConfig config;
  fs::path out;
  std::ostream& log;

  fs::path file(const std::string& name) const { return out / name; }
};

Context make_context(const Globals& g, std::ostream& log) {
  RunConfig cfg;
  if (!g.config.empty()) cfg = load_run_config(g.config);
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.train.seed = *g.seed;
  }
  if (!g.out.empty()) cfg.out = g.out;
  cfg.validate();
  fs::create_directories(cfg.out);
  return {cfg, fs::path(cfg.out), log};
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

void echo_config(const Context& ctx) {
  auto os = open_out(ctx.file("config.cfg"));
  write_run_config(os, ctx.config);
}

Dataset dataset_for(const RunConfig& cfg) { return generate_dataset(cfg.dataset, cfg.dataset_size, cfg.dataset_seed); }

fs::path checkpoint_path(const Context& ctx, const Options& o) {
  return o.checkpoint.empty() ? ctx.file("checkpoint.nrnt") : fs::path(o.checkpoint);
}

Checkpoint load_for(const Context& ctx, const Options& o) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path(ctx, o));
  if (ckpt.config.dataset != ctx.config.dataset || ckpt.config.dataset_size != ctx.config.dataset_size ||
      ckpt.config.dataset_seed != ctx.config.dataset_seed) {
    ctx.log << "note: using dataset settings stored in the checkpoint\n";
  }
  return ckpt;
}

SolverConfig solver_for(const RunConfig& cfg, const Options& o) {
  SolverConfig s = cfg.train.solver;
  if (!o.solver.empty()) s.method = solver_method_from_string(o.solver);
  if (o.steps) s.steps = *o.steps;
  s.validate();
  return s;
}

// Bundle re-targeted to `method`. Closed-form methods reuse the trained E and G;
// ODE methods need a checkpoint trained with a compatible field.
ModelBundle bundle_for_method(ModelBundle bundle, const std::string& method) {
  if (method.empty()) return bundle;
  const InterpolatorKind kind = interpolator_kind_from_string(method);
  const InterpolatorKind have = bundle.config.kind;
  const bool compatible = kind == have || is_closed_form(kind) || (is_second_order(kind) && is_second_order(have));
  if (!compatible) {
    throw std::invalid_argument("checkpoint was trained as '" + to_string(have) + "'; method '" + method +
                                "' needs a checkpoint trained with it");
  }
  bundle.config.kind = kind;
  return bundle;
}

std::pair<std::size_t, std::size_t> pick_pair(const Dataset& data, const Options& o, std::uint64_t seed) {
  auto check = [&](std::size_t i) {
    if (i >= data.n) throw UsageError("item index " + std::to_string(i) + " out of range (n=" + std::to_string(data.n) + ")");
    return i;
  };
  if (o.source && o.target) return {check(*o.source), check(*o.target)};
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 3);
  const PairBatch p = sample_pairs(data, Support::Train, 1, rng);
  return {o.source ? check(*o.source) : p.source_index[0], o.target ? check(*o.target) : p.target_index[0]};
}

std::vector<double> frame_times(double T, int frames) {
  if (frames < 2) throw UsageError("--frames must be >= 2");
  std::vector<double> t(static_cast<std::size_t>(frames));
  for (int i = 0; i < frames; ++i) t[i] = i + 1 == frames ? T : T * i / (frames - 1);
  return t;
}

void write_points_csv(std::ostream& os, const std::vector<double>& times, const Tensor& rows, const char* prefix) {
  os << 't';
  for (std::size_t j = 0; j < rows.cols(); ++j) os << ',' << prefix << j;
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < times.size(); ++i) {
    os << times[i];
    for (std::size_t j = 0; j < rows.cols(); ++j) os << ',' << rows(i, j);
    os << '\n';
  }
}

// --------------------------------------------------------------------------

int cmd_train(const Context& ctx, const Options& o) {
  echo_config(ctx);
  const RunConfig& cfg = ctx.config;
  const Dataset data = dataset_for(cfg);
  const TrainConfig tc = cfg.train_config();
  const long total = tc.resolved_total_steps(data.indices(Support::Train).size());
  auto loss = open_out(ctx.file("loss.csv"));
  write_loss_csv_header(loss);

  Checkpoint ckpt;
  ckpt.config = cfg;
  if (cfg.method == InterpolatorKind::NeurintPT) {
    if (!o.resume.empty()) throw UsageError("--resume is not supported for neurint-pt");
    PretrainResult r = train_neurint_pt(data, cfg.bundle_config(), tc, PretrainSchedule::from_budget(total));
    for (const LossReport& rep : r.history) write_loss_csv_row(loss, rep);
    ckpt.bundle = std::move(r.bundle);
    ckpt.step = total;
  } else {
    std::optional<Checkpoint> resumed;
    if (!o.resume.empty()) resumed = load_checkpoint(o.resume);
    Trainer trainer(resumed ? resumed->bundle : ModelBundle::create(cfg.bundle_config(), tc.seed), tc);
    std::mt19937_64 data_rng = training_data_rng(tc.seed);
    if (resumed) {
      resumed->generator_optimizer.restore(trainer.generator_optimizer());
      resumed->discriminator_optimizer.restore(trainer.discriminator_optimizer());
      trainer.rng() = rng_from_state(resumed->trainer_rng);
      data_rng = rng_from_state(resumed->data_rng);
      trainer.set_steps(resumed->step);
    }
    run_training(trainer, data, data_rng, total,
                 [&](const Trainer&, const LossReport& rep) { write_loss_csv_row(loss, rep); });
    ckpt.bundle = trainer.bundle();
    ckpt.generator_optimizer = OptimizerSnapshot::of(trainer.generator_optimizer());
    ckpt.discriminator_optimizer = OptimizerSnapshot::of(trainer.discriminator_optimizer());
    ckpt.trainer_rng = rng_state(trainer.rng());
    ckpt.data_rng = rng_state(data_rng);
    ckpt.step = trainer.steps();
  }
  save_checkpoint(ctx.file("checkpoint.nrnt"), ckpt);
  ctx.log << "trained " << to_string(cfg.method) << " for " << ckpt.step << " steps; wrote "
          << ctx.file("checkpoint.nrnt").string() << '\n';
  return 0;
}

int cmd_generate(const Context& ctx, const Options& o) {
  echo_config(ctx);
  const Checkpoint ckpt = load_for(ctx, o);
  const Dataset data = dataset_for(ckpt.config);
  GenerationSettings g = ctx.config.generation;
  g.solver = solver_for(ctx.config, o);
  g.seed = ctx.config.seed;
  if (o.count) g.pairs = *o.count;
  if (!o.support.empty()) g.support = support_from_string(o.support);
  const ModelBundle bundle = bundle_for_method(ckpt.bundle, o.method);
  const Tensor samples = generate_intermediates(bundle, data, g);
  auto os = open_out(ctx.file("generated.csv"));
  for (std::size_t j = 0; j < samples.cols(); ++j) os << (j ? "," : "") << "x_" << j;
  os << '\n' << std::setprecision(17);
  for (std::size_t r = 0; r < samples.rows(); ++r) {
    for (std::size_t j = 0; j < samples.cols(); ++j) os << (j ? "," : "") << samples(r, j);
    os << '\n';
  }
  const std::size_t shown = std::min<std::size_t>(samples.rows(), 16);
  const auto strip = write_strip(ctx.file("generated"), slice_rows(samples, 0, shown), 1, shown, data.image_like());
  if (!data.image_like()) ctx.log << "note: 2D data, wrote scatter CSV " << strip.string() << " instead of an image\n";
  ctx.log << "wrote " << samples.rows() << " samples\n";
  return 0;
}

int cmd_interpolate(const Context& ctx, const Options& o) {
  echo_config(ctx);
  const Checkpoint ckpt = load_for(ctx, o);
  const Dataset data = dataset_for(ckpt.config);
  const ModelBundle bundle = bundle_for_method(ckpt.bundle, o.method);
  const SolverConfig solver = solver_for(ctx.config, o);
  const auto [si, ti] = pick_pair(data, o, ctx.config.seed);
  const std::vector<std::size_t> a{si}, b{ti};
  std::mt19937_64 rng(ctx.config.seed);
  const InterpolationCurve curve = generate_curve(bundle, data.rows(a), data.rows(b), solver, rng);

  {
    auto os = open_out(ctx.file("trajectory.csv"));
    const LatentPath& path = curve.path();
    if (path.trajectory()) {
      path.trajectory()->write_csv(os);
    } else {
      std::vector<double> t(path.grid_nodes());
      std::vector<Tensor> zs;
      for (std::size_t k = 0; k < t.size(); ++k) {
        t[k] = k + 1 == t.size() ? solver.total_time : solver.step_size() * static_cast<double>(k);
        zs.push_back(path.at_grid(k));
      }
      write_points_csv(os, t, concat_rows(zs), "z_");
    }
  }
  const auto times = frame_times(solver.total_time, o.frames);
  const Tensor frames = curve.sample_images(times);
  {
    auto os = open_out(ctx.file("curve.csv"));
    write_points_csv(os, times, frames, "x_");
  }
  std::vector<Tensor> with_ends{data.rows(a), frames, data.rows(b)};
  const auto strip = write_strip(ctx.file("interpolation"), concat_rows(with_ends), 1, times.size() + 2,
                                 data.image_like());
  if (!data.image_like()) ctx.log << "note: 2D data, wrote scatter CSV " << strip.string() << " instead of an image\n";
  ctx.log << "interpolated item " << si << " -> " << ti << " with " << to_string(bundle.config.kind) << '\n';
  return 0;
}

int cmd_family(const Context& ctx, const Options& o) {
  echo_config(ctx);
  const Checkpoint ckpt = load_for(ctx, o);
  const Dataset data = dataset_for(ckpt.config);
  const ModelBundle bundle = bundle_for_method(ckpt.bundle, o.method);
  const SolverConfig solver = solver_for(ctx.config, o);
  const int k = o.k.value_or(ctx.config.report.family_size);
  if (k < 2) throw UsageError("--k must be >= 2");
  const auto [si, ti] = pick_pair(data, o, ctx.config.seed);
  const std::vector<std::size_t> a{si}, b{ti};
  std::mt19937_64 rng(ctx.config.seed);
  const auto family = sample_trajectory_family(bundle, data.rows(a), data.rows(b), k, solver, rng);
  const auto times = frame_times(solver.total_time, o.frames);

  std::vector<Tensor> rows;
  {
    auto os = open_out(ctx.file("family.csv"));
    os << "curve,t";
    for (std::size_t j = 0; j < data.dim(); ++j) os << ",x_" << j;
    os << '\n' << std::setprecision(17);
    for (int c = 0; c < k; ++c) {
      const Tensor f = family[c].sample_images(times);
      rows.push_back(f);
      for (std::size_t i = 0; i < times.size(); ++i) {
        os << c << ',' << times[i];
        for (std::size_t j = 0; j < f.cols(); ++j) os << ',' << f(i, j);
        os << '\n';
      }
    }
  }
  {
    auto os = open_out(ctx.file("family_pca.csv"));
    write_pca_csv(os, pca_over_time(family, solver.steps + 1));
  }
  const DiversityReport div = diversity(family, ctx.config.report.diversity_times);
  {
    auto os = open_out(ctx.file("family_diversity.txt"));
    os << std::setprecision(12) << "interior = " << div.interior << "\nat_start = " << div.at_start
       << "\nat_end = " << div.at_end << '\n';
  }
  const auto strip = write_strip(ctx.file("family"), concat_rows(rows), static_cast<std::size_t>(k), times.size(),
                                 data.image_like());
  if (!data.image_like()) ctx.log << "note: 2D data, wrote scatter CSV " << strip.string() << " instead of an image\n";
  ctx.log << "sampled " << k << " trajectories; interior diversity " << div.interior << ", endpoint disagreement "
          << div.at_end << '\n';
  return 0;
}

int cmd_eval(const Context& ctx, const Options& o) {
  echo_config(ctx);
  const Checkpoint ckpt = load_for(ctx, o);
  const Dataset data = dataset_for(ckpt.config);
  const ModelBundle bundle = bundle_for_method(ckpt.bundle, o.method);
  ReportSettings rs = ctx.config.report;
  rs.generation = ctx.config.generation;
  rs.generation.solver = solver_for(ctx.config, o);
  if (!o.support.empty()) rs.generation.support = support_from_string(o.support);
  const EvalReport report = evaluate(bundle, data, rs);
  {
    auto os = open_out(ctx.file("report.txt"));
    write_report(os, report);
  }
  {
    auto os = open_out(ctx.file("report.csv"));
    write_report_csv_header(os);
    write_report_csv_row(os, report);
  }
  write_report(ctx.log, report);
  return 0;
}

int cmd_sweep(const Context& ctx, const Options& o) {
  echo_config(ctx);
  const Checkpoint ckpt = load_for(ctx, o);
  const Dataset data = dataset_for(ckpt.config);
  const ModelBundle bundle = bundle_for_method(ckpt.bundle, o.method);
  const std::vector<int> steps{12, 16, 20, 24, 28, 32};
  std::vector<SolverMethod> methods{SolverMethod::Rk4, SolverMethod::Euler};
  if (!o.solver.empty()) methods = {solver_method_from_string(o.solver)};
  GenerationSettings g = ctx.config.generation;
  g.solver = ctx.config.train.solver;
  if (!o.support.empty()) g.support = support_from_string(o.support);
  const auto rows = eval_step_sweep(bundle, data, steps, methods, g);
  auto os = open_out(ctx.file("sweep.csv"));
  write_sweep_csv(os, rows);
  write_sweep_csv(ctx.log, rows);
  return 0;
}

int cmd_bench(const Context& ctx, const Options& o) {
  echo_config(ctx);
  const Checkpoint ckpt = load_for(ctx, o);
  const std::vector<int> steps{12, 16, 20, 24, 28, 32};
  const std::vector<BenchKind> kinds{BenchKind::Rk4, BenchKind::Euler, BenchKind::Lerp, BenchKind::Slerp};
  const std::size_t items = o.count.value_or(ctx.config.bench_items);
  const auto rows = bench_interpolants(ckpt.bundle, kinds, steps, items, ctx.config.bench_repeats, ctx.config.seed);
  auto os = open_out(ctx.file("bench.csv"));
  write_timing_csv(os, rows);
  write_timing_csv(ctx.log, rows);
  return 0;
}

int cmd_ablate(const Context& ctx, const Options& o) {
  echo_config(ctx);
  const RunConfig& cfg = ctx.config;
  const Dataset data = dataset_for(cfg);
  const TrainConfig tc = cfg.train_config();
  const long budget =
      cfg.ablate_steps > 0 ? cfg.ablate_steps : tc.resolved_total_steps(data.indices(Support::Train).size());
  TrainConfig fixed = tc;
  fixed.total_steps = budget;
  ReportSettings rs = cfg.report;
  rs.generation = cfg.generation;
  rs.generation.solver = solver_for(cfg, o);

  auto os = open_out(ctx.file("ablation.csv"));
  write_report_csv_header(os);
  const std::vector<InterpolatorKind> kinds{InterpolatorKind::Neurint, InterpolatorKind::NeurintPT,
                                            InterpolatorKind::Lerp, InterpolatorKind::Slerp,
                                            InterpolatorKind::FirstOrderPlain, InterpolatorKind::FirstOrderConditioned};
  for (InterpolatorKind kind : kinds) {
    BundleConfig bc = cfg.bundle_config();
    bc.kind = kind;
    ModelBundle bundle = kind == InterpolatorKind::NeurintPT
                             ? train_neurint_pt(data, bc, fixed, PretrainSchedule::from_budget(budget)).bundle
                             : train_variant(kind, data, bc, fixed).bundle;
    const EvalReport report = evaluate(bundle, data, rs);
    write_report_csv_row(os, report);
    ctx.log << std::setw(11) << to_string(kind) << "  surrogate_fid " << report.surrogate_fid << '\n';
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned distributions over interpolation trajectories", "neurint"};
  app.require_subcommand(1);
  Globals g;
  Options o;
  app.add_option("--config", g.config, "run configuration file (key = value)");
  app.add_option("--seed", g.seed, "seed (overrides the config)");
  app.add_option("--out", g.out, "output directory (overrides the config)");

  auto ckpt_opt = [&](CLI::App* sub) {
    sub->add_option("--checkpoint", o.checkpoint, "checkpoint to load (default <out>/checkpoint.nrnt)");
  };
  auto solver_opts = [&](CLI::App* sub) {
    sub->add_option("--steps", o.steps, "integration steps")->check(CLI::PositiveNumber);
    sub->add_option("--solver", o.solver, "euler or rk4")->check(CLI::IsMember({"euler", "rk4"}));
  };
  auto method_opt = [&](CLI::App* sub) {
    sub->add_option("--method", o.method, "interpolation method")
        ->check(CLI::IsMember({"neurint", "lerp", "slerp", "fo1", "fo2", "neurint-pt"}));
  };
  auto pair_opts = [&](CLI::App* sub) {
    sub->add_option("--source", o.source, "source item index");
    sub->add_option("--target", o.target, "target item index");
    sub->add_option("--frames", o.frames, "time samples in the rendered strip");
  };
  auto support_opt = [&](CLI::App* sub) {
    sub->add_option("--support", o.support, "train, test or train+test")
        ->check(CLI::IsMember({"train", "test", "both", "train+test"}));
  };

  auto* train = app.add_subcommand("train", "train a model; writes loss.csv and checkpoint.nrnt");
  train->add_option("--resume", o.resume, "continue from a checkpoint");
  auto* generate = app.add_subcommand("generate", "sample intermediates at random times");
  ckpt_opt(generate);
  solver_opts(generate);
  method_opt(generate);
  support_opt(generate);
  generate->add_option("--count", o.count, "number of pairs");
  auto* interpolate = app.add_subcommand("interpolate", "one interpolation curve between two items");
  ckpt_opt(interpolate);
  solver_opts(interpolate);
  method_opt(interpolate);
  pair_opts(interpolate);
  auto* family = app.add_subcommand("family", "K sampled trajectories for one pair, with PCA over time");
  ckpt_opt(family);
  solver_opts(family);
  method_opt(family);
  pair_opts(family);
  family->add_option("--k", o.k, "number of trajectories");
  auto* eval = app.add_subcommand("eval", "evaluation report for a checkpoint");
  ckpt_opt(eval);
  solver_opts(eval);
  method_opt(eval);
  support_opt(eval);
  auto* sweep = app.add_subcommand("sweep", "surrogate FID over solver steps 12..32");
  ckpt_opt(sweep);
  method_opt(sweep);
  support_opt(sweep);
  sweep->add_option("--solver", o.solver, "restrict to one solver")->check(CLI::IsMember({"euler", "rk4"}));
  auto* bench = app.add_subcommand("bench", "latent interpolant generation timings");
  ckpt_opt(bench);
  bench->add_option("--count", o.count, "items per run");
  auto* ablate = app.add_subcommand("ablate", "train and score every interpolation method at one budget");
  solver_opts(ablate);
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return 2;
  }

  try {
    const Context ctx = make_context(g, out);
    if (*train) return cmd_train(ctx, o);
    if (*generate) return cmd_generate(ctx, o);
    if (*interpolate) return cmd_interpolate(ctx, o);
    if (*family) return cmd_family(ctx, o);
    if (*eval) return cmd_eval(ctx, o);
    if (*sweep) return cmd_sweep(ctx, o);
    if (*bench) return cmd_bench(ctx, o);
    if (*ablate) return cmd_ablate(ctx, o);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace neurint
