#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "neurint/cli.hpp"
#include "neurint/io.hpp"

using namespace neurint;
namespace fs = std::filesystem;

namespace {

const char* kTiny =
    "dataset = ring2d\ndataset_size = 120\nlatent_dim = 3\nencoder_hidden = 8\nvelocity_hidden = 8\n"
    "field_hidden = 8\ngenerator_hidden = 8\ndiscriminator_hidden = 8\nbatch_size = 8\ntime_samples = 2\n"
    "steps = 6\ntrain_steps = 12\neval_pairs = 20\neval_curve_pairs = 4\nsmoothness_samples = 9\n"
    "family_pairs = 2\nfamily_size = 3\nbench_items = 8\nbench_repeats = 2\nablate_steps = 8\n";

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "neurint_cli_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

fs::path tiny_config(const fs::path& dir) {
  const fs::path p = dir / "tiny.cfg";
  std::ofstream(p) << kTiny;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<double> csv_row(const std::string& text, std::size_t line) {
  std::istringstream is(text);
  std::string row;
  for (std::size_t i = 0; i <= line; ++i) std::getline(is, row);
  std::vector<double> v;
  std::istringstream rs(row);
  for (std::string cell; std::getline(rs, cell, ',');) v.push_back(std::stod(cell));
  return v;
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"interpolate", "--method", "cubic"}).code, 2);
  const fs::path dir = fresh_dir("usage");
  const CliRun r = cli({"--config", (dir / "missing.cfg").string(), "train"});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(r.err.empty());
}

TEST(Cli, SeededTrainingIsDeterministic) {
  const fs::path dir = fresh_dir("determinism");
  const fs::path cfg = tiny_config(dir);
  const fs::path out = dir / "run";
  std::string loss[2], ckpt[2];
  for (int i = 0; i < 2; ++i) {
    const CliRun r = cli({"--config", cfg.string(), "--seed", "5", "--out", out.string(), "train"});
    ASSERT_EQ(r.code, 0) << r.err;
    loss[i] = slurp(out / "loss.csv");
    ckpt[i] = slurp(out / "checkpoint.nrnt");
  }
  EXPECT_EQ(loss[0].substr(0, loss[0].find('\n')), "step,epoch,lambda,l_ae,l_gan_disc,l_gan_gen");
  EXPECT_EQ(std::count(loss[0].begin(), loss[0].end(), '\n'), 13);
  EXPECT_EQ(loss[0], loss[1]);
  EXPECT_EQ(ckpt[0], ckpt[1]);
  EXPECT_TRUE(fs::exists(out / "config.cfg"));
}

TEST(Cli, LerpCurveStartsAtReconstructedSource) {
  const fs::path dir = fresh_dir("lerp");
  const fs::path cfg = tiny_config(dir);
  const std::string out = (dir / "run").string();
  ASSERT_EQ(cli({"--config", cfg.string(), "--out", out, "train"}).code, 0);
  const CliRun r = cli({"--config", cfg.string(), "--out", out, "interpolate", "--method", "lerp", "--source", "3",
                     "--target", "40", "--frames", "5"});
  ASSERT_EQ(r.code, 0) << r.err;

  const Checkpoint ckpt = load_checkpoint(fs::path(out) / "checkpoint.nrnt");
  const Dataset data = generate_dataset(ckpt.config.dataset, ckpt.config.dataset_size, ckpt.config.dataset_seed);
  const std::vector<std::size_t> src{3};
  const Tensor expect = decode(ckpt.bundle, encode_position(ckpt.bundle, data.rows(src)));
  const std::string curve = slurp(fs::path(out) / "curve.csv");
  const auto first = csv_row(curve, 1);
  ASSERT_EQ(first.size(), 3u);
  EXPECT_EQ(first[0], 0.0);
  EXPECT_EQ(first[1], expect(0, 0));
  EXPECT_EQ(first[2], expect(0, 1));
  EXPECT_EQ(csv_row(curve, 5)[0], 1.0);
  EXPECT_TRUE(fs::exists(fs::path(out) / "trajectory.csv"));
}

TEST(Cli, SweepAndFamilyAndEvalWriteOnlyUnderOut) {
  const fs::path dir = fresh_dir("outputs");
  const fs::path cfg = tiny_config(dir);
  const fs::path out = dir / "run";
  const std::string o = out.string();
  ASSERT_EQ(cli({"--config", cfg.string(), "--out", o, "train"}).code, 0);
  const auto before = fs::directory_iterator(dir);
  std::size_t siblings = 0;
  for (const auto& e : before) siblings += e.path() != out;

  CliRun r = cli({"--config", cfg.string(), "--out", o, "sweep"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream sweep(slurp(out / "sweep.csv"));
  std::string line;
  std::getline(sweep, line);
  EXPECT_EQ(line, "steps,rk4,euler");
  std::vector<int> steps;
  while (std::getline(sweep, line)) steps.push_back(std::stoi(line.substr(0, line.find(','))));
  EXPECT_EQ(steps, (std::vector<int>{12, 16, 20, 24, 28, 32}));

  r = cli({"--config", cfg.string(), "--out", o, "family", "--k", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(out / "family_pca.csv"));
  EXPECT_EQ(cli({"--config", cfg.string(), "--out", o, "family", "--k", "1"}).code, 2);

  r = cli({"--config", cfg.string(), "--out", o, "eval", "--support", "test"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(out / "report.txt").find("surrogate_fid"), std::string::npos);

  r = cli({"--config", cfg.string(), "--out", o, "bench"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(out / "bench.csv").substr(0, 24), "steps,rk4_mean,rk4_std,e");

  r = cli({"--config", cfg.string(), "--out", o, "generate", "--count", "5"});
  ASSERT_EQ(r.code, 0) << r.err;

  std::size_t after = 0;
  for (const auto& e : fs::directory_iterator(dir)) after += e.path() != out;
  EXPECT_EQ(after, siblings);
}

TEST(Cli, IncompatibleMethodIsAnError) {
  const fs::path dir = fresh_dir("compat");
  const fs::path cfg = tiny_config(dir);
  const std::string o = (dir / "run").string();
  ASSERT_EQ(cli({"--config", cfg.string(), "--out", o, "train"}).code, 0);
  const CliRun r = cli({"--config", cfg.string(), "--out", o, "interpolate", "--method", "fo1"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("fo1"), std::string::npos);
}
