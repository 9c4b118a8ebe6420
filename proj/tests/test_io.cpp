#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "neurint/io.hpp"

using namespace neurint;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "neurint_io_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

RunConfig small_run() {
  RunConfig c;
  c.dataset_size = 100;
  c.latent_dim = 3;
  c.encoder_hidden = 6;
  c.velocity_hidden = 6;
  c.field_hidden = 5;
  c.generator_hidden = {7};
  c.discriminator_hidden = {7};
  c.train.batch_size = 8;
  c.train.time_samples = 2;
  c.train.solver.steps = 6;
  c.seed = 3;
  return c;
}

// A checkpoint after a few real steps, so moments and rng states are non-trivial.
Checkpoint trained_checkpoint(const RunConfig& cfg) {
  const Dataset data = generate_dataset(cfg.dataset, cfg.dataset_size, cfg.dataset_seed);
  Trainer t(ModelBundle::create(cfg.bundle_config(), cfg.seed), cfg.train_config());
  std::mt19937_64 data_rng = training_data_rng(cfg.seed);
  run_training(t, data, data_rng, 3);
  return {cfg,
          t.bundle(),
          OptimizerSnapshot::of(t.generator_optimizer()),
          OptimizerSnapshot::of(t.discriminator_optimizer()),
          rng_state(t.rng()),
          rng_state(data_rng),
          t.steps()};
}

double frame_value(std::size_t k, std::size_t r, std::size_t c) {
  const std::size_t m = (8 * r + c + 7 * k) % 19;
  return static_cast<double>(m) / 8.0 - 1.125;
}

Tensor golden_frames(std::size_t count) {
  Tensor t = Tensor::zeros({count, 64});
  for (std::size_t k = 0; k < count; ++k)
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t c = 0; c < 8; ++c) t(k, r * 8 + c) = frame_value(k, r, c);
  return t;
}

}  // namespace

TEST(Crc, CheckValue) {
  const std::string s = "123456789";
  EXPECT_EQ(crc32_of(s.data(), s.size()), 0xCBF43926u);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const RunConfig cfg = small_run();
  const Checkpoint a = trained_checkpoint(cfg);
  std::stringstream ss;
  write_checkpoint(ss, a);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 6), "NRNT1\n");
  const Checkpoint b = read_checkpoint(ss);

  const auto pa = a.bundle.networks();
  const auto pb = b.bundle.networks();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t n = 0; n < pa.size(); ++n) {
    const auto xa = pa[n].second->parameters();
    const auto xb = pb[n].second->parameters();
    ASSERT_EQ(xa.size(), xb.size());
    for (std::size_t i = 0; i < xa.size(); ++i) {
      EXPECT_EQ(xa[i]->shape(), xb[i]->shape());
      EXPECT_EQ(0, std::memcmp(xa[i]->data().data(), xb[i]->data().data(), xa[i]->size() * sizeof(double)));
    }
  }
  for (const auto* pair : {&a.generator_optimizer, &a.discriminator_optimizer}) {
    const auto& other = pair == &a.generator_optimizer ? b.generator_optimizer : b.discriminator_optimizer;
    EXPECT_EQ(pair->steps, other.steps);
    ASSERT_EQ(pair->first.size(), other.first.size());
    for (std::size_t i = 0; i < pair->first.size(); ++i) {
      EXPECT_EQ(pair->first[i].values(), other.first[i].values());
      EXPECT_EQ(pair->second[i].values(), other.second[i].values());
    }
  }
  EXPECT_EQ(a.generator_optimizer.steps, 3);
  EXPECT_EQ(b.trainer_rng, a.trainer_rng);
  EXPECT_EQ(b.data_rng, a.data_rng);
  EXPECT_EQ(b.step, 3);

  std::ostringstream ca, cb;
  write_run_config(ca, a.config);
  write_run_config(cb, b.config);
  EXPECT_EQ(ca.str(), cb.str());

  std::stringstream again;
  write_checkpoint(again, b);
  EXPECT_EQ(again.str(), bytes);
}

TEST(Checkpoint, FileRoundTripAndLoadBundle) {
  const RunConfig cfg = small_run();
  const Checkpoint a = trained_checkpoint(cfg);
  const fs::path p = scratch("rt.nrnt");
  save_checkpoint(p, a);
  const ModelBundle b = load_bundle(p, cfg.bundle_config());
  EXPECT_EQ(b.generator.weight(0).values(), a.bundle.generator.weight(0).values());
  EXPECT_EQ(b.field.bias(2).values(), a.bundle.field.bias(2).values());
  EXPECT_EQ(load_checkpoint(p).step, a.step);
}

TEST(Checkpoint, TruncatedFileFailsChecksum) {
  const Checkpoint a = trained_checkpoint(small_run());
  std::stringstream ss;
  write_checkpoint(ss, a);
  const std::string bytes = ss.str();
  for (std::size_t cut : {bytes.size() - 1, bytes.size() / 2, std::size_t{8}}) {
    std::istringstream is(bytes.substr(0, cut));
    try {
      read_checkpoint(is);
      FAIL() << "expected CheckpointError at " << cut;
    } catch (const CheckpointError& e) {
      EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos) << e.what();
    }
  }
  std::string flipped = bytes;
  flipped[bytes.size() / 3] ^= 0x10;
  std::istringstream is(flipped);
  EXPECT_THROW(read_checkpoint(is), CheckpointError);
}

TEST(Checkpoint, BadMagic) {
  std::istringstream is("NOPE1\nwhatever");
  try {
    read_checkpoint(is);
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
  }
}

TEST(Checkpoint, MismatchedWidthReportsBothShapes) {
  const RunConfig cfg = small_run();
  const fs::path p = scratch("width.nrnt");
  save_checkpoint(p, trained_checkpoint(cfg));
  RunConfig wider = cfg;
  wider.encoder_hidden = 9;
  try {
    load_bundle(p, wider.bundle_config());
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("[2,9]"), std::string::npos) << what;
    EXPECT_NE(what.find("[2,6]"), std::string::npos) << what;
  }
}

TEST(Config, UnknownKeyRejected) {
  std::istringstream is("seed = 4\n# comment\n\nbogus_key = 1\n");
  try {
    parse_run_config(is);
    FAIL();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("line 4"), std::string::npos) << what;
    EXPECT_NE(what.find("bogus_key"), std::string::npos) << what;
  }
}

TEST(Config, MalformedValuesRejected) {
  for (const char* text : {"seed = abc\n", "steps = 3.5\n", "solver = midpoint\n", "generator_hidden = 4,,5\n",
                           "lambda_start = 1e3x\n", "no equals sign\n", "time_samples = 40\n"}) {
    std::istringstream is(text);
    EXPECT_THROW(parse_run_config(is).validate(), ConfigError) << text;
  }
}

TEST(Config, EchoRoundTrip) {
  std::istringstream is(
      "dataset = bars8x8\nseed = 9\nsteps = 12\nsolver = euler\ngenerator_hidden = 10, 20\n"
      "lambda_start = 500 # trailing comment\neval_support = test\nmethod = fo2\n");
  const RunConfig c = parse_run_config(is);
  EXPECT_EQ(c.dataset, "bars8x8");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.train.solver.steps, 12);
  EXPECT_EQ(c.train.solver.method, SolverMethod::Euler);
  EXPECT_EQ(c.generator_hidden, (std::vector<std::size_t>{10, 20}));
  EXPECT_EQ(c.train.lambda_start, 500.0);
  EXPECT_EQ(c.method, InterpolatorKind::FirstOrderConditioned);
  std::ostringstream first;
  write_run_config(first, c);
  std::istringstream back(first.str());
  std::ostringstream second;
  write_run_config(second, parse_run_config(back));
  EXPECT_EQ(first.str(), second.str());
  EXPECT_EQ(c.bundle_config().latent_dim, 16u);
  EXPECT_EQ(c.bundle_config().generator_output, Activation::Tanh);
  EXPECT_EQ(RunConfig{}.bundle_config().latent_dim, 8u);
}

TEST(LossCsv, Header) {
  std::ostringstream os;
  write_loss_csv_header(os);
  LossReport r;
  r.step = 4;
  r.epoch = 1;
  r.lambda = 550;
  r.reconstruction = 0.5;
  write_loss_csv_row(os, r);
  EXPECT_EQ(os.str(), "step,epoch,lambda,l_ae,l_gan_disc,l_gan_gen\n4,1,550,0.5,0,0\n");
}

TEST(Strip, SingleFrameHeader) {
  const std::string p5 = render_strip(golden_frames(1), 1, 1);
  EXPECT_EQ(p5.substr(0, 11), "P5 8 8 255\n");
  EXPECT_EQ(p5.size(), 11u + 64u);
}

TEST(Strip, ConstantMinusOneIsBlack) {
  const std::string p5 = render_strip(Tensor::full({1, 64}, -1.0), 1, 1);
  for (std::size_t i = 11; i < p5.size(); ++i) EXPECT_EQ(static_cast<unsigned char>(p5[i]), 0) << i;
}

TEST(Strip, GoldenFiles) {
  const fs::path dir = NEURINT_GOLDEN_DIR;
  EXPECT_EQ(render_strip(golden_frames(1), 1, 1), slurp(dir / "strip_1x1.pgm"));
  EXPECT_EQ(render_strip(golden_frames(3), 1, 3), slurp(dir / "strip_1x3.pgm"));
  EXPECT_EQ(render_strip(golden_frames(4), 2, 2), slurp(dir / "strip_2x2.pgm"));
  EXPECT_THROW(render_strip(golden_frames(3), 2, 2), ShapeError);
}

TEST(Strip, NonImageDataWritesScatterCsv) {
  const fs::path stem = scratch("scatter");
  const fs::path written = write_strip(stem, Tensor::matrix({{0.5, 1.0}, {-1.0, 2.0}}), 1, 2, false);
  EXPECT_EQ(written.extension(), ".csv");
  EXPECT_EQ(slurp(written), "row,col,x_0,x_1\n0,0,0.5,1\n0,1,-1,2\n");
  const fs::path img = write_strip(scratch("img"), golden_frames(3), 1, 3, true);
  EXPECT_EQ(img.extension(), ".pgm");
  EXPECT_EQ(slurp(img), slurp(fs::path(NEURINT_GOLDEN_DIR) / "strip_1x3.pgm"));
}
