#pragma once

// Run configuration files, NRNT1 checkpoints, CSV tables and P5 strips.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurint/eval.hpp"
#include "neurint/training.hpp"

namespace neurint {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a CLI run depends on. Dataset-dependent model settings
/// (data_dim, latent_dim = 0, generator_output = auto) are resolved by `bundle_config`.
struct RunConfig {
  std::string dataset = "ring2d";
  std::size_t dataset_size = 2000;
  std::uint64_t dataset_seed = 7;

  std::size_t latent_dim = 0;  // 0: 8 for 2D data, 16 for 8x8 images
  std::size_t encoder_hidden = 64;
  std::size_t velocity_hidden = 64;
  std::size_t field_hidden = 32;
  std::vector<std::size_t> generator_hidden{64, 64};
  std::vector<std::size_t> discriminator_hidden{64, 64};
  std::string generator_output = "auto";  // auto: tanh for images, none otherwise
  double leaky_slope = 0.2;
  double field_init_scale = 0.1;
  InterpolatorKind method = InterpolatorKind::Neurint;

  TrainConfig train;  // train.seed mirrors `seed`

  GenerationSettings generation;
  ReportSettings report;
  std::size_t bench_items = 2000;
  int bench_repeats = 10;
  long ablate_steps = 0;  // per variant; 0: same as training

  std::uint64_t seed = 1;
  std::string out = "out";

  BundleConfig bundle_config() const;
  TrainConfig train_config() const;
  void validate() const;
};

/// `key = value` lines; `#` starts a comment. Unknown keys and malformed values throw ConfigError.
RunConfig parse_run_config(std::istream& is, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
/// Every key with its current value, in a form `parse_run_config` reads back.
void write_run_config(std::ostream& os, const RunConfig& config);

struct OptimizerSnapshot {
  long steps = 0;
  std::vector<Tensor> first;
  std::vector<Tensor> second;

  static OptimizerSnapshot of(const Optimizer& opt);
  void restore(Optimizer& opt) const;
};

struct Checkpoint {
  RunConfig config;
  ModelBundle bundle;
  OptimizerSnapshot generator_optimizer;
  OptimizerSnapshot discriminator_optimizer;
  std::string trainer_rng;  // std::mt19937_64 text state, empty if absent
  std::string data_rng;
  long step = 0;
};

inline constexpr char kCheckpointMagic[] = "NRNT1";

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
/// Verifies magic and CRC-32 before building anything.
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Loads parameters into a bundle built from `expected`; any shape disagreement throws ShapeError.
ModelBundle load_bundle(const std::filesystem::path& path, const BundleConfig& expected);

std::string rng_state(const std::mt19937_64& rng);
std::mt19937_64 rng_from_state(const std::string& state);

/// CRC-32 (IEEE) of a byte range.
std::uint32_t crc32_of(const void* data, std::size_t size);

void write_loss_csv_header(std::ostream& os);
void write_loss_csv_row(std::ostream& os, const LossReport& r);

/// Frames are rows of `frames` ([rows*cols, 64], row-major by strip row then
/// column); values in [-1, 1] map linearly to [0, 255]; 1-pixel white separators.
std::string render_strip(const Tensor& frames, std::size_t rows, std::size_t cols);

/// Writes `stem`.pgm for 8x8 image data, or `stem`.csv (columns row, col, x...)
/// otherwise. Returns the written path.
std::filesystem::path write_strip(const std::filesystem::path& stem, const Tensor& frames, std::size_t rows,
                                  std::size_t cols, bool image_like);

}  // namespace neurint
