#include "neurint/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

namespace neurint {

// ---------------------------------------------------------------------------
// RunConfig

BundleConfig RunConfig::bundle_config() const {
  BundleConfig b;
  b.data_dim = dataset_dim(dataset);
  b.latent_dim = latent_dim != 0 ? latent_dim : (is_image_dataset(dataset) ? 16 : 8);
  b.encoder_hidden = encoder_hidden;
  b.velocity_hidden = velocity_hidden;
  b.field_hidden = field_hidden;
  b.generator_hidden = generator_hidden;
  b.discriminator_hidden = discriminator_hidden;
  if (generator_output == "auto") {
    b.generator_output = is_image_dataset(dataset) ? Activation::Tanh : Activation::None;
  } else {
    b.generator_output = activation_from_string(generator_output);
  }
  b.leaky_slope = leaky_slope;
  b.field_init_scale = field_init_scale;
  b.kind = method;
  return b;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

void RunConfig::validate() const {
  dataset_dim(dataset);
  if (dataset_size < 2) throw ConfigError("dataset_size must be >= 2");
  try {
    bundle_config().validate();
    train_config().validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (ablate_steps < 0) throw ConfigError("step budgets must be >= 0");
  if (bench_repeats < 1 || bench_items == 0) throw ConfigError("bench needs items and repeats");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad value for '" + key + "': '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad value for '" + key + "': '" + v + "'");
}

std::vector<std::size_t> parse_widths(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<std::size_t>(key, trim(item)));
  if (out.empty()) throw ConfigError("bad value for '" + key + "': empty list");
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
};

template <class T>
Field integer(T RunConfig::*member) {
  return {[member](const RunConfig& c) { return std::to_string(c.*member); },
          [member](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_number<T>(k, v); }};
}

template <class T>
Field train_integer(T TrainConfig::*member) {
  return {[member](const RunConfig& c) { return std::to_string(c.train.*member); },
          [member](RunConfig& c, const std::string& k, const std::string& v) {
            c.train.*member = parse_number<T>(k, v);
          }};
}

Field real(double RunConfig::*member) {
  return {[member](const RunConfig& c) { return fmt(c.*member); },
          [member](RunConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_number<double>(k, v);
          }};
}

Field train_real(double TrainConfig::*member) {
  return {[member](const RunConfig& c) { return fmt(c.train.*member); },
          [member](RunConfig& c, const std::string& k, const std::string& v) {
            c.train.*member = parse_number<double>(k, v);
          }};
}

Field optimizer_real(OptimizerConfig TrainConfig::*opt, double OptimizerConfig::*member) {
  return {[=](const RunConfig& c) { return fmt(c.train.*opt.*member); },
          [=](RunConfig& c, const std::string& k, const std::string& v) {
            c.train.*opt.*member = parse_number<double>(k, v);
          }};
}

Field optimizer_kind(OptimizerConfig TrainConfig::*opt) {
  return {[=](const RunConfig& c) { return to_string((c.train.*opt).kind); },
          [=](RunConfig& c, const std::string&, const std::string& v) {
            (c.train.*opt).kind = optimizer_kind_from_string(v);
          }};
}

// Ordered as written by write_run_config.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    t.emplace_back("dataset", Field{[](const RunConfig& c) { return c.dataset; },
                                    [](RunConfig& c, const std::string&, const std::string& v) {
                                      dataset_dim(v);
                                      c.dataset = v;
                                    }});
    t.emplace_back("dataset_size", integer(&RunConfig::dataset_size));
    t.emplace_back("dataset_seed", integer(&RunConfig::dataset_seed));
    t.emplace_back("seed", integer(&RunConfig::seed));
    t.emplace_back("out", Field{[](const RunConfig& c) { return c.out; },
                                [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; }});
    t.emplace_back("method", Field{[](const RunConfig& c) { return to_string(c.method); },
                                   [](RunConfig& c, const std::string&, const std::string& v) {
                                     c.method = interpolator_kind_from_string(v);
                                   }});
    t.emplace_back("latent_dim", integer(&RunConfig::latent_dim));
    t.emplace_back("encoder_hidden", integer(&RunConfig::encoder_hidden));
    t.emplace_back("velocity_hidden", integer(&RunConfig::velocity_hidden));
    t.emplace_back("field_hidden", integer(&RunConfig::field_hidden));
    t.emplace_back("generator_hidden",
                   Field{[](const RunConfig& c) { return join(c.generator_hidden); },
                         [](RunConfig& c, const std::string& k, const std::string& v) {
                           c.generator_hidden = parse_widths(k, v);
                         }});
    t.emplace_back("discriminator_hidden",
                   Field{[](const RunConfig& c) { return join(c.discriminator_hidden); },
                         [](RunConfig& c, const std::string& k, const std::string& v) {
                           c.discriminator_hidden = parse_widths(k, v);
                         }});
    t.emplace_back("generator_output", Field{[](const RunConfig& c) { return c.generator_output; },
                                             [](RunConfig& c, const std::string&, const std::string& v) {
                                               if (v != "auto") activation_from_string(v);
                                               c.generator_output = v;
                                             }});
    t.emplace_back("leaky_slope", real(&RunConfig::leaky_slope));
    t.emplace_back("field_init_scale", real(&RunConfig::field_init_scale));
    t.emplace_back("solver", Field{[](const RunConfig& c) { return to_string(c.train.solver.method); },
                                   [](RunConfig& c, const std::string&, const std::string& v) {
                                     c.train.solver.method = solver_method_from_string(v);
                                   }});
    t.emplace_back("steps", Field{[](const RunConfig& c) { return std::to_string(c.train.solver.steps); },
                                  [](RunConfig& c, const std::string& k, const std::string& v) {
                                    c.train.solver.steps = parse_number<int>(k, v);
                                  }});
    t.emplace_back("total_time", Field{[](const RunConfig& c) { return fmt(c.train.solver.total_time); },
                                       [](RunConfig& c, const std::string& k, const std::string& v) {
                                         c.train.solver.total_time = parse_number<double>(k, v);
                                       }});
    t.emplace_back("lambda_start", train_real(&TrainConfig::lambda_start));
    t.emplace_back("lambda_end", train_real(&TrainConfig::lambda_end));
    t.emplace_back("lambda_decay_epochs", train_integer(&TrainConfig::lambda_decay_epochs));
    t.emplace_back("time_samples", train_integer(&TrainConfig::time_samples));
    t.emplace_back("batch_size", train_integer(&TrainConfig::batch_size));
    t.emplace_back("epochs", train_integer(&TrainConfig::epochs));
    t.emplace_back("steps_per_epoch", train_integer(&TrainConfig::steps_per_epoch));
    t.emplace_back("train_steps", train_integer(&TrainConfig::total_steps));
    t.emplace_back("disc_steps", train_integer(&TrainConfig::disc_steps));
    t.emplace_back("generator_loss", Field{[](const RunConfig& c) { return to_string(c.train.generator_loss); },
                                           [](RunConfig& c, const std::string&, const std::string& v) {
                                             c.train.generator_loss = generator_loss_from_string(v);
                                           }});
    t.emplace_back("adversarial", Field{[](const RunConfig& c) { return std::string(c.train.adversarial ? "true" : "false"); },
                                        [](RunConfig& c, const std::string& k, const std::string& v) {
                                          c.train.adversarial = parse_bool(k, v);
                                        }});
    t.emplace_back("generator_optimizer", optimizer_kind(&TrainConfig::generator_optimizer));
    t.emplace_back("generator_lr", optimizer_real(&TrainConfig::generator_optimizer, &OptimizerConfig::learning_rate));
    t.emplace_back("generator_beta1", optimizer_real(&TrainConfig::generator_optimizer, &OptimizerConfig::beta1));
    t.emplace_back("generator_beta2", optimizer_real(&TrainConfig::generator_optimizer, &OptimizerConfig::beta2));
    t.emplace_back("discriminator_optimizer", optimizer_kind(&TrainConfig::discriminator_optimizer));
    t.emplace_back("discriminator_lr",
                   optimizer_real(&TrainConfig::discriminator_optimizer, &OptimizerConfig::learning_rate));
    t.emplace_back("discriminator_beta1",
                   optimizer_real(&TrainConfig::discriminator_optimizer, &OptimizerConfig::beta1));
    t.emplace_back("discriminator_beta2",
                   optimizer_real(&TrainConfig::discriminator_optimizer, &OptimizerConfig::beta2));
    t.emplace_back("eval_support", Field{[](const RunConfig& c) { return to_string(c.generation.support); },
                                         [](RunConfig& c, const std::string&, const std::string& v) {
                                           c.generation.support = support_from_string(v);
                                         }});
    t.emplace_back("eval_pairs", Field{[](const RunConfig& c) { return std::to_string(c.generation.pairs); },
                                       [](RunConfig& c, const std::string& k, const std::string& v) {
                                         c.generation.pairs = parse_number<std::size_t>(k, v);
                                       }});
    t.emplace_back("eval_samples_per_pair",
                   Field{[](const RunConfig& c) { return std::to_string(c.generation.samples_per_pair); },
                         [](RunConfig& c, const std::string& k, const std::string& v) {
                           c.generation.samples_per_pair = parse_number<std::size_t>(k, v);
                         }});
    t.emplace_back("eval_seed", Field{[](const RunConfig& c) { return std::to_string(c.generation.seed); },
                                      [](RunConfig& c, const std::string& k, const std::string& v) {
                                        c.generation.seed = parse_number<std::uint64_t>(k, v);
                                      }});
    t.emplace_back("eval_curve_pairs", Field{[](const RunConfig& c) { return std::to_string(c.report.curve_pairs); },
                                             [](RunConfig& c, const std::string& k, const std::string& v) {
                                               c.report.curve_pairs = parse_number<std::size_t>(k, v);
                                             }});
    t.emplace_back("family_size", Field{[](const RunConfig& c) { return std::to_string(c.report.family_size); },
                                        [](RunConfig& c, const std::string& k, const std::string& v) {
                                          c.report.family_size = parse_number<int>(k, v);
                                        }});
    t.emplace_back("family_pairs", Field{[](const RunConfig& c) { return std::to_string(c.report.family_pairs); },
                                         [](RunConfig& c, const std::string& k, const std::string& v) {
                                           c.report.family_pairs = parse_number<std::size_t>(k, v);
                                         }});
    t.emplace_back("smoothness_samples",
                   Field{[](const RunConfig& c) { return std::to_string(c.report.smoothness_samples); },
                         [](RunConfig& c, const std::string& k, const std::string& v) {
                           c.report.smoothness_samples = parse_number<int>(k, v);
                         }});
    t.emplace_back("diversity_times", Field{[](const RunConfig& c) { return std::to_string(c.report.diversity_times); },
                                            [](RunConfig& c, const std::string& k, const std::string& v) {
                                              c.report.diversity_times = parse_number<int>(k, v);
                                            }});
    t.emplace_back("bench_items", integer(&RunConfig::bench_items));
    t.emplace_back("bench_repeats", integer(&RunConfig::bench_repeats));
    t.emplace_back("ablate_steps", integer(&RunConfig::ablate_steps));
    return t;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& [name, f] : fields())
    if (name == key) return &f;
  return nullptr;
}

}  // namespace

RunConfig parse_run_config(std::istream& is, RunConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Field* f = find_field(key);
    if (f == nullptr) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    try {
      f->set(base, key, value);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  base.train.seed = base.seed;
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  return parse_run_config(in, std::move(base));
}

void write_run_config(std::ostream& os, const RunConfig& config) {
  for (const auto& [name, f] : fields()) os << name << " = " << f.get(config) << '\n';
}

// ---------------------------------------------------------------------------
// Checkpoints

std::uint32_t crc32_of(const void* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto* bytes = static_cast<const Bytef*>(data);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, bytes, chunk);
    bytes += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

std::mt19937_64 rng_from_state(const std::string& state) {
  std::istringstream is(state);
  std::mt19937_64 rng;
  is >> rng;
  if (!is) throw CheckpointError("invalid rng state");
  return rng;
}

OptimizerSnapshot OptimizerSnapshot::of(const Optimizer& opt) {
  return {opt.steps_taken(), opt.first_moments(), opt.second_moments()};
}

void OptimizerSnapshot::restore(Optimizer& opt) const {
  opt.first_moments() = first;
  opt.second_moments() = second;
  opt.set_steps_taken(steps);
}

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

void put_tensor(std::string& out, const std::string& tag, const Tensor& t) {
  out += tag + ' ' + std::to_string(t.rank());
  for (std::size_t e : t.shape()) out += ' ' + std::to_string(e);
  out += '\n';
  for (double x : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(x));
}

void put_text(std::string& out, const std::string& tag, const std::string& text) {
  out += tag + ' ' + std::to_string(text.size()) + '\n' + text;
}

class Reader {
 public:
  explicit Reader(std::string_view s) : s_(s) {}

  std::string line() {
    const auto nl = s_.find('\n', pos_);
    if (nl == std::string_view::npos) throw CheckpointError("checkpoint: unexpected end of data");
    std::string out(s_.substr(pos_, nl - pos_));
    pos_ = nl + 1;
    return out;
  }

  std::string_view bytes(std::size_t n) {
    if (n > s_.size() - pos_) throw CheckpointError("checkpoint: unexpected end of data");
    const auto out = s_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  // `tag` line followed by shape, then payload.
  Tensor tensor(const std::string& tag) {
    std::istringstream ls(line());
    std::string got;
    std::size_t rank = 0;
    ls >> got >> rank;
    if (got != tag || !ls) throw CheckpointError("checkpoint: expected '" + tag + "' block, got '" + got + "'");
    Shape shape(rank);
    for (auto& e : shape) ls >> e;
    if (!ls) throw CheckpointError("checkpoint: malformed shape in '" + tag + "'");
    Tensor t = Tensor::zeros(shape);
    const auto raw = bytes(8 * t.size());
    auto data = t.data();
    for (std::size_t i = 0; i < t.size(); ++i) data[i] = std::bit_cast<double>(get_u64(raw.data() + 8 * i));
    return t;
  }

  std::string text(const std::string& tag) {
    std::istringstream ls(line());
    std::string got;
    std::size_t n = 0;
    ls >> got >> n;
    if (got != tag || !ls) throw CheckpointError("checkpoint: expected '" + tag + "' block");
    return std::string(bytes(n));
  }

  long number(const std::string& tag) {
    std::istringstream ls(line());
    std::string got;
    long n = 0;
    ls >> got >> n;
    if (got != tag || !ls) throw CheckpointError("checkpoint: expected '" + tag + "'");
    return n;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

void put_optimizer(std::string& out, const std::string& name, const OptimizerSnapshot& snap) {
  out += "optimizer " + name + ' ' + std::to_string(snap.steps) + ' ' + std::to_string(snap.first.size()) + '\n';
  for (std::size_t i = 0; i < snap.first.size(); ++i) {
    put_tensor(out, "m", snap.first[i]);
    put_tensor(out, "v", snap.second[i]);
  }
}

OptimizerSnapshot get_optimizer(Reader& r, const std::string& name) {
  std::istringstream ls(r.line());
  std::string tag, got;
  OptimizerSnapshot snap;
  std::size_t count = 0;
  ls >> tag >> got >> snap.steps >> count;
  if (tag != "optimizer" || got != name || !ls) throw CheckpointError("checkpoint: expected optimizer " + name);
  for (std::size_t i = 0; i < count; ++i) {
    snap.first.push_back(r.tensor("m"));
    snap.second.push_back(r.tensor("v"));
  }
  return snap;
}

std::string serialize(const Checkpoint& ckpt) {
  std::string out = std::string(kCheckpointMagic) + '\n';
  std::ostringstream cfg;
  write_run_config(cfg, ckpt.config);
  put_text(out, "config", cfg.str());
  const auto nets = ckpt.bundle.networks();
  std::size_t count = 0;
  for (const auto& [name, net] : nets) count += net->parameters().size();
  out += "parameters " + std::to_string(count) + '\n';
  for (const auto& [name, net] : nets) {
    const auto params = net->parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string tag = name + '.' + (i % 2 == 0 ? "W" : "b") + std::to_string(i / 2);
      put_tensor(out, tag, *params[i]);
    }
  }
  put_optimizer(out, "generator", ckpt.generator_optimizer);
  put_optimizer(out, "discriminator", ckpt.discriminator_optimizer);
  put_text(out, "rng_trainer", ckpt.trainer_rng);
  put_text(out, "rng_data", ckpt.data_rng);
  out += "step " + std::to_string(ckpt.step) + '\n';
  const std::uint32_t crc = crc32_of(out.data(), out.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((crc >> (8 * i)) & 0xFF));
  return out;
}

// Parameter blocks are checked against `expected` shapes before anything is copied.
Checkpoint deserialize(const std::string& blob, const BundleConfig* expected) {
  const std::string magic = std::string(kCheckpointMagic) + '\n';
  if (blob.compare(0, magic.size(), magic) != 0) throw CheckpointError("checkpoint: bad magic (not an NRNT1 file)");
  if (blob.size() < magic.size() + 4) throw CheckpointError("checkpoint: checksum mismatch (file truncated)");
  const std::size_t body = blob.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 3; i >= 0; --i) stored = (stored << 8) | static_cast<unsigned char>(blob[body + i]);
  if (crc32_of(blob.data(), body) != stored) throw CheckpointError("checkpoint: checksum mismatch");

  Reader r(std::string_view(blob.data(), body));
  r.line();
  Checkpoint ckpt;
  {
    std::istringstream cfg(r.text("config"));
    try {
      ckpt.config = parse_run_config(cfg);
    } catch (const ConfigError& e) {
      throw CheckpointError(std::string("checkpoint: bad config header: ") + e.what());
    }
  }
  const BundleConfig stored_config = ckpt.config.bundle_config();
  const BundleConfig& target = expected != nullptr ? *expected : stored_config;
  ckpt.bundle = ModelBundle::create(target, 0);

  const long count = r.number("parameters");
  std::vector<std::pair<std::string, Tensor>> blocks;
  for (long i = 0; i < count; ++i) {
    std::istringstream ls(r.line());
    std::string tag;
    ls >> tag;
    // Re-read through the tensor reader with a one-line lookahead.
    std::size_t rank = 0;
    ls >> rank;
    Shape shape(rank);
    for (auto& e : shape) ls >> e;
    if (!ls) throw CheckpointError("checkpoint: malformed parameter block");
    Tensor t = Tensor::zeros(shape);
    const auto raw = r.bytes(8 * t.size());
    auto data = t.data();
    for (std::size_t k = 0; k < t.size(); ++k) data[k] = std::bit_cast<double>(get_u64(raw.data() + 8 * k));
    blocks.emplace_back(tag, std::move(t));
  }

  std::size_t next = 0;
  for (auto& [name, net] : ckpt.bundle.networks()) {
    const auto params = net->parameters();
    for (std::size_t i = 0; i < params.size(); ++i, ++next) {
      const std::string tag = name + '.' + (i % 2 == 0 ? "W" : "b") + std::to_string(i / 2);
      if (next >= blocks.size()) {
        throw ShapeError("checkpoint: missing parameter " + tag + " (expected " + shape_str(params[i]->shape()) + ")");
      }
      const auto& [got, t] = blocks[next];
      if (got != tag || t.shape() != params[i]->shape()) {
        throw ShapeError("checkpoint: parameter " + tag + " expected " + shape_str(params[i]->shape()) + ", file has " +
                         got + " " + shape_str(t.shape()));
      }
    }
  }
  if (next != blocks.size()) {
    throw ShapeError("checkpoint: file has " + std::to_string(blocks.size()) + " parameter blocks, model expects " +
                     std::to_string(next));
  }
  next = 0;
  for (auto& [name, net] : ckpt.bundle.networks())
    for (Tensor* p : net->parameters()) *p = blocks[next++].second;

  ckpt.generator_optimizer = get_optimizer(r, "generator");
  ckpt.discriminator_optimizer = get_optimizer(r, "discriminator");
  ckpt.trainer_rng = r.text("rng_trainer");
  ckpt.data_rng = r.text("rng_data");
  ckpt.step = r.number("step");
  return ckpt;
}

std::string read_all(std::istream& is) {
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  return read_all(in);
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  const std::string blob = serialize(ckpt);
  os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

Checkpoint read_checkpoint(std::istream& is) { return deserialize(read_all(is), nullptr); }

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint '" + path.string() + "'");
  write_checkpoint(out, ckpt);
  if (!out) throw CheckpointError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return deserialize(read_file(path), nullptr); }

ModelBundle load_bundle(const std::filesystem::path& path, const BundleConfig& expected) {
  return deserialize(read_file(path), &expected).bundle;
}

// ---------------------------------------------------------------------------
// Tables and strips

void write_loss_csv_header(std::ostream& os) { os << "step,epoch,lambda,l_ae,l_gan_disc,l_gan_gen\n"; }

void write_loss_csv_row(std::ostream& os, const LossReport& r) {
  os << std::setprecision(17) << r.step << ',' << r.epoch << ',' << r.lambda << ',' << r.reconstruction << ','
     << r.discriminator << ',' << r.generator << '\n';
}

std::string render_strip(const Tensor& frames, std::size_t rows, std::size_t cols) {
  constexpr std::size_t side = 8;
  if (rows == 0 || cols == 0) throw std::invalid_argument("render_strip: empty strip");
  if (frames.rank() != 2 || frames.rows() != rows * cols || frames.cols() != side * side) {
    throw ShapeError("render_strip: expected [" + std::to_string(rows * cols) + ", 64] frames, got " +
                     shape_str(frames.shape()));
  }
  const std::size_t width = cols * side + (cols - 1);
  const std::size_t height = rows * side + (rows - 1);
  std::string img(width * height, static_cast<char>(255));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t frame = r * cols + c;
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const double v = std::clamp(frames(frame, y * side + x), -1.0, 1.0);
          const auto level = static_cast<unsigned char>(std::lround((v + 1.0) * 127.5));
          img[(r * (side + 1) + y) * width + c * (side + 1) + x] = static_cast<char>(level);
        }
      }
    }
  }
  return "P5 " + std::to_string(width) + ' ' + std::to_string(height) + " 255\n" + img;
}

std::filesystem::path write_strip(const std::filesystem::path& stem, const Tensor& frames, std::size_t rows,
                                  std::size_t cols, bool image_like) {
  std::filesystem::path path = stem;
  if (image_like) {
    path += ".pgm";
    const std::string bytes = render_strip(frames, rows, cols);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return path;
  }
  if (frames.rows() != rows * cols) throw ShapeError("write_strip: frame count does not match rows*cols");
  path += ".csv";
  std::ofstream out(path, std::ios::trunc);
  out << "row,col";
  for (std::size_t j = 0; j < frames.cols(); ++j) out << ",x_" << j;
  out << '\n' << std::setprecision(17);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out << r << ',' << c;
      for (std::size_t j = 0; j < frames.cols(); ++j) out << ',' << frames(r * cols + c, j);
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return path;
}

}  // namespace neurint
