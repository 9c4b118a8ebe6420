#include "neurint/data.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace neurint {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kRingNoise = 0.02;
constexpr double kMoonNoise = 0.05;
constexpr double kGmmNoise = 0.05;
constexpr double kGmmRadius = 2.0;
constexpr int kGmmModes = 8;
constexpr double kImageNoise = 0.02;
constexpr double kBarWidth = 0.8;
constexpr double kBlobWidth = 1.0;
constexpr double kBlobLo = 1.5;
constexpr double kBlobHi = 5.5;
constexpr std::size_t kSide = 8;

struct DatasetInfo {
  std::size_t dim;
  std::size_t factors;
  bool image;
};

const std::map<std::string, DatasetInfo>& registry() {
  static const std::map<std::string, DatasetInfo> r{
      {"ring2d", {2, 2, false}},  {"moons2d", {2, 2, false}}, {"gmm2d", {2, 1, false}},
      {"bars8x8", {64, 1, true}}, {"blobs8x8", {64, 2, true}},
  };
  return r;
}

const DatasetInfo& info(const std::string& name) {
  auto it = registry().find(name);
  if (it == registry().end()) throw std::invalid_argument("unknown dataset '" + name + "'");
  return it->second;
}

double snap(double v) { return std::abs(v) < 1e-12 ? 0.0 : v; }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double rms(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b) / static_cast<double>(a.size()));
}

// Distance from p to the arc of the circle (center c, radius 1) whose angles lie in [lo, hi].
double arc_distance(double px, double py, double cx, double cy, double lo, double hi) {
  const double dx = px - cx;
  const double dy = py - cy;
  const double ang = std::atan2(dy, dx);
  if (ang >= lo && ang <= hi) return std::abs(std::hypot(dx, dy) - 1.0);
  const double e1 = std::hypot(px - (cx + std::cos(lo)), py - (cy + std::sin(lo)));
  const double e2 = std::hypot(px - (cx + std::cos(hi)), py - (cy + std::sin(hi)));
  return std::min(e1, e2);
}

template <typename F>
double golden_minimum(F f, double lo, double hi, int iters = 60) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return std::min(fc, fd);
}

double bar_residual(std::span<const double> x) {
  auto cost = [&](double theta) { return rms(x, render_bar(theta)); };
  constexpr int kGrid = 180;
  double best = 1e300;
  int best_i = 0;
  for (int i = 0; i < kGrid; ++i) {
    const double c = cost(kPi * i / kGrid);
    if (c < best) {
      best = c;
      best_i = i;
    }
  }
  const double step = kPi / kGrid;
  const double theta = kPi * best_i / kGrid;
  return std::min(best, golden_minimum(cost, theta - step, theta + step));
}

double blob_residual(std::span<const double> x) {
  auto cost = [&](double cx, double cy) { return rms(x, render_blob(cx, cy)); };
  double best = 1e300, bx = kBlobLo, by = kBlobLo;
  for (int i = 0; i <= 40; ++i)
    for (int j = 0; j <= 40; ++j) {
      const double cx = kBlobLo + 0.1 * i;
      const double cy = kBlobLo + 0.1 * j;
      const double c = cost(cx, cy);
      if (c < best) {
        best = c;
        bx = cx;
        by = cy;
      }
    }
  // Pattern search inside the admissible square.
  for (double h = 0.05; h > 1e-6; h *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (auto [dx, dy] : {std::pair{h, 0.0}, {-h, 0.0}, {0.0, h}, {0.0, -h}}) {
        const double cx = std::clamp(bx + dx, kBlobLo, kBlobHi);
        const double cy = std::clamp(by + dy, kBlobLo, kBlobHi);
        const double c = cost(cx, cy);
        if (c < best) {
          best = c;
          bx = cx;
          by = cy;
          moved = true;
        }
      }
    }
  }
  return best;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

std::string to_string(Support support) {
  switch (support) {
    case Support::Train: return "train";
    case Support::Test: return "test";
    case Support::Both: return "both";
  }
  return "train";
}

Support support_from_string(const std::string& name) {
  if (name == "train") return Support::Train;
  if (name == "test") return Support::Test;
  if (name == "both" || name == "train+test") return Support::Both;
  throw std::invalid_argument("unknown support '" + name + "'");
}

const std::vector<std::string>& dataset_names() {
  static const std::vector<std::string> names{"ring2d", "moons2d", "gmm2d", "bars8x8", "blobs8x8"};
  return names;
}

std::size_t dataset_dim(const std::string& name) { return info(name).dim; }
std::size_t dataset_factor_count(const std::string& name) { return info(name).factors; }
bool is_image_dataset(const std::string& name) { return info(name).image; }

std::vector<double> render_bar(double theta) {
  const double c = snap(std::cos(theta));
  const double s = snap(std::sin(theta));
  std::vector<double> img(kSide * kSide);
  for (std::size_t r = 0; r < kSide; ++r)
    for (std::size_t col = 0; col < kSide; ++col) {
      const double x = static_cast<double>(col) - 3.5;
      const double y = static_cast<double>(r) - 3.5;
      const double d = std::abs(c * y - s * x);
      img[r * kSide + col] = 2.0 * std::exp(-d * d / (2.0 * kBarWidth * kBarWidth)) - 1.0;
    }
  return img;
}

std::vector<double> render_blob(double cx, double cy) {
  std::vector<double> img(kSide * kSide);
  for (std::size_t r = 0; r < kSide; ++r)
    for (std::size_t col = 0; col < kSide; ++col) {
      const double dx = static_cast<double>(col) - cx;
      const double dy = static_cast<double>(r) - cy;
      img[r * kSide + col] = 2.0 * std::exp(-(dx * dx + dy * dy) / (2.0 * kBlobWidth * kBlobWidth)) - 1.0;
    }
  return img;
}

Dataset generate_dataset(const std::string& name, std::size_t n, std::uint64_t seed) {
  const DatasetInfo& meta = info(name);
  if (n < 2) throw std::invalid_argument("dataset: need at least 2 items, got " + std::to_string(n));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> items(n * meta.dim);
  std::vector<double> factors(n * meta.factors);
  for (std::size_t i = 0; i < n; ++i) {
    double* x = items.data() + i * meta.dim;
    double* f = factors.data() + i * meta.factors;
    if (name == "ring2d") {
      const double theta = 2.0 * kPi * unit(rng);
      const double radius = 0.9 + 0.2 * unit(rng);
      x[0] = radius * std::cos(theta) + kRingNoise * normal(rng);
      x[1] = radius * std::sin(theta) + kRingNoise * normal(rng);
      f[0] = theta;
      f[1] = radius;
    } else if (name == "moons2d") {
      const double t = kPi * unit(rng);
      const bool upper = unit(rng) < 0.5;
      x[0] = (upper ? std::cos(t) : 1.0 - std::cos(t)) + kMoonNoise * normal(rng);
      x[1] = (upper ? std::sin(t) : 0.5 - std::sin(t)) + kMoonNoise * normal(rng);
      f[0] = t;
      f[1] = upper ? 0.0 : 1.0;
    } else if (name == "gmm2d") {
      const int mode = static_cast<int>(unit(rng) * kGmmModes) % kGmmModes;
      const double a = 2.0 * kPi * mode / kGmmModes;
      x[0] = kGmmRadius * std::cos(a) + kGmmNoise * normal(rng);
      x[1] = kGmmRadius * std::sin(a) + kGmmNoise * normal(rng);
      f[0] = mode;
    } else if (name == "bars8x8") {
      const double theta = kPi * unit(rng);
      const auto img = render_bar(theta);
      for (std::size_t k = 0; k < img.size(); ++k) x[k] = std::clamp(img[k] + kImageNoise * normal(rng), -1.0, 1.0);
      f[0] = theta;
    } else {  // blobs8x8
      const double cx = kBlobLo + (kBlobHi - kBlobLo) * unit(rng);
      const double cy = kBlobLo + (kBlobHi - kBlobLo) * unit(rng);
      const auto img = render_blob(cx, cy);
      for (std::size_t k = 0; k < img.size(); ++k) x[k] = std::clamp(img[k] + kImageNoise * normal(rng), -1.0, 1.0);
      f[0] = cx;
      f[1] = cy;
    }
  }

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t n_test = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n))));

  Dataset d;
  d.name = name;
  d.n = n;
  d.seed = seed;
  d.items = Tensor({n, meta.dim}, std::move(items));
  d.factors = Tensor({n, meta.factors}, std::move(factors));
  d.split.assign(n, Split::Train);
  for (std::size_t k = 0; k < n_test; ++k) d.split[perm[k]] = Split::Test;
  return d;
}

std::vector<std::size_t> Dataset::indices(Support support) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (support == Support::Both || (support == Support::Train) == (split[i] == Split::Train)) out.push_back(i);
  }
  return out;
}

Tensor Dataset::rows(std::span<const std::size_t> idx) const {
  if (idx.empty()) throw std::invalid_argument("dataset rows: empty selection");
  const std::size_t d = dim();
  std::vector<double> out;
  out.reserve(idx.size() * d);
  for (std::size_t i : idx) {
    if (i >= n) throw std::out_of_range("dataset rows: index " + std::to_string(i));
    out.insert(out.end(), items.data().begin() + static_cast<std::ptrdiff_t>(i * d),
               items.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
  }
  return Tensor({idx.size(), d}, std::move(out));
}

PairBatch sample_pairs(const Dataset& data, Support support, std::size_t batch, std::mt19937_64& rng) {
  const auto pool = data.indices(support);
  if (pool.size() < 2) throw std::invalid_argument("sample_pairs: support '" + to_string(support) + "' has fewer than 2 items");
  if (batch == 0) throw std::invalid_argument("sample_pairs: batch must be positive");
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  PairBatch b;
  for (std::size_t k = 0; k < batch; ++k) {
    const std::size_t s = pick(rng);
    std::size_t t = pick(rng);
    while (t == s) t = pick(rng);
    b.source_index.push_back(pool[s]);
    b.target_index.push_back(pool[t]);
  }
  b.source = data.rows(b.source_index);
  b.target = data.rows(b.target_index);
  return b;
}

Tensor sample_items(const Dataset& data, Support support, std::size_t count, std::mt19937_64& rng) {
  const auto pool = data.indices(support);
  if (pool.empty()) throw std::invalid_argument("sample_items: support '" + to_string(support) + "' is empty");
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<std::size_t> idx(count);
  for (auto& i : idx) i = pool[pick(rng)];
  return data.rows(idx);
}

double manifold_residual(const std::string& name, std::span<const double> x) {
  const DatasetInfo& meta = info(name);
  if (x.size() != meta.dim) {
    throw ShapeError("manifold_residual: " + name + " expects " + std::to_string(meta.dim) + " values, got " +
                     std::to_string(x.size()));
  }
  if (name == "ring2d") return std::abs(std::hypot(x[0], x[1]) - 1.0);
  if (name == "moons2d") {
    return std::min(arc_distance(x[0], x[1], 0.0, 0.0, 0.0, kPi), arc_distance(x[0], x[1], 1.0, 0.5, -kPi, 0.0));
  }
  if (name == "gmm2d") {
    double best = 1e300;
    for (int m = 0; m < kGmmModes; ++m) {
      const double a = 2.0 * kPi * m / kGmmModes;
      best = std::min(best, std::hypot(x[0] - kGmmRadius * std::cos(a), x[1] - kGmmRadius * std::sin(a)));
    }
    return best;
  }
  if (name == "bars8x8") return bar_residual(x);
  return blob_residual(x);
}

std::vector<double> manifold_residuals(const std::string& name, const Tensor& rows) {
  std::vector<double> out(rows.rows());
  const std::size_t d = rows.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = manifold_residual(name, rows.data().subspan(i * d, d));
  return out;
}

void write_dataset(std::ostream& os, const Dataset& data) {
  os << "name=" << data.name << ",n=" << data.n << ",seed=" << data.seed << '\n';
  os << std::setprecision(17);
  const std::size_t nf = data.factors.cols();
  const std::size_t d = data.dim();
  for (std::size_t i = 0; i < data.n; ++i) {
    const char* sp = data.split[i] == Split::Train ? "train" : "test";
    if (!data.image_like()) {
      os << sp;
      for (std::size_t k = 0; k < nf; ++k) os << ',' << data.factors(i, k);
      for (std::size_t k = 0; k < d; ++k) os << ',' << data.items(i, k);
      os << '\n';
    } else {
      os << "item " << sp;
      for (std::size_t k = 0; k < nf; ++k) os << ' ' << data.factors(i, k);
      os << '\n';
      for (std::size_t r = 0; r < kSide; ++r) {
        for (std::size_t c = 0; c < kSide; ++c) os << (c ? " " : "") << data.items(i, r * kSide + c);
        os << '\n';
      }
    }
  }
}

Dataset read_dataset(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("read_dataset: missing header");
  std::map<std::string, std::string> kv;
  for (const auto& cell : split_csv(header)) {
    const auto eq = cell.find('=');
    if (eq == std::string::npos) throw std::runtime_error("read_dataset: malformed header '" + header + "'");
    kv[cell.substr(0, eq)] = cell.substr(eq + 1);
  }
  if (!kv.count("name") || !kv.count("n") || !kv.count("seed")) {
    throw std::runtime_error("read_dataset: header needs name, n and seed");
  }
  Dataset d;
  d.name = kv["name"];
  d.n = std::stoull(kv["n"]);
  d.seed = std::stoull(kv["seed"]);
  const DatasetInfo& meta = info(d.name);
  std::vector<double> items(d.n * meta.dim), factors(d.n * meta.factors);
  d.split.resize(d.n);

  auto parse_split = [](const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw std::runtime_error("read_dataset: bad split '" + s + "'");
  };

  for (std::size_t i = 0; i < d.n; ++i) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("read_dataset: truncated at item " + std::to_string(i));
    if (!meta.image) {
      const auto cells = split_csv(line);
      if (cells.size() != 1 + meta.factors + meta.dim) {
        throw std::runtime_error("read_dataset: wrong column count at item " + std::to_string(i));
      }
      d.split[i] = parse_split(cells[0]);
      for (std::size_t k = 0; k < meta.factors; ++k) factors[i * meta.factors + k] = std::stod(cells[1 + k]);
      for (std::size_t k = 0; k < meta.dim; ++k) items[i * meta.dim + k] = std::stod(cells[1 + meta.factors + k]);
    } else {
      std::istringstream ls(line);
      std::string tag, sp;
      ls >> tag >> sp;
      if (tag != "item") throw std::runtime_error("read_dataset: expected item record " + std::to_string(i));
      d.split[i] = parse_split(sp);
      for (std::size_t k = 0; k < meta.factors; ++k) ls >> factors[i * meta.factors + k];
      for (std::size_t k = 0; k < meta.dim; ++k) {
        if (!(is >> items[i * meta.dim + k])) throw std::runtime_error("read_dataset: truncated grid at item " + std::to_string(i));
      }
      is >> std::ws;
    }
  }
  d.items = Tensor({d.n, meta.dim}, std::move(items));
  d.factors = Tensor({d.n, meta.factors}, std::move(factors));
  return d;
}

}  // namespace neurint
