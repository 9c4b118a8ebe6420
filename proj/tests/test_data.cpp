#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "neurint/data.hpp"

using namespace neurint;

TEST(Generate, RingRadiiBound) {
  const Dataset d = generate_dataset("ring2d", 1000, 3);
  ASSERT_EQ(d.items.shape(), (Shape{1000, 2}));
  ASSERT_EQ(d.factors.rows(), 1000u);
  for (std::size_t i = 0; i < d.n; ++i) {
    const double r = std::hypot(d.items(i, 0), d.items(i, 1));
    EXPECT_GE(r, 0.8);
    EXPECT_LE(r, 1.2);
  }
}

TEST(Generate, BarsTranspose) {
  const auto a = render_bar(0.0);
  const auto b = render_bar(std::numbers::pi / 2);
  ASSERT_EQ(a.size(), 64u);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) EXPECT_DOUBLE_EQ(a[r * 8 + c], b[c * 8 + r]);
  }
  const Dataset d = generate_dataset("bars8x8", 100, 1);
  for (double v : d.items.data()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  for (std::size_t i = 0; i < d.n; ++i) {
    EXPECT_GE(d.factors(i, 0), 0.0);
    EXPECT_LT(d.factors(i, 0), std::numbers::pi);
  }
}

TEST(Generate, SeedDeterminism) {
  for (const auto& name : dataset_names()) {
    const Dataset a = generate_dataset(name, 200, 9);
    const Dataset b = generate_dataset(name, 200, 9);
    const Dataset c = generate_dataset(name, 200, 10);
    EXPECT_EQ(a.items.values(), b.items.values()) << name;
    EXPECT_EQ(a.split, b.split) << name;
    EXPECT_NE(a.items.values(), c.items.values()) << name;
    EXPECT_EQ(a.factors.rows(), a.n) << name;
    EXPECT_EQ(a.dim(), dataset_dim(name));
  }
}

TEST(Generate, SplitTenPercent) {
  const Dataset d = generate_dataset("ring2d", 1000, 4);
  EXPECT_EQ(d.indices(Support::Test).size(), 100u);
  EXPECT_EQ(d.indices(Support::Train).size(), 900u);
  EXPECT_EQ(d.indices(Support::Both).size(), 1000u);
  const Dataset small = generate_dataset("ring2d", 2, 4);
  EXPECT_EQ(small.indices(Support::Test).size(), 1u);
}

TEST(Generate, Errors) {
  EXPECT_THROW(generate_dataset("mnist", 10, 1), std::invalid_argument);
  EXPECT_THROW(generate_dataset("ring2d", 1, 1), std::invalid_argument);
}

TEST(Pairs, TestSupportNeverYieldsTrainItems) {
  const Dataset d = generate_dataset("ring2d", 300, 5);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const PairBatch p = sample_pairs(d, Support::Test, 16, rng);
    ASSERT_EQ(p.source.shape(), (Shape{16, 2}));
    ASSERT_EQ(p.target.shape(), (Shape{16, 2}));
    for (std::size_t k = 0; k < 16; ++k) {
      EXPECT_EQ(d.split[p.source_index[k]], Split::Test);
      EXPECT_EQ(d.split[p.target_index[k]], Split::Test);
      EXPECT_NE(p.source_index[k], p.target_index[k]);
      EXPECT_EQ(p.source(k, 0), d.items(p.source_index[k], 0));
    }
  }
}

TEST(Pairs, UniformFrequencies) {
  const Dataset d = generate_dataset("ring2d", 60, 6);
  const auto test = d.indices(Support::Test);
  ASSERT_EQ(test.size(), 6u);
  std::mt19937_64 rng(6);
  std::vector<int> counts(d.n, 0);
  const int draws = 100000;
  const PairBatch p = sample_pairs(d, Support::Test, draws, rng);
  for (std::size_t k : p.source_index) ++counts[k];
  const double q = 1.0 / test.size();
  const double sd = std::sqrt(draws * q * (1 - q));
  for (std::size_t k : test) EXPECT_LT(std::abs(counts[k] - draws * q), 3 * sd) << k;
}

TEST(Pairs, ItemsSampling) {
  const Dataset d = generate_dataset("gmm2d", 100, 7);
  std::mt19937_64 rng(7);
  const Tensor t = sample_items(d, Support::Train, 33, rng);
  EXPECT_EQ(t.shape(), (Shape{33, 2}));
}

TEST(Residual, Examples) {
  const std::vector<double> origin{0.0, 0.0};
  EXPECT_EQ(manifold_residual("ring2d", origin), 1.0);
  const std::vector<double> on{std::cos(0.7), std::sin(0.7)};
  EXPECT_NEAR(manifold_residual("ring2d", on), 0.0, 1e-15);
  const std::vector<double> bar = render_bar(1.1);
  EXPECT_LE(manifold_residual("bars8x8", bar), 0.1);
  const std::vector<double> blob = render_blob(3.2, 4.5);
  EXPECT_LE(manifold_residual("blobs8x8", blob), 0.1);
  EXPECT_THROW(manifold_residual("ring2d", bar), ShapeError);
  EXPECT_THROW(manifold_residual("nope", origin), std::invalid_argument);
}

TEST(Residual, AntipodalLerpMidpoint) {
  const Dataset d = generate_dataset("ring2d", 1000, 8);
  double worst = 1.0;
  int checked = 0;
  for (std::size_t i = 0; i < d.n && checked < 50; ++i) {
    const double th = d.factors(i, 0);
    for (std::size_t j = i + 1; j < d.n; ++j) {
      double diff = std::abs(std::remainder(d.factors(j, 0) - th, 2 * std::numbers::pi));
      if (std::abs(diff - std::numbers::pi) < 0.02) {
        const std::vector<double> mid{(d.items(i, 0) + d.items(j, 0)) / 2, (d.items(i, 1) + d.items(j, 1)) / 2};
        worst = std::min(worst, manifold_residual("ring2d", mid));
        ++checked;
        break;
      }
    }
  }
  EXPECT_GT(checked, 10);
  // radii in [0.8, 1.2] and a 0.02 angle window put the midpoint within ~0.21 of the origin
  EXPECT_GT(worst, 0.78);
  for (double th : {0.0, 0.4, 2.0, 5.1}) {
    const std::vector<double> mid{(std::cos(th) + std::cos(th + std::numbers::pi)) / 2,
                                  (std::sin(th) + std::sin(th + std::numbers::pi)) / 2};
    EXPECT_NEAR(manifold_residual("ring2d", mid), 1.0, 1e-12) << th;
  }
}

TEST(Residual, ContinuousAndZeroOnManifold) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x{n(rng), n(rng)};
    const double r0 = manifold_residual("moons2d", x);
    x[0] += 1e-7;
    EXPECT_NEAR(manifold_residual("moons2d", x), r0, 2e-7);
  }
  const std::vector<double> upper{std::cos(1.0), std::sin(1.0)};
  EXPECT_NEAR(manifold_residual("moons2d", upper), 0.0, 1e-12);
}

TEST(Residual, NoiselessItemsAreClose) {
  for (const char* name : {"ring2d", "bars8x8", "blobs8x8", "gmm2d", "moons2d"}) {
    const Dataset d = generate_dataset(name, 200, 10);
    const auto r = manifold_residuals(name, d.items);
    double sum = 0;
    for (double v : r) sum += v;
    EXPECT_LT(sum / r.size(), 0.1) << name;
  }
}

TEST(Export, RoundTrip) {
  for (const char* name : {"ring2d", "bars8x8"}) {
    const Dataset d = generate_dataset(name, 20, 11);
    std::stringstream ss;
    write_dataset(ss, d);
    const std::string text = ss.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), std::string("name=") + name + ",n=20,seed=11");
    const Dataset back = read_dataset(ss);
    EXPECT_EQ(back.items.values(), d.items.values()) << name;
    EXPECT_EQ(back.factors.values(), d.factors.values()) << name;
    EXPECT_EQ(back.split, d.split) << name;
  }
}
