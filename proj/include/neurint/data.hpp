#pragma once

// Procedural datasets with known generating factors.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "neurint/tensor.hpp"

namespace neurint {

enum class Split : std::uint8_t { Train, Test };
enum class Support { Train, Test, Both };

std::string to_string(Support support);
Support support_from_string(const std::string& name);

/// ring2d, moons2d, gmm2d, bars8x8, blobs8x8.
const std::vector<std::string>& dataset_names();
std::size_t dataset_dim(const std::string& name);
std::size_t dataset_factor_count(const std::string& name);
bool is_image_dataset(const std::string& name);

struct Dataset {
  std::string name;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  Tensor items;    // [n, dim]
  Tensor factors;  // [n, factor count]
  std::vector<Split> split;

  std::size_t dim() const { return items.cols(); }
  bool image_like() const { return is_image_dataset(name); }
  std::vector<std::size_t> indices(Support support) const;
  Tensor rows(std::span<const std::size_t> idx) const;
};

/// Deterministic in (name, n, seed); 10% of items (at least one) go to the test split.
Dataset generate_dataset(const std::string& name, std::size_t n, std::uint64_t seed);

struct PairBatch {
  Tensor source;
  Tensor target;
  std::vector<std::size_t> source_index;
  std::vector<std::size_t> target_index;
};

/// Independent uniform draws from the support with source != target per row.
PairBatch sample_pairs(const Dataset& data, Support support, std::size_t batch, std::mt19937_64& rng);
/// Uniform draws with replacement.
Tensor sample_items(const Dataset& data, Support support, std::size_t count, std::mt19937_64& rng);

/// Distance from x to the noiseless data manifold of `name`.
double manifold_residual(const std::string& name, std::span<const double> x);
std::vector<double> manifold_residuals(const std::string& name, const Tensor& rows);

/// Noiseless 8x8 bar at angle theta (row-major, values in [-1, 1]).
std::vector<double> render_bar(double theta);
/// Noiseless 8x8 Gaussian blob centred at pixel coordinates (cx, cy).
std::vector<double> render_blob(double cx, double cy);

/// 2D sets: CSV rows `split,factors...,x...`. Image sets: an `item` line per
/// record followed by the 8x8 grid. Both start with `name=..,n=..,seed=..`.
void write_dataset(std::ostream& os, const Dataset& data);
Dataset read_dataset(std::istream& is);

}  // namespace neurint
