#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "shareboost/dataset.hpp"

namespace shareboost {

// Feature-sharing stress tests: a "code" construction where log2(k) shared +-1 features
// separate all classes while k indicator features do the same without sharing, and a
// "block" construction with s redundant copies of the code.

namespace detail {

inline bool is_power_of_two(std::size_t k) { return k >= 2 && (k & (k - 1)) == 0; }

inline std::size_t log2_exact(std::size_t k) {
  std::size_t b = 0;
  while ((std::size_t{1} << b) < k) ++b;
  return b;
}

}  // namespace detail

/// +-1 code of class c (0-based): (c+1) mod k in binary, most significant bit first,
/// bit 1 -> +1 and bit 0 -> -1. For k=4 this gives [-1,1], [1,-1], [1,1], [-1,-1].
inline Vector class_code(std::size_t c, std::size_t k) {
  detail::require(detail::is_power_of_two(k), "class_code: k must be a power of two >= 2");
  detail::require(c < k, "class_code: class out of range");
  const std::size_t bits = detail::log2_exact(k);
  const std::size_t v = (c + 1) % k;
  Vector out(static_cast<Index>(bits));
  for (std::size_t b = 0; b < bits; ++b) {
    out(static_cast<Index>(b)) = ((v >> (bits - 1 - b)) & 1u) ? 1.0 : -1.0;
  }
  return out;
}

struct CodeDatasetSpec {
  std::size_t k = 16;
  std::size_t m = 1600;

  std::size_t code_length() const { return detail::log2_exact(k); }
  double multiplier() const { return 2.0 * std::log(static_cast<double>(k)); }
  std::size_t dimension() const { return code_length() + k; }

  void validate() const {
    detail::require(detail::is_power_of_two(k), "code dataset: k must be a power of two >= 2");
    detail::require(m >= 1, "code dataset: m must be >= 1");
  }
};

struct BlockDatasetSpec {
  std::size_t k = 8;
  std::size_t s = 6;       // number of blocks
  std::size_t m = 960;
  double epsilon = 0.25;   // fraction of examples with one zeroed block

  std::size_t block_length() const { return detail::log2_exact(k); }
  std::size_t dimension() const { return s * block_length(); }

  void validate() const {
    detail::require(detail::is_power_of_two(k), "block dataset: k must be a power of two >= 2");
    detail::require(s >= 2, "block dataset: need at least two blocks");
    detail::require(epsilon > 0.0 && epsilon < 1.0, "block dataset: epsilon must lie in (0,1)");
    detail::require(m >= 1, "block dataset: m must be >= 1");
  }
};

/// Shared (few columns) and flat (no sharing) reference matrices of a construction.
struct ReferencePair {
  Matrix shared;
  Matrix flat;
};

/// x = [code(y), 2 ln(k) e_y]. Labels uniform; with label_noise > 0 a label is replaced
/// by a uniformly chosen other class after its features are generated.
inline Dataset gen_code_dataset(const CodeDatasetSpec& spec, double label_noise, std::uint64_t seed) {
  spec.validate();
  detail::require(label_noise >= 0.0 && label_noise < 0.5, "code dataset: label noise must lie in [0, 0.5)");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> label(0, spec.k - 1);
  std::uniform_int_distribution<std::size_t> other(1, spec.k - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const std::size_t bits = spec.code_length();
  Matrix x = Matrix::Zero(static_cast<Index>(spec.m), static_cast<Index>(spec.dimension()));
  std::vector<std::size_t> y(spec.m);
  for (std::size_t i = 0; i < spec.m; ++i) {
    const std::size_t c = label(rng);
    const auto row = static_cast<Index>(i);
    x.row(row).head(static_cast<Index>(bits)) = class_code(c, spec.k).transpose();
    x(row, static_cast<Index>(bits + c)) = spec.multiplier();
    y[i] = c;
    if (label_noise > 0.0 && coin(rng) < label_noise) y[i] = (c + other(rng)) % spec.k;
  }
  return Dataset(std::move(x), std::move(y), spec.k);
}

/// (1 - epsilon) m examples with every block equal to code(y), then round(epsilon m) examples
/// with block (j mod s) zeroed for the j-th of them.
inline Dataset gen_block_dataset(const BlockDatasetSpec& spec, std::uint64_t seed,
                                 std::vector<std::string>* warnings = nullptr) {
  spec.validate();
  const double exact = spec.epsilon * static_cast<double>(spec.m);
  const auto second = static_cast<std::size_t>(std::llround(exact));
  if (warnings && std::abs(exact - static_cast<double>(second)) > 1e-9) {
    warnings->push_back("block dataset: epsilon*m = " + std::to_string(exact) + " rounded to " + std::to_string(second));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> label(0, spec.k - 1);
  const auto len = static_cast<Index>(spec.block_length());
  Matrix x(static_cast<Index>(spec.m), static_cast<Index>(spec.dimension()));
  std::vector<std::size_t> y(spec.m);
  const std::size_t first = spec.m - second;
  for (std::size_t i = 0; i < spec.m; ++i) {
    const std::size_t c = label(rng);
    const Vector code = class_code(c, spec.k);
    const auto row = static_cast<Index>(i);
    for (std::size_t b = 0; b < spec.s; ++b) x.row(row).segment(static_cast<Index>(b) * len, len) = code.transpose();
    if (i >= first) x.row(row).segment(static_cast<Index>((i - first) % spec.s) * len, len).setZero();
    y[i] = c;
  }
  return Dataset(std::move(x), std::move(y), spec.k);
}

/// Code construction: shared row y = [code(y), 0...0]; flat row y = [0...0, e_y].
inline ReferencePair reference_matrices(const CodeDatasetSpec& spec) {
  spec.validate();
  const auto k = static_cast<Index>(spec.k);
  const auto bits = static_cast<Index>(spec.code_length());
  ReferencePair out{Matrix::Zero(k, bits + k), Matrix::Zero(k, bits + k)};
  for (Index c = 0; c < k; ++c) {
    out.shared.row(c).head(bits) = class_code(static_cast<std::size_t>(c), spec.k).transpose();
    out.flat(c, bits + c) = 1.0;
  }
  return out;
}

/// Block construction: shared row y = [code(y), 0...0]; flat row y = [code(y), ..., code(y)] / s.
inline ReferencePair reference_matrices(const BlockDatasetSpec& spec) {
  spec.validate();
  const auto k = static_cast<Index>(spec.k);
  const auto len = static_cast<Index>(spec.block_length());
  const auto d = static_cast<Index>(spec.dimension());
  ReferencePair out{Matrix::Zero(k, d), Matrix::Zero(k, d)};
  for (Index c = 0; c < k; ++c) {
    const Vector code = class_code(static_cast<std::size_t>(c), spec.k);
    out.shared.row(c).head(len) = code.transpose();
    for (std::size_t b = 0; b < spec.s; ++b) {
      out.flat.row(c).segment(static_cast<Index>(b) * len, len) = code.transpose() / static_cast<double>(spec.s);
    }
  }
  return out;
}

/// Isotropic Gaussian blobs in the plane, one per class, centers on a circle of the given radius.
inline Dataset gen_blobs(std::size_t k, std::size_t m, double center_radius, double sigma, std::uint64_t seed) {
  detail::require(k >= 2 && m >= 1, "blobs: need k >= 2 and m >= 1");
  detail::require(sigma > 0.0, "blobs: sigma must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  Matrix x(static_cast<Index>(m), 2);
  std::vector<std::size_t> y(m);
  const double two_pi = 2.0 * std::acos(-1.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t c = i % k;
    const double a = two_pi * static_cast<double>(c) / static_cast<double>(k);
    x(static_cast<Index>(i), 0) = center_radius * std::cos(a) + noise(rng);
    x(static_cast<Index>(i), 1) = center_radius * std::sin(a) + noise(rng);
    y[i] = c;
  }
  return Dataset(std::move(x), std::move(y), k);
}

}  // namespace shareboost
