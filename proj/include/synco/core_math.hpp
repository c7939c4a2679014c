#pragma once

// Vector arithmetic, unit-norm feature containers and seeded random streams
// shared by every other module.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "synco/errors.hpp"

namespace synco {

using Vector = std::vector<double>;

inline constexpr double kZeroNormThreshold = 1e-12;
inline constexpr double kUnitNormTolerance = 1e-6;

/// Dense row-major matrix. Used for raw input batches and gradient blocks.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<Vector>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  void append_row(std::span<const double> values);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A d-dimensional embedding with unit l2 norm. Only constructible through
/// normalization or a checked adoption of already-unit values.
class FeatureVector {
 public:
  FeatureVector() = default;

  static FeatureVector from_unit(Vector values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  operator std::span<const double>() const noexcept { return values_; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  friend FeatureVector normalize(std::span<const double> raw);
  explicit FeatureVector(Vector values) : values_(std::move(values)) {}
  Vector values_;
};

/// Ordered collection of unit-norm features sharing one dimension, stored
/// contiguously.
class FeatureSet {
 public:
  FeatureSet() = default;
  explicit FeatureSet(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool empty() const noexcept { return data_.empty(); }
  void reserve(std::size_t n) { data_.reserve(n * dim_); }

  std::span<const double> operator[](std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  FeatureVector at(std::size_t i) const;

  void push_back(const FeatureVector& v);
  void append(const FeatureSet& other);

  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);
double norm(std::span<const double> v);
double squared_distance(std::span<const double> a, std::span<const double> b);

/// Returns v / ||v||. Throws ZeroVectorError when ||v|| < 1e-12 and NumericAbort
/// when the norm is not finite.
FeatureVector normalize(std::span<const double> raw);

/// Seeded random stream. Child streams are derived by hashing the parent seed
/// with a stream id, so adding a consumer never perturbs existing ones.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  Rng split(std::uint64_t stream) const;

  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  std::size_t index(std::size_t n);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// Stream ids for the top-level consumers of the master seed.
enum class Stream : std::uint64_t {
  kInit = 1,
  kShuffle = 2,
  kAugment = 3,
  kSynthesis = 4,
  kProbe = 5,
  kEval = 6,
};

inline Rng stream(std::uint64_t master_seed, Stream s) {
  return Rng(master_seed).split(static_cast<std::uint64_t>(s));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// d i.i.d. draws from N(0, sigma^2).
Vector gaussian_sample(std::size_t d, double sigma, Rng& rng);

}  // namespace synco
