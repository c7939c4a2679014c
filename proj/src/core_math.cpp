#include "synco/core_math.hpp"

#include <cmath>
#include <string>

namespace synco {

Matrix Matrix::from_rows(const std::vector<Vector>& rows) {
  Matrix m;
  if (rows.empty()) return m;
  m.cols_ = rows.front().size();
  for (const auto& r : rows) m.append_row(r);
  return m;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && data_.empty()) cols_ = values.size();
  if (values.size() != cols_) {
    throw DimensionMismatch("row has " + std::to_string(values.size()) + " columns, expected " +
                            std::to_string(cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

FeatureVector FeatureVector::from_unit(Vector values) {
  const double n = norm(values);
  if (std::abs(n - 1.0) > kUnitNormTolerance) {
    throw ZeroVectorError("vector is not unit norm (norm = " + std::to_string(n) + ")");
  }
  return FeatureVector(std::move(values));
}

FeatureVector FeatureSet::at(std::size_t i) const {
  const auto r = (*this)[i];
  return FeatureVector::from_unit(Vector(r.begin(), r.end()));
}

void FeatureSet::push_back(const FeatureVector& v) {
  if (dim_ == 0 && data_.empty()) dim_ = v.dim();
  if (v.dim() != dim_) {
    throw DimensionMismatch("feature has dimension " + std::to_string(v.dim()) + ", set holds " +
                            std::to_string(dim_));
  }
  const auto vals = v.values();
  data_.insert(data_.end(), vals.begin(), vals.end());
}

void FeatureSet::append(const FeatureSet& other) {
  if (other.empty()) return;
  if (dim_ == 0 && data_.empty()) dim_ = other.dim_;
  if (other.dim_ != dim_) throw DimensionMismatch("cannot append feature sets of different dimension");
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("dot: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(squared_norm(v)); }

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("squared_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

FeatureVector normalize(std::span<const double> raw) {
  const double n = norm(raw);
  if (std::isnan(n) || std::isinf(n)) throw NumericAbort("cannot normalize a vector with non-finite entries");
  if (!(n >= kZeroNormThreshold)) {
    throw ZeroVectorError("cannot normalize vector with norm " + std::to_string(n));
  }
  Vector out(raw.begin(), raw.end());
  for (double& x : out) x /= n;
  return FeatureVector(std::move(out));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer applied twice over (seed, stream)
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

Rng Rng::split(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

double Rng::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

double Rng::normal(double mean, double stddev) {
  std::normal_distribution<double> dist(mean, stddev);
  return dist(engine_);
}

std::size_t Rng::index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

Vector gaussian_sample(std::size_t d, double sigma, Rng& rng) {
  Vector out(d, 0.0);
  if (sigma == 0.0) return out;
  std::normal_distribution<double> dist(0.0, sigma);
  for (double& x : out) x = dist(rng.engine());
  return out;
}

}  // namespace synco
