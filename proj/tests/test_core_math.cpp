#include <gtest/gtest.h>

#include <cmath>

#include "synco/core_math.hpp"
#include "test_util.hpp"

using namespace synco;
using synco::testing::random_unit;

TEST(Normalize, ThreeFourGivesPointSixPointEight) {
  const Vector v{3.0, 4.0};
  const FeatureVector f = normalize(v);
  EXPECT_NEAR(f[0], 0.6, 1e-12);
  EXPECT_NEAR(f[1], 0.8, 1e-12);
}

TEST(Normalize, UnitInputUnchanged) {
  const Vector v{1.0, 0.0};
  const FeatureVector f = normalize(v);
  EXPECT_EQ(f[0], 1.0);
  EXPECT_EQ(f[1], 0.0);
}

TEST(Normalize, ZeroVectorThrows) {
  const Vector v{0.0, 0.0};
  EXPECT_THROW(normalize(v), ZeroVectorError);
  const Vector tiny{1e-13, 0.0};
  EXPECT_THROW(normalize(tiny), ZeroVectorError);
}

TEST(Normalize, NonFiniteInputAborts) {
  EXPECT_THROW(normalize(Vector{std::nan(""), 1.0}), NumericAbort);
  EXPECT_THROW(normalize(Vector{INFINITY, 0.0}), NumericAbort);
  EXPECT_THROW(normalize(Vector{1e300, 1e300}), NumericAbort);
}

TEST(Normalize, IdempotentAndScaleInvariant) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector v = gaussian_sample(7, 3.0, rng);
    const FeatureVector once = normalize(v);
    const FeatureVector twice = normalize(once.values());
    const double c = rng.uniform(1e-3, 1e3);
    Vector scaled = v;
    for (double& x : scaled) x *= c;
    const FeatureVector s = normalize(scaled);
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_NEAR(once[i], twice[i], 1e-9);
      EXPECT_NEAR(once[i], s[i], 1e-9);
    }
    EXPECT_NEAR(norm(once.values()), 1.0, 1e-12);
  }
}

TEST(FeatureVector, FromUnitRejectsNonUnit) {
  EXPECT_NO_THROW(FeatureVector::from_unit({0.6, 0.8}));
  EXPECT_THROW(FeatureVector::from_unit({0.6, 0.9}), ZeroVectorError);
}

TEST(Dot, Examples) {
  const Vector e1{1.0, 0.0}, e2{0.0, 1.0};
  EXPECT_EQ(dot(e1, e2), 0.0);
  EXPECT_EQ(dot(e1, e1), 1.0);
  const Vector a{0.6, 0.8}, b{0.8, 0.6};
  EXPECT_NEAR(dot(a, b), 0.96, 1e-15);
}

TEST(Dot, DimensionMismatchThrows) {
  const Vector a{1.0, 0.0}, b{1.0, 0.0, 0.0};
  EXPECT_THROW(dot(a, b), DimensionMismatch);
}

TEST(Dot, SymmetricAndBoundedOnUnitVectors) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = random_unit(9, rng);
    const auto b = random_unit(9, rng);
    EXPECT_EQ(dot(a, b), dot(b, a));
    EXPECT_LE(std::abs(dot(a, b)), 1.0 + 1e-9);
  }
}

TEST(GaussianSample, ZeroSigmaGivesZeros) {
  Rng rng(1);
  for (double x : gaussian_sample(13, 0.0, rng)) EXPECT_EQ(x, 0.0);
}

TEST(GaussianSample, EmpiricalStdMatchesSigma) {
  Rng rng(2024);
  const Vector v = gaussian_sample(10000, 0.01, rng);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(v.size() - 1));
  EXPECT_GE(sd, 0.0097);
  EXPECT_LE(sd, 0.0103);
}

TEST(GaussianSample, SameStateCopiesAgree) {
  Rng rng(99);
  Rng copy = rng;
  EXPECT_EQ(gaussian_sample(32, 0.5, rng), gaussian_sample(32, 0.5, copy));
}

TEST(Rng, SplitStreamsAreDeterministicAndDistinct) {
  const Rng a = stream(7, Stream::kAugment);
  const Rng b = stream(7, Stream::kAugment);
  const Rng c = stream(7, Stream::kSynthesis);
  EXPECT_EQ(a.seed(), b.seed());
  EXPECT_NE(a.seed(), c.seed());
  EXPECT_NE(a.split(0).seed(), a.split(1).seed());
  EXPECT_NE(stream(7, Stream::kAugment).seed(), stream(8, Stream::kAugment).seed());
  Rng x = a, y = b;
  for (int i = 0; i < 10; ++i) EXPECT_EQ(x.uniform(0, 1), y.uniform(0, 1));
}

TEST(Rng, IndexStaysInRange) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.index(7), 7u);
}

TEST(Matrix, FromRowsAndAppend) {
  Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m(1, 0), 3.0);
  const Vector r{5, 6};
  m.append_row(r);
  EXPECT_EQ(m.rows(), 3u);
  EXPECT_EQ(m(2, 1), 6.0);
}

TEST(FeatureSet, PushBackChecksDimension) {
  FeatureSet s(2);
  s.push_back(normalize(Vector{1, 1}));
  EXPECT_EQ(s.size(), 1u);
  EXPECT_THROW(s.push_back(normalize(Vector{1, 1, 1})), DimensionMismatch);
}
