#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "synco/contrastive_loss.hpp"
#include "synco/negative_synthesis.hpp"
#include "test_util.hpp"

using namespace synco;
using namespace synco::testing;

namespace {

const Vector kE1{1.0, 0.0};
const Vector kE2{0.0, 1.0};

FeatureSet one(const Vector& v) {
  FeatureSet s(v.size());
  s.push_back(normalize(v));
  return s;
}

// Central differences of info_nce along each raw coordinate (no re-normalization).
Vector numeric_grad(Vector x, const std::function<double(const Vector&)>& f, double h = 1e-6) {
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double max_rel(const Vector& a, const Vector& b) {
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    diff = std::max(diff, std::abs(a[i] - b[i]));
  }
  return diff / std::max(scale, 1e-12);
}

}  // namespace

TEST(InfoNce, LonePositiveIsZero) {
  const FeatureSet none(2);
  EXPECT_EQ(info_nce(kE1, kE2, none, none, 0.2), 0.0);
}

TEST(InfoNce, OneOrthogonalNegative) {
  const FeatureSet none(2);
  EXPECT_NEAR(info_nce(kE1, kE1, one(kE2), none, 1.0), 0.3132616875182228, 1e-12);
}

TEST(InfoNce, SyntheticNegativesNeverDecreaseLoss) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto q = random_unit(8, rng), k = random_unit(8, rng);
    const FeatureSet mem = random_set(1 + rng.index(10), 8, rng);
    const FeatureSet syn = random_set(1 + rng.index(10), 8, rng);
    EXPECT_GE(info_nce(q, k, mem, syn, 0.2), info_nce(q, k, mem, FeatureSet(8), 0.2));
  }
}

TEST(InfoNce, DimensionMismatchThrows) {
  EXPECT_THROW(info_nce(kE1, Vector{1, 0, 0}, FeatureSet(2), FeatureSet(2), 1.0), DimensionMismatch);
  EXPECT_THROW(info_nce(kE1, kE1, one({1, 0, 0}), FeatureSet(2), 1.0), DimensionMismatch);
}

TEST(MatchingProbabilities, EqualLogitsAreUniform) {
  const FeatureSet mem = [] {
    FeatureSet s(3);
    for (int i = 0; i < 6; ++i) s.push_back(normalize(Vector{0, 1, 0}));
    return s;
  }();
  const auto p = matching_probabilities(Vector{1, 0, 0}, Vector{0, 0, 1}, mem, FeatureSet(3), 0.3);
  ASSERT_EQ(p.probs.size(), 7u);
  for (double v : p.probs) EXPECT_NEAR(v, 1.0 / 7.0, 1e-15);
}

TEST(MatchingProbabilities, OrthogonalNegativeKeyProbability) {
  const auto p = matching_probabilities(kE1, kE1, one(kE2), FeatureSet(2), 1.0);
  EXPECT_NEAR(p.key(), 0.7310585786300049, 1e-12);
}

TEST(MatchingProbabilities, SmallTemperatureConcentrates) {
  // unique max logit with cosine margin 0.5 at tau = 0.01
  const Vector k = kE1;
  const FeatureSet mem = one(unit({0.5, std::sqrt(0.75)}));
  const auto p = matching_probabilities(kE1, k, mem, FeatureSet(2), 0.01);
  EXPECT_GT(p.key(), 1.0 - 1e-9);
}

TEST(MatchingProbabilities, SumsToOneAndLossIsMinusLogKey) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 2 + rng.index(14);
    const auto q = random_unit(d, rng), k = random_unit(d, rng);
    const FeatureSet mem = random_set(rng.index(20), d, rng);
    const FeatureSet syn = random_set(rng.index(20), d, rng);
    const double tau = rng.uniform(0.05, 1.0);
    const auto p = matching_probabilities(q, k, mem, syn, tau);
    double s = 0.0;
    for (double v : p.probs) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
    // cross-entropy against the one-hot key label
    EXPECT_NEAR(info_nce(q, k, mem, syn, tau), -std::log(p.key()), 1e-12);
  }
}

TEST(InfoNce, PermutationInvariant) {
  Rng rng(3);
  const auto q = random_unit(6, rng), k = random_unit(6, rng);
  const FeatureSet mem = random_set(9, 6, rng);
  std::vector<std::size_t> order{4, 0, 8, 2, 6, 1, 3, 7, 5};
  FeatureSet shuffled(6);
  for (auto i : order) shuffled.push_back(mem.at(i));
  EXPECT_NEAR(info_nce(q, k, mem, FeatureSet(6), 0.2), info_nce(q, k, shuffled, FeatureSet(6), 0.2), 1e-12);
}

TEST(InfoNce, StableAtTinyTemperature) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = random_unit(8, rng), k = random_unit(8, rng);
    const FeatureSet mem = random_set(30, 8, rng);
    const double l = info_nce(q, k, mem, FeatureSet(8), 1e-3);
    EXPECT_TRUE(std::isfinite(l));
    EXPECT_GE(l, 0.0);
    for (double g : grad_q(q, k, mem, FeatureSet(8), 1e-3)) EXPECT_TRUE(std::isfinite(g));
  }
}

TEST(GradQ, NoNegativesGivesZero) {
  for (double g : grad_q(kE1, kE2, FeatureSet(2), FeatureSet(2), 0.2)) EXPECT_EQ(g, 0.0);
  for (double g : grad_k(kE1, kE2, FeatureSet(2), FeatureSet(2), 0.2)) EXPECT_EQ(g, 0.0);
}

TEST(GradQ, MatchesFiniteDifferences) {
  Rng rng(5);
  const auto q = random_unit(8, rng), k = random_unit(8, rng);
  const FeatureSet mem = random_set(5, 8, rng);
  const FeatureSet syn = random_set(3, 8, rng);
  const Vector q0(q.values().begin(), q.values().end());
  const Vector analytic = grad_q(q, k, mem, syn, 0.2);
  const Vector numeric = numeric_grad(q0, [&](const Vector& x) { return info_nce(x, k, mem, syn, 0.2); });
  EXPECT_LE(max_rel(analytic, numeric), 1e-6);
}

TEST(GradK, MatchesFiniteDifferencesAndIsCollinearWithQ) {
  Rng rng(6);
  const auto q = random_unit(8, rng), k = random_unit(8, rng);
  const FeatureSet mem = random_set(5, 8, rng);
  const FeatureSet syn = random_set(3, 8, rng);
  const Vector k0(k.values().begin(), k.values().end());
  const Vector analytic = grad_k(q, k, mem, syn, 0.2);
  const Vector numeric = numeric_grad(k0, [&](const Vector& x) { return info_nce(q, x, mem, syn, 0.2); });
  EXPECT_LE(max_rel(analytic, numeric), 1e-6);
  // grad_k = -(1/tau)(1 - p_k) q: a non-positive multiple of q
  const double along = dot(analytic, q);
  EXPECT_LE(along, 0.0);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(analytic[i], along * q[i], 1e-12);
}

// Direct evaluation of -(1/tau)[(1 - p_k) k - sum p_z z] at tau and 2 tau.
TEST(GradQ, TemperatureScalingMatchesClosedForm) {
  Rng rng(7);
  const auto q = random_unit(6, rng), k = random_unit(6, rng);
  const FeatureSet mem = random_set(4, 6, rng);
  const FeatureSet syn = random_set(2, 6, rng);
  for (double tau : {0.2, 0.4}) {
    const auto p = matching_probabilities(q, k, mem, syn, tau);
    Vector expected(6, 0.0);
    for (std::size_t i = 0; i < 6; ++i) {
      double s = (1 - p.key()) * k[i];
      for (std::size_t j = 0; j < mem.size(); ++j) s -= p.probs[1 + j] * mem[j][i];
      for (std::size_t j = 0; j < syn.size(); ++j) s -= p.probs[1 + mem.size() + j] * syn[j][i];
      expected[i] = -s / tau;
    }
    const Vector got = grad_q(q, k, mem, syn, tau);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(got[i], expected[i], 1e-12);
  }
}

// Gradient check over many random instances and temperatures.
TEST(GradQ, RandomInstancesAcrossTemperatures) {
  Rng rng(8);
  double worst = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t d = 2 + rng.index(15);
    const double tau = std::array{0.07, 0.2, 1.0}[trial % 3];
    const auto q = random_unit(d, rng), k = random_unit(d, rng);
    const FeatureSet mem = random_set(rng.index(17), d, rng);
    const FeatureSet syn = random_set(rng.index(16), d, rng);
    const Vector q0(q.values().begin(), q.values().end());
    const Vector analytic = grad_q(q, k, mem, syn, tau);
    if (mem.empty() && syn.empty()) continue;
    const Vector numeric = numeric_grad(q0, [&](const Vector& x) { return info_nce(x, k, mem, syn, tau); });
    worst = std::max(worst, max_rel(analytic, numeric));
  }
  EXPECT_LE(worst, 1e-5);
}

TEST(QueryTerms, AgreesWithSeparateOperations) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = random_unit(8, rng), k = random_unit(8, rng);
    const FeatureSet mem = random_set(rng.index(30), 8, rng);
    const FeatureSet syn = random_set(rng.index(30), 8, rng);
    const auto logits = compute_logits(q, mem, 0.2);
    const QueryTerms t = query_terms(q, k, mem, logits, syn, 0.2);
    EXPECT_NEAR(t.loss, info_nce(q, k, mem, syn, 0.2), 1e-12);
    const Vector g = grad_q(q, k, mem, syn, 0.2);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(t.grad_q[i], g[i], 1e-12);
    const auto p = matching_probabilities(q, k, mem, syn, 0.2);
    EXPECT_NEAR(t.key_prob, p.key(), 1e-12);
    if (!mem.empty()) EXPECT_EQ(t.max_memory_logit, *std::max_element(logits.begin(), logits.end()));
    const auto p_mem = matching_probabilities(q, k, mem, FeatureSet(8), 0.2);
    EXPECT_NEAR(t.memory_lse, t.key_logit - std::log(p_mem.key()), 1e-10);
  }
}

TEST(LossConfig, RejectsNonPositiveTemperature) {
  LossConfig c;
  EXPECT_NO_THROW(c.validate());
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}
