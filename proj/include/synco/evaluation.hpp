#pragma once

// Representation-quality metrics: linear probe, proxy-task accuracy,
// hardness curve, alignment/uniformity and class concentration.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "synco/contrastive_loss.hpp"
#include "synco/core_math.hpp"
#include "synco/data_pipeline.hpp"

namespace synco {

struct ProbeConfig {
  std::size_t epochs = 100;
  double lr = 1.0;
  std::size_t batch_size = 64;
  double label_fraction = 1.0;
  double holdout_fraction = 0.2;  // per-class share kept out for testing

  void validate() const;
};

struct ProbeResult {
  double accuracy = 0.0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::vector<std::size_t> train_per_class;
};

/// Multinomial logistic regression on frozen features, trained by minibatch SGD
/// with a cosine schedule on a stratified label_fraction subsample. Returns top-1
/// accuracy on a stratified held-out split.
ProbeResult linear_probe(const FeatureSet& features, std::span<const Label> labels, const ProbeConfig& config,
                         Rng& rng);

/// Per-query inputs for proxy accuracy: the key logit and every negative logit.
struct RankedQuery {
  double key_logit = 0.0;
  std::vector<double> negative_logits;
};

/// True when the key logit strictly exceeds every negative logit.
bool proxy_hit(double key_logit, std::span<const double> negative_logits);

/// Fraction of queries whose key outranks all negatives (ties count as misses).
double proxy_accuracy(std::span<const RankedQuery> queries);
/// Same, from a series of per-step hit rates weighted by query counts.
double proxy_accuracy(std::span<const std::pair<std::size_t, std::size_t>> hits_and_counts);

/// Sorts each list of negative probabilities in descending order, truncates it to
/// top_k and averages elementwise across lists.
std::vector<double> hardness_histogram(const std::vector<std::vector<double>>& negative_probs, std::size_t top_k);

/// Mean squared distance between positive-pair embeddings.
double alignment(std::span<const std::pair<FeatureVector, FeatureVector>> pairs);

/// log mean over ordered distinct pairs of exp(-t ||x - y||^2).
double uniformity(const FeatureSet& features, double t = 2.0);

struct ConcentrationReport {
  static constexpr std::size_t kBins = 50;
  static constexpr double kHistMax = 4.0;

  std::vector<double> ratios;  // +inf marks degenerate samples
  double mean = 0.0;           // over finite ratios
  std::size_t degenerate = 0;
  std::vector<std::size_t> histogram;  // kBins bins over [0, kHistMax], last bin absorbs overflow
};

/// Per sample: mean distance to other classes / mean distance to its own class.
ConcentrationReport class_concentration(const FeatureSet& features, std::span<const Label> labels);

}  // namespace synco
