#pragma once

// InfoNCE over memory plus synthetic negatives:
//   L = -log( exp(q.k/tau) / (exp(q.k/tau) + sum_Q exp(q.n/tau) + sum_S exp(q.s/tau)) )

#include <cstddef>
#include <span>
#include <vector>

#include "synco/core_math.hpp"

namespace synco {

struct LossConfig {
  double tau = 0.2;
  void validate() const;
};

/// Softmax over the logits of {k} | Q | S, in that order.
struct MatchingDistribution {
  std::vector<double> probs;

  double key() const { return probs.front(); }
  std::span<const double> negatives() const { return std::span(probs).subspan(1); }
};

/// Loss, key probability and query gradient of one query, computed together.
struct QueryTerms {
  double loss = 0.0;
  double key_logit = 0.0;
  double key_prob = 1.0;
  double max_memory_logit;     // -inf without memory negatives
  double max_synthetic_logit;  // -inf without synthetic negatives
  double memory_lse;           // log-sum-exp over {k} | Q only
  Vector grad_q;
};

double info_nce(std::span<const double> q, std::span<const double> k, const FeatureSet& memory,
                const FeatureSet& synthetic, double tau);

MatchingDistribution matching_probabilities(std::span<const double> q, std::span<const double> k,
                                            const FeatureSet& memory, const FeatureSet& synthetic, double tau);

/// dL/dq = -(1/tau) [ (1 - p_k) k - sum_z p_z z ], z over memory and synthetic negatives.
Vector grad_q(std::span<const double> q, std::span<const double> k, const FeatureSet& memory,
              const FeatureSet& synthetic, double tau);

/// dL/dk = -(1/tau) (1 - p_k) q. Not used in training (the key path is momentum-only).
Vector grad_k(std::span<const double> q, std::span<const double> k, const FeatureSet& memory,
              const FeatureSet& synthetic, double tau);

/// Single pass over all negatives. `memory_logits` must equal q.n/tau for the memory set.
QueryTerms query_terms(std::span<const double> q, std::span<const double> k, const FeatureSet& memory,
                       std::span<const double> memory_logits, const FeatureSet& synthetic, double tau);

}  // namespace synco
