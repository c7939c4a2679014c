#include "synco/contrastive_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace synco {

namespace {

void check_dims(std::span<const double> q, std::span<const double> k, const FeatureSet& memory,
                const FeatureSet& synthetic) {
  if (q.size() != k.size()) throw DimensionMismatch("query and key differ in dimension");
  if (!memory.empty() && memory.dim() != q.size()) throw DimensionMismatch("memory negatives differ in dimension");
  if (!synthetic.empty() && synthetic.dim() != q.size())
    throw DimensionMismatch("synthetic negatives differ in dimension");
}

// Logits of {k} | Q | S.
std::vector<double> all_logits(std::span<const double> q, std::span<const double> k, const FeatureSet& memory,
                               const FeatureSet& synthetic, double tau) {
  check_dims(q, k, memory, synthetic);
  std::vector<double> logits;
  logits.reserve(1 + memory.size() + synthetic.size());
  logits.push_back(dot(q, k) / tau);
  for (std::size_t i = 0; i < memory.size(); ++i) logits.push_back(dot(q, memory[i]) / tau);
  for (std::size_t i = 0; i < synthetic.size(); ++i) logits.push_back(dot(q, synthetic[i]) / tau);
  return logits;
}

double log_sum_exp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

void LossConfig::validate() const {
  if (!(tau > 0.0)) throw ConfigError("loss.tau must be > 0");
}

double info_nce(std::span<const double> q, std::span<const double> k, const FeatureSet& memory,
                const FeatureSet& synthetic, double tau) {
  const auto logits = all_logits(q, k, memory, synthetic, tau);
  return std::max(0.0, log_sum_exp(logits) - logits.front());
}

MatchingDistribution matching_probabilities(std::span<const double> q, std::span<const double> k,
                                            const FeatureSet& memory, const FeatureSet& synthetic, double tau) {
  auto logits = all_logits(q, k, memory, synthetic, tau);
  const double lse = log_sum_exp(logits);
  for (double& l : logits) l = std::exp(l - lse);
  return {std::move(logits)};
}

Vector grad_q(std::span<const double> q, std::span<const double> k, const FeatureSet& memory,
              const FeatureSet& synthetic, double tau) {
  const auto p = matching_probabilities(q, k, memory, synthetic, tau);
  Vector g(q.size(), 0.0);
  const double wk = 1.0 - p.key();
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = wk * k[j];
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const auto n = memory[i];
    for (std::size_t j = 0; j < g.size(); ++j) g[j] -= p.probs[1 + i] * n[j];
  }
  for (std::size_t i = 0; i < synthetic.size(); ++i) {
    const auto s = synthetic[i];
    for (std::size_t j = 0; j < g.size(); ++j) g[j] -= p.probs[1 + memory.size() + i] * s[j];
  }
  for (double& v : g) v *= -1.0 / tau;
  return g;
}

Vector grad_k(std::span<const double> q, std::span<const double> k, const FeatureSet& memory,
              const FeatureSet& synthetic, double tau) {
  const auto p = matching_probabilities(q, k, memory, synthetic, tau);
  Vector g(q.begin(), q.end());
  const double scale = -(1.0 - p.key()) / tau;
  for (double& v : g) v *= scale;
  return g;
}

QueryTerms query_terms(std::span<const double> q, std::span<const double> k, const FeatureSet& memory,
                       std::span<const double> memory_logits, const FeatureSet& synthetic, double tau) {
  check_dims(q, k, memory, synthetic);
  if (memory_logits.size() != memory.size()) throw DimensionMismatch("memory logits do not match memory set");
  const std::size_t d = q.size();
  QueryTerms t;
  t.key_logit = dot(q, k) / tau;

  std::vector<double> synth_logits(synthetic.size());
  for (std::size_t i = 0; i < synthetic.size(); ++i) synth_logits[i] = dot(q, synthetic[i]) / tau;

  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  t.max_memory_logit = memory_logits.empty() ? kNegInf : *std::max_element(memory_logits.begin(), memory_logits.end());
  t.max_synthetic_logit = synth_logits.empty() ? kNegInf : *std::max_element(synth_logits.begin(), synth_logits.end());

  // memory part and synthetic part are shifted separately, then merged
  const double m_mem = std::max(t.key_logit, t.max_memory_logit);
  Vector mem_exp(memory_logits.size());
  double z_mem = std::exp(t.key_logit - m_mem);
  for (std::size_t i = 0; i < memory_logits.size(); ++i) z_mem += (mem_exp[i] = std::exp(memory_logits[i] - m_mem));
  t.memory_lse = m_mem + std::log(z_mem);

  const double m = std::max(m_mem, t.max_synthetic_logit);
  double z = z_mem * std::exp(m_mem - m);
  for (double l : synth_logits) z += std::exp(l - m);
  const double lse = m + std::log(z);

  t.loss = std::max(0.0, lse - t.key_logit);
  t.key_prob = std::exp(t.key_logit - lse);

  t.grad_q.assign(d, 0.0);
  const double wk = 1.0 - t.key_prob;
  for (std::size_t j = 0; j < d; ++j) t.grad_q[j] = wk * k[j];
  const double mem_scale = std::exp(m_mem - lse);
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const double p = mem_exp[i] * mem_scale;
    const auto n = memory[i];
    for (std::size_t j = 0; j < d; ++j) t.grad_q[j] -= p * n[j];
  }
  for (std::size_t i = 0; i < synthetic.size(); ++i) {
    const double p = std::exp(synth_logits[i] - lse);
    const auto s = synthetic[i];
    for (std::size_t j = 0; j < d; ++j) t.grad_q[j] -= p * s[j];
  }
  for (double& v : t.grad_q) v *= -1.0 / tau;
  return t;
}

}  // namespace synco
