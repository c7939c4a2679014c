#pragma once

// Hardest-negative selection and the six synthetic hard-negative families.
//
// Every synthetic vector is built from the query q and/or negatives drawn
// uniformly with replacement from the N hardest memory negatives, then
// projected back onto the unit sphere. Outputs are constants for gradient
// purposes: nothing here participates in backpropagation.

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "synco/core_math.hpp"

namespace synco {

enum class Strategy : std::size_t {
  kInterpolated = 0,
  kExtrapolated = 1,
  kMixup = 2,
  kNoise = 3,
  kPerturbed = 4,
  kAdversarial = 5,
};

inline constexpr std::size_t kNumStrategies = 6;
inline constexpr std::array<std::string_view, kNumStrategies> kStrategyNames = {
    "interpolated", "extrapolated", "mixup", "noise", "perturbed", "adversarial"};

struct StrategySettings {
  bool enabled = true;
  std::size_t count = 0;
};

struct SynthesisConfig {
  bool enabled = true;          // master switch; false reduces training to plain MoCo
  std::size_t top_n = 128;      // size of the hardest set
  std::array<StrategySettings, kNumStrategies> strategies = {
      StrategySettings{true, 32}, StrategySettings{true, 32}, StrategySettings{true, 32},
      StrategySettings{true, 8},  StrategySettings{true, 8},  StrategySettings{true, 8}};
  double alpha_max = 0.5;
  double beta_max = 1.5;
  double sigma = 0.01;
  double delta = 0.01;
  double eta = 0.01;
  std::size_t warmup_epochs = 10;

  StrategySettings& operator[](Strategy s) { return strategies[static_cast<std::size_t>(s)]; }
  const StrategySettings& operator[](Strategy s) const { return strategies[static_cast<std::size_t>(s)]; }

  /// Sum of counts over enabled strategies (0 when the master switch is off).
  std::size_t per_query_count() const;
  /// Throws ConfigError on out-of-range scalars.
  void validate() const;
  /// True when the synthetic budget is not small relative to the queue (sum >= K / 2).
  bool budget_exceeds(std::size_t queue_capacity) const;
};

/// Indices of the hardest negatives, ordered by non-increasing logit.
struct HardestSet {
  std::vector<std::size_t> indices;
  std::vector<double> logits;

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
};

/// l_i = q . n_i / tau, in input order.
std::vector<double> compute_logits(std::span<const double> q, const FeatureSet& negatives, double tau);

/// Row r holds the logits of queries[r] against every negative; equal to the
/// single-query overload applied row by row.
Matrix compute_logits(const FeatureSet& queries, const FeatureSet& negatives, double tau);

/// The min(N, len) largest logits by descending value; ties go to the lower index.
HardestSet select_hardest(std::span<const double> logits, std::size_t n);

// Single-sample constructions. Each throws ZeroVectorError on a degenerate result.
FeatureVector interpolate(std::span<const double> q, std::span<const double> n, double alpha);
FeatureVector extrapolate(std::span<const double> q, std::span<const double> n, double beta);
FeatureVector mix(std::span<const double> ni, std::span<const double> nj, double gamma);
FeatureVector add_noise(std::span<const double> n, std::span<const double> noise);
FeatureVector perturb(std::span<const double> q, std::span<const double> n, double delta);
FeatureVector adversarial(std::span<const double> q, std::span<const double> n, double eta);

/// sign(x) with sign(0) = 0.
double sign(double x);

// Strategy samplers. All throw EmptyHardestSet when `hardest` is empty.
FeatureSet synth_interpolated(std::span<const double> q, const HardestSet& hardest, const FeatureSet& negatives,
                              std::size_t count, double alpha_max, Rng& rng);
FeatureSet synth_extrapolated(std::span<const double> q, const HardestSet& hardest, const FeatureSet& negatives,
                              std::size_t count, double beta_max, Rng& rng);
FeatureSet synth_mixup(const HardestSet& hardest, const FeatureSet& negatives, std::size_t count, Rng& rng);
FeatureSet synth_noise(const HardestSet& hardest, const FeatureSet& negatives, std::size_t count, double sigma,
                       Rng& rng);
FeatureSet synth_perturbed(std::span<const double> q, const HardestSet& hardest, const FeatureSet& negatives,
                           std::size_t count, double delta, Rng& rng);
FeatureSet synth_adversarial(std::span<const double> q, const HardestSet& hardest, const FeatureSet& negatives,
                             std::size_t count, double eta, Rng& rng);

/// Concatenation S1 | ... | S6 of the enabled strategies for one query.
/// Empty during warm-up (epoch < warmup_epochs), when disabled, or when there
/// are no memory negatives to draw from yet.
FeatureSet generate_all(std::span<const double> q, const FeatureSet& negatives, double tau,
                        const SynthesisConfig& config, std::size_t epoch, Rng& rng);

/// Same, reusing logits already computed against `negatives`.
FeatureSet generate_all(std::span<const double> q, const FeatureSet& negatives, std::span<const double> logits,
                        const SynthesisConfig& config, std::size_t epoch, Rng& rng);

}  // namespace synco
