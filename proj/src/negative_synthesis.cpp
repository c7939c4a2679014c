#include "synco/negative_synthesis.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>
#include <string>

namespace synco {

namespace {

// Degenerate (zero-norm) syntheses are redrawn this many times before the slot is dropped.
constexpr int kMaxResample = 8;

template <typename Draw>
FeatureSet fill(std::size_t dim, std::size_t count, const char* name, Draw&& draw) {
  FeatureSet out(dim);
  out.reserve(count);
  std::size_t dropped = 0;
  for (std::size_t k = 0; k < count; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt <= kMaxResample && !ok; ++attempt) {
      try {
        out.push_back(draw());
        ok = true;
      } catch (const ZeroVectorError&) {
      }
    }
    if (!ok) ++dropped;
  }
  if (dropped > 0) {
    std::cerr << "[warn] " << name << ": dropped " << dropped << " degenerate synthetic negatives\n";
  }
  return out;
}

std::span<const double> pick(const HardestSet& hardest, const FeatureSet& negatives, Rng& rng) {
  return negatives[hardest.indices[rng.index(hardest.size())]];
}

void require_nonempty(const HardestSet& hardest, const char* name) {
  if (hardest.empty()) throw EmptyHardestSet(std::string(name) + ": hardest set is empty");
}

}  // namespace

std::size_t SynthesisConfig::per_query_count() const {
  if (!enabled) return 0;
  std::size_t n = 0;
  for (const auto& s : strategies)
    if (s.enabled) n += s.count;
  return n;
}

void SynthesisConfig::validate() const {
  if (!(alpha_max > 0.0 && alpha_max <= 1.0)) throw ConfigError("synthesis.alpha_max must lie in (0, 1]");
  if (!(beta_max > 1.0)) throw ConfigError("synthesis.beta_max must be > 1");
  if (!(sigma >= 0.0)) throw ConfigError("synthesis.sigma must be >= 0");
  if (!(delta >= 0.0)) throw ConfigError("synthesis.delta must be >= 0");
  if (!(eta >= 0.0)) throw ConfigError("synthesis.eta must be >= 0");
  if (top_n == 0) throw ConfigError("synthesis.top_n must be positive");
}

bool SynthesisConfig::budget_exceeds(std::size_t queue_capacity) const {
  return 2 * per_query_count() >= queue_capacity;
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

std::vector<double> compute_logits(std::span<const double> q, const FeatureSet& negatives, double tau) {
  std::vector<double> logits(negatives.size());
  if (!negatives.empty() && negatives.dim() != q.size()) {
    throw DimensionMismatch("compute_logits: query and negatives differ in dimension");
  }
  const double inv_tau = 1.0 / tau;
  const std::size_t d = q.size();
  const double* row = negatives.data().data();
  for (std::size_t i = 0; i < negatives.size(); ++i, row += d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += q[j] * row[j];
    logits[i] = s * inv_tau;
  }
  return logits;
}

Matrix compute_logits(const FeatureSet& queries, const FeatureSet& negatives, double tau) {
  const std::size_t k = negatives.size();
  Matrix logits(queries.size(), k);
  if (k == 0 || queries.empty()) return logits;
  if (negatives.dim() != queries.dim()) throw DimensionMismatch("compute_logits: queries and negatives differ");
  const std::size_t d = queries.dim();
  // column-major copy so the inner loop runs over negatives; each logit keeps
  // the same summation order over coordinates as the single-query overload
  Vector t(d * k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < d; ++j) t[j * k + i] = negatives[i][j];
  const double inv_tau = 1.0 / tau;
  for (std::size_t r = 0; r < queries.size(); ++r) {
    const auto q = queries[r];
    auto out = logits.row(r);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      const double qj = q[j];
      const double* col = t.data() + j * k;
      for (std::size_t i = 0; i < k; ++i) out[i] += qj * col[i];
    }
    for (double& v : out) v *= inv_tau;
  }
  return logits;
}

HardestSet select_hardest(std::span<const double> logits, std::size_t n) {
  struct Entry {
    double logit;
    std::size_t index;
  };
  std::vector<Entry> entries(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) entries[i] = {logits[i], i};
  const std::size_t keep = std::min(n, logits.size());
  auto harder = [](const Entry& a, const Entry& b) {
    return a.logit > b.logit || (a.logit == b.logit && a.index < b.index);
  };
  std::partial_sort(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(keep), entries.end(), harder);
  HardestSet h;
  h.indices.reserve(keep);
  h.logits.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    h.indices.push_back(entries[i].index);
    h.logits.push_back(entries[i].logit);
  }
  return h;
}

FeatureVector interpolate(std::span<const double> q, std::span<const double> n, double alpha) {
  if (q.size() != n.size()) throw DimensionMismatch("interpolate: dimension mismatch");
  Vector s(q.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = alpha * q[i] + (1.0 - alpha) * n[i];
  return normalize(s);
}

FeatureVector extrapolate(std::span<const double> q, std::span<const double> n, double beta) {
  if (q.size() != n.size()) throw DimensionMismatch("extrapolate: dimension mismatch");
  Vector s(q.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = n[i] + beta * (n[i] - q[i]);
  return normalize(s);
}

FeatureVector mix(std::span<const double> ni, std::span<const double> nj, double gamma) {
  if (ni.size() != nj.size()) throw DimensionMismatch("mix: dimension mismatch");
  Vector s(ni.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = gamma * ni[i] + (1.0 - gamma) * nj[i];
  return normalize(s);
}

FeatureVector add_noise(std::span<const double> n, std::span<const double> noise) {
  if (n.size() != noise.size()) throw DimensionMismatch("add_noise: dimension mismatch");
  Vector s(n.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = n[i] + noise[i];
  return normalize(s);
}

// grad_n (q . n) = q
FeatureVector perturb(std::span<const double> q, std::span<const double> n, double delta) {
  if (q.size() != n.size()) throw DimensionMismatch("perturb: dimension mismatch");
  Vector s(n.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = n[i] + delta * q[i];
  return normalize(s);
}

FeatureVector adversarial(std::span<const double> q, std::span<const double> n, double eta) {
  if (q.size() != n.size()) throw DimensionMismatch("adversarial: dimension mismatch");
  Vector s(n.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = n[i] + eta * sign(q[i]);
  return normalize(s);
}

FeatureSet synth_interpolated(std::span<const double> q, const HardestSet& hardest, const FeatureSet& negatives,
                              std::size_t count, double alpha_max, Rng& rng) {
  require_nonempty(hardest, "synth_interpolated");
  return fill(q.size(), count, "synth_interpolated", [&] {
    const auto n = pick(hardest, negatives, rng);
    return interpolate(q, n, rng.uniform(0.0, alpha_max));
  });
}

FeatureSet synth_extrapolated(std::span<const double> q, const HardestSet& hardest, const FeatureSet& negatives,
                              std::size_t count, double beta_max, Rng& rng) {
  require_nonempty(hardest, "synth_extrapolated");
  return fill(q.size(), count, "synth_extrapolated", [&] {
    const auto n = pick(hardest, negatives, rng);
    return extrapolate(q, n, rng.uniform(1.0, beta_max));
  });
}

FeatureSet synth_mixup(const HardestSet& hardest, const FeatureSet& negatives, std::size_t count, Rng& rng) {
  require_nonempty(hardest, "synth_mixup");
  return fill(negatives.dim(), count, "synth_mixup", [&] {
    const auto ni = pick(hardest, negatives, rng);
    const auto nj = pick(hardest, negatives, rng);
    return mix(ni, nj, rng.uniform(0.0, 1.0));
  });
}

FeatureSet synth_noise(const HardestSet& hardest, const FeatureSet& negatives, std::size_t count, double sigma,
                       Rng& rng) {
  require_nonempty(hardest, "synth_noise");
  return fill(negatives.dim(), count, "synth_noise", [&] {
    const auto n = pick(hardest, negatives, rng);
    const Vector eps = gaussian_sample(n.size(), sigma, rng);
    return add_noise(n, eps);
  });
}

FeatureSet synth_perturbed(std::span<const double> q, const HardestSet& hardest, const FeatureSet& negatives,
                           std::size_t count, double delta, Rng& rng) {
  require_nonempty(hardest, "synth_perturbed");
  return fill(q.size(), count, "synth_perturbed", [&] { return perturb(q, pick(hardest, negatives, rng), delta); });
}

FeatureSet synth_adversarial(std::span<const double> q, const HardestSet& hardest, const FeatureSet& negatives,
                             std::size_t count, double eta, Rng& rng) {
  require_nonempty(hardest, "synth_adversarial");
  return fill(q.size(), count, "synth_adversarial",
              [&] { return adversarial(q, pick(hardest, negatives, rng), eta); });
}

FeatureSet generate_all(std::span<const double> q, const FeatureSet& negatives, double tau,
                        const SynthesisConfig& config, std::size_t epoch, Rng& rng) {
  const auto logits = compute_logits(q, negatives, tau);
  return generate_all(q, negatives, logits, config, epoch, rng);
}

FeatureSet generate_all(std::span<const double> q, const FeatureSet& negatives, std::span<const double> logits,
                        const SynthesisConfig& config, std::size_t epoch, Rng& rng) {
  FeatureSet out(q.size());
  if (!config.enabled || epoch < config.warmup_epochs || negatives.empty()) return out;
  if (config.per_query_count() == 0) return out;

  const HardestSet hardest = select_hardest(logits, config.top_n);
  out.reserve(config.per_query_count());
  using enum Strategy;
  if (const auto& s = config[kInterpolated]; s.enabled && s.count > 0)
    out.append(synth_interpolated(q, hardest, negatives, s.count, config.alpha_max, rng));
  if (const auto& s = config[kExtrapolated]; s.enabled && s.count > 0)
    out.append(synth_extrapolated(q, hardest, negatives, s.count, config.beta_max, rng));
  if (const auto& s = config[kMixup]; s.enabled && s.count > 0)
    out.append(synth_mixup(hardest, negatives, s.count, rng));
  if (const auto& s = config[kNoise]; s.enabled && s.count > 0)
    out.append(synth_noise(hardest, negatives, s.count, config.sigma, rng));
  if (const auto& s = config[kPerturbed]; s.enabled && s.count > 0)
    out.append(synth_perturbed(q, hardest, negatives, s.count, config.delta, rng));
  if (const auto& s = config[kAdversarial]; s.enabled && s.count > 0)
    out.append(synth_adversarial(q, hardest, negatives, s.count, config.eta, rng));
  return out;
}

}  // namespace synco
