#include "synco/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <string>

namespace synco {

void ProbeConfig::validate() const {
  if (!(label_fraction > 0.0 && label_fraction <= 1.0)) throw ConfigError("probe.label_fraction must lie in (0, 1]");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw ConfigError("probe.holdout_fraction must lie in (0, 1)");
  if (!(lr > 0.0)) throw ConfigError("probe.lr must be > 0");
  if (batch_size == 0) throw ConfigError("probe.batch_size must be positive");
}

namespace {

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.index(i)]);
}

}  // namespace

ProbeResult linear_probe(const FeatureSet& features, std::span<const Label> labels, const ProbeConfig& config,
                         Rng& rng) {
  config.validate();
  if (labels.empty()) throw MissingLabels("linear probe requires labels");
  if (labels.size() != features.size()) throw ShapeMismatch("linear probe: features and labels differ in length");

  std::map<Label, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  const std::size_t num_classes = by_class.size();
  const std::size_t d = features.dim();

  ProbeResult result;
  std::vector<std::size_t> train, test;
  std::vector<std::size_t> target(labels.size());
  std::size_t cls = 0;
  for (auto& [label, idx] : by_class) {
    for (std::size_t i : idx) target[i] = cls;
    shuffle(idx, rng);
    std::size_t held = 0;
    if (idx.size() >= 2) {
      held = std::max<std::size_t>(1, static_cast<std::size_t>(config.holdout_fraction * static_cast<double>(idx.size())));
    }
    const std::size_t pool = idx.size() - held;
    const auto take = static_cast<std::size_t>(std::floor(config.label_fraction * static_cast<double>(pool) + 1e-9));
    test.insert(test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(held));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(held),
                 idx.begin() + static_cast<std::ptrdiff_t>(held + take));
    result.train_per_class.push_back(take);
    ++cls;
  }
  if (train.empty() || test.empty()) throw InsufficientData("linear probe: empty train or test split");
  result.train_count = train.size();
  result.test_count = test.size();

  Matrix w(num_classes, d);
  Vector b(num_classes, 0.0);
  Vector logits(num_classes), grad_row(num_classes);
  Matrix gw(num_classes, d);
  Vector gb(num_classes);

  auto scores = [&](std::span<const double> x, Vector& out) {
    for (std::size_t c = 0; c < num_classes; ++c) out[c] = b[c] + dot(w.row(c), x);
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.lr * 0.5 *
                      (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(config.epochs)));
    shuffle(train, rng);
    for (std::size_t start = 0; start < train.size(); start += config.batch_size) {
      const std::size_t end = std::min(train.size(), start + config.batch_size);
      std::fill(gw.data().begin(), gw.data().end(), 0.0);
      std::fill(gb.begin(), gb.end(), 0.0);
      for (std::size_t s = start; s < end; ++s) {
        const auto x = features[train[s]];
        scores(x, logits);
        const double m = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (std::size_t c = 0; c < num_classes; ++c) z += (grad_row[c] = std::exp(logits[c] - m));
        for (std::size_t c = 0; c < num_classes; ++c) {
          const double g = grad_row[c] / z - (c == target[train[s]] ? 1.0 : 0.0);
          gb[c] += g;
          auto gr = gw.row(c);
          for (std::size_t j = 0; j < d; ++j) gr[j] += g * x[j];
        }
      }
      const double scale = lr / static_cast<double>(end - start);
      for (std::size_t i = 0; i < w.data().size(); ++i) w.data()[i] -= scale * gw.data()[i];
      for (std::size_t c = 0; c < num_classes; ++c) b[c] -= scale * gb[c];
    }
  }

  std::size_t correct = 0;
  for (std::size_t i : test) {
    scores(features[i], logits);
    const auto best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == target[i]) ++correct;
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  return result;
}

bool proxy_hit(double key_logit, std::span<const double> negative_logits) {
  return std::all_of(negative_logits.begin(), negative_logits.end(), [&](double l) { return key_logit > l; });
}

double proxy_accuracy(std::span<const RankedQuery> queries) {
  if (queries.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& q : queries)
    if (proxy_hit(q.key_logit, q.negative_logits)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

double proxy_accuracy(std::span<const std::pair<std::size_t, std::size_t>> hits_and_counts) {
  std::size_t hits = 0, total = 0;
  for (const auto& [h, n] : hits_and_counts) {
    hits += h;
    total += n;
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<double> hardness_histogram(const std::vector<std::vector<double>>& negative_probs, std::size_t top_k) {
  std::vector<double> curve(top_k, 0.0);
  if (negative_probs.empty()) return curve;
  std::vector<double> sorted;
  for (const auto& probs : negative_probs) {
    if (probs.size() < top_k) {
      throw InsufficientData("hardness_histogram: top_k " + std::to_string(top_k) + " exceeds " +
                             std::to_string(probs.size()) + " negatives");
    }
    sorted = probs;
    std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(top_k), sorted.end(),
                      std::greater<>());
    for (std::size_t i = 0; i < top_k; ++i) curve[i] += sorted[i];
  }
  for (double& v : curve) v /= static_cast<double>(negative_probs.size());
  return curve;
}

double alignment(std::span<const std::pair<FeatureVector, FeatureVector>> pairs) {
  if (pairs.empty()) throw EmptyInput("alignment needs at least one positive pair");
  double s = 0.0;
  for (const auto& [a, b] : pairs) s += squared_distance(a, b);
  return s / static_cast<double>(pairs.size());
}

double uniformity(const FeatureSet& features, double t) {
  const std::size_t n = features.size();
  if (n < 2) throw InsufficientData("uniformity needs at least two features");
  // exponents lie in [-4t, 0], so a plain sum cannot overflow
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += std::exp(-t * squared_distance(features[i], features[j]));
  return std::log(s) - std::log(static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

ConcentrationReport class_concentration(const FeatureSet& features, std::span<const Label> labels) {
  if (labels.empty()) throw MissingLabels("class concentration requires labels");
  if (labels.size() != features.size()) throw ShapeMismatch("class concentration: features and labels differ");
  std::map<Label, std::size_t> counts;
  for (Label l : labels) ++counts[l];
  if (counts.size() < 2) throw InsufficientData("class concentration needs at least two classes");
  for (const auto& [l, c] : counts) {
    if (c < 2) throw InsufficientData("class " + std::to_string(l) + " has fewer than two samples");
  }

  const std::size_t n = features.size();
  Vector intra(n, 0.0), inter(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = std::sqrt(squared_distance(features[i], features[j]));
      auto& bucket = labels[i] == labels[j] ? intra : inter;
      bucket[i] += dist;
      bucket[j] += dist;
    }
  }

  ConcentrationReport report;
  report.ratios.resize(n);
  report.histogram.assign(ConcentrationReport::kBins, 0);
  double sum = 0.0;
  std::size_t finite = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double own = static_cast<double>(counts[labels[i]]);
    const double mean_intra = intra[i] / (own - 1.0);
    const double mean_inter = inter[i] / (static_cast<double>(n) - own);
    if (mean_intra < 1e-12) {
      report.ratios[i] = std::numeric_limits<double>::infinity();
      ++report.degenerate;
      continue;
    }
    const double r = mean_inter / mean_intra;
    report.ratios[i] = r;
    sum += r;
    ++finite;
    const double width = ConcentrationReport::kHistMax / static_cast<double>(ConcentrationReport::kBins);
    const auto bin = std::min(ConcentrationReport::kBins - 1, static_cast<std::size_t>(r / width));
    ++report.histogram[bin];
  }
  if (report.degenerate > 0) {
    std::cerr << "[warn] class_concentration: " << report.degenerate
              << " samples have zero intra-class spread; excluded from the mean\n";
  }
  if (finite == 0) throw DegenerateClass("class concentration: every sample has zero intra-class distance");
  report.mean = sum / static_cast<double>(finite);
  return report;
}

}  // namespace synco
