#pragma once

// Encodes an evaluation set with a trained state and assembles eval_report.json.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "synco/data_pipeline.hpp"
#include "synco/evaluation.hpp"
#include "synco/trainer.hpp"

namespace synco {

enum class Metric { kProbe, kProxy, kAlignment, kUniformity, kConcentration, kHardness };

std::string_view metric_name(Metric m);
/// Throws ConfigError for an unknown name.
Metric parse_metric(std::string_view name);
bool requires_labels(Metric m);

struct EvalConfig {
  std::vector<Metric> metrics = {Metric::kProbe,       Metric::kProxy,         Metric::kAlignment,
                                 Metric::kUniformity, Metric::kConcentration, Metric::kHardness};
  ProbeConfig probe;
  double uniformity_t = 2.0;
  std::size_t hardness_top_k = 64;
  std::size_t max_samples = 5000;  // evaluation subsample cap (pairwise metrics are quadratic)
  AugmentationConfig augmentation;  // used for alignment pairs and proxy views
  double tau = 0.2;
  std::uint64_t seed = 0;

  bool wants(Metric m) const;
};

struct EvalReport {
  std::optional<double> probe_top1;
  std::optional<double> proxy_acc;
  std::optional<double> alignment;
  std::optional<double> uniformity;
  std::optional<double> concentration_mean;
  std::optional<std::vector<std::size_t>> concentration_hist;
  std::optional<std::vector<double>> hardness_curve;

  nlohmann::ordered_json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

/// Throws MissingLabels when a label-requiring metric is requested on unlabeled data.
EvalReport evaluate(const TrainState& state, const Dataset& data, const EvalConfig& config);

}  // namespace synco
