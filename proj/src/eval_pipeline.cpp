#include "synco/eval_pipeline.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "synco/negative_synthesis.hpp"

namespace synco {

namespace {

constexpr std::array<std::pair<Metric, std::string_view>, 6> kMetricNames = {{
    {Metric::kProbe, "probe"},
    {Metric::kProxy, "proxy"},
    {Metric::kAlignment, "alignment"},
    {Metric::kUniformity, "uniformity"},
    {Metric::kConcentration, "concentration"},
    {Metric::kHardness, "hardness"},
}};

}  // namespace

std::string_view metric_name(Metric m) {
  for (const auto& [metric, name] : kMetricNames)
    if (metric == m) return name;
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  for (const auto& [metric, n] : kMetricNames)
    if (n == name) return metric;
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

bool requires_labels(Metric m) { return m == Metric::kProbe || m == Metric::kConcentration; }

bool EvalConfig::wants(Metric m) const { return std::find(metrics.begin(), metrics.end(), m) != metrics.end(); }

nlohmann::ordered_json EvalReport::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (probe_top1) j["probe_top1"] = *probe_top1;
  if (proxy_acc) j["proxy_acc"] = *proxy_acc;
  if (alignment) j["alignment"] = *alignment;
  if (uniformity) j["uniformity"] = *uniformity;
  if (concentration_mean) j["concentration_mean"] = *concentration_mean;
  if (concentration_hist) j["concentration_hist"] = *concentration_hist;
  if (hardness_curve) j["hardness_curve"] = *hardness_curve;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  auto scalar = [&](const char* key, std::optional<double>& dst) {
    if (j.contains(key)) dst = j.at(key).get<double>();
  };
  scalar("probe_top1", r.probe_top1);
  scalar("proxy_acc", r.proxy_acc);
  scalar("alignment", r.alignment);
  scalar("uniformity", r.uniformity);
  scalar("concentration_mean", r.concentration_mean);
  if (j.contains("concentration_hist")) r.concentration_hist = j.at("concentration_hist").get<std::vector<std::size_t>>();
  if (j.contains("hardness_curve")) r.hardness_curve = j.at("hardness_curve").get<std::vector<double>>();
  return r;
}

EvalReport evaluate(const TrainState& state, const Dataset& full, const EvalConfig& config) {
  for (Metric m : config.metrics) {
    if (requires_labels(m) && !full.has_labels()) {
      throw MissingLabels("metric '" + std::string(metric_name(m)) + "' requires labels but the dataset has none");
    }
  }
  full.validate();
  Rng rng = stream(config.seed, Stream::kEval);

  // deterministic subsample
  std::vector<std::size_t> idx(full.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (idx.size() > config.max_samples) {
    Rng pick = rng.split(0);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[pick.index(i)]);
    idx.resize(config.max_samples);
    std::sort(idx.begin(), idx.end());
  }
  Matrix inputs(idx.size(), full.dim());
  std::vector<Label> labels;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::ranges::copy(full.samples.row(idx[r]), inputs.row(r).begin());
    if (full.labels) labels.push_back((*full.labels)[idx[r]]);
  }

  EvalReport report;
  const FeatureSet features = forward(state.encoder.query, inputs).features;

  if (config.wants(Metric::kProbe)) {
    Rng probe_rng = stream(config.seed, Stream::kProbe);
    report.probe_top1 = linear_probe(features, labels, config.probe, probe_rng).accuracy;
  }
  if (config.wants(Metric::kUniformity)) report.uniformity = uniformity(features, config.uniformity_t);
  if (config.wants(Metric::kConcentration)) {
    const auto conc = class_concentration(features, labels);
    report.concentration_mean = conc.mean;
    report.concentration_hist = conc.histogram;
  }

  const bool need_views =
      config.wants(Metric::kAlignment) || config.wants(Metric::kProxy) || config.wants(Metric::kHardness);
  if (need_views) {
    Rng views_rng = rng.split(1);
    Matrix vq(inputs.rows(), inputs.cols()), vk(inputs.rows(), inputs.cols());
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
      Rng rr = views_rng.split(r);
      auto [a, b] = two_views(inputs.row(r), config.augmentation, rr);
      std::ranges::copy(a, vq.row(r).begin());
      std::ranges::copy(b, vk.row(r).begin());
    }
    const FeatureSet fq = forward(state.encoder.query, vq).features;

    if (config.wants(Metric::kAlignment)) {
      const FeatureSet fq2 = forward(state.encoder.query, vk).features;
      std::vector<std::pair<FeatureVector, FeatureVector>> pairs;
      pairs.reserve(fq.size());
      for (std::size_t r = 0; r < fq.size(); ++r) pairs.emplace_back(fq.at(r), fq2.at(r));
      report.alignment = alignment(pairs);
    }

    if (config.wants(Metric::kProxy) || config.wants(Metric::kHardness)) {
      const FeatureSet fk = forward(state.encoder.key, vk).features;
      const FeatureSet memory = state.queue.negatives();
      const std::size_t top_k = std::min(config.hardness_top_k, memory.size());
      const FeatureSet none(fq.dim());
      std::size_t hits = 0;
      std::vector<double> curve(top_k, 0.0);
      std::vector<std::vector<double>> one(1);
      for (std::size_t r = 0; r < fq.size(); ++r) {
        const double key_logit = dot(fq[r], fk[r]) / config.tau;
        if (proxy_hit(key_logit, compute_logits(fq[r], memory, config.tau))) ++hits;
        if (config.wants(Metric::kHardness) && top_k > 0) {
          const auto p = matching_probabilities(fq[r], fk[r], memory, none, config.tau);
          one[0].assign(p.negatives().begin(), p.negatives().end());
          const auto c = hardness_histogram(one, top_k);
          for (std::size_t i = 0; i < top_k; ++i) curve[i] += c[i];
        }
      }
      if (config.wants(Metric::kProxy)) {
        const std::array<std::pair<std::size_t, std::size_t>, 1> tally{{{hits, fq.size()}}};
        report.proxy_acc = proxy_accuracy(tally);
      }
      if (config.wants(Metric::kHardness)) {
        for (double& v : curve) v /= static_cast<double>(fq.size());
        report.hardness_curve = std::move(curve);
      }
    }
  }
  return report;
}

}  // namespace synco
