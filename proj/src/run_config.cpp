#include "synco/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "synco/errors.hpp"

namespace synco {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

const char* type_label(const ordered_json& v) {
  switch (v.type()) {
    case json::value_t::boolean: return "a boolean";
    case json::value_t::number_unsigned: return "a non-negative integer";
    case json::value_t::number_integer: return "an integer";
    case json::value_t::number_float: return "a number";
    case json::value_t::string: return "a string";
    case json::value_t::array: return "a list of strings";
    case json::value_t::object: return "a section";
    default: return "a value";
  }
}

bool compatible(const ordered_json& base, const json& v) {
  switch (base.type()) {
    case json::value_t::boolean: return v.is_boolean();
    case json::value_t::number_unsigned: return v.is_number_unsigned();
    case json::value_t::number_integer: return v.is_number_integer();
    case json::value_t::number_float: return v.is_number();
    case json::value_t::string: return v.is_string();
    case json::value_t::array:
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!e.is_string()) return false;
      return true;
    case json::value_t::object: return v.is_object();
    default: return false;
  }
}

}  // namespace

Dataset DatasetConfig::load(const std::filesystem::path& base_dir) const {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  if (source == "gaussian_mixture") return generate_gaussian_mixture(mixture, seed);
  if (source == "idx") {
    if (images_path.empty()) throw ConfigError("dataset.images_path is required for source 'idx'");
    std::optional<std::filesystem::path> labels;
    if (!labels_path.empty()) labels = resolve(labels_path);
    return load_idx(resolve(images_path), labels);
  }
  if (source == "csv") {
    if (csv_path.empty()) throw ConfigError("dataset.csv_path is required for source 'csv'");
    return load_csv(resolve(csv_path));
  }
  throw ConfigError("dataset.source must be one of gaussian_mixture, idx, csv (got '" + source + "')");
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["synco_version"] = SYNCO_VERSION;
  j["seed"] = seed;
  j["output_dir"] = output_dir;

  auto& d = j["dataset"];
  d["source"] = dataset.source;
  d["seed"] = dataset.seed;
  d["num_classes"] = dataset.mixture.num_classes;
  d["per_class"] = dataset.mixture.per_class;
  d["dim"] = dataset.mixture.dim;
  d["class_separation"] = dataset.mixture.class_separation;
  d["noise_sigma"] = dataset.mixture.noise_sigma;
  d["images_path"] = dataset.images_path;
  d["labels_path"] = dataset.labels_path;
  d["csv_path"] = dataset.csv_path;

  auto& e = j["encoder"];
  e["hidden_dim"] = train.encoder.hidden_dim;
  e["hidden_layers"] = train.encoder.hidden_layers;
  e["embedding_dim"] = train.encoder.embedding_dim;
  e["momentum"] = train.encoder.momentum;

  auto& t = j["trainer"];
  t["epochs"] = train.epochs;
  t["batch_size"] = train.batch_size;
  t["lr"] = train.lr;
  t["weight_decay"] = train.weight_decay;
  t["sgd_momentum"] = train.sgd_momentum;
  t["queue_size"] = train.queue_size;
  t["checkpoint_every"] = train.checkpoint_every;
  t["hardness_top_k"] = train.hardness_top_k;

  const auto& sc = train.synthesis;
  auto& s = j["synthesis"];
  s["enabled"] = sc.enabled;
  s["top_n"] = sc.top_n;
  s["warmup_epochs"] = sc.warmup_epochs;
  s["alpha_max"] = sc.alpha_max;
  s["beta_max"] = sc.beta_max;
  s["sigma"] = sc.sigma;
  s["delta"] = sc.delta;
  s["eta"] = sc.eta;
  for (std::size_t i = 0; i < kNumStrategies; ++i) {
    auto& entry = s["strategies"][std::string(kStrategyNames[i])];
    entry["enabled"] = sc.strategies[i].enabled;
    entry["count"] = sc.strategies[i].count;
  }

  j["loss"]["tau"] = train.loss.tau;

  const auto& ac = train.augmentation;
  auto& a = j["augmentation"];
  a["jitter_sigma"] = ac.jitter_sigma;
  a["scale_lo"] = ac.scale_lo;
  a["scale_hi"] = ac.scale_hi;
  a["mask_fraction"] = ac.mask_fraction;

  auto& v = j["eval"];
  v["run_after_pretrain"] = eval_after_pretrain;
  v["metrics"] = ordered_json::array();
  for (Metric m : eval.metrics) v["metrics"].push_back(std::string(metric_name(m)));
  v["max_samples"] = eval.max_samples;
  v["uniformity_t"] = eval.uniformity_t;
  v["hardness_top_k"] = eval.hardness_top_k;
  auto& p = v["probe"];
  p["epochs"] = eval.probe.epochs;
  p["lr"] = eval.probe.lr;
  p["batch_size"] = eval.probe.batch_size;
  p["label_fraction"] = eval.probe.label_fraction;
  p["holdout_fraction"] = eval.probe.holdout_fraction;
  return j;
}

RunConfig RunConfig::from_json(const json& input) {
  ordered_json j = RunConfig{}.to_json();
  json patch = input;
  if (patch.is_object()) patch.erase("synco_version");  // informational only
  merge_strict(j, patch);

  RunConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.output_dir = j.at("output_dir").get<std::string>();

  const auto& d = j.at("dataset");
  c.dataset.source = d.at("source").get<std::string>();
  c.dataset.seed = d.at("seed").get<std::uint64_t>();
  c.dataset.mixture.num_classes = d.at("num_classes").get<std::size_t>();
  c.dataset.mixture.per_class = d.at("per_class").get<std::size_t>();
  c.dataset.mixture.dim = d.at("dim").get<std::size_t>();
  c.dataset.mixture.class_separation = d.at("class_separation").get<double>();
  c.dataset.mixture.noise_sigma = d.at("noise_sigma").get<double>();
  c.dataset.images_path = d.at("images_path").get<std::string>();
  c.dataset.labels_path = d.at("labels_path").get<std::string>();
  c.dataset.csv_path = d.at("csv_path").get<std::string>();

  const auto& e = j.at("encoder");
  c.train.encoder.hidden_dim = e.at("hidden_dim").get<std::size_t>();
  c.train.encoder.hidden_layers = e.at("hidden_layers").get<std::size_t>();
  c.train.encoder.embedding_dim = e.at("embedding_dim").get<std::size_t>();
  c.train.encoder.momentum = e.at("momentum").get<double>();

  const auto& t = j.at("trainer");
  c.train.epochs = t.at("epochs").get<std::size_t>();
  c.train.batch_size = t.at("batch_size").get<std::size_t>();
  c.train.lr = t.at("lr").get<double>();
  c.train.weight_decay = t.at("weight_decay").get<double>();
  c.train.sgd_momentum = t.at("sgd_momentum").get<double>();
  c.train.queue_size = t.at("queue_size").get<std::size_t>();
  c.train.checkpoint_every = t.at("checkpoint_every").get<std::size_t>();
  c.train.hardness_top_k = t.at("hardness_top_k").get<std::size_t>();

  const auto& s = j.at("synthesis");
  auto& sc = c.train.synthesis;
  sc.enabled = s.at("enabled").get<bool>();
  sc.top_n = s.at("top_n").get<std::size_t>();
  sc.warmup_epochs = s.at("warmup_epochs").get<std::size_t>();
  sc.alpha_max = s.at("alpha_max").get<double>();
  sc.beta_max = s.at("beta_max").get<double>();
  sc.sigma = s.at("sigma").get<double>();
  sc.delta = s.at("delta").get<double>();
  sc.eta = s.at("eta").get<double>();
  for (std::size_t i = 0; i < kNumStrategies; ++i) {
    const auto& entry = s.at("strategies").at(std::string(kStrategyNames[i]));
    sc.strategies[i].enabled = entry.at("enabled").get<bool>();
    sc.strategies[i].count = entry.at("count").get<std::size_t>();
  }

  c.train.loss.tau = j.at("loss").at("tau").get<double>();

  const auto& a = j.at("augmentation");
  c.train.augmentation.jitter_sigma = a.at("jitter_sigma").get<double>();
  c.train.augmentation.scale_lo = a.at("scale_lo").get<double>();
  c.train.augmentation.scale_hi = a.at("scale_hi").get<double>();
  c.train.augmentation.mask_fraction = a.at("mask_fraction").get<double>();

  const auto& v = j.at("eval");
  c.eval_after_pretrain = v.at("run_after_pretrain").get<bool>();
  c.eval.metrics.clear();
  for (const auto& m : v.at("metrics")) c.eval.metrics.push_back(parse_metric(m.get<std::string>()));
  c.eval.max_samples = v.at("max_samples").get<std::size_t>();
  c.eval.uniformity_t = v.at("uniformity_t").get<double>();
  c.eval.hardness_top_k = v.at("hardness_top_k").get<std::size_t>();
  const auto& p = v.at("probe");
  c.eval.probe.epochs = p.at("epochs").get<std::size_t>();
  c.eval.probe.lr = p.at("lr").get<double>();
  c.eval.probe.batch_size = p.at("batch_size").get<std::size_t>();
  c.eval.probe.label_fraction = p.at("label_fraction").get<double>();
  c.eval.probe.holdout_fraction = p.at("holdout_fraction").get<double>();

  c.train.seed = c.seed;
  c.eval.seed = c.seed;
  c.eval.tau = c.train.loss.tau;
  c.eval.augmentation = c.train.augmentation;
  return c;
}

void RunConfig::validate() const {
  train.validate();
  eval.probe.validate();
  if (dataset.source != "gaussian_mixture" && dataset.source != "idx" && dataset.source != "csv") {
    throw ConfigError("dataset.source must be one of gaussian_mixture, idx, csv (got '" + dataset.source + "')");
  }
  if (dataset.source == "gaussian_mixture") {
    if (dataset.mixture.num_classes == 0 || dataset.mixture.per_class == 0 || dataset.mixture.dim == 0) {
      throw ConfigError("dataset.num_classes, dataset.per_class and dataset.dim must be positive");
    }
    if (!(dataset.mixture.noise_sigma >= 0.0)) throw ConfigError("dataset.noise_sigma must be >= 0");
  }
  if (!(eval.uniformity_t > 0.0)) throw ConfigError("eval.uniformity_t must be > 0");
  if (eval.max_samples < 2) throw ConfigError("eval.max_samples must be at least 2");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

void merge_strict(ordered_json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) {
    throw ConfigError((prefix.empty() ? std::string("configuration") : "'" + prefix + "'") + " must be a JSON object");
  }
  for (const auto& [key, value] : patch.items()) {
    const std::string path = join(prefix, key);
    if (!base.contains(key)) throw ConfigError("unknown configuration key '" + path + "'");
    auto& slot = base[key];
    if (!compatible(slot, value)) {
      throw ConfigError("configuration key '" + path + "' must be " + type_label(slot));
    }
    if (slot.is_object()) {
      merge_strict(slot, value, path);
    } else if (slot.is_number_float()) {
      slot = value.get<double>();
    } else {
      slot = value;
    }
  }
}

void apply_override(ordered_json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' must have the form dotted.key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));

  ordered_json* node = &doc;
  std::string walked;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    walked = join(walked, part);
    if (!node->is_object() || !node->contains(part)) throw ConfigError("unknown configuration key '" + walked + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }

  auto bad = [&]() -> ConfigError {
    return ConfigError("configuration key '" + key + "' must be " + type_label(*node) + " (got '" + text + "')");
  };
  switch (node->type()) {
    case json::value_t::boolean:
      if (text == "true") *node = true;
      else if (text == "false") *node = false;
      else throw bad();
      break;
    case json::value_t::number_unsigned: {
      std::uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) throw bad();
      *node = v;
      break;
    }
    case json::value_t::number_float: {
      std::istringstream in(text);
      in.imbue(std::locale::classic());
      double v = 0.0;
      in >> v;
      if (text.empty() || in.fail() || !in.eof() || !std::isfinite(v)) throw bad();
      *node = v;
      break;
    }
    case json::value_t::string: *node = text; break;
    case json::value_t::array: {
      ordered_json list = ordered_json::array();
      std::size_t from = 0;
      while (from <= text.size() && !text.empty()) {
        const auto comma = text.find(',', from);
        list.push_back(text.substr(from, comma == std::string::npos ? std::string::npos : comma - from));
        if (comma == std::string::npos) break;
        from = comma + 1;
      }
      *node = std::move(list);
      break;
    }
    default: throw ConfigError("configuration key '" + key + "' is a section and cannot be set directly");
  }
}

RunConfig resolve_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  ordered_json doc = RunConfig{}.to_json();
  if (!file.empty()) merge_strict(doc, read_json(file));
  for (const auto& o : overrides) apply_override(doc, o);
  RunConfig config = RunConfig::from_json(doc);
  config.validate();
  return config;
}

void write_json(const std::filesystem::path& path, const ordered_json& doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace synco
