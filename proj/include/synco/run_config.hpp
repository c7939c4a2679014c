#pragma once

// Run configuration document: defaults <- JSON file <- `--set dotted.key=value`.
// Unknown keys and type mismatches are rejected with a ConfigError naming the key.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "synco/data_pipeline.hpp"
#include "synco/eval_pipeline.hpp"
#include "synco/trainer.hpp"

namespace synco {

struct DatasetConfig {
  std::string source = "gaussian_mixture";  // gaussian_mixture | idx | csv
  std::uint64_t seed = 1234;                // generator seed, independent of the training seed
  GaussianMixtureSpec mixture;
  std::string images_path;
  std::string labels_path;
  std::string csv_path;

  /// Resolves relative paths against `base_dir`.
  Dataset load(const std::filesystem::path& base_dir = {}) const;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  DatasetConfig dataset;
  TrainConfig train;  // train.seed mirrors `seed`
  bool eval_after_pretrain = true;
  EvalConfig eval;  // eval.seed and eval.tau mirror `seed` and `loss.tau`

  nlohmann::ordered_json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  void validate() const;
};

/// Applies one `dotted.key=value` override onto a document, typed by the value already there.
void apply_override(nlohmann::ordered_json& doc, std::string_view assignment);

/// Overlays `patch` onto `base`; keys absent from `base` are rejected.
void merge_strict(nlohmann::ordered_json& base, const nlohmann::json& patch, const std::string& prefix = {});

/// Defaults, then the file (if non-empty), then the overrides in order.
RunConfig resolve_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace synco
