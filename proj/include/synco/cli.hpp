#pragma once

// Command-line front end: `synco pretrain | eval | compare`.
//
// Exit codes: 0 success, 1 configuration or I/O error, 2 numeric abort
// (the NaN dump path is printed), 3 labels required but absent.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "synco/eval_pipeline.hpp"

namespace synco {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumeric = 2;
inline constexpr int kExitLabels = 3;

struct PretrainArgs {
  std::filesystem::path config;  // empty: built-in defaults
  std::vector<std::string> overrides;
  std::optional<std::filesystem::path> resume;
};

struct EvalArgs {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> config;  // default: resolved_config.json beside the checkpoint
  std::vector<std::string> overrides;
  std::optional<std::string> metrics;  // comma-separated subset
  std::optional<std::filesystem::path> out;  // default: eval_report.json beside the checkpoint
};

struct CompareArgs {
  std::filesystem::path run_a;
  std::filesystem::path run_b;
  std::filesystem::path out_dir = ".";
};

int cmd_pretrain(const PretrainArgs& args, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err);

/// Writes the JSON report plus concentration_hist.csv / hardness_curve.csv beside it.
void write_eval_report(const std::filesystem::path& path, const EvalReport& report);

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace synco
