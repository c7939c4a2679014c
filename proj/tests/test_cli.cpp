#include <gtest/gtest.h>

#include <fstream>
#include "json.hpp"
#include <sstream>

#include "synco/cli.hpp"
#include "synco/run_config.hpp"
#include "test_util.hpp"

using namespace synco;
using synco::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "synco");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json small_config(const fs::path& out_dir) {
  return {
      {"seed", 1},
      {"output_dir", out_dir.string()},
      {"dataset", {{"num_classes", 4}, {"per_class", 20}, {"dim", 8}}},
      {"encoder", {{"hidden_dim", 12}, {"embedding_dim", 6}}},
      {"trainer", {{"epochs", 3}, {"batch_size", 16}, {"queue_size", 64}, {"hardness_top_k", 8}}},
      {"synthesis",
       {{"top_n", 16},
        {"warmup_epochs", 1},
        {"strategies",
         {{"interpolated", {{"count", 4}}},
          {"extrapolated", {{"count", 4}}},
          {"mixup", {{"count", 4}}},
          {"noise", {{"count", 2}}},
          {"perturbed", {{"count", 2}}},
          {"adversarial", {{"count", 2}}}}}}},
      {"eval", {{"max_samples", 80}, {"hardness_top_k", 8}, {"probe", {{"epochs", 5}}}}},
  };
}

fs::path write_config(const fs::path& dir, const nlohmann::json& doc, const std::string& name = "config.json") {
  const fs::path p = dir / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

// One finished small run shared by the eval and compare tests.
class CliRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli_run");
    const fs::path cfg = write_config(dir_->path(), small_config(dir_->path() / "run"));
    const Outcome o = run({"pretrain", "--config", cfg.string()});
    ASSERT_EQ(o.code, 0) << o.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path run_dir() { return dir_->path() / "run"; }
  static TempDir* dir_;
};

TempDir* CliRun::dir_ = nullptr;

}  // namespace

TEST(CliPretrain, MissingConfigFileExitsOne) {
  const Outcome o = run({"pretrain", "--config", "/nonexistent/config.json"});
  EXPECT_EQ(o.code, kExitConfig);
  EXPECT_NE(o.err.find("config.json"), std::string::npos);
}

TEST(CliPretrain, UnknownKeyIsNamed) {
  TempDir d("cli");
  nlohmann::json doc = small_config(d / "run");
  doc["trainer"]["bogus"] = 3;
  const Outcome o = run({"pretrain", "--config", write_config(d.path(), doc).string()});
  EXPECT_EQ(o.code, kExitConfig);
  EXPECT_NE(o.err.find("trainer.bogus"), std::string::npos) << o.err;
  EXPECT_FALSE(fs::exists(d / "run"));
}

TEST(CliPretrain, WrongTypeIsNamed) {
  TempDir d("cli");
  nlohmann::json doc = small_config(d / "run");
  doc["trainer"]["epochs"] = "ten";
  const Outcome o = run({"pretrain", "--config", write_config(d.path(), doc).string()});
  EXPECT_EQ(o.code, kExitConfig);
  EXPECT_NE(o.err.find("trainer.epochs"), std::string::npos) << o.err;
}

TEST(CliPretrain, BadOverrideIsRejected) {
  TempDir d("cli");
  const fs::path cfg = write_config(d.path(), small_config(d / "run"));
  EXPECT_EQ(run({"pretrain", "--config", cfg.string(), "--set", "synthesis.enabled=maybe"}).code, kExitConfig);
  EXPECT_EQ(run({"pretrain", "--config", cfg.string(), "--set", "trainer.nope=1"}).code, kExitConfig);
  EXPECT_EQ(run({"pretrain", "--config", cfg.string(), "--set", "trainer=1"}).code, kExitConfig);
  EXPECT_EQ(run({"pretrain", "--config", cfg.string(), "--set", "trainer.batch_size=1000"}).code, kExitConfig);
}

TEST(CliPretrain, SameSeedOverrideGivesIdenticalMetrics) {
  TempDir d("cli");
  const fs::path cfg = write_config(d.path(), small_config(d / "unused"));
  const Outcome a =
      run({"pretrain", "--config", cfg.string(), "--set", "seed=7", "--set", "output_dir=" + (d / "a").string()});
  const Outcome b =
      run({"pretrain", "--config", cfg.string(), "--set", "seed=7", "--set", "output_dir=" + (d / "b").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(slurp(d / "a" / "metrics.csv"), slurp(d / "b" / "metrics.csv"));
  EXPECT_EQ(slurp(d / "a" / "eval_report.json"), slurp(d / "b" / "eval_report.json"));
  const nlohmann::json resolved = nlohmann::json::parse(slurp(d / "a" / "resolved_config.json"));
  EXPECT_EQ(resolved["seed"], 7);
  EXPECT_EQ(resolved["trainer"]["lr"], 0.03);  // defaults are materialized
}

TEST(CliPretrain, NumericAbortExitsTwoWithDumpPath) {
  TempDir d("cli");
  const fs::path cfg = write_config(d.path(), small_config(d / "run"));
  const Outcome o = run({"pretrain", "--config", cfg.string(), "--set", "trainer.lr=1e300"});
  EXPECT_EQ(o.code, kExitNumeric);
  const fs::path dump = d / "run" / "nan_dump.txt";
  EXPECT_NE(o.err.find(dump.string()), std::string::npos) << o.err;
  EXPECT_TRUE(fs::exists(dump));
}

TEST(CliPretrain, UnlabeledCsvSkipsLabelMetrics) {
  TempDir d("cli");
  {
    std::ofstream csv(d / "data.csv");
    csv << "a,b,c,d,e,f,g,h\n";
    Rng rng(3);
    for (int i = 0; i < 64; ++i) {
      for (int j = 0; j < 8; ++j) csv << (j ? "," : "") << rng.normal(0.0, 1.0);
      csv << '\n';
    }
  }
  nlohmann::json doc = small_config(d / "run");
  doc["dataset"] = {{"source", "csv"}, {"csv_path", "data.csv"}};
  const fs::path cfg = write_config(d.path(), doc);
  const Outcome o = run({"pretrain", "--config", cfg.string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.err.find("[warn]"), std::string::npos);
  const nlohmann::json report = nlohmann::json::parse(slurp(d / "run" / "eval_report.json"));
  EXPECT_FALSE(report.contains("probe_top1"));
  EXPECT_TRUE(report.contains("uniformity"));

  const Outcome e = run({"eval", "--checkpoint", (d / "run" / "checkpoint_final.bin").string(), "--config",
                         cfg.string(), "--metrics", "probe", "--out", (d / "r.json").string()});
  EXPECT_EQ(e.code, kExitLabels) << e.err;
}

TEST_F(CliRun, WritesRunArtifacts) {
  for (const char* f : {"metrics.csv", "hardness.csv", "checkpoint_final.bin", "resolved_config.json",
                        "eval_report.json", "concentration_hist.csv", "hardness_curve.csv"}) {
    EXPECT_TRUE(fs::exists(run_dir() / f)) << f;
  }
}

TEST_F(CliRun, EvalReportsAllMetricsByDefault) {
  TempDir d("cli");
  const Outcome o = run({"eval", "--checkpoint", (run_dir() / "checkpoint_final.bin").string(), "--out",
                         (d / "report.json").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  const nlohmann::json report = nlohmann::json::parse(slurp(d / "report.json"));
  for (const char* key : {"probe_top1", "proxy_acc", "alignment", "uniformity", "concentration_mean",
                          "concentration_hist", "hardness_curve"}) {
    EXPECT_TRUE(report.contains(key)) << key;
  }
  const double p = report["probe_top1"];
  EXPECT_GE(p, 0.0);
  EXPECT_LE(p, 1.0);
  EXPECT_EQ(nlohmann::json::parse(o.out), report);
}

TEST_F(CliRun, EvalMetricSubset) {
  TempDir d("cli");
  const Outcome o = run({"eval", "--checkpoint", (run_dir() / "checkpoint_final.bin").string(), "--metrics",
                         "alignment,uniformity", "--out", (d / "report.json").string()});
  ASSERT_EQ(o.code, 0) << o.err;
  const nlohmann::json report = nlohmann::json::parse(slurp(d / "report.json"));
  EXPECT_TRUE(report.contains("alignment"));
  EXPECT_TRUE(report.contains("uniformity"));
  EXPECT_FALSE(report.contains("probe_top1"));
  EXPECT_FALSE(report.contains("concentration_mean"));
}

TEST_F(CliRun, EvalIsDeterministic) {
  TempDir d("cli");
  const std::string ckpt = (run_dir() / "checkpoint_final.bin").string();
  ASSERT_EQ(run({"eval", "--checkpoint", ckpt, "--out", (d / "a.json").string()}).code, 0);
  ASSERT_EQ(run({"eval", "--checkpoint", ckpt, "--out", (d / "b.json").string()}).code, 0);
  EXPECT_EQ(slurp(d / "a.json"), slurp(d / "b.json"));
}

TEST_F(CliRun, EvalRejectsCorruptCheckpoint) {
  TempDir d("cli");
  std::ofstream(d / "bad.bin") << "not a checkpoint";
  EXPECT_EQ(run({"eval", "--checkpoint", (d / "bad.bin").string()}).code, kExitConfig);
  EXPECT_EQ(run({"eval", "--checkpoint", (d / "missing.bin").string()}).code, kExitConfig);
  EXPECT_EQ(run({"eval", "--checkpoint", (run_dir() / "checkpoint_final.bin").string(), "--metrics", "bogus"}).code,
            kExitConfig);
}

TEST_F(CliRun, CompareWithSelfHasZeroDeltas) {
  TempDir d("cli");
  const Outcome o = run({"compare", run_dir().string(), run_dir().string(), "--out", d.path().string()});
  ASSERT_EQ(o.code, 0) << o.err;
  std::istringstream lines(o.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "metric,epoch,a,b,delta");
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "0") << line;
    ++rows;
  }
  EXPECT_GT(rows, 6u);
  EXPECT_TRUE(fs::exists(d / "compare.csv"));
  const nlohmann::json doc = nlohmann::json::parse(slurp(d / "compare.json"));
  EXPECT_EQ(doc["epochs"], 3);
  EXPECT_EQ(doc["scalars"]["eval.probe_top1"]["delta"], 0.0);
}

TEST_F(CliRun, CompareWarnsOnEpochMismatch) {
  TempDir d("cli");
  fs::create_directories(d / "short");
  fs::copy_file(run_dir() / "eval_report.json", d / "short" / "eval_report.json");
  {
    std::ifstream in(run_dir() / "metrics.csv");
    std::ofstream out(d / "short" / "metrics.csv");
    std::string line;
    for (int i = 0; i < 3 && std::getline(in, line); ++i) out << line << '\n';  // header + 2 epochs
  }
  const Outcome o = run({"compare", run_dir().string(), (d / "short").string(), "--out", d.path().string()});
  ASSERT_EQ(o.code, 0) << o.err;
  EXPECT_NE(o.err.find("[warn] epoch counts differ"), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(slurp(d / "compare.json"))["epochs"], 2);
}

TEST_F(CliRun, CompareMissingArtifactsExitsOne) {
  TempDir d("cli");
  const Outcome o = run({"compare", run_dir().string(), d.path().string(), "--out", d.path().string()});
  EXPECT_EQ(o.code, kExitConfig);
  EXPECT_NE(o.err.find("metrics.csv"), std::string::npos);
}

TEST(Cli, NoSubcommandOrUnknownFlagExitsOne) {
  EXPECT_EQ(run({}).code, kExitConfig);
  EXPECT_EQ(run({"pretrain", "--frobnicate"}).code, kExitConfig);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, ResolvedConfigRoundTrips) {
  const RunConfig defaults;
  const RunConfig back = RunConfig::from_json(defaults.to_json());
  EXPECT_EQ(back.to_json(), defaults.to_json());
}
