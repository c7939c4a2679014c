#include "synco/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "synco/checkpoint.hpp"
#include "synco/errors.hpp"
#include "synco/run_config.hpp"

namespace synco {

namespace fs = std::filesystem;

namespace {

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericAbort& e) {
    err << "error: numeric abort: " << e.what() << '\n';
    if (!e.dump_path().empty()) err << "dump written to " << e.dump_path() << '\n';
    return kExitNumeric;
  } catch (const MissingLabels& e) {
    err << "error: " << e.what() << '\n';
    return kExitLabels;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

void write_csv(const fs::path& path, const std::string& header, const std::vector<std::string>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << header << '\n';
  for (const auto& r : rows) out << r << '\n';
}

std::vector<Metric> parse_metrics(const std::string& list) {
  std::vector<Metric> metrics;
  for (const auto& name : split(list, ',')) {
    if (name.empty()) continue;
    metrics.push_back(parse_metric(name));
  }
  if (metrics.empty()) throw ConfigError("--metrics names no metric");
  return metrics;
}

fs::path config_dir(const fs::path& config) { return config.empty() ? fs::path{} : config.parent_path(); }

// metrics.csv as columns keyed by header name
struct MetricsTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

MetricsTable read_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("missing " + path.string());
  MetricsTable t;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty metrics file", 0);
  t.columns = split(line, ',');
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != t.columns.size()) throw FormatError(path.string() + ": ragged row", offset);
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str() || *end != '\0') throw FormatError(path.string() + ": bad number '" + c + "'", offset);
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
    offset += line.size() + 1;
  }
  return t;
}

// both missing counts as no difference
double delta(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return 0.0;
  return b - a;
}

nlohmann::ordered_json number(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

void write_eval_report(const fs::path& path, const EvalReport& report) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_json(path, report.to_json());
  const fs::path dir = path.parent_path();
  if (report.concentration_hist) {
    std::vector<std::string> rows;
    const double width = ConcentrationReport::kHistMax / static_cast<double>(ConcentrationReport::kBins);
    for (std::size_t i = 0; i < report.concentration_hist->size(); ++i) {
      rows.push_back(fmt(width * static_cast<double>(i)) + ',' + fmt(width * static_cast<double>(i + 1)) + ',' +
                     std::to_string((*report.concentration_hist)[i]));
    }
    write_csv(dir / "concentration_hist.csv", "bin_lo,bin_hi,count", rows);
  }
  if (report.hardness_curve) {
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < report.hardness_curve->size(); ++i) {
      rows.push_back(std::to_string(i + 1) + ',' + fmt((*report.hardness_curve)[i]));
    }
    write_csv(dir / "hardness_curve.csv", "rank,probability", rows);
  }
}

int cmd_pretrain(const PretrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig config = resolve_config(args.config, args.overrides);
    const Dataset data = config.dataset.load(config_dir(args.config));
    const fs::path dir = config.output_dir;
    fs::create_directories(dir);
    write_json(dir / "resolved_config.json", config.to_json());

    std::optional<TrainState> resume;
    if (args.resume) {
      resume = load_checkpoint(*args.resume);
      if (resume->seed != config.seed) {
        err << "[warn] checkpoint seed " << resume->seed << " differs from configured seed " << config.seed
            << "; the checkpoint seed is used\n";
      }
    }
    const TrainResult result = train(config.train, strip_labels(data), dir, std::move(resume));
    out << "trained " << result.state.epoch << " epochs (" << result.state.step << " steps) into " << dir.string()
        << '\n';
    if (!result.epochs.empty()) {
      const auto& last = result.epochs.back();
      out << "final epoch " << last.epoch << ": loss " << fmt(last.loss) << ", proxy_acc " << fmt(last.proxy_acc)
          << '\n';
    }

    if (config.eval_after_pretrain) {
      EvalConfig eval = config.eval;
      if (!data.has_labels()) {
        std::erase_if(eval.metrics, [&](Metric m) {
          if (!requires_labels(m)) return false;
          err << "[warn] skipping metric '" << metric_name(m) << "': dataset has no labels\n";
          return true;
        });
      }
      if (!eval.metrics.empty()) {
        const EvalReport report = evaluate(result.state, data, eval);
        write_eval_report(dir / "eval_report.json", report);
        out << "wrote " << (dir / "eval_report.json").string() << '\n';
      }
    }
    return kExitOk;
  });
}

int cmd_eval(const EvalArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TrainState state = load_checkpoint(args.checkpoint);
    fs::path config_path;
    if (args.config) {
      config_path = *args.config;
    } else if (fs::exists(args.checkpoint.parent_path() / "resolved_config.json")) {
      config_path = args.checkpoint.parent_path() / "resolved_config.json";
    }
    RunConfig config = resolve_config(config_path, args.overrides);
    EvalConfig eval = config.eval;
    if (args.metrics) eval.metrics = parse_metrics(*args.metrics);

    // relative dataset paths in a resolved config are relative to the run that wrote it
    const Dataset data = config.dataset.load(args.config ? config_dir(*args.config) : fs::path{});
    const EvalReport report = evaluate(state, data, eval);
    const fs::path target = args.out ? *args.out : args.checkpoint.parent_path() / "eval_report.json";
    write_eval_report(target, report);
    out << report.to_json().dump(2) << '\n';
    return kExitOk;
  });
}

int cmd_compare(const CompareArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    for (const auto& dir : {args.run_a, args.run_b}) {
      for (const char* file : {"metrics.csv", "eval_report.json"}) {
        if (!fs::exists(dir / file)) throw IoError("missing artifact " + (dir / file).string());
      }
    }
    const MetricsTable a = read_metrics(args.run_a / "metrics.csv");
    const MetricsTable b = read_metrics(args.run_b / "metrics.csv");
    if (a.columns != b.columns) throw FormatError("metrics.csv headers differ between runs", 0);
    const EvalReport ra = EvalReport::from_json(read_json(args.run_a / "eval_report.json"));
    const EvalReport rb = EvalReport::from_json(read_json(args.run_b / "eval_report.json"));

    const std::size_t common = std::min(a.rows.size(), b.rows.size());
    if (a.rows.size() != b.rows.size()) {
      err << "[warn] epoch counts differ (" << a.rows.size() << " vs " << b.rows.size()
          << "); comparing the first " << common << " epochs\n";
    }

    std::vector<std::string> rows;
    nlohmann::ordered_json doc;
    doc["run_a"] = args.run_a.string();
    doc["run_b"] = args.run_b.string();
    doc["epochs"] = common;
    auto add = [&](const std::string& metric, const std::string& epoch, double va, double vb) {
      rows.push_back(metric + ',' + epoch + ',' + fmt(va) + ',' + fmt(vb) + ',' + fmt(delta(va, vb)));
    };

    auto& curves = doc["curves"];
    for (std::size_t c = 1; c < a.columns.size(); ++c) {
      auto& entry = curves[a.columns[c]];
      entry["a"] = nlohmann::ordered_json::array();
      entry["b"] = nlohmann::ordered_json::array();
      entry["delta"] = nlohmann::ordered_json::array();
      for (std::size_t r = 0; r < common; ++r) {
        const double va = a.rows[r][c], vb = b.rows[r][c];
        add(a.columns[c], std::to_string(static_cast<std::size_t>(a.rows[r][0])), va, vb);
        entry["a"].push_back(number(va));
        entry["b"].push_back(number(vb));
        entry["delta"].push_back(number(delta(va, vb)));
      }
    }

    std::vector<std::pair<std::string, std::pair<double, double>>> scalars;
    auto tail_mean = [&](const MetricsTable& t, const std::string& column) {
      const auto it = std::find(t.columns.begin(), t.columns.end(), column);
      if (it == t.columns.end() || common == 0) return std::numeric_limits<double>::quiet_NaN();
      const auto c = static_cast<std::size_t>(it - t.columns.begin());
      const std::size_t from = common > 10 ? common - 10 : 0;
      double s = 0.0;
      for (std::size_t r = from; r < common; ++r) s += t.rows[r][c];
      return s / static_cast<double>(common - from);
    };
    scalars.push_back({"final10_proxy_acc", {tail_mean(a, "proxy_acc"), tail_mean(b, "proxy_acc")}});
    scalars.push_back({"final10_loss", {tail_mean(a, "loss"), tail_mean(b, "loss")}});
    auto opt = [](const std::optional<double>& v) { return v.value_or(std::numeric_limits<double>::quiet_NaN()); };
    scalars.push_back({"eval.probe_top1", {opt(ra.probe_top1), opt(rb.probe_top1)}});
    scalars.push_back({"eval.proxy_acc", {opt(ra.proxy_acc), opt(rb.proxy_acc)}});
    scalars.push_back({"eval.alignment", {opt(ra.alignment), opt(rb.alignment)}});
    scalars.push_back({"eval.uniformity", {opt(ra.uniformity), opt(rb.uniformity)}});
    scalars.push_back({"eval.concentration_mean", {opt(ra.concentration_mean), opt(rb.concentration_mean)}});
    auto& sdoc = doc["scalars"];
    for (const auto& [name, v] : scalars) {
      add(name, "", v.first, v.second);
      sdoc[name] = {{"a", number(v.first)}, {"b", number(v.second)}, {"delta", number(delta(v.first, v.second))}};
    }

    const std::string header = "metric,epoch,a,b,delta";
    out << header << '\n';
    for (const auto& r : rows) out << r << '\n';
    fs::create_directories(args.out_dir);
    write_csv(args.out_dir / "compare.csv", header, rows);
    write_json(args.out_dir / "compare.json", doc);
    return kExitOk;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Contrastive pretraining with synthetic hard negatives"};
  app.set_version_flag("--version", std::string(SYNCO_VERSION));
  app.require_subcommand(1);

  PretrainArgs pre;
  auto* pretrain = app.add_subcommand("pretrain", "Train an encoder and write metrics, checkpoints and reports");
  pretrain->add_option("--config", pre.config, "Run configuration (JSON)");
  pretrain->add_option("--set", pre.overrides, "Override dotted.key=value (repeatable)");
  pretrain->add_option("--resume", pre.resume, "Continue from a checkpoint");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  eval->add_option("--config", ev.config, "Run configuration (default: resolved_config.json of the run)");
  eval->add_option("--set", ev.overrides, "Override dotted.key=value (repeatable)");
  eval->add_option("--metrics", ev.metrics, "Comma-separated: probe,proxy,alignment,uniformity,concentration,hardness");
  eval->add_option("--out", ev.out, "Report path (default: eval_report.json beside the checkpoint)");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Side-by-side deltas of two run directories");
  compare->add_option("run_a", cmp.run_a, "First run directory")->required();
  compare->add_option("run_b", cmp.run_b, "Second run directory")->required();
  compare->add_option("--out", cmp.out_dir, "Directory for compare.csv and compare.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (pretrain->parsed()) return cmd_pretrain(pre, out, err);
  if (eval->parsed()) return cmd_eval(ev, out, err);
  return cmd_compare(cmp, out, err);
}

}  // namespace synco
