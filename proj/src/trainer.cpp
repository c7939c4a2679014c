#include "synco/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "synco/checkpoint.hpp"
#include "synco/evaluation.hpp"

namespace synco {

std::vector<std::size_t> EncoderConfig::layer_sizes(std::size_t input_dim) const {
  std::vector<std::size_t> sizes{input_dim};
  for (std::size_t i = 0; i < hidden_layers; ++i) sizes.push_back(hidden_dim);
  sizes.push_back(embedding_dim);
  return sizes;
}

void EncoderConfig::validate() const {
  if (hidden_dim == 0 || embedding_dim == 0) throw ConfigError("encoder dimensions must be positive");
  if (!(momentum >= 0.0 && momentum <= 1.0)) throw ConfigError("encoder.momentum must lie in [0, 1]");
}

void TrainConfig::validate() const {
  encoder.validate();
  loss.validate();
  synthesis.validate();
  augmentation.validate();
  if (batch_size == 0) throw ConfigError("trainer.batch_size must be positive");
  if (queue_size == 0) throw ConfigError("trainer.queue_size must be positive");
  if (batch_size > queue_size) throw ConfigError("trainer.batch_size must not exceed trainer.queue_size");
  if (!(lr > 0.0)) throw ConfigError("trainer.lr must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("trainer.weight_decay must be >= 0");
  if (!(sgd_momentum >= 0.0 && sgd_momentum < 1.0)) throw ConfigError("trainer.sgd_momentum must lie in [0, 1)");
  if (synthesis.enabled && epochs > 0 && epochs < synthesis.warmup_epochs) {
    throw ConfigError("trainer.epochs must be >= synthesis.warmup_epochs");
  }
}

double TrainConfig::lr_at(std::size_t epoch) const {
  if (epochs == 0) return lr;
  return lr * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(epochs)));
}

TrainState TrainState::initial(const TrainConfig& config, std::size_t input_dim) {
  TrainState s;
  s.seed = config.seed;
  Rng init = stream(config.seed, Stream::kInit);
  s.encoder = EncoderState::create(EncoderParams::init(config.encoder.layer_sizes(input_dim), init),
                                   config.encoder.momentum);
  s.velocity = s.encoder.query.zeros_like();
  s.queue = MemoryQueue(config.queue_size, config.encoder.embedding_dim);
  return s;
}

namespace {

std::string describe_step(const TrainState& state, const char* what) {
  std::ostringstream os;
  os << "non-finite " << what << " at epoch " << state.epoch << ", step " << state.step;
  return os.str();
}

// Probabilities of the top_k memory negatives under the softmax over {k} | Q.
void add_hardness(std::span<const double> memory_logits, double memory_lse, std::size_t top_k, Vector& curve,
                  Vector& scratch) {
  scratch.assign(memory_logits.begin(), memory_logits.end());
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(top_k), scratch.end(),
                    std::greater<>());
  for (std::size_t i = 0; i < top_k; ++i) curve[i] += std::exp(scratch[i] - memory_lse);
}

template <bool kSynthesis>
StepMetrics basic_train_step(TrainState& state, const Matrix& batch, const TrainConfig& config) {
  const std::size_t b = batch.rows();
  if (b == 0) throw EmptyInput("train_step: empty batch");
  const double tau = config.loss.tau;

  Rng aug = stream(state.seed, Stream::kAugment).split(state.step);
  Matrix views_q(b, batch.cols()), views_k(b, batch.cols());
  for (std::size_t i = 0; i < b; ++i) {
    Rng r = aug.split(i);
    auto [vq, vk] = two_views(batch.row(i), config.augmentation, r);
    std::ranges::copy(vq, views_q.row(i).begin());
    std::ranges::copy(vk, views_k.row(i).begin());
  }

  StepMetrics m;
  m.queries = b;
  m.lr = config.lr_at(state.epoch);

  const ForwardResult fq = forward(state.encoder.query, views_q);
  const ForwardResult fk = forward(state.encoder.key, views_k);
  m.encoder_forward_passes = 2;

  const FeatureSet memory = state.queue.negatives();
  m.memory_negatives = memory.size();
  const std::size_t d = fq.features.dim();
  const std::size_t top_k = config.hardness_top_k;
  const bool track_hardness = top_k > 0 && memory.size() >= top_k;
  Vector curve(track_hardness ? top_k : 0, 0.0), scratch;

  [[maybe_unused]] Rng synth = stream(state.seed, Stream::kSynthesis).split(state.step);

  const Matrix all_logits = compute_logits(fq.features, memory, tau);
  Matrix out_grads(b, d);
  double loss_sum = 0.0, mem_max_sum = 0.0, synth_max_sum = 0.0;
  std::size_t synth_queries = 0;
  for (std::size_t i = 0; i < b; ++i) {
    const auto q = fq.features[i];
    const auto k = fk.features[i];
    const auto logits = all_logits.row(i);

    FeatureSet synthetic(d);
    if constexpr (kSynthesis) {
      Rng r = synth.split(i);
      synthetic = generate_all(q, memory, logits, config.synthesis, state.epoch, r);
    }

    const QueryTerms t = query_terms(q, k, memory, logits, synthetic, tau);
    if (!std::isfinite(t.loss)) throw NumericAbort(describe_step(state, "loss"));
    loss_sum += t.loss;
    const double inv_b = 1.0 / static_cast<double>(b);
    auto g = out_grads.row(i);
    for (std::size_t j = 0; j < d; ++j) g[j] = t.grad_q[j] * inv_b;

    if (t.key_logit > std::max(t.max_memory_logit, t.max_synthetic_logit)) ++m.proxy_hits;
    mem_max_sum += t.max_memory_logit;
    if (!synthetic.empty()) {
      synth_max_sum += t.max_synthetic_logit;
      ++synth_queries;
      if (t.max_synthetic_logit > t.max_memory_logit) ++m.synth_wins;
    }
    m.synth_total += synthetic.size();
    if (track_hardness) add_hardness(logits, t.memory_lse, top_k, curve, scratch);
  }

  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  m.loss = loss_sum / static_cast<double>(b);
  m.max_mem_logit = memory.empty() ? kNaN : mem_max_sum / static_cast<double>(b);
  m.max_synth_logit = synth_queries == 0 ? kNaN : synth_max_sum / static_cast<double>(synth_queries);
  if (track_hardness) {
    for (double& v : curve) v /= static_cast<double>(b);
    m.hardness_curve = std::move(curve);
  }

  const EncoderGrads grads = backward(state.encoder.query, fq.cache, out_grads);
  m.encoder_backward_passes = 1;
  if (!grads.all_finite()) throw NumericAbort(describe_step(state, "gradient"));

  sgd_step(state.encoder.query, grads, m.lr, config.weight_decay, config.sgd_momentum, state.velocity);
  if (!state.encoder.query.all_finite()) throw NumericAbort(describe_step(state, "parameters after SGD"));
  momentum_update(state.encoder);

  state.queue.enqueue(fk.features);
  m.enqueued = fk.features.size();
  ++state.step;
  return m;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

void write_line(const std::filesystem::path& path, const std::string& header, const std::string& line) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot write " + path.string());
  if (fresh) out << header << '\n';
  out << line << '\n';
}

EpochMetrics summarize(std::size_t epoch, std::span<const StepMetrics> steps, std::size_t top_k) {
  EpochMetrics e;
  e.epoch = epoch;
  e.lr = steps.empty() ? 0.0 : steps.front().lr;
  double loss = 0.0, mem = 0.0, syn = 0.0, synth_total = 0.0;
  std::size_t hits = 0, queries = 0, mem_steps = 0, syn_steps = 0, curve_steps = 0;
  Vector curve(top_k, 0.0);
  for (const auto& s : steps) {
    loss += s.loss;
    hits += s.proxy_hits;
    queries += s.queries;
    synth_total += static_cast<double>(s.synth_total);
    if (!std::isnan(s.max_mem_logit)) {
      mem += s.max_mem_logit;
      ++mem_steps;
    }
    if (!std::isnan(s.max_synth_logit)) {
      syn += s.max_synth_logit;
      ++syn_steps;
    }
    if (!s.hardness_curve.empty()) {
      for (std::size_t i = 0; i < top_k; ++i) curve[i] += s.hardness_curve[i];
      ++curve_steps;
    }
  }
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(steps.size());
  e.loss = steps.empty() ? kNaN : loss / n;
  e.proxy_acc = queries == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(queries);
  e.max_mem_logit = mem_steps == 0 ? kNaN : mem / static_cast<double>(mem_steps);
  e.max_synth_logit = syn_steps == 0 ? kNaN : syn / static_cast<double>(syn_steps);
  e.synth_count = queries == 0 ? 0.0 : synth_total / static_cast<double>(queries);
  if (curve_steps > 0) {
    for (double& v : curve) v /= static_cast<double>(curve_steps);
    e.hardness_curve = std::move(curve);
  }
  return e;
}

// Keeps the header and rows whose leading epoch field is below `epoch`.
void truncate_rows(const std::filesystem::path& path, std::size_t epoch) {
  if (!std::filesystem::exists(path)) return;
  std::vector<std::string> keep;
  {
    std::ifstream in(path);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (header || std::stoull(line.substr(0, line.find(','))) < epoch) keep.push_back(line);
      header = false;
    }
  }
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : keep) out << l << '\n';
}

std::filesystem::path epoch_checkpoint(const std::filesystem::path& dir, std::size_t epoch) {
  std::ostringstream name;
  name << "checkpoint_epoch_" << std::setw(4) << std::setfill('0') << epoch << ".bin";
  return dir / name.str();
}

}  // namespace

StepMetrics train_step(TrainState& state, const Matrix& batch, const TrainConfig& config) {
  return basic_train_step<true>(state, batch, config);
}

StepMetrics train_step_baseline(TrainState& state, const Matrix& batch, const TrainConfig& config) {
  return basic_train_step<false>(state, batch, config);
}

TrainResult train(const TrainConfig& config, const UnlabeledDataset& data, const std::filesystem::path& output_dir,
                  std::optional<TrainState> resume) {
  config.validate();
  if (data.size() < config.batch_size) {
    throw ConfigError("dataset holds " + std::to_string(data.size()) + " samples, fewer than trainer.batch_size");
  }
  if (config.synthesis.enabled && config.synthesis.budget_exceeds(config.queue_size)) {
    std::cerr << "[warn] synthetic negatives per query (" << config.synthesis.per_query_count()
              << ") are not small relative to the queue size " << config.queue_size << '\n';
  }

  TrainResult result;
  result.state = resume ? std::move(*resume) : TrainState::initial(config, data.dim());
  TrainState& state = result.state;
  if (state.encoder.query.input_dim() != data.dim()) throw DimensionMismatch("checkpoint input size does not match dataset");

  const bool write = !output_dir.empty();
  if (write) std::filesystem::create_directories(output_dir);
  const auto metrics_path = output_dir / "metrics.csv";
  const auto hardness_path = output_dir / "hardness.csv";
  if (write && !resume) {
    std::filesystem::remove(metrics_path);
    std::filesystem::remove(hardness_path);
    std::ofstream(metrics_path) << kMetricsHeader << '\n';
  } else if (write) {
    truncate_rows(metrics_path, state.epoch);
    truncate_rows(hardness_path, state.epoch);
  }

  const std::size_t steps_per_epoch = data.size() / config.batch_size;
  std::vector<std::size_t> order(data.size());
  Matrix batch(config.batch_size, data.dim());

  try {
    while (state.epoch < config.epochs) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng shuffle = stream(state.seed, Stream::kShuffle).split(state.epoch);
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.index(i)]);

      const std::size_t first_step = result.steps.size();
      for (std::size_t s = 0; s < steps_per_epoch; ++s) {
        for (std::size_t r = 0; r < config.batch_size; ++r) {
          std::ranges::copy(data[order[s * config.batch_size + r]], batch.row(r).begin());
        }
        result.steps.push_back(train_step(state, batch, config));
      }

      EpochMetrics e = summarize(state.epoch, std::span(result.steps).subspan(first_step), config.hardness_top_k);
      ++state.epoch;
      if (write) {
        std::ostringstream row;
        row << e.epoch << ',' << fmt(e.loss) << ',' << fmt(e.proxy_acc) << ',' << fmt(e.max_synth_logit) << ','
            << fmt(e.max_mem_logit) << ',' << fmt(e.synth_count) << ',' << fmt(e.lr);
        write_line(metrics_path, kMetricsHeader, row.str());
        if (!e.hardness_curve.empty()) {
          std::ostringstream hrow, header;
          header << "epoch";
          for (std::size_t i = 0; i < e.hardness_curve.size(); ++i) header << ",p" << (i + 1);
          hrow << e.epoch;
          for (double v : e.hardness_curve) hrow << ',' << fmt(v);
          write_line(hardness_path, header.str(), hrow.str());
        }
        if (config.checkpoint_every > 0 && state.epoch % config.checkpoint_every == 0 && state.epoch < config.epochs) {
          save_checkpoint(epoch_checkpoint(output_dir, state.epoch), state);
        }
      }
      result.epochs.push_back(std::move(e));
    }
  } catch (NumericAbort& abort) {
    if (write) {
      const auto dump = output_dir / "nan_dump.txt";
      std::ofstream out(dump);
      out << abort.what() << "\nepoch=" << state.epoch << "\nstep=" << state.step << "\nseed=" << state.seed << '\n';
      if (!result.steps.empty()) out << "last_loss=" << fmt(result.steps.back().loss) << '\n';
      abort.set_dump_path(dump.string());
    }
    throw;
  }

  if (write) save_checkpoint(output_dir / "checkpoint_final.bin", state);
  return result;
}

}  // namespace synco
