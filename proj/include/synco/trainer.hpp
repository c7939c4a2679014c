#pragma once

// Pretraining loop: augment -> encode (query + momentum key) -> synthesize
// negatives -> InfoNCE -> SGD on the query encoder -> momentum update -> enqueue.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "synco/contrastive_loss.hpp"
#include "synco/data_pipeline.hpp"
#include "synco/encoder.hpp"
#include "synco/memory_queue.hpp"
#include "synco/negative_synthesis.hpp"

namespace synco {

struct EncoderConfig {
  std::size_t hidden_dim = 64;
  std::size_t hidden_layers = 2;
  std::size_t embedding_dim = 16;
  double momentum = 0.999;

  std::vector<std::size_t> layer_sizes(std::size_t input_dim) const;
  void validate() const;
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  double lr = 0.03;  // base rate of the cosine schedule
  double weight_decay = 1e-4;
  double sgd_momentum = 0.9;
  std::size_t queue_size = 4096;
  std::size_t checkpoint_every = 0;  // epochs between checkpoints; 0 = final only
  std::size_t hardness_top_k = 64;  // length of the per-epoch hardness curve
  EncoderConfig encoder;
  LossConfig loss;
  SynthesisConfig synthesis;
  AugmentationConfig augmentation;
  std::uint64_t seed = 0;

  void validate() const;
  /// Cosine schedule without restarts, constant within an epoch.
  double lr_at(std::size_t epoch) const;
};

struct TrainState {
  EncoderState encoder;
  EncoderParams velocity;  // SGD momentum buffer of the query encoder
  MemoryQueue queue;
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::uint64_t seed = 0;

  static TrainState initial(const TrainConfig& config, std::size_t input_dim);

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

struct StepMetrics {
  double loss = 0.0;  // mean over the batch
  double lr = 0.0;
  std::size_t queries = 0;
  std::size_t proxy_hits = 0;
  double max_mem_logit = 0.0;    // mean over queries of the per-query maximum; NaN if the queue was empty
  double max_synth_logit = 0.0;  // same for synthetic negatives; NaN if none
  std::size_t synth_total = 0;
  std::size_t synth_wins = 0;  // queries whose best synthetic logit beats their best memory logit
  std::size_t memory_negatives = 0;
  std::size_t enqueued = 0;
  std::size_t encoder_forward_passes = 0;
  std::size_t encoder_backward_passes = 0;
  std::vector<double> hardness_curve;  // empty while the queue holds fewer than hardness_top_k entries

  double proxy_acc() const { return queries == 0 ? 0.0 : static_cast<double>(proxy_hits) / static_cast<double>(queries); }
  double synth_per_query() const {
    return queries == 0 ? 0.0 : static_cast<double>(synth_total) / static_cast<double>(queries);
  }
};

/// One row of metrics.csv.
struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0.0;
  double proxy_acc = 0.0;
  double max_synth_logit = 0.0;
  double max_mem_logit = 0.0;
  double synth_count = 0.0;  // mean synthetic negatives per query
  double lr = 0.0;
  std::vector<double> hardness_curve;
};

/// One optimization step on a batch of raw inputs (rows).
StepMetrics train_step(TrainState& state, const Matrix& batch, const TrainConfig& config);

/// Plain MoCo step compiled without any synthesis code.
StepMetrics train_step_baseline(TrainState& state, const Matrix& batch, const TrainConfig& config);

struct TrainResult {
  TrainState state;
  std::vector<EpochMetrics> epochs;
  std::vector<StepMetrics> steps;
};

/// Runs epochs [state.epoch, config.epochs). When output_dir is non-empty, writes
/// metrics.csv, hardness.csv and checkpoints there.
TrainResult train(const TrainConfig& config, const UnlabeledDataset& data, const std::filesystem::path& output_dir = {},
                  std::optional<TrainState> resume = std::nullopt);

inline constexpr const char* kMetricsHeader = "epoch,loss,proxy_acc,max_synth_logit,max_mem_logit,synth_count,lr";

}  // namespace synco
