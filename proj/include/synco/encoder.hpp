#pragma once

// Multilayer perceptron encoder with explicit forward/backward passes and the
// momentum-updated key copy.

#include <cstddef>
#include <vector>

#include "synco/core_math.hpp"

namespace synco {

/// Fully connected layer y = W x + b, W stored row-major as (out x in).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  Vector weights;
  Vector bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Parameters of the MLP: ReLU after every layer except the last, whose output
/// is l2-normalized. Gradients and optimizer buffers share this type.
struct EncoderParams {
  std::vector<DenseLayer> layers;

  /// Zero-valued parameters for the given layer sizes {d_in, h1, ..., d_emb}.
  static EncoderParams zeros(const std::vector<std::size_t>& sizes);
  /// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static EncoderParams init(const std::vector<std::size_t>& sizes, Rng& rng);

  std::vector<std::size_t> sizes() const;
  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t parameter_count() const;

  bool same_shape(const EncoderParams& other) const;
  bool all_finite() const;

  EncoderParams zeros_like() const;

  friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

using EncoderGrads = EncoderParams;

/// Everything backward needs from a forward call.
struct ForwardCache {
  // inputs[l] is the input to layer l (inputs[0] is the raw batch)
  std::vector<Matrix> inputs;
  // pre-activation outputs of every layer
  std::vector<Matrix> pre;
  // l2 norm of each final raw output row
  Vector output_norms;
};

struct ForwardResult {
  FeatureSet features;
  ForwardCache cache;
};

/// Encodes a batch of raw inputs (rows) into unit-norm features.
ForwardResult forward(const EncoderParams& params, const Matrix& batch);

/// Gradients of a scalar loss with respect to every parameter, given the loss
/// gradient with respect to the normalized outputs (one row per sample).
EncoderGrads backward(const EncoderParams& params, const ForwardCache& cache, const Matrix& output_grads);

/// Query encoder, momentum key encoder and the momentum coefficient m.
struct EncoderState {
  EncoderParams query;
  EncoderParams key;
  double momentum = 0.999;

  /// key starts as an exact copy of query.
  static EncoderState create(EncoderParams query, double momentum);

  friend bool operator==(const EncoderState&, const EncoderState&) = default;
};

/// theta_k <- m * theta_k + (1 - m) * theta_q.
void momentum_update(EncoderState& state);

/// SGD with heavy-ball momentum and decoupled weight decay:
///   buf <- mu * buf + g;  w <- w - lr * buf - lr * wd * w
void sgd_step(EncoderParams& params, const EncoderGrads& grads, double lr, double weight_decay,
              double momentum, EncoderParams& momentum_buf);

}  // namespace synco
