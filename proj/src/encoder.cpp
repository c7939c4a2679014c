#include "synco/encoder.hpp"

#include <cmath>
#include <string>

namespace synco {

EncoderParams EncoderParams::zeros(const std::vector<std::size_t>& sizes) {
  if (sizes.size() < 2) throw ShapeMismatch("encoder needs at least an input and an output size");
  EncoderParams p;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer layer;
    layer.in = sizes[l];
    layer.out = sizes[l + 1];
    layer.weights.assign(layer.in * layer.out, 0.0);
    layer.bias.assign(layer.out, 0.0);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

EncoderParams EncoderParams::init(const std::vector<std::size_t>& sizes, Rng& rng) {
  EncoderParams p = zeros(sizes);
  for (auto& layer : p.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (double& w : layer.weights) w = rng.uniform(-bound, bound);
    for (double& b : layer.bias) b = rng.uniform(-bound, bound);
  }
  return p;
}

std::vector<std::size_t> EncoderParams::sizes() const {
  std::vector<std::size_t> s;
  if (layers.empty()) return s;
  s.push_back(layers.front().in);
  for (const auto& l : layers) s.push_back(l.out);
  return s;
}

std::size_t EncoderParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

bool EncoderParams::same_shape(const EncoderParams& other) const { return sizes() == other.sizes(); }

bool EncoderParams::all_finite() const {
  for (const auto& l : layers) {
    for (double w : l.weights)
      if (!std::isfinite(w)) return false;
    for (double b : l.bias)
      if (!std::isfinite(b)) return false;
  }
  return true;
}

EncoderParams EncoderParams::zeros_like() const { return zeros(sizes()); }

namespace {

void require_same_shape(const EncoderParams& a, const EncoderParams& b, const char* what) {
  if (!a.same_shape(b)) throw ShapeMismatch(std::string(what) + ": parameter shapes differ");
}

// Applies f(a_elem, b_elem) -> new a_elem over every parameter pair.
template <typename F>
void zip_params(EncoderParams& a, const EncoderParams& b, F&& f) {
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    auto& la = a.layers[l];
    const auto& lb = b.layers[l];
    for (std::size_t i = 0; i < la.weights.size(); ++i) la.weights[i] = f(la.weights[i], lb.weights[i]);
    for (std::size_t i = 0; i < la.bias.size(); ++i) la.bias[i] = f(la.bias[i], lb.bias[i]);
  }
}

}  // namespace

ForwardResult forward(const EncoderParams& params, const Matrix& batch) {
  if (params.layers.empty()) throw ShapeMismatch("forward: encoder has no layers");
  if (batch.cols() != params.input_dim() && !batch.empty()) {
    throw DimensionMismatch("forward: input has " + std::to_string(batch.cols()) + " features, encoder expects " +
                            std::to_string(params.input_dim()));
  }
  ForwardResult result;
  auto& cache = result.cache;
  const std::size_t n = batch.rows();
  cache.inputs.push_back(batch);

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const Matrix& x = cache.inputs[l];
    Matrix z(n, layer.out);
    for (std::size_t r = 0; r < n; ++r) {
      const auto xr = x.row(r);
      auto zr = z.row(r);
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double* w = layer.weights.data() + o * layer.in;
        double s = layer.bias[o];
        for (std::size_t i = 0; i < layer.in; ++i) s += w[i] * xr[i];
        zr[o] = s;
      }
    }
    if (l + 1 < params.layers.size()) {
      Matrix a = z;
      for (double& v : a.data()) v = v > 0.0 ? v : 0.0;
      cache.inputs.push_back(std::move(a));
    }
    cache.pre.push_back(std::move(z));
  }

  const Matrix& raw = cache.pre.back();
  result.features = FeatureSet(params.output_dim());
  result.features.reserve(n);
  cache.output_norms.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = raw.row(r);
    result.features.push_back(normalize(row));
    cache.output_norms[r] = norm(row);
  }
  return result;
}

EncoderGrads backward(const EncoderParams& params, const ForwardCache& cache, const Matrix& output_grads) {
  const std::size_t num_layers = params.layers.size();
  if (cache.pre.size() != num_layers || cache.inputs.size() != num_layers) {
    throw ShapeMismatch("backward: cache does not match encoder depth");
  }
  const Matrix& raw = cache.pre.back();
  const std::size_t n = raw.rows();
  if (output_grads.rows() != n || (n > 0 && output_grads.cols() != params.output_dim())) {
    throw ShapeMismatch("backward: output gradient shape does not match forward outputs");
  }

  EncoderGrads grads = params.zeros_like();

  // Jacobian of y = z / ||z||: dL/dz = (g - y (y.g)) / ||z||
  Matrix delta(n, params.output_dim());
  for (std::size_t r = 0; r < n; ++r) {
    const double nz = cache.output_norms[r];
    const auto z = raw.row(r);
    const auto g = output_grads.row(r);
    double yg = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) yg += z[j] / nz * g[j];
    auto d = delta.row(r);
    for (std::size_t j = 0; j < z.size(); ++j) d[j] = (g[j] - z[j] / nz * yg) / nz;
  }

  for (std::size_t li = num_layers; li-- > 0;) {
    const auto& layer = params.layers[li];
    auto& gl = grads.layers[li];
    const Matrix& x = cache.inputs[li];
    for (std::size_t r = 0; r < n; ++r) {
      const auto xr = x.row(r);
      const auto dr = delta.row(r);
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double d = dr[o];
        if (d == 0.0) continue;
        double* gw = gl.weights.data() + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) gw[i] += d * xr[i];
        gl.bias[o] += d;
      }
    }
    if (li == 0) break;
    // propagate through W and the ReLU of the previous layer
    const Matrix& prev_pre = cache.pre[li - 1];
    Matrix next(n, layer.in);
    for (std::size_t r = 0; r < n; ++r) {
      const auto dr = delta.row(r);
      auto nr = next.row(r);
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double d = dr[o];
        if (d == 0.0) continue;
        const double* w = layer.weights.data() + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) nr[i] += d * w[i];
      }
      const auto pr = prev_pre.row(r);
      for (std::size_t i = 0; i < layer.in; ++i)
        if (!(pr[i] > 0.0)) nr[i] = 0.0;
    }
    delta = std::move(next);
  }
  return grads;
}

EncoderState EncoderState::create(EncoderParams query, double momentum) {
  EncoderState s;
  s.key = query;
  s.query = std::move(query);
  s.momentum = momentum;
  return s;
}

void momentum_update(EncoderState& state) {
  require_same_shape(state.key, state.query, "momentum_update");
  const double m = state.momentum;
  zip_params(state.key, state.query, [m](double k, double q) { return m * k + (1.0 - m) * q; });
}

void sgd_step(EncoderParams& params, const EncoderGrads& grads, double lr, double weight_decay, double momentum,
              EncoderParams& momentum_buf) {
  require_same_shape(params, grads, "sgd_step");
  require_same_shape(params, momentum_buf, "sgd_step");
  zip_params(momentum_buf, grads, [momentum](double b, double g) { return momentum * b + g; });
  zip_params(params, momentum_buf,
             [lr, weight_decay](double w, double b) { return w - lr * b - lr * weight_decay * w; });
}

}  // namespace synco
