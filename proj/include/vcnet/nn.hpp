#pragma once

// Dense-network numeric kernel: layers, activations, VAE loss terms, Adam and
// the reverse-mode pass over a stack of dense layers. Everything is double
// precision and single threaded so training runs are bitwise reproducible.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vcnet/error.hpp"
#include "vcnet/rng.hpp"

namespace vcnet::nn {

enum class Activation { Elu, Sigmoid, SoftmaxGrouped, Identity };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::Elu: return "elu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::SoftmaxGrouped: return "softmax_grouped";
    case Activation::Identity: return "identity";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "elu") return Activation::Elu;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "softmax_grouped") return Activation::SoftmaxGrouped;
  if (s == "identity") return Activation::Identity;
  throw ContractViolation("unknown activation '" + s + "'");
}

// Contiguous block of positions, e.g. the one-hot columns of one categorical
// variable.
struct IndexSpan {
  std::size_t start = 0;
  std::size_t length = 0;

  std::size_t end() const { return start + length; }
  bool operator==(const IndexSpan&) const = default;
};

// Spans must be non-empty, in range and pairwise disjoint.
inline void validate_spans(std::span<const IndexSpan> spans, std::size_t width) {
  std::vector<IndexSpan> sorted(spans.begin(), spans.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const IndexSpan& a, const IndexSpan& b) { return a.start < b.start; });
  std::size_t covered_to = 0;
  for (const auto& s : sorted) {
    require(s.length > 0, "empty index span");
    require(s.end() <= width, "index span out of range");
    require(s.start >= covered_to, "overlapping index spans");
    covered_to = s.end();
  }
}

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Softmax inside each span, sigmoid on every position outside all spans.
inline std::vector<double> softmax_grouped(std::span<const double> logits,
                                           std::span<const IndexSpan> groups) {
  validate_spans(groups, logits.size());
  std::vector<double> out(logits.size());
  std::vector<bool> grouped(logits.size(), false);
  for (const auto& g : groups) {
    double mx = logits[g.start];
    for (std::size_t i = g.start; i < g.end(); ++i) mx = std::max(mx, logits[i]);
    double total = 0.0;
    for (std::size_t i = g.start; i < g.end(); ++i) {
      out[i] = std::exp(logits[i] - mx);
      total += out[i];
      grouped[i] = true;
    }
    for (std::size_t i = g.start; i < g.end(); ++i) out[i] /= total;
  }
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!grouped[i]) out[i] = sigmoid(logits[i]);
  }
  return out;
}

struct DenseLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weights;  // row-major, out_dim x in_dim
  std::vector<double> bias;
  Activation activation = Activation::Identity;
  std::vector<IndexSpan> groups;  // only read for SoftmaxGrouped

  static DenseLayer zeros(std::size_t in, std::size_t out, Activation act,
                          std::vector<IndexSpan> groups = {}) {
    DenseLayer l;
    l.in_dim = in;
    l.out_dim = out;
    l.weights.assign(in * out, 0.0);
    l.bias.assign(out, 0.0);
    l.activation = act;
    l.groups = std::move(groups);
    return l;
  }

  double& w(std::size_t o, std::size_t i) { return weights[o * in_dim + i]; }
  double w(std::size_t o, std::size_t i) const { return weights[o * in_dim + i]; }

  std::size_t parameter_count() const { return weights.size() + bias.size(); }

  void check() const {
    require(weights.size() == in_dim * out_dim, "layer weight shape mismatch");
    require(bias.size() == out_dim, "layer bias shape mismatch");
    for (double v : weights) require(std::isfinite(v), "non-finite layer weight");
    for (double v : bias) require(std::isfinite(v), "non-finite layer bias");
    if (activation == Activation::SoftmaxGrouped) validate_spans(groups, out_dim);
  }

  bool operator==(const DenseLayer&) const = default;
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
inline DenseLayer init_layer(std::size_t in, std::size_t out, Activation act, Rng& rng,
                             std::vector<IndexSpan> groups = {}) {
  DenseLayer l = DenseLayer::zeros(in, out, act, std::move(groups));
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& v : l.weights) v = rng.uniform(-bound, bound);
  for (auto& v : l.bias) v = rng.uniform(-bound, bound);
  return l;
}

inline std::vector<double> activate(const DenseLayer& layer, std::span<const double> pre) {
  std::vector<double> out(pre.size());
  switch (layer.activation) {
    case Activation::Elu:
      std::transform(pre.begin(), pre.end(), out.begin(), elu);
      break;
    case Activation::Sigmoid:
      std::transform(pre.begin(), pre.end(), out.begin(), sigmoid);
      break;
    case Activation::SoftmaxGrouped:
      out = softmax_grouped(pre, layer.groups);
      break;
    case Activation::Identity:
      std::copy(pre.begin(), pre.end(), out.begin());
      break;
  }
  return out;
}

// Vector-Jacobian product of the activation: maps dL/d(out) to dL/d(pre).
inline std::vector<double> activation_backward(const DenseLayer& layer,
                                               std::span<const double> pre,
                                               std::span<const double> out,
                                               std::span<const double> dout) {
  std::vector<double> dpre(pre.size());
  switch (layer.activation) {
    case Activation::Elu:
      for (std::size_t i = 0; i < pre.size(); ++i) {
        dpre[i] = dout[i] * (pre[i] > 0.0 ? 1.0 : out[i] + 1.0);
      }
      break;
    case Activation::Sigmoid:
      for (std::size_t i = 0; i < pre.size(); ++i) dpre[i] = dout[i] * out[i] * (1.0 - out[i]);
      break;
    case Activation::SoftmaxGrouped: {
      std::vector<bool> grouped(pre.size(), false);
      for (const auto& g : layer.groups) {
        double dot = 0.0;
        for (std::size_t i = g.start; i < g.end(); ++i) dot += out[i] * dout[i];
        for (std::size_t i = g.start; i < g.end(); ++i) {
          dpre[i] = out[i] * (dout[i] - dot);
          grouped[i] = true;
        }
      }
      for (std::size_t i = 0; i < pre.size(); ++i) {
        if (!grouped[i]) dpre[i] = dout[i] * out[i] * (1.0 - out[i]);
      }
      break;
    }
    case Activation::Identity:
      std::copy(dout.begin(), dout.end(), dpre.begin());
      break;
  }
  return dpre;
}

inline std::vector<double> affine(const DenseLayer& layer, std::span<const double> input) {
  require(input.size() == layer.in_dim,
          "dense_forward: input width " + std::to_string(input.size()) + " != layer in_dim " +
              std::to_string(layer.in_dim));
  std::vector<double> pre(layer.bias);
  for (std::size_t o = 0; o < layer.out_dim; ++o) {
    const double* row = layer.weights.data() + o * layer.in_dim;
    double acc = 0.0;
    for (std::size_t i = 0; i < layer.in_dim; ++i) acc += row[i] * input[i];
    pre[o] += acc;
  }
  return pre;
}

inline std::vector<double> dense_forward(const DenseLayer& layer, std::span<const double> input) {
  return activate(layer, affine(layer, input));
}

// ---------------------------------------------------------------------------
// Layer stacks and reverse mode

using Block = std::vector<DenseLayer>;

struct LayerGrad {
  std::vector<double> weights;
  std::vector<double> bias;
};
using BlockGrad = std::vector<LayerGrad>;

inline BlockGrad zero_grad(const Block& block) {
  BlockGrad g;
  g.reserve(block.size());
  for (const auto& l : block) g.push_back({std::vector<double>(l.weights.size(), 0.0),
                                           std::vector<double>(l.bias.size(), 0.0)});
  return g;
}

inline std::size_t input_width(const Block& b) { return b.empty() ? 0 : b.front().in_dim; }
inline std::size_t output_width(const Block& b) { return b.empty() ? 0 : b.back().out_dim; }

// Intermediate values kept by a forward pass for the backward pass.
struct BlockTrace {
  std::vector<std::vector<double>> inputs;  // input of layer k
  std::vector<std::vector<double>> pre;     // pre-activation of layer k
  std::vector<double> output;
};

inline BlockTrace forward_trace(const Block& block, std::span<const double> input) {
  BlockTrace t;
  std::vector<double> cur(input.begin(), input.end());
  for (const auto& layer : block) {
    t.inputs.push_back(cur);
    t.pre.push_back(affine(layer, cur));
    cur = activate(layer, t.pre.back());
  }
  t.output = std::move(cur);
  return t;
}

inline std::vector<double> forward(const Block& block, std::span<const double> input) {
  std::vector<double> cur(input.begin(), input.end());
  for (const auto& layer : block) cur = dense_forward(layer, cur);
  return cur;
}

// Accumulates parameter gradients into `grads` and returns dL/d(input).
inline std::vector<double> backward(const Block& block, const BlockTrace& trace,
                                    std::span<const double> dout, BlockGrad& grads) {
  std::vector<double> grad(dout.begin(), dout.end());
  for (std::size_t k = block.size(); k-- > 0;) {
    const auto& layer = block[k];
    const auto& out = (k + 1 < block.size()) ? trace.inputs[k + 1] : trace.output;
    const auto dpre = activation_backward(layer, trace.pre[k], out, grad);
    const auto& in = trace.inputs[k];
    auto& g = grads[k];
    std::vector<double> din(layer.in_dim, 0.0);
    for (std::size_t o = 0; o < layer.out_dim; ++o) {
      const double d = dpre[o];
      g.bias[o] += d;
      double* grow = g.weights.data() + o * layer.in_dim;
      const double* wrow = layer.weights.data() + o * layer.in_dim;
      for (std::size_t i = 0; i < layer.in_dim; ++i) {
        grow[i] += d * in[i];
        din[i] += d * wrow[i];
      }
    }
    grad = std::move(din);
  }
  return grad;
}

// ---------------------------------------------------------------------------
// Latent Gaussian and loss terms

struct LatentGaussian {
  std::vector<double> mean;
  std::vector<double> log_variance;

  std::size_t size() const { return mean.size(); }
};

inline void check_finite(const LatentGaussian& g) {
  require(g.mean.size() == g.log_variance.size(), "latent mean/log-variance length mismatch");
  for (std::size_t j = 0; j < g.size(); ++j) {
    require(std::isfinite(g.mean[j]) && std::isfinite(g.log_variance[j]),
            "non-finite latent Gaussian parameter");
  }
}

// z = mean + exp(log_variance / 2) * noise
inline std::vector<double> reparameterize(const LatentGaussian& g, std::span<const double> noise) {
  require(g.mean.size() == g.log_variance.size(), "latent mean/log-variance length mismatch");
  require(noise.size() == g.size(), "reparameterize: noise length != latent_dim");
  std::vector<double> z(g.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    z[j] = g.mean[j] + std::exp(0.5 * g.log_variance[j]) * noise[j];
  }
  return z;
}

// KL(N(mean, diag(exp(log_variance))) || N(0, I))
inline double kl_diag_gaussian(const LatentGaussian& g) {
  check_finite(g);
  double kl = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double lv = g.log_variance[j];
    kl += g.mean[j] * g.mean[j] + std::exp(lv) - 1.0 - lv;
  }
  return 0.5 * kl;
}

// Gradient of kl_diag_gaussian w.r.t. (mean, log_variance).
inline LatentGaussian kl_gradient(const LatentGaussian& g) {
  LatentGaussian d{g.mean, std::vector<double>(g.size())};
  for (std::size_t j = 0; j < g.size(); ++j) d.log_variance[j] = 0.5 * (std::exp(g.log_variance[j]) - 1.0);
  return d;
}

inline constexpr double kLogClamp = 1e-7;

inline double bce_reconstruction(std::span<const double> reconstruction,
                                 std::span<const double> target) {
  require(reconstruction.size() == target.size(), "bce: length mismatch");
  double loss = 0.0;
  for (std::size_t j = 0; j < target.size(); ++j) {
    const double t = target[j];
    require(t >= 0.0 && t <= 1.0, "bce: target outside [0,1]");
    const double r = std::clamp(reconstruction[j], kLogClamp, 1.0 - kLogClamp);
    loss -= t * std::log(r) + (1.0 - t) * std::log(1.0 - r);
  }
  return loss;
}

inline std::vector<double> bce_gradient(std::span<const double> reconstruction,
                                        std::span<const double> target) {
  require(reconstruction.size() == target.size(), "bce: length mismatch");
  std::vector<double> d(target.size(), 0.0);
  for (std::size_t j = 0; j < target.size(); ++j) {
    const double r = reconstruction[j];
    if (r <= kLogClamp || r >= 1.0 - kLogClamp) continue;  // flat under the clamp
    d[j] = -target[j] / r + (1.0 - target[j]) / (1.0 - r);
  }
  return d;
}

inline double cross_entropy(std::span<const double> probabilities, std::size_t label) {
  require(label < probabilities.size(), "cross_entropy: label out of range");
  double total = 0.0;
  for (double p : probabilities) total += p;
  require(std::abs(total - 1.0) <= 1e-6, "cross_entropy: probabilities do not sum to 1");
  return -std::log(std::max(probabilities[label], kLogClamp));
}

inline std::vector<double> cross_entropy_gradient(std::span<const double> probabilities,
                                                  std::size_t label) {
  require(label < probabilities.size(), "cross_entropy: label out of range");
  std::vector<double> d(probabilities.size(), 0.0);
  if (probabilities[label] > kLogClamp) d[label] = -1.0 / probabilities[label];
  return d;
}

// ---------------------------------------------------------------------------
// Adam

struct OptimizerState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t step_count = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimizerState fresh(std::size_t n, double learning_rate) {
    OptimizerState s;
    s.first_moment.assign(n, 0.0);
    s.second_moment.assign(n, 0.0);
    s.learning_rate = learning_rate;
    return s;
  }
};

inline void adam_step(std::span<double> params, std::span<const double> grads,
                      OptimizerState& state) {
  require(params.size() == grads.size() && grads.size() == state.first_moment.size() &&
              grads.size() == state.second_moment.size(),
          "adam_step: parameter/gradient/moment lengths differ");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw TrainingDivergence("adam_step: non-finite gradient at index " + std::to_string(i));
    }
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

// One optimizer state per weight matrix and bias vector of a block.
struct BlockOptimizer {
  std::vector<OptimizerState> weights;
  std::vector<OptimizerState> bias;

  static BlockOptimizer for_block(const Block& block, double learning_rate) {
    BlockOptimizer o;
    for (const auto& l : block) {
      o.weights.push_back(OptimizerState::fresh(l.weights.size(), learning_rate));
      o.bias.push_back(OptimizerState::fresh(l.bias.size(), learning_rate));
    }
    return o;
  }

  void step(Block& block, const BlockGrad& grads) {
    for (std::size_t k = 0; k < block.size(); ++k) {
      adam_step(block[k].weights, grads[k].weights, weights[k]);
      adam_step(block[k].bias, grads[k].bias, bias[k]);
    }
  }
};

// Index of the maximum; ties go to the lower index.
inline std::size_t argmax(std::span<const double> v) {
  require(!v.empty(), "argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace vcnet::nn
