#pragma once

// Test helpers: central finite differences, toy model generators and paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vcnet/model.hpp"
#include "vcnet/nn.hpp"
#include "vcnet/rng.hpp"

namespace vcnet::testing {

inline std::string source_path(const std::string& rel) { return std::string(VCNET_SOURCE_DIR) + "/" + rel; }
inline std::string binary_path(const std::string& rel) { return std::string(VCNET_BINARY_DIR) + "/" + rel; }

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdTolerance = 1e-4;

// |a - n| / max(|a|, |n|), with the denominator floored so that gradients
// at round-off level compare absolutely.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradientReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

// Compares `analytic[k]` with the central difference of `loss` in `*params[k]`.
inline GradientReport compare_with_fd(const std::vector<double*>& params, const std::vector<double>& analytic,
                                      const std::function<double()>& loss, double h = kFdStep) {
  GradientReport r;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = *params[k];
    *params[k] = saved + h;
    const double up = loss();
    *params[k] = saved - h;
    const double down = loss();
    *params[k] = saved;
    const double numeric = (up - down) / (2.0 * h);
    r.max_relative_error = std::max(r.max_relative_error, relative_error(analytic[k], numeric));
    ++r.checked;
  }
  return r;
}

inline std::vector<double*> parameter_pointers(ModelParams& m) {
  std::vector<double*> out;
  for_each_parameter(m, [&](double& v) { out.push_back(&v); });
  return out;
}

inline std::vector<double> flatten(const ModelGrads& g) {
  std::vector<double> out;
  for_each_gradient(g, [&](double v) { out.push_back(v); });
  return out;
}

struct ToyProblem {
  ArchConfig arch;
  ModelParams model;
  std::vector<std::vector<double>> examples;
  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> noise;

  Batch batch() const { return {examples, labels, noise}; }
};

inline ToyProblem draw_toy_problem(Rng& rng, std::size_t batch_size) {
  ToyProblem t;
  std::size_t p, h, latent, classes, c;
  do {
    classes = rng.below(2) == 0 ? 2 : 3;
    c = classes == 2 ? 1 : classes;
    p = 2 + rng.below(3);
    h = 1 + rng.below(2);
    latent = 1 + rng.below(2);
  } while ((p + 1) * h + (h + 1) * c + (h + c + 1) * 2 * latent + (latent + c + 1) * p > 64);
  std::vector<nn::IndexSpan> spans;
  if (p >= 3 && rng.below(2) == 0) spans.push_back({p - 2, 2});
  t.arch = {{p, h}, {h + c, latent}, {latent + c, p}, {h, c}};
  t.model = init_model(t.arch, spans, classes, rng);
  // Larger weights than the default init so that every path carries signal.
  for_each_parameter(t.model, [&](double& v) { v = rng.uniform(-1.5, 1.5); });
  for (std::size_t i = 0; i < batch_size; ++i) {
    std::vector<double> x(p);
    for (auto& v : x) v = rng.uniform(0.05, 0.95);
    for (const auto& s : spans) {
      const std::size_t hot = rng.below(s.length);
      for (std::size_t k = 0; k < s.length; ++k) x[s.start + k] = k == hot ? 1.0 : 0.0;
    }
    t.examples.push_back(x);
    t.labels.push_back(rng.below(classes));
    t.noise.push_back(rng.normal_vector(latent));
  }
  return t;
}

// True when no clamped log in the loss sees an input within `margin` of its
// floor, so the loss is smooth around the current parameters.
inline bool clear_of_log_clamp(const ToyProblem& t, double margin = 1e-5) {
  for (std::size_t i = 0; i < t.examples.size(); ++i) {
    const auto& x = t.examples[i];
    const auto h = forward_shared(t.model, x);
    const auto condition = predict(t.model, h);
    if (class_probabilities(condition)[t.labels[i]] < margin) return false;
    const auto z = nn::reparameterize(encode(t.model, h, condition), t.noise[i]);
    for (double r : decode(t.model, z, condition)) {
      if (r < margin || r > 1.0 - margin) return false;
    }
  }
  return true;
}

// One dense layer per block: at most 4 layers and 64 parameters. Inputs may
// carry a one-hot span in their last two positions. Draws that land near the
// log clamp are redrawn.
inline ToyProblem random_toy_problem(Rng& rng, std::size_t batch_size = 3) {
  for (;;) {
    auto t = draw_toy_problem(rng, batch_size);
    if (clear_of_log_clamp(t)) return t;
  }
}

// Binary model on one feature with P(class 1 | x) = sigmoid(x).
inline ModelParams sigmoid_model() {
  ModelParams m;
  auto shared = nn::DenseLayer::zeros(1, 1, nn::Activation::Identity);
  shared.w(0, 0) = 1.0;
  auto pred = nn::DenseLayer::zeros(1, 1, nn::Activation::Sigmoid);
  pred.w(0, 0) = 1.0;
  m.shared = {shared};
  m.predictor = {pred};
  m.encoder = {nn::DenseLayer::zeros(2, 2, nn::Activation::Identity)};
  m.decoder = {nn::DenseLayer::zeros(2, 1, nn::Activation::SoftmaxGrouped)};
  m.latent_dim = 1;
  m.condition_dim = 1;
  m.class_count = 2;
  m.check();
  return m;
}

}  // namespace vcnet::testing
