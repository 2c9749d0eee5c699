#pragma once

// Joint predictor + conditional VAE.
//
//   x --shared--> h --predictor--> c (condition; P(class 1) when binary,
//                 |                    class probabilities otherwise)
//                 +--[h, c]--encoder--> (mu, log var) --z--[z, c]--decoder--> x_hat
//
// The post-hoc variant gives the cVAE its own trunk (`cvae_shared`) and trains
// it against a frozen predictor; the joint model leaves `cvae_shared` empty.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vcnet/data.hpp"
#include "vcnet/error.hpp"
#include "vcnet/nn.hpp"
#include "vcnet/rng.hpp"

namespace vcnet {

using nn::Block;
using nn::BlockGrad;
using nn::IndexSpan;
using nn::LatentGaussian;

// Layer widths per block, input first. The encoder's last entry is the latent
// size (its final layer emits mean and log-variance, 2 x latent wide).
struct ArchConfig {
  std::vector<std::size_t> shared_dims;     // [p, ..., h]
  std::vector<std::size_t> encoder_dims;    // [h + c, ..., latent]
  std::vector<std::size_t> decoder_dims;    // [latent + c, ..., p]
  std::vector<std::size_t> predictor_dims;  // [h, ..., c]

  std::size_t latent_dim() const { return encoder_dims.empty() ? 0 : encoder_dims.back(); }
  std::size_t condition_dim() const { return predictor_dims.empty() ? 0 : predictor_dims.back(); }

  // Throws ContractViolation naming the first broken width relation.
  void check(std::size_t p, std::size_t class_count) const {
    auto dims_ok = [](const std::vector<std::size_t>& d) {
      if (d.size() < 2) return false;
      for (auto v : d) {
        if (v == 0) return false;
      }
      return true;
    };
    require(dims_ok(shared_dims) && dims_ok(encoder_dims) && dims_ok(decoder_dims) &&
                dims_ok(predictor_dims),
            "architecture: every block needs at least two positive widths");
    const std::size_t h = shared_dims.back();
    const std::size_t c = condition_dim();
    const std::size_t expected_c = class_count == 2 ? 1 : class_count;
    require(shared_dims.front() == p, "architecture: shared input width " +
                                          std::to_string(shared_dims.front()) + " != p " +
                                          std::to_string(p));
    require(predictor_dims.front() == h, "architecture: predictor input width != shared output width");
    require(c == expected_c, "architecture: condition width " + std::to_string(c) +
                                 " != expected " + std::to_string(expected_c));
    require(encoder_dims.front() == h + c, "architecture: encoder input width != h + condition_dim");
    require(decoder_dims.front() == latent_dim() + c,
            "architecture: decoder input width != latent_dim + condition_dim");
    require(decoder_dims.back() == p, "architecture: decoder output width != p");
  }

  bool operator==(const ArchConfig&) const = default;
};

struct TrainingConfig {
  double lambda1 = 1.0;  // KL weight
  double lambda2 = 1.0;  // predictor weight
  double lambda3 = 1.0;  // reconstruction weight
  double learning_rate = 1e-3;
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void check() const {
    require(lambda1 >= 0 && lambda2 >= 0 && lambda3 >= 0, "training: lambdas must be non-negative");
    require(epochs >= 1, "training: epochs must be >= 1");
    require(batch_size >= 1, "training: batch_size must be >= 1");
    require(learning_rate > 0, "training: learning_rate must be > 0");
  }
};

struct ModelParams {
  Block shared;
  Block predictor;
  Block encoder;
  Block decoder;
  Block cvae_shared;  // post-hoc only: the cVAE's private trunk
  std::size_t latent_dim = 0;
  std::size_t condition_dim = 0;
  std::size_t class_count = 0;
  std::vector<IndexSpan> one_hot_spans;

  std::size_t input_width() const { return nn::input_width(shared); }
  bool is_posthoc() const { return !cvae_shared.empty(); }
  const Block& cvae_trunk() const { return cvae_shared.empty() ? shared : cvae_shared; }

  void check() const {
    auto check_block = [](const Block& b, const char* name) {
      require(!b.empty(), std::string("model: empty block ") + name);
      for (std::size_t k = 0; k < b.size(); ++k) {
        b[k].check();
        if (k > 0) require(b[k].in_dim == b[k - 1].out_dim, std::string("model: ragged block ") + name);
      }
    };
    check_block(shared, "shared");
    check_block(predictor, "predictor");
    check_block(encoder, "encoder");
    check_block(decoder, "decoder");
    if (!cvae_shared.empty()) {
      check_block(cvae_shared, "cvae_shared");
      require(nn::input_width(cvae_shared) == input_width() &&
                  nn::output_width(cvae_shared) == nn::output_width(shared),
              "model: cvae trunk widths differ from shared trunk");
    }
    const std::size_t h = nn::output_width(shared);
    require(nn::input_width(predictor) == h, "model: predictor input width != h");
    require(nn::output_width(predictor) == condition_dim, "model: predictor output width != condition_dim");
    require(condition_dim == (class_count == 2 ? 1 : class_count), "model: condition_dim inconsistent with class count");
    require(nn::input_width(encoder) == h + condition_dim, "model: encoder input width != h + condition_dim");
    require(nn::output_width(encoder) == 2 * latent_dim, "model: encoder output width != 2 * latent_dim");
    require(nn::input_width(decoder) == latent_dim + condition_dim, "model: decoder input width != latent + condition");
    require(nn::output_width(decoder) == input_width(), "model: decoder output width != p");
    nn::validate_spans(one_hot_spans, input_width());
  }

  bool operator==(const ModelParams&) const = default;
};

inline Block make_block(const std::vector<std::size_t>& dims, nn::Activation hidden,
                        nn::Activation last, std::vector<IndexSpan> last_groups, Rng& rng,
                        std::size_t last_width_multiplier = 1) {
  Block b;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const bool is_last = k + 2 == dims.size();
    const std::size_t out = is_last ? dims[k + 1] * last_width_multiplier : dims[k + 1];
    b.push_back(nn::init_layer(dims[k], out, is_last ? last : hidden, rng,
                               is_last ? last_groups : std::vector<IndexSpan>{}));
  }
  return b;
}

inline Block make_trunk(const ArchConfig& arch, Rng& rng) {
  return make_block(arch.shared_dims, nn::Activation::Elu, nn::Activation::Elu, {}, rng);
}

// Seeded initialisation; draws shared, predictor, encoder, decoder in that order.
inline ModelParams init_model(const ArchConfig& arch, std::vector<IndexSpan> spans,
                              std::size_t class_count, Rng& rng) {
  arch.check(arch.shared_dims.front(), class_count);
  ModelParams m;
  m.latent_dim = arch.latent_dim();
  m.condition_dim = arch.condition_dim();
  m.class_count = class_count;
  m.one_hot_spans = std::move(spans);
  m.shared = make_trunk(arch, rng);
  if (m.condition_dim == 1) {
    m.predictor = make_block(arch.predictor_dims, nn::Activation::Elu, nn::Activation::Sigmoid, {}, rng);
  } else {
    m.predictor = make_block(arch.predictor_dims, nn::Activation::Elu, nn::Activation::SoftmaxGrouped,
                             {IndexSpan{0, m.condition_dim}}, rng);
  }
  m.encoder = make_block(arch.encoder_dims, nn::Activation::Elu, nn::Activation::Identity, {}, rng, 2);
  m.decoder = make_block(arch.decoder_dims, nn::Activation::Elu, nn::Activation::SoftmaxGrouped,
                         m.one_hot_spans, rng);
  m.check();
  return m;
}

// ---------------------------------------------------------------------------
// Forward operations

inline std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline std::vector<double> forward_shared(const ModelParams& m, std::span<const double> x) {
  return nn::forward(m.shared, x);
}

// Raw predictor output, i.e. the cVAE condition.
inline std::vector<double> predict(const ModelParams& m, std::span<const double> h) {
  return nn::forward(m.predictor, h);
}

// Condition vector -> class probabilities (binary scalar expands to [1-p, p]).
inline std::vector<double> class_probabilities(std::span<const double> condition) {
  if (condition.size() == 1) return {1.0 - condition[0], condition[0]};
  return {condition.begin(), condition.end()};
}

inline std::vector<double> predict_proba(const ModelParams& m, std::span<const double> x) {
  return class_probabilities(predict(m, forward_shared(m, x)));
}

inline std::size_t predicted_class(const ModelParams& m, std::span<const double> x) {
  return nn::argmax(predict_proba(m, x));
}

inline LatentGaussian split_latent(std::span<const double> head, std::size_t latent) {
  require(head.size() == 2 * latent, "encoder head width != 2 * latent_dim");
  return {std::vector<double>(head.begin(), head.begin() + static_cast<std::ptrdiff_t>(latent)),
          std::vector<double>(head.begin() + static_cast<std::ptrdiff_t>(latent), head.end())};
}

// q(z | h, condition); `h` must come from the cVAE trunk.
inline LatentGaussian encode(const ModelParams& m, std::span<const double> h,
                             std::span<const double> condition) {
  require(condition.size() == m.condition_dim, "encode: condition width != condition_dim");
  return split_latent(nn::forward(m.encoder, concat(h, condition)), m.latent_dim);
}

inline std::vector<double> decode(const ModelParams& m, std::span<const double> z,
                                  std::span<const double> condition) {
  require(z.size() == m.latent_dim, "decode: z width != latent_dim");
  require(condition.size() == m.condition_dim, "decode: condition width != condition_dim");
  return nn::forward(m.decoder, concat(z, condition));
}

// ---------------------------------------------------------------------------
// Loss terms

// lambda3 * BCE(decode(z, condition), x) + lambda1 * KL(q(z | trunk(x), condition) || N(0, I)),
// with z reparameterised from `noise`.
inline double loss_cvae(const ModelParams& m, std::span<const double> x, std::span<const double> condition,
                        std::span<const double> noise, double lambda1, double lambda3) {
  const auto g = encode(m, nn::forward(m.cvae_trunk(), x), condition);
  const auto z = nn::reparameterize(g, noise);
  const auto x_hat = decode(m, z, condition);
  const double loss = lambda3 * nn::bce_reconstruction(x_hat, x) + lambda1 * nn::kl_diag_gaussian(g);
  if (!std::isfinite(loss)) throw TrainingDivergence("loss_cvae: non-finite loss");
  return loss;
}

inline double loss_pred(const ModelParams& m, std::span<const double> x, std::size_t y) {
  require(y < m.class_count, "loss_pred: label out of range");
  return nn::cross_entropy(predict_proba(m, x), y);
}

struct Batch {
  std::span<const std::vector<double>> examples;
  std::span<const std::size_t> labels;
  std::span<const std::vector<double>> noise;  // one standard-normal draw per example

  std::size_t size() const { return examples.size(); }
};

// Sum of per-example cVAE losses plus lambda2 times the mean predictor loss.
inline double loss_total(const ModelParams& m, const Batch& batch, const TrainingConfig& cfg) {
  require(batch.size() > 0, "loss_total: empty batch");
  require(batch.labels.size() == batch.size() && batch.noise.size() == batch.size(),
          "loss_total: batch field lengths differ");
  double cvae = 0.0;
  double pred = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto condition = predict(m, forward_shared(m, batch.examples[i]));
    cvae += loss_cvae(m, batch.examples[i], condition, batch.noise[i], cfg.lambda1, cfg.lambda3);
    pred += loss_pred(m, batch.examples[i], batch.labels[i]);
  }
  return cvae + cfg.lambda2 * pred / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------
// Gradients

struct ModelGrads {
  BlockGrad shared;
  BlockGrad predictor;
  BlockGrad encoder;
  BlockGrad decoder;
  BlockGrad cvae_shared;

  static ModelGrads zeros_like(const ModelParams& m) {
    return {nn::zero_grad(m.shared), nn::zero_grad(m.predictor), nn::zero_grad(m.encoder),
            nn::zero_grad(m.decoder), nn::zero_grad(m.cvae_shared)};
  }
};

// Which parts of the graph are live in a backward pass.
enum class GradientMode {
  Joint,          // every block; condition gradient reaches the predictor
  PredictorOnly,  // shared + predictor on the predictor loss
  FrozenPredictor // cVAE blocks only; the condition is a constant
};

struct LossWeights {
  double reconstruction = 0.0;  // lambda3
  double kl = 0.0;              // lambda1
  double prediction = 0.0;      // lambda2 / batch size
};

struct ExampleTerms {
  double bce = 0.0;
  double kl = 0.0;
  double prediction = 0.0;
  std::size_t predicted = 0;
};

// Forward and reverse pass for one example; parameter gradients of
//   w.reconstruction * BCE + w.kl * KL + w.prediction * CE
// are accumulated into `grads`.
inline ExampleTerms accumulate_example(const ModelParams& m, std::span<const double> x, std::size_t y,
                                       std::span<const double> noise, const LossWeights& w,
                                       GradientMode mode, ModelGrads& grads) {
  ExampleTerms terms;
  const auto h_trace = nn::forward_trace(m.shared, x);
  const auto pred_trace = nn::forward_trace(m.predictor, h_trace.output);
  const auto& condition = pred_trace.output;
  const auto probs = class_probabilities(condition);
  terms.prediction = nn::cross_entropy(probs, y);
  terms.predicted = nn::argmax(probs);

  std::vector<double> d_condition(m.condition_dim, 0.0);
  std::vector<double> d_h(nn::output_width(m.shared), 0.0);

  if (mode != GradientMode::PredictorOnly) {
    const bool own_trunk = m.is_posthoc();
    nn::BlockTrace trunk_trace_storage;
    if (own_trunk) trunk_trace_storage = nn::forward_trace(m.cvae_shared, x);
    const auto& trunk_trace = own_trunk ? trunk_trace_storage : h_trace;

    const auto enc_trace = nn::forward_trace(m.encoder, concat(trunk_trace.output, condition));
    const auto g = split_latent(enc_trace.output, m.latent_dim);
    const auto z = nn::reparameterize(g, noise);
    const auto dec_trace = nn::forward_trace(m.decoder, concat(z, condition));
    terms.bce = nn::bce_reconstruction(dec_trace.output, x);
    terms.kl = nn::kl_diag_gaussian(g);

    auto d_x_hat = nn::bce_gradient(dec_trace.output, x);
    for (auto& v : d_x_hat) v *= w.reconstruction;
    const auto d_dec_in = nn::backward(m.decoder, dec_trace, d_x_hat, grads.decoder);

    std::vector<double> d_head(2 * m.latent_dim);
    const auto kl_grad = nn::kl_gradient(g);
    for (std::size_t j = 0; j < m.latent_dim; ++j) {
      const double dz = d_dec_in[j];
      d_head[j] = dz + w.kl * kl_grad.mean[j];
      d_head[m.latent_dim + j] =
          dz * 0.5 * std::exp(0.5 * g.log_variance[j]) * noise[j] + w.kl * kl_grad.log_variance[j];
    }
    const auto d_enc_in = nn::backward(m.encoder, enc_trace, d_head, grads.encoder);

    const std::size_t hw = trunk_trace.output.size();
    std::vector<double> d_trunk(d_enc_in.begin(), d_enc_in.begin() + static_cast<std::ptrdiff_t>(hw));
    for (std::size_t k = 0; k < m.condition_dim; ++k) {
      d_condition[k] += d_dec_in[m.latent_dim + k] + d_enc_in[hw + k];
    }
    if (own_trunk) {
      nn::backward(m.cvae_shared, trunk_trace, d_trunk, grads.cvae_shared);
    } else {
      d_h = std::move(d_trunk);
    }
  }

  if (mode == GradientMode::FrozenPredictor) return terms;

  // CE gradient w.r.t. the condition (binary: p = [1 - s, s]).
  const auto d_probs = nn::cross_entropy_gradient(probs, y);
  if (m.condition_dim == 1) {
    d_condition[0] += w.prediction * (d_probs[1] - d_probs[0]);
  } else {
    for (std::size_t k = 0; k < m.condition_dim; ++k) d_condition[k] += w.prediction * d_probs[k];
  }
  const auto d_h_pred = nn::backward(m.predictor, pred_trace, d_condition, grads.predictor);
  for (std::size_t k = 0; k < d_h.size(); ++k) d_h[k] += d_h_pred[k];
  nn::backward(m.shared, h_trace, d_h, grads.shared);
  return terms;
}

// Value and analytic gradient of loss_total on one batch.
inline double loss_total_gradient(const ModelParams& m, const Batch& batch, const TrainingConfig& cfg,
                                  ModelGrads& grads) {
  require(batch.size() > 0, "loss_total: empty batch");
  const LossWeights w{cfg.lambda3, cfg.lambda1, cfg.lambda2 / static_cast<double>(batch.size())};
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto t = accumulate_example(m, batch.examples[i], batch.labels[i], batch.noise[i], w,
                                      GradientMode::Joint, grads);
    loss += w.reconstruction * t.bce + w.kl * t.kl + w.prediction * t.prediction;
  }
  return loss;
}

// Visits every parameter in a fixed order (shared, predictor, encoder,
// decoder, cvae_shared; weights before bias within a layer).
template <typename F>
void for_each_parameter(ModelParams& m, F&& f) {
  for (Block* b : {&m.shared, &m.predictor, &m.encoder, &m.decoder, &m.cvae_shared}) {
    for (auto& l : *b) {
      for (auto& v : l.weights) f(v);
      for (auto& v : l.bias) f(v);
    }
  }
}

template <typename F>
void for_each_gradient(const ModelGrads& g, F&& f) {
  for (const BlockGrad* b : {&g.shared, &g.predictor, &g.encoder, &g.decoder, &g.cvae_shared}) {
    for (const auto& l : *b) {
      for (double v : l.weights) f(v);
      for (double v : l.bias) f(v);
    }
  }
}

inline std::size_t parameter_count(const ModelParams& m) {
  std::size_t n = 0;
  for_each_parameter(const_cast<ModelParams&>(m), [&](double&) { ++n; });
  return n;
}

// ---------------------------------------------------------------------------
// Training

struct EpochLog {
  std::size_t epoch = 0;
  double total_loss = 0.0;      // mean over batches of the batch objective
  double predictor_loss = 0.0;  // mean cross-entropy per example
  double cvae_loss = 0.0;       // mean weighted cVAE loss per example
  double train_accuracy = 0.0;
};

struct TrainingResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

struct Optimizers {
  nn::BlockOptimizer shared, predictor, encoder, decoder, cvae_shared;

  static Optimizers for_model(const ModelParams& m, double lr) {
    return {nn::BlockOptimizer::for_block(m.shared, lr), nn::BlockOptimizer::for_block(m.predictor, lr),
            nn::BlockOptimizer::for_block(m.encoder, lr), nn::BlockOptimizer::for_block(m.decoder, lr),
            nn::BlockOptimizer::for_block(m.cvae_shared, lr)};
  }
};

namespace detail {

// Mini-batch Adam loop shared by the joint and post-hoc trainers.
inline std::vector<EpochLog> run_training(ModelParams& m, const data::PreprocessedDataset& train,
                                          const TrainingConfig& cfg, GradientMode mode, Rng& rng,
                                          const std::function<void(EpochLog&)>& on_epoch = {}) {
  cfg.check();
  require(train.size() > 0, "training: empty training set");
  require(train.labels.size() == train.size(), "training: labels missing");
  require(train.width() == m.input_width(), "training: dataset width != model input width");

  auto opt = Optimizers::for_model(m, cfg.learning_rate);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<EpochLog> log;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    EpochLog e;
    e.epoch = epoch;
    std::size_t batches = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double n = static_cast<double>(end - start);
      LossWeights w;
      switch (mode) {
        case GradientMode::Joint: w = {cfg.lambda3, cfg.lambda1, cfg.lambda2 / n}; break;
        case GradientMode::PredictorOnly: w = {0.0, 0.0, 1.0 / n}; break;
        case GradientMode::FrozenPredictor: w = {cfg.lambda3, cfg.lambda1, 0.0}; break;
      }
      auto grads = ModelGrads::zeros_like(m);
      double batch_cvae = 0.0;
      double batch_pred = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        std::vector<double> noise;
        if (mode != GradientMode::PredictorOnly) noise = rng.normal_vector(m.latent_dim);
        const auto t = accumulate_example(m, train.examples[i], train.labels[i], noise, w, mode, grads);
        batch_cvae += w.reconstruction * t.bce + w.kl * t.kl;
        batch_pred += t.prediction;
        if (t.predicted == train.labels[i]) ++correct;
      }
      const double batch_loss = mode == GradientMode::PredictorOnly ? batch_pred / n
                                : mode == GradientMode::FrozenPredictor
                                    ? batch_cvae
                                    : batch_cvae + cfg.lambda2 * batch_pred / n;
      const std::string where = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(batches + 1);
      if (!std::isfinite(batch_loss)) throw TrainingDivergence("non-finite loss at " + where);
      try {
        if (mode != GradientMode::FrozenPredictor) {
          opt.shared.step(m.shared, grads.shared);
          opt.predictor.step(m.predictor, grads.predictor);
        }
        if (mode != GradientMode::PredictorOnly) {
          opt.encoder.step(m.encoder, grads.encoder);
          opt.decoder.step(m.decoder, grads.decoder);
          opt.cvae_shared.step(m.cvae_shared, grads.cvae_shared);
        }
      } catch (const TrainingDivergence& err) {
        throw TrainingDivergence(std::string(err.what()) + " at " + where);
      }
      e.total_loss += batch_loss;
      e.cvae_loss += batch_cvae;
      e.predictor_loss += batch_pred;
      ++batches;
    }
    e.total_loss /= static_cast<double>(batches);
    e.cvae_loss /= static_cast<double>(train.size());
    e.predictor_loss /= static_cast<double>(train.size());
    // Accuracy of the pre-update forward passes seen during the epoch.
    e.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    if (on_epoch) on_epoch(e);
    log.push_back(e);
  }
  return log;
}

}  // namespace detail

inline TrainingResult train_joint(const data::PreprocessedDataset& train, const ArchConfig& arch,
                                  const TrainingConfig& cfg,
                                  const std::function<void(EpochLog&)>& on_epoch = {}) {
  cfg.check();
  arch.check(train.width(), train.schema.class_count());
  Rng rng(cfg.seed);
  TrainingResult r;
  r.params = init_model(arch, train.one_hot_spans, train.schema.class_count(), rng);
  r.log = detail::run_training(r.params, train, cfg, GradientMode::Joint, rng, on_epoch);
  return r;
}

struct PosthocConfig {
  TrainingConfig predictor;  // lambdas ignored
  TrainingConfig cvae;       // lambda2 ignored
};

struct PosthocResult {
  ModelParams predictor_stage;  // after stage 1: trunk + predictor trained
  ModelParams model;            // final: stage-1 predictor + private cVAE
  std::vector<EpochLog> predictor_log;
  std::vector<EpochLog> cvae_log;
};

// Stage 1 trains trunk + predictor on cross-entropy alone. Stage 2 trains a
// cVAE with its own trunk, conditioned on the frozen predictor's output.
inline PosthocResult train_posthoc(const data::PreprocessedDataset& train, const ArchConfig& arch,
                                   const PosthocConfig& cfg) {
  cfg.predictor.check();
  cfg.cvae.check();
  arch.check(train.width(), train.schema.class_count());
  PosthocResult r;
  Rng stage1(cfg.predictor.seed);
  r.predictor_stage = init_model(arch, train.one_hot_spans, train.schema.class_count(), stage1);
  r.predictor_log = detail::run_training(r.predictor_stage, train, cfg.predictor,
                                         GradientMode::PredictorOnly, stage1);

  Rng stage2(cfg.cvae.seed + 1);
  r.model = r.predictor_stage;
  r.model.cvae_shared = make_trunk(arch, stage2);
  r.cvae_log = detail::run_training(r.model, train, cfg.cvae, GradientMode::FrozenPredictor, stage2);
  return r;
}

}  // namespace vcnet
