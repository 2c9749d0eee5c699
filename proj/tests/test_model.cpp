#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "support.hpp"
#include "vcnet/experiments.hpp"
#include "vcnet/model.hpp"
#include "vcnet/serialize.hpp"

using namespace vcnet;
using namespace vcnet::testing;
namespace fs = std::filesystem;

namespace {

const char* kTabularConfigs[] = {"adult", "student", "titanic", "heloc", "oulad", "breast_cancer"};

exp::ExperimentConfig config(const std::string& name) { return exp::load_config(source_path("configs/" + name + ".json")); }

ModelParams zero_model(const ArchConfig& arch, std::size_t classes) {
  Rng rng(0);
  auto m = init_model(arch, {}, classes, rng);
  for_each_parameter(m, [](double& v) { v = 0.0; });
  return m;
}

const exp::PreparedData& breast_cancer() {
  static const exp::PreparedData d = exp::prepare_data(config("breast_cancer"));
  return d;
}

// Small multiclass problem for the training-loop tests.
data::PreprocessedDataset small_synthetic() { return data::synthetic_gaussian_3class(120, 4); }

ArchConfig small_arch() { return {{8, 6}, {9, 4, 2}, {5, 6, 8}, {6, 3}}; }

}  // namespace

TEST(Architecture, TabularConfigsSatisfyWidthInvariants) {
  for (const char* name : kTabularConfigs) {
    const auto c = config(name);
    const std::size_t p = c.arch.shared_dims.front();
    EXPECT_NO_THROW(c.arch.check(p, 2)) << name;
    Rng rng(1);
    const auto m = init_model(c.arch, {}, 2, rng);
    EXPECT_NO_THROW(m.check()) << name;
    EXPECT_EQ(m.condition_dim, 1u) << name;
    EXPECT_EQ(nn::input_width(m.encoder), nn::output_width(m.shared) + 1) << name;
    EXPECT_EQ(nn::input_width(m.decoder), m.latent_dim + 1) << name;
    EXPECT_EQ(nn::output_width(m.decoder), p) << name;
  }
}

TEST(Architecture, MismatchedWidthsRejected) {
  auto arch = config("adult").arch;
  arch.decoder_dims.back() = 28;
  EXPECT_THROW(arch.check(29, 2), ContractViolation);
  arch = config("adult").arch;
  EXPECT_THROW(arch.check(29, 3), ContractViolation);
}

TEST(ForwardShared, AdultAndBreastCancerWidths) {
  Rng rng(2);
  const auto adult = init_model(config("adult").arch, {}, 2, rng);
  EXPECT_EQ(forward_shared(adult, std::vector<double>(29, 0.5)).size(), 15u);
  const auto bc = init_model(config("breast_cancer").arch, {}, 2, rng);
  EXPECT_EQ(forward_shared(bc, std::vector<double>(30, 0.5)).size(), 15u);
  EXPECT_THROW(forward_shared(bc, std::vector<double>(29, 0.5)), ContractViolation);
}

TEST(ForwardShared, ZeroWeightsZeroInput) {
  const auto m = zero_model(config("breast_cancer").arch, 2);
  EXPECT_EQ(forward_shared(m, std::vector<double>(30, 0.0)), std::vector<double>(15, 0.0));
}

TEST(Predict, LogitZeroIsHalfAndTiesToClassZero) {
  const auto m = zero_model(config("breast_cancer").arch, 2);
  const auto p = predict_proba(m, std::vector<double>(30, 0.3));
  EXPECT_EQ(p, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(predicted_class(m, std::vector<double>(30, 0.3)), 0u);
}

TEST(Predict, MulticlassPathArgmax) {
  ModelParams m;
  m.shared = {nn::DenseLayer::zeros(1, 1, nn::Activation::Identity)};
  auto out = nn::DenseLayer::zeros(1, 2, nn::Activation::SoftmaxGrouped, {{0, 2}});
  out.bias = {2.0, -2.0};
  m.predictor = {out};
  EXPECT_EQ(nn::argmax(predict_proba(m, std::vector<double>{0.0})), 0u);
}

TEST(Predict, ProbabilitiesValidOnRandomInputs) {
  Rng rng(3);
  const auto bin = init_model(config("breast_cancer").arch, {}, 2, rng);
  const auto multi = init_model(small_arch(), {}, 3, rng);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x30(30), x8(8);
    for (auto& v : x30) v = rng.uniform();
    for (auto& v : x8) v = rng.uniform();
    for (const auto& p : {predict_proba(bin, x30), predict_proba(multi, x8)}) {
      double total = 0.0;
      for (double v : p) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        total += v;
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(Encode, AdultWidths) {
  Rng rng(4);
  const auto m = init_model(config("adult").arch, {}, 2, rng);
  EXPECT_EQ(nn::input_width(m.encoder), 16u);
  EXPECT_EQ(m.encoder.front().out_dim, 8u);
  const auto g = encode(m, std::vector<double>(15, 0.1), std::vector<double>{0.4});
  EXPECT_EQ(g.mean.size(), 5u);
  EXPECT_EQ(g.log_variance.size(), 5u);
}

TEST(Encode, ZeroWeightsGiveStandardNormal) {
  const auto m = zero_model(config("adult").arch, 2);
  const auto g = encode(m, std::vector<double>(15, 0.7), std::vector<double>{0.9});
  EXPECT_EQ(g.mean, std::vector<double>(5, 0.0));
  EXPECT_EQ(g.log_variance, std::vector<double>(5, 0.0));
  EXPECT_EQ(nn::kl_diag_gaussian(g), 0.0);
}

TEST(Encode, FiniteOnRandomInputs) {
  Rng rng(5);
  const auto m = init_model(config("breast_cancer").arch, {}, 2, rng);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(30);
    for (auto& v : x) v = rng.uniform();
    const auto h = forward_shared(m, x);
    const auto g = encode(m, h, predict(m, h));
    EXPECT_NO_THROW(nn::check_finite(g));
  }
}

TEST(Decode, AdultWidthsAndSpanContract) {
  Rng rng(6);
  const std::vector<nn::IndexSpan> spans{{3, 4}, {10, 2}, {20, 9}};
  const auto m = init_model(config("adult").arch, spans, 2, rng);
  EXPECT_EQ(detail::block_dims(m.decoder), (std::vector<std::size_t>{6, 8, 15, 29}));
  for (int k = 0; k < 100; ++k) {
    const auto z = rng.normal_vector(5);
    const std::vector<double> cond{rng.uniform()};
    const auto x = decode(m, z, cond);
    ASSERT_EQ(x.size(), 29u);
    for (double v : x) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
    for (const auto& s : spans) {
      double total = 0.0;
      for (std::size_t i = s.start; i < s.end(); ++i) total += x[i];
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
    EXPECT_EQ(decode(m, z, cond), x);
  }
}

TEST(Decode, WidthMismatchThrows) {
  Rng rng(7);
  const auto m = init_model(config("adult").arch, {}, 2, rng);
  EXPECT_THROW(decode(m, std::vector<double>(4, 0.0), std::vector<double>{0.5}), ContractViolation);
  EXPECT_THROW(decode(m, std::vector<double>(5, 0.0), std::vector<double>{0.5, 0.5}), ContractViolation);
}

TEST(LossCvae, Examples) {
  Rng rng(8);
  const auto m = init_model(config("breast_cancer").arch, {}, 2, rng);
  std::vector<double> x(30);
  for (auto& v : x) v = rng.uniform();
  const auto noise = rng.normal_vector(5);
  EXPECT_EQ(loss_cvae(m, x, std::vector<double>{0.3}, noise, 0.0, 0.0), 0.0);

  const auto zero = zero_model(config("breast_cancer").arch, 2);
  EXPECT_EQ(loss_cvae(zero, x, std::vector<double>{0.3}, noise, 1.0, 0.0), 0.0);
}

TEST(LossCvae, PerfectReconstructionOfBinaryRow) {
  // Decoder biases saturate toward the binary target; weights are zero.
  auto m = zero_model(config("breast_cancer").arch, 2);
  std::vector<double> x(30);
  for (std::size_t i = 0; i < 30; ++i) x[i] = i % 2 == 0 ? 1.0 : 0.0;
  auto& last = m.decoder.back();
  for (std::size_t i = 0; i < 30; ++i) last.bias[i] = x[i] == 1.0 ? 40.0 : -40.0;
  const double loss = loss_cvae(m, x, std::vector<double>{0.5}, std::vector<double>(5, 0.3), 0.0, 1.0);
  EXPECT_GE(loss, 0.0);
  EXPECT_LT(loss, 30 * 1e-6);
}

TEST(LossPred, Examples) {
  // Toy predictors whose outputs are set through the final bias.
  ModelParams bin;
  bin.shared = {nn::DenseLayer::zeros(1, 1, nn::Activation::Identity)};
  auto sig = nn::DenseLayer::zeros(1, 1, nn::Activation::Sigmoid);
  bin.predictor = {sig};
  bin.class_count = 2;
  sig.bias[0] = -800.0;  // P(class 1) underflows to 0
  bin.predictor = {sig};
  EXPECT_NEAR(loss_pred(bin, std::vector<double>{0.0}, 0), 0.0, 1e-15);
  bin.predictor[0].bias[0] = 0.0;
  EXPECT_NEAR(loss_pred(bin, std::vector<double>{0.0}, 0), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(loss_pred(bin, std::vector<double>{0.0}, 1), std::numbers::ln2, 1e-15);

  ModelParams multi;
  multi.shared = {nn::DenseLayer::zeros(1, 1, nn::Activation::Identity)};
  auto soft = nn::DenseLayer::zeros(1, 3, nn::Activation::SoftmaxGrouped, {{0, 3}});
  soft.bias = {std::log(0.6), std::log(0.3), std::log(0.1)};
  multi.predictor = {soft};
  multi.class_count = 3;
  EXPECT_NEAR(loss_pred(multi, std::vector<double>{0.0}, 1), -std::log(0.3), 1e-12);
  EXPECT_NEAR(loss_pred(multi, std::vector<double>{0.0}, 1), 1.20397, 1e-5);
  EXPECT_THROW(loss_pred(multi, std::vector<double>{0.0}, 3), ContractViolation);
}

TEST(LossTotal, Identities) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    auto t = random_toy_problem(rng, 4);
    TrainingConfig cfg{0.7, 0.0, 1.3};
    const Batch one{std::span(t.examples).first(1), std::span(t.labels).first(1), std::span(t.noise).first(1)};
    const auto cond = predict(t.model, forward_shared(t.model, t.examples[0]));
    EXPECT_DOUBLE_EQ(loss_total(t.model, one, cfg),
                     loss_cvae(t.model, t.examples[0], cond, t.noise[0], cfg.lambda1, cfg.lambda3));

    cfg = {0.0, 2.5, 0.0};
    double mean_pred = 0.0;
    for (std::size_t i = 0; i < 4; ++i) mean_pred += loss_pred(t.model, t.examples[i], t.labels[i]);
    mean_pred /= 4.0;
    EXPECT_NEAR(loss_total(t.model, t.batch(), cfg), 2.5 * mean_pred, 1e-12);

    // Sum reduction of the cVAE term, mean reduction of the predictor term.
    cfg = {0.4, 1.7, 0.9};
    double expect = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto c = predict(t.model, forward_shared(t.model, t.examples[i]));
      expect += loss_cvae(t.model, t.examples[i], c, t.noise[i], 0.4, 0.9);
    }
    expect += 1.7 * mean_pred;
    EXPECT_NEAR(loss_total(t.model, t.batch(), cfg), expect, 1e-10);
  }
}

TEST(LossTotal, EmptyBatchRejected) {
  Rng rng(10);
  auto t = random_toy_problem(rng, 1);
  EXPECT_THROW(loss_total(t.model, Batch{}, TrainingConfig{}), ContractViolation);
}

TEST(Gradient, LossTotalMatchesFiniteDifferences) {
  Rng rng(11);
  const TrainingConfig weights[] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.6, 1.4, 0.8}};
  for (int trial = 0; trial < 12; ++trial) {
    auto t = random_toy_problem(rng, 3);
    for (const auto& cfg : weights) {
      auto grads = ModelGrads::zeros_like(t.model);
      const double value = loss_total_gradient(t.model, t.batch(), cfg, grads);
      EXPECT_NEAR(value, loss_total(t.model, t.batch(), cfg), 1e-10);
      const auto rep = compare_with_fd(parameter_pointers(t.model), flatten(grads),
                                       [&] { return loss_total(t.model, t.batch(), cfg); });
      EXPECT_LT(rep.max_relative_error, kFdTolerance)
          << "trial " << trial << " lambdas " << cfg.lambda1 << "," << cfg.lambda2 << "," << cfg.lambda3;
    }
  }
}

TEST(Gradient, FourFeatureToyBatch) {
  Rng rng(12);
  ToyProblem t;
  t.arch = {{4, 2}, {3, 2}, {3, 4}, {2, 1}};
  t.model = init_model(t.arch, {}, 2, rng);
  ASSERT_LE(parameter_count(t.model), 64u);
  for (int i = 0; i < 5; ++i) {
    t.examples.push_back({rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()});
    t.labels.push_back(rng.below(2));
    t.noise.push_back(rng.normal_vector(2));
  }
  const TrainingConfig cfg{1.0, 1.0, 1.0};
  auto grads = ModelGrads::zeros_like(t.model);
  loss_total_gradient(t.model, t.batch(), cfg, grads);
  const auto rep = compare_with_fd(parameter_pointers(t.model), flatten(grads),
                                   [&] { return loss_total(t.model, t.batch(), cfg); });
  EXPECT_LT(rep.max_relative_error, kFdTolerance);
}

TEST(Gradient, PosthocStagesMatchFiniteDifferences) {
  Rng rng(13);
  for (int trial = 0; trial < 8; ++trial) {
    auto t = random_toy_problem(rng, 3);
    t.model.cvae_shared = make_trunk(t.arch, rng);
    for (auto& l : t.model.cvae_shared) {
      for (auto& v : l.weights) v = rng.uniform(-1.5, 1.5);
    }
    auto ptrs = parameter_pointers(t.model);
    const std::size_t n = ptrs.size();

    // Stage 1: mean cross-entropy; only trunk and predictor receive gradient.
    auto g1 = ModelGrads::zeros_like(t.model);
    for (std::size_t i = 0; i < 3; ++i) {
      accumulate_example(t.model, t.examples[i], t.labels[i], {}, {0, 0, 1.0 / 3.0}, GradientMode::PredictorOnly, g1);
    }
    auto mean_ce = [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < 3; ++i) s += loss_pred(t.model, t.examples[i], t.labels[i]);
      return s / 3.0;
    };
    EXPECT_LT(compare_with_fd(ptrs, flatten(g1), mean_ce).max_relative_error, kFdTolerance);

    // Stage 2: cVAE loss with the predictor output held constant.
    std::vector<std::vector<double>> frozen;
    for (std::size_t i = 0; i < 3; ++i) frozen.push_back(predict(t.model, forward_shared(t.model, t.examples[i])));
    auto g2 = ModelGrads::zeros_like(t.model);
    for (std::size_t i = 0; i < 3; ++i) {
      accumulate_example(t.model, t.examples[i], t.labels[i], t.noise[i], {0.8, 0.6, 0}, GradientMode::FrozenPredictor, g2);
    }
    auto cvae = [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < 3; ++i) s += loss_cvae(t.model, t.examples[i], frozen[i], t.noise[i], 0.6, 0.8);
      return s;
    };
    const auto flat = flatten(g2);
    const std::size_t frozen_count = parameter_count(ModelParams{t.model.shared, t.model.predictor, {}, {}, {}, 0, 0, 0, {}});
    for (std::size_t k = 0; k < frozen_count; ++k) EXPECT_EQ(flat[k], 0.0);
    std::vector<double*> live(ptrs.begin() + static_cast<std::ptrdiff_t>(frozen_count), ptrs.end());
    std::vector<double> live_grad(flat.begin() + static_cast<std::ptrdiff_t>(frozen_count), flat.end());
    EXPECT_EQ(live.size() + frozen_count, n);
    EXPECT_LT(compare_with_fd(live, live_grad, cvae).max_relative_error, kFdTolerance);
  }
}

TEST(TrainJoint, DeterministicAcrossRuns) {
  const auto d = small_synthetic();
  const TrainingConfig cfg{1.0, 1.0, 1.0, 1e-3, 2, 16, 77};
  const auto a = train_joint(d, small_arch(), cfg);
  const auto b = train_joint(d, small_arch(), cfg);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.log.size(), 2u);
  EXPECT_EQ(a.log[1].total_loss, b.log[1].total_loss);
  auto other = cfg;
  other.seed = 78;
  EXPECT_NE(train_joint(d, small_arch(), other).params, a.params);
}

TEST(TrainJoint, BreastCancerLossDecreasesAndAccuracyHolds) {
  const auto& d = breast_cancer();
  const auto c = config("breast_cancer");
  const auto r = train_joint(d.train, c.arch, c.train);
  ASSERT_EQ(r.log.size(), 100u);
  EXPECT_LT(r.log.back().total_loss, r.log.front().total_loss);
  EXPECT_GE(metrics::accuracy(r.params, d.eval.examples, d.eval.labels), 0.93);
}

TEST(TrainJoint, LogFieldsAreConsistent) {
  const auto d = small_synthetic();
  const TrainingConfig cfg{1.0, 1.0, 1.0, 1e-3, 3, 16, 1};
  const auto r = train_joint(d, small_arch(), cfg);
  for (std::size_t k = 0; k < r.log.size(); ++k) {
    EXPECT_EQ(r.log[k].epoch, k + 1);
    EXPECT_GE(r.log[k].train_accuracy, 0.0);
    EXPECT_LE(r.log[k].train_accuracy, 1.0);
    EXPECT_GT(r.log[k].predictor_loss, 0.0);
    EXPECT_GT(r.log[k].cvae_loss, 0.0);
  }
}

TEST(TrainJoint, DivergenceNamesEpochAndBatch) {
  const auto d = small_synthetic();
  // An overflowing KL weight makes the first batch loss infinite.
  const TrainingConfig cfg{1e308, 1.0, 1.0, 1e-3, 2, 16, 1};
  try {
    train_joint(d, small_arch(), cfg);
    FAIL() << "expected TrainingDivergence";
  } catch (const TrainingDivergence& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("epoch 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("batch 1"), std::string::npos) << msg;
  }
}

TEST(TrainJoint, ConfigRejectsBadValues) {
  const auto d = small_synthetic();
  EXPECT_THROW(train_joint(d, small_arch(), TrainingConfig{1, 1, 1, 1e-3, 0, 16}), ContractViolation);
  EXPECT_THROW(train_joint(d, small_arch(), TrainingConfig{1, 1, 1, 0.0, 1, 16}), ContractViolation);
  EXPECT_THROW(train_joint(d, small_arch(), TrainingConfig{1, 1, 1, 1e-3, 1, 0}), ContractViolation);
  EXPECT_THROW(train_joint(d, small_arch(), TrainingConfig{-1, 1, 1, 1e-3, 1, 16}), ContractViolation);
}

TEST(TrainPosthoc, StageTwoLeavesPredictorUntouched) {
  const auto d = small_synthetic();
  PosthocConfig pc{{0, 0, 0, 1e-3, 3, 16, 5}, {1.0, 0.0, 1.0, 1e-3, 3, 16, 5}};
  const auto r = train_posthoc(d, small_arch(), pc);
  EXPECT_EQ(r.model.shared, r.predictor_stage.shared);
  EXPECT_EQ(r.model.predictor, r.predictor_stage.predictor);
  EXPECT_TRUE(r.model.is_posthoc());
  EXPECT_NE(r.model.encoder, r.predictor_stage.encoder);
  EXPECT_NE(r.model.cvae_shared, r.model.shared);
  EXPECT_EQ(r.predictor_log.size(), 3u);
  EXPECT_EQ(r.cvae_log.size(), 3u);
}

TEST(TrainPosthoc, BreastCancerPredictorStageAccuracy) {
  const auto& d = breast_cancer();
  const auto c = config("breast_cancer");
  const auto r = train_posthoc(d.train, c.arch, *c.posthoc);
  EXPECT_GE(metrics::accuracy(r.predictor_stage, d.eval.examples, d.eval.labels), 0.90);
  EXPECT_EQ(metrics::accuracy(r.predictor_stage, d.eval.examples, d.eval.labels),
            metrics::accuracy(r.model, d.eval.examples, d.eval.labels));
}

TEST(Serialize, RoundTripPredictionsOnRandomInputs) {
  const auto& d = breast_cancer();
  auto c = config("breast_cancer");
  c.train.epochs = 3;
  const auto r = train_joint(d.train, c.arch, c.train);
  const auto path = binary_path("roundtrip_model.json");
  save_model(path, r.params, d.schema);
  const auto loaded = load_model(path, data::schema_hash(d.schema));
  EXPECT_EQ(loaded.params, r.params);
  EXPECT_EQ(loaded.schema, d.schema);
  Rng rng(14);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(30);
    for (auto& v : x) v = rng.uniform();
    EXPECT_EQ(predict_proba(loaded.params, x), predict_proba(r.params, x));
    EXPECT_EQ(cf::generate(loaded.params, x), cf::generate(r.params, x));
  }
}

TEST(Serialize, PosthocModelRoundTrips) {
  const auto d = small_synthetic();
  PosthocConfig pc{{0, 0, 0, 1e-3, 1, 16, 5}, {1.0, 0.0, 1.0, 1e-3, 1, 16, 5}};
  const auto r = train_posthoc(d, small_arch(), pc);
  EXPECT_EQ(model_from_json(json::parse(model_to_json(r.model, d.schema).dump())).params, r.model);
}

TEST(Serialize, WrongSchemaHashRefused) {
  Rng rng(15);
  const auto& d = breast_cancer();
  const auto m = init_model(config("breast_cancer").arch, {}, 2, rng);
  const auto j = model_to_json(m, d.schema);
  EXPECT_THROW(model_from_json(j, std::string("0000000000000000")), ModelFormatError);
  auto tampered = j;
  tampered["schema"]["columns"][0]["max"] = 1e6;
  EXPECT_THROW(model_from_json(tampered), ModelFormatError);
}

TEST(Serialize, VersionMismatchRefused) {
  Rng rng(16);
  auto j = model_to_json(init_model(config("breast_cancer").arch, {}, 2, rng), breast_cancer().schema);
  j["format_version"] = kModelFormatVersion + 1;
  EXPECT_THROW(model_from_json(j), ModelFormatError);
}

TEST(Serialize, TruncatedFileRefused) {
  Rng rng(17);
  const auto m = init_model(config("breast_cancer").arch, {}, 2, rng);
  const auto text = model_to_json(m, breast_cancer().schema).dump(1);
  const auto path = binary_path("truncated_model.json");
  {
    std::ofstream out(path, std::ios::binary);
    out << text.substr(0, text.size() / 2);
  }
  EXPECT_THROW(load_model(path), ModelFormatError);
  EXPECT_THROW(load_model(binary_path("no_such_model.json")), ModelFormatError);
}

TEST(Serialize, InconsistentLayersRefused) {
  Rng rng(18);
  auto j = model_to_json(init_model(config("breast_cancer").arch, {}, 2, rng), breast_cancer().schema);
  j["layers"]["decoder"][0]["weights"].erase(0);
  EXPECT_THROW(model_from_json(j), ModelFormatError);
}

TEST(Gradient, ToyDrawsStayClearOfLogClamp) {
  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) EXPECT_TRUE(clear_of_log_clamp(random_toy_problem(rng, 3)));
  auto t = random_toy_problem(rng, 1);
  for (auto& l : t.model.decoder) {
    for (auto& b : l.bias) b = -40.0;
  }
  EXPECT_FALSE(clear_of_log_clamp(t));
}
