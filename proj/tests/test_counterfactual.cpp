#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "unit_examples.hpp"
#include "vcnet/counterfactual.hpp"
#include "vcnet/experiments.hpp"

using namespace vcnet;
using namespace vcnet::testing;

TEST(CounterfactualExamples, AllPass) {
  for (const auto& c : counterfactual_examples()) EXPECT_TRUE(c.passed) << c.name;
}

TEST(TargetVector, AlwaysChangesTheArgmax) {
  Rng rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t l = 2 + rng.below(5);
    std::vector<double> p(l);
    double total = 0.0;
    for (auto& v : p) total += (v = rng.below(4) == 0 ? 0.25 : rng.uniform());
    for (auto& v : p) v /= total;
    const auto pc = cf::target_probability_vector(p);
    EXPECT_NE(nn::argmax(pc), nn::argmax(p));
    double s = 0.0;
    for (double v : pc) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(TargetVector, MulticlassTieResolvedTowardTarget) {
  const auto pc = cf::target_probability_vector(std::vector<double>{0.4, 0.4, 0.2});
  EXPECT_EQ(nn::argmax(pc), 1u);
}

TEST(TargetVector, BinaryAppliedTwiceReturnsOriginalClass) {
  for (double p1 : {0.0, 0.2, 0.5, 0.51, 0.9, 1.0}) {
    const std::vector<double> p{1.0 - p1, p1};
    const auto twice = cf::target_probability_vector(cf::target_probability_vector(p));
    std::vector<double> expect(2, 0.0);
    expect[nn::argmax(p)] = 1.0;
    EXPECT_EQ(twice, expect) << p1;
  }
}

TEST(TargetVector, RejectsInvalidInput) {
  EXPECT_THROW(cf::target_probability_vector(std::vector<double>{1.0}), ContractViolation);
  EXPECT_THROW(cf::target_probability_vector(std::vector<double>{0.7, 0.7}), ContractViolation);
  EXPECT_THROW(cf::target_probability_vector(std::vector<double>{0.6, 0.3, 0.1}, 5), ContractViolation);
}

TEST(Condition, BinaryScalar) {
  EXPECT_EQ(cf::condition_from_probabilities(std::vector<double>{0, 1}, 1), std::vector<double>{1.0});
  EXPECT_EQ(cf::condition_from_probabilities(std::vector<double>{1, 0}, 1), std::vector<double>{0.0});
  EXPECT_EQ(cf::condition_from_probabilities(std::vector<double>{0.3, 0.6, 0.1}, 3),
            (std::vector<double>{0.3, 0.6, 0.1}));
}

TEST(Generate, RecordInvariantsOnRandomModels) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    auto t = random_toy_problem(rng, 5);
    for (const auto& x : t.examples) {
      const auto r = cf::generate(t.model, x);
      EXPECT_EQ(r.original, x);
      EXPECT_EQ(r.original_class, predicted_class(t.model, x));
      EXPECT_EQ(r.counterfactual_class, predicted_class(t.model, r.counterfactual));
      EXPECT_EQ(r.valid, r.counterfactual_class != r.original_class);
      EXPECT_TRUE(data::is_valid_encoded_row(r.counterfactual, t.model.one_hot_spans));
    }
  }
}

TEST(Generate, ExplicitTargetOnMulticlass) {
  Rng rng(3);
  const auto d = data::synthetic_gaussian_3class(60, 1);
  const ArchConfig arch{{8, 6}, {9, 4, 2}, {5, 6, 8}, {6, 3}};
  const auto m = init_model(arch, {}, 3, rng);
  for (const auto& x : d.examples) {
    const auto y = predicted_class(m, x);
    for (std::size_t target = 0; target < 3; ++target) {
      if (target == y) {
        EXPECT_THROW(cf::generate(m, x, target), ContractViolation);
        continue;
      }
      EXPECT_EQ(nn::argmax(cf::generate(m, x, target).target_condition), target);
    }
  }
}

TEST(Generate, WidthMismatchRejected) {
  Rng rng(4);
  auto t = random_toy_problem(rng, 1);
  EXPECT_THROW(cf::generate(t.model, std::vector<double>(t.model.input_width() + 1, 0.5)), ContractViolation);
  EXPECT_THROW(cf::perturbed_generate(t.model, t.examples[0], std::vector<double>(t.model.latent_dim + 1, 0.0)),
               ContractViolation);
}

TEST(Export, JsonRoundTrip) {
  Rng rng(5);
  auto t = random_toy_problem(rng, 3);
  for (const auto& x : t.examples) {
    const auto r = cf::generate(t.model, x);
    EXPECT_EQ(cf::record_from_json(json::parse(cf::record_to_json(r).dump())), r);
  }
}

TEST(Export, CsvInOriginalUnits) {
  data::FeatureSchema s;
  s.label_name = "y";
  s.classes = {"no", "yes"};
  s.columns = {{"age", data::ColumnKind::Continuous, {}, 20.0, 60.0},
               {"color", data::ColumnKind::Categorical, {"red", "blue"}, 0, 0}};
  s.fitted = true;
  cf::CounterfactualRecord r;
  r.original = {0.5, 1, 0};
  r.original_class = 0;
  r.counterfactual = {0.25, 0, 1};
  r.counterfactual_class = 1;
  r.valid = true;
  std::ostringstream os;
  cf::write_records_csv(os, {r}, s);
  EXPECT_EQ(os.str(),
            "row,original_class,counterfactual_class,valid,age,color,cf_age,cf_color\n"
            "0,no,yes,1,40,red,30,blue\n");
}
