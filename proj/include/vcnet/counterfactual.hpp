#pragma once

// Counterfactuals from a trained model in one forward pass: encode x with its
// own prediction as condition, then decode the latent mean under a target
// condition whose top class differs from the predicted one.

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcnet/data.hpp"
#include "vcnet/error.hpp"
#include "vcnet/model.hpp"
#include "vcnet/nn.hpp"

namespace vcnet::cf {

using json = nlohmann::json;

struct CounterfactualRecord {
  std::vector<double> original;
  std::size_t original_class = 0;
  std::vector<double> target_condition;  // class-probability vector p_c
  std::vector<double> counterfactual;
  std::size_t counterfactual_class = 0;
  bool valid = false;

  bool operator==(const CounterfactualRecord&) const = default;
};

// Index of the largest entry other than `exclude`; ties to the lower index.
inline std::size_t runner_up(std::span<const double> p, std::size_t exclude) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == exclude) continue;
    if (!best || p[i] > p[*best]) best = i;
  }
  return *best;
}

// Binary: one-hot on the other class. Multiclass: swap the top entry with the
// runner-up, or with `target` when the caller picks the class.
inline std::vector<double> target_probability_vector(std::span<const double> p_hat,
                                                     std::optional<std::size_t> target = {}) {
  require(p_hat.size() >= 2, "target_probability_vector: need at least two classes");
  double total = 0.0;
  for (double v : p_hat) {
    require(v >= 0.0 && v <= 1.0, "target_probability_vector: entry outside [0,1]");
    total += v;
  }
  require(std::abs(total - 1.0) <= 1e-6, "target_probability_vector: entries do not sum to 1");
  const std::size_t top = nn::argmax(p_hat);
  if (target) {
    require(*target < p_hat.size(), "target_probability_vector: target class out of range");
    require(*target != top, "target_probability_vector: target equals the predicted class");
  }
  if (p_hat.size() == 2) {
    std::vector<double> pc(2, 0.0);
    pc[1 - top] = 1.0;
    return pc;
  }
  const std::size_t other = target ? *target : runner_up(p_hat, top);
  std::vector<double> pc(p_hat.begin(), p_hat.end());
  std::swap(pc[top], pc[other]);
  // Equal top entries would leave the argmax on the lower index.
  if (nn::argmax(pc) == top) {
    pc[other] = std::nextafter(pc[other], 2.0);
  }
  return pc;
}

// Class-probability vector -> decoder condition (binary: P(class 1)).
inline std::vector<double> condition_from_probabilities(std::span<const double> p, std::size_t condition_dim) {
  if (condition_dim == 1) {
    require(p.size() == 2, "binary condition needs a two-class probability vector");
    return {p[1]};
  }
  require(p.size() == condition_dim, "condition width mismatch");
  return {p.begin(), p.end()};
}

// Argmax one-hot on every span; continuous positions unchanged.
inline std::vector<double> postprocess(std::span<const double> raw, std::span<const nn::IndexSpan> spans) {
  nn::validate_spans(spans, raw.size());
  std::vector<double> out(raw.begin(), raw.end());
  for (const auto& s : spans) {
    const auto hot = nn::argmax(raw.subspan(s.start, s.length));
    for (std::size_t i = 0; i < s.length; ++i) out[s.start + i] = i == hot ? 1.0 : 0.0;
  }
  return out;
}

namespace detail {

struct Encoded {
  std::vector<double> condition;
  std::vector<double> p_hat;
  nn::LatentGaussian latent;
};

inline Encoded encode_example(const ModelParams& m, std::span<const double> x) {
  require(x.size() == m.input_width(), "counterfactual: input width != p");
  Encoded e;
  e.condition = predict(m, forward_shared(m, x));
  e.p_hat = class_probabilities(e.condition);
  e.latent = encode(m, nn::forward(m.cvae_trunk(), x), e.condition);
  return e;
}

inline CounterfactualRecord finish(const ModelParams& m, std::span<const double> x, const Encoded& e,
                                   std::span<const double> z, std::optional<std::size_t> target) {
  CounterfactualRecord r;
  r.original.assign(x.begin(), x.end());
  r.original_class = nn::argmax(e.p_hat);
  r.target_condition = target_probability_vector(e.p_hat, target);
  const auto raw = decode(m, z, condition_from_probabilities(r.target_condition, m.condition_dim));
  r.counterfactual = postprocess(raw, m.one_hot_spans);
  r.counterfactual_class = predicted_class(m, r.counterfactual);
  r.valid = r.counterfactual_class != r.original_class;
  return r;
}

}  // namespace detail

// Decodes the latent mean of x under the target condition.
inline CounterfactualRecord generate(const ModelParams& m, std::span<const double> x,
                                     std::optional<std::size_t> target = {}) {
  const auto e = detail::encode_example(m, x);
  return detail::finish(m, x, e, e.latent.mean, target);
}

// As generate, but decodes mean + delta.
inline CounterfactualRecord perturbed_generate(const ModelParams& m, std::span<const double> x,
                                               std::span<const double> delta,
                                               std::optional<std::size_t> target = {}) {
  require(delta.size() == m.latent_dim, "perturbed_generate: delta width != latent_dim");
  const auto e = detail::encode_example(m, x);
  std::vector<double> z = e.latent.mean;
  for (std::size_t j = 0; j < z.size(); ++j) z[j] += delta[j];
  return detail::finish(m, x, e, z, target);
}

// ---------------------------------------------------------------------------
// Export

inline json record_to_json(const CounterfactualRecord& r) {
  return {{"original", r.original},
          {"original_class", r.original_class},
          {"target_condition", r.target_condition},
          {"counterfactual", r.counterfactual},
          {"counterfactual_class", r.counterfactual_class},
          {"valid", r.valid}};
}

inline CounterfactualRecord record_from_json(const json& j) {
  CounterfactualRecord r;
  r.original = j.at("original").get<std::vector<double>>();
  r.original_class = j.at("original_class").get<std::size_t>();
  r.target_condition = j.at("target_condition").get<std::vector<double>>();
  r.counterfactual = j.at("counterfactual").get<std::vector<double>>();
  r.counterfactual_class = j.at("counterfactual_class").get<std::size_t>();
  r.valid = j.at("valid").get<bool>();
  return r;
}

// One line per record: classes, validity, then original and counterfactual
// feature values in original units.
inline void write_records_csv(std::ostream& out, const std::vector<CounterfactualRecord>& records,
                              const data::FeatureSchema& schema) {
  out << "row,original_class,counterfactual_class,valid";
  for (const auto& c : schema.columns) out << ',' << data::csv_escape(c.name);
  for (const auto& c : schema.columns) out << ',' << data::csv_escape("cf_" + c.name);
  out << '\n';
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out << i << ',' << data::csv_escape(schema.classes.at(r.original_class)) << ','
        << data::csv_escape(schema.classes.at(r.counterfactual_class)) << ',' << (r.valid ? 1 : 0);
    for (const auto& cell : data::inverse_transform(r.original, schema)) out << ',' << data::format_cell(cell);
    for (const auto& cell : data::inverse_transform(r.counterfactual, schema)) out << ',' << data::format_cell(cell);
    out << '\n';
  }
}

}  // namespace vcnet::cf
