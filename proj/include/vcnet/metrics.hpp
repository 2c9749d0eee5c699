#pragma once

// Counterfactual quality metrics (validity, proximity, prediction gain,
// proximity score) and accuracy, aggregated as mean and population std.

#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcnet/counterfactual.hpp"
#include "vcnet/data.hpp"
#include "vcnet/error.hpp"
#include "vcnet/model.hpp"
#include "vcnet/rng.hpp"

namespace vcnet::metrics {

using json = nlohmann::json;
using Matrix = data::Matrix;

// [f(x')]_{y'} - [f(x)]_{y'} with y' the class predicted for x'.
inline double prediction_gain(const ModelParams& m, std::span<const double> x, std::span<const double> x_prime) {
  const auto p_prime = predict_proba(m, x_prime);
  const auto p = predict_proba(m, x);
  const std::size_t y = nn::argmax(p_prime);
  return p_prime[y] - p[y];
}

inline int validity(std::size_t counterfactual_class, std::size_t original_class) {
  return counterfactual_class != original_class ? 1 : 0;
}

// L1 distance in encoded space.
inline double proximity(std::span<const double> x, std::span<const double> x_prime) {
  require(x.size() == x_prime.size(), "proximity: length mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d += std::abs(x_prime[i] - x[i]);
  return d;
}

inline double euclidean(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "euclidean: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline constexpr std::size_t kExactPairwiseLimit = 2000;

// Mean Euclidean distance over all unordered pairs of `rows`. Above
// `exact_limit` rows the mean is taken over a seeded subsample of that size.
inline double mean_pairwise_distance(const Matrix& rows, std::size_t exact_limit = kExactPairwiseLimit,
                                     std::uint64_t seed = 0) {
  require(rows.size() >= 2, "mean_pairwise_distance: need at least two rows");
  std::vector<std::size_t> idx(rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (rows.size() > exact_limit) {
    Rng rng(seed);
    rng.shuffle(idx);
    idx.resize(exact_limit);
  }
  double total = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) total += euclidean(rows[idx[a]], rows[idx[b]]);
  }
  const double pairs = static_cast<double>(idx.size()) * static_cast<double>(idx.size() - 1) / 2.0;
  return total / pairs;
}

// Distance from x' to its nearest member of H over the mean pairwise distance
// within H. Undefined (nullopt) for |H| < 2 or a zero denominator.
inline std::optional<double> proximity_score(std::span<const double> x_prime, const Matrix& same_class,
                                             std::optional<double> pairwise_mean = {}) {
  if (same_class.size() < 2) return std::nullopt;
  double nearest = euclidean(x_prime, same_class.front());
  for (const auto& h : same_class) nearest = std::min(nearest, euclidean(x_prime, h));
  const double denom = pairwise_mean ? *pairwise_mean : mean_pairwise_distance(same_class);
  if (!(denom > 0.0)) return std::nullopt;
  return nearest / denom;
}

inline double accuracy(const ModelParams& m, const Matrix& examples, const std::vector<std::size_t>& labels) {
  require(!examples.empty(), "accuracy: empty test set");
  require(examples.size() == labels.size(), "accuracy: examples/labels length mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (predicted_class(m, examples[i]) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;

  bool operator==(const Summary&) const = default;
};

// Arithmetic mean and population standard deviation (divisor n).
inline Summary aggregate(std::span<const double> values) {
  require(!values.empty(), "aggregate: empty input");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / n)};
}

struct MetricsReport {
  std::string dataset;
  std::string method;
  std::size_t sample_size = 0;
  Summary validity;
  Summary proximity;
  Summary prediction_gain;
  Summary proximity_score;
  double accuracy = 0.0;
  std::size_t proximity_score_excluded = 0;
  std::string note =
      "all generated counterfactuals, valid or not, enter proximity, gain and proximity-score "
      "aggregates; distances are measured in the encoded [0,1] feature space";

  bool operator==(const MetricsReport&) const = default;
};

inline json summary_to_json(const Summary& s) { return {{"mean", s.mean}, {"std", s.std}}; }
// NaN (no defined values) is written as null.
inline Summary summary_from_json(const json& j) {
  auto num = [](const json& v) { return v.is_null() ? std::nan("") : v.get<double>(); };
  return {num(j.at("mean")), num(j.at("std"))};
}

inline json report_to_json(const MetricsReport& r) {
  return {{"dataset", r.dataset},
          {"method", r.method},
          {"sample_size", r.sample_size},
          {"validity", summary_to_json(r.validity)},
          {"proximity", summary_to_json(r.proximity)},
          {"prediction_gain", summary_to_json(r.prediction_gain)},
          {"proximity_score", summary_to_json(r.proximity_score)},
          {"accuracy", r.accuracy},
          {"proximity_score_excluded", r.proximity_score_excluded},
          {"note", r.note}};
}

inline MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.sample_size = j.at("sample_size").get<std::size_t>();
  r.validity = summary_from_json(j.at("validity"));
  r.proximity = summary_from_json(j.at("proximity"));
  r.prediction_gain = summary_from_json(j.at("prediction_gain"));
  r.proximity_score = summary_from_json(j.at("proximity_score"));
  r.accuracy = j.at("accuracy").get<double>();
  r.proximity_score_excluded = j.value("proximity_score_excluded", std::size_t{0});
  r.note = j.value("note", std::string{});
  return r;
}

// Scores `records` (one per evaluation row, same order) against the
// evaluation sample. H for a counterfactual of class c is every evaluation row
// the model predicts as c.
inline MetricsReport evaluate(const ModelParams& m, const Matrix& eval_examples,
                              const std::vector<std::size_t>& eval_labels,
                              const std::vector<cf::CounterfactualRecord>& records, std::string dataset,
                              std::string method, std::uint64_t seed = 0) {
  require(!records.empty(), "evaluate: no counterfactual records");
  require(records.size() == eval_examples.size(), "evaluate: one record per evaluation row expected");

  std::map<std::size_t, Matrix> by_class;
  for (const auto& x : eval_examples) by_class[predicted_class(m, x)].push_back(x);
  std::map<std::size_t, double> pairwise;
  for (const auto& [cls, rows] : by_class) {
    if (rows.size() >= 2) pairwise[cls] = mean_pairwise_distance(rows, kExactPairwiseLimit, seed + cls);
  }

  std::vector<double> val, prox, gain, score;
  MetricsReport r;
  r.dataset = std::move(dataset);
  r.method = std::move(method);
  r.sample_size = records.size();
  for (const auto& rec : records) {
    val.push_back(validity(rec.counterfactual_class, rec.original_class));
    prox.push_back(proximity(rec.original, rec.counterfactual));
    gain.push_back(prediction_gain(m, rec.original, rec.counterfactual));
    const auto it = by_class.find(rec.counterfactual_class);
    std::optional<double> s;
    if (it != by_class.end() && pairwise.count(rec.counterfactual_class)) {
      s = proximity_score(rec.counterfactual, it->second, pairwise.at(rec.counterfactual_class));
    }
    if (s) {
      score.push_back(*s);
    } else {
      ++r.proximity_score_excluded;
    }
  }
  r.validity = aggregate(val);
  r.proximity = aggregate(prox);
  r.prediction_gain = aggregate(gain);
  r.proximity_score = score.empty() ? Summary{std::nan(""), std::nan("")} : aggregate(score);
  r.accuracy = accuracy(m, eval_examples, eval_labels);
  return r;
}

// Aligned text table, one column per report, rows in the order Validity,
// Proximity, Prediction gain, Proximity score, Accuracy.
inline std::string render_table(const std::vector<MetricsReport>& reports) {
  auto fmt = [](const Summary& s) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << s.mean << " +/- " << s.std;
    return os.str();
  };
  auto fmt1 = [](double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
  };
  std::vector<std::vector<std::string>> rows = {{"Metric"}, {"Validity"}, {"Proximity"},
                                                {"Prediction gain"}, {"Proximity score"}, {"Accuracy"}};
  for (const auto& r : reports) {
    rows[0].push_back(r.method + " (" + r.dataset + ")");
    rows[1].push_back(fmt1(r.validity.mean));
    rows[2].push_back(fmt(r.proximity));
    rows[3].push_back(fmt(r.prediction_gain));
    rows[4].push_back(fmt(r.proximity_score));
    rows[5].push_back(fmt1(r.accuracy));
  }
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      os << std::left << std::setw(static_cast<int>(width[c])) << rows[r][c];
      if (c + 1 < rows[r].size()) os << "  ";
    }
    os << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      os << std::string(total - 2, '-') << '\n';
    }
  }
  if (!reports.empty() && reports.front().proximity_score_excluded > 0) {
    os << "(" << reports.front().proximity_score_excluded << " counterfactual(s) excluded from proximity score)\n";
  }
  return os.str();
}

}  // namespace vcnet::metrics
