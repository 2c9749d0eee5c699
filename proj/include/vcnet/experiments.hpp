#pragma once

// Experiment drivers: the benchmark protocol (split, train, generate, score),
// the joint vs post-hoc comparison and the synthetic latent-perturbation
// study, plus their configuration and on-disk artifacts.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcnet/counterfactual.hpp"
#include "vcnet/data.hpp"
#include "vcnet/error.hpp"
#include "vcnet/metrics.hpp"
#include "vcnet/model.hpp"
#include "vcnet/serialize.hpp"

namespace vcnet::exp {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* kSyntheticDataset = "synthetic";

struct ExperimentConfig {
  std::string name;         // dataset label used in reports
  std::string dataset;      // "synthetic" or a CSV path
  std::string schema_path;  // required for CSV datasets
  ArchConfig arch;
  TrainingConfig train;
  std::optional<PosthocConfig> posthoc;
  double eval_fraction = 0.25;
  std::uint64_t seed = 0;
  std::size_t synthetic_size = 10000;
  std::string output_dir;

  bool is_synthetic() const { return dataset == kSyntheticDataset; }

  // Propagates the experiment seed into every training stage.
  void set_seed(std::uint64_t s) {
    seed = s;
    train.seed = s;
    if (posthoc) {
      posthoc->predictor.seed = s;
      posthoc->cvae.seed = s;
    }
  }
};

namespace detail {

inline std::vector<std::size_t> dims(const json& j, const char* key) {
  return j.at(key).get<std::vector<std::size_t>>();
}

inline std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty() || p == kSyntheticDataset) return p;
  const fs::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace detail

// Config keys: dataset, schema_path?, name?, arch{shared_dims, encoder_dims,
// decoder_dims, predictor_dims, latent_dim?}, train{lambda1, lambda2, lambda3,
// lr, epochs, batch_size}, posthoc?{predictor{lr, epochs, batch_size},
// cvae{lambda1, lambda3, lr, epochs, batch_size}}, eval_fraction?, seed?,
// synthetic_size?. Relative paths resolve against `base_dir`.
inline ExperimentConfig config_from_json(const json& j, const fs::path& base_dir = {}) {
  ExperimentConfig c;
  try {
    c.dataset = detail::resolve(base_dir, j.at("dataset").get<std::string>());
    c.schema_path = detail::resolve(base_dir, j.value("schema_path", std::string{}));
    c.name = j.value("name", c.is_synthetic() ? std::string(kSyntheticDataset)
                                              : fs::path(c.dataset).stem().string());
    const auto& a = j.at("arch");
    c.arch.shared_dims = detail::dims(a, "shared_dims");
    c.arch.encoder_dims = detail::dims(a, "encoder_dims");
    c.arch.decoder_dims = detail::dims(a, "decoder_dims");
    c.arch.predictor_dims = detail::dims(a, "predictor_dims");
    if (a.contains("latent_dim") && a.at("latent_dim").get<std::size_t>() != c.arch.latent_dim()) {
      throw DataError("config: arch.latent_dim disagrees with the last encoder width");
    }
    const auto& t = j.at("train");
    c.train.lambda1 = t.at("lambda1").get<double>();
    c.train.lambda2 = t.at("lambda2").get<double>();
    c.train.lambda3 = t.at("lambda3").get<double>();
    c.train.learning_rate = t.at("lr").get<double>();
    c.train.epochs = t.at("epochs").get<std::size_t>();
    c.train.batch_size = t.at("batch_size").get<std::size_t>();
    if (j.contains("posthoc")) {
      const auto& p = j.at("posthoc");
      PosthocConfig pc;
      const auto& pp = p.at("predictor");
      pc.predictor.learning_rate = pp.at("lr").get<double>();
      pc.predictor.epochs = pp.at("epochs").get<std::size_t>();
      pc.predictor.batch_size = pp.at("batch_size").get<std::size_t>();
      const auto& pv = p.at("cvae");
      pc.cvae.lambda1 = pv.at("lambda1").get<double>();
      pc.cvae.lambda2 = 0.0;
      pc.cvae.lambda3 = pv.at("lambda3").get<double>();
      pc.cvae.learning_rate = pv.at("lr").get<double>();
      pc.cvae.epochs = pv.at("epochs").get<std::size_t>();
      pc.cvae.batch_size = pv.at("batch_size").get<std::size_t>();
      c.posthoc = pc;
    }
    c.eval_fraction = j.value("eval_fraction", 0.25);
    c.synthetic_size = j.value("synthetic_size", std::size_t{10000});
    c.set_seed(j.value("seed", std::uint64_t{0}));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed experiment config: ") + e.what());
  }
  c.train.check();
  if (c.posthoc) {
    c.posthoc->predictor.check();
    c.posthoc->cvae.check();
  }
  require(c.eval_fraction > 0.0 && c.eval_fraction < 1.0, "config: eval_fraction must be in (0,1)");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j, fs::path(path).parent_path());
}

// Referenced files must exist before any training starts.
inline void check_inputs(const ExperimentConfig& c) {
  if (c.is_synthetic()) return;
  if (!fs::exists(c.dataset)) throw DataError("dataset file '" + c.dataset + "' does not exist");
  if (c.schema_path.empty()) throw DataError("config: schema_path is required for CSV datasets");
  if (!fs::exists(c.schema_path)) throw DataError("schema file '" + c.schema_path + "' does not exist");
}

// ---------------------------------------------------------------------------
// Data preparation

struct PreparedData {
  data::PreprocessedDataset train;
  data::PreprocessedDataset eval;
  data::FeatureSchema schema;  // fitted on the training rows
  std::vector<std::string> warnings;
};

// Split first, then fit scaling on the training rows only.
inline PreparedData prepare_data(const ExperimentConfig& c) {
  check_inputs(c);
  PreparedData p;
  data::FeatureSchema declaration;
  data::RawTable table;
  if (c.is_synthetic()) {
    // Back to raw values so the scaling is refitted on the training rows.
    const auto all = data::synthetic_gaussian_3class(c.synthetic_size, c.seed);
    declaration = all.schema;
    declaration.fitted = false;
    for (std::size_t i = 0; i < all.size(); ++i) {
      table.rows.push_back(data::inverse_transform(all.examples[i], all.schema));
      table.labels.push_back(all.schema.classes[all.labels[i]]);
    }
  } else {
    declaration = data::load_schema(c.schema_path);
    table = data::load_csv(c.dataset, declaration);
  }
  if (table.size() == 0) throw DataError("dataset '" + c.dataset + "' has no rows");
  const auto idx = data::split_indices(table.size(), c.eval_fraction, c.seed);
  p.warnings = idx.warnings;
  p.schema = data::fit_schema(table, declaration, idx.train, &p.warnings);
  p.train = data::transform(table, p.schema, idx.train);
  if (!idx.test.empty()) {
    p.eval = data::transform(table, p.schema, idx.test);
  } else {
    p.eval.schema = p.schema;
    p.eval.one_hot_spans = p.schema.one_hot_spans();
  }
  p.warnings.insert(p.warnings.end(), p.eval.warnings.begin(), p.eval.warnings.end());
  return p;
}

// ---------------------------------------------------------------------------
// Artifacts

inline std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "epoch,total_loss,predictor_loss,cvae_loss,train_accuracy\n";
  for (const auto& e : log) {
    os << e.epoch << ',' << e.total_loss << ',' << e.predictor_loss << ',' << e.cvae_loss << ','
       << e.train_accuracy << '\n';
  }
  return os.str();
}

// Stored records: enough to recompute the report exactly.
inline json records_to_json(const std::vector<cf::CounterfactualRecord>& records,
                            const std::vector<std::size_t>& labels, const std::string& dataset,
                            const std::string& method, std::uint64_t seed) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(cf::record_to_json(r));
  return {{"dataset", dataset}, {"method", method}, {"seed", seed}, {"labels", labels}, {"records", arr}};
}

struct StoredRecords {
  std::string dataset;
  std::string method;
  std::uint64_t seed = 0;
  std::vector<std::size_t> labels;
  std::vector<cf::CounterfactualRecord> records;
};

inline StoredRecords records_from_json(const json& j) {
  StoredRecords s;
  try {
    s.dataset = j.at("dataset").get<std::string>();
    s.method = j.at("method").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.labels = j.at("labels").get<std::vector<std::size_t>>();
    for (const auto& r : j.at("records")) s.records.push_back(cf::record_from_json(r));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed records file: ") + e.what());
  }
  if (s.labels.size() != s.records.size()) throw DataError("records file: labels/records length mismatch");
  return s;
}

// Writes a set of files into a directory; if any write fails, every file
// written so far is removed.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::string dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content) { pending_.emplace_back(name, std::move(content)); }

  void commit() {
    if (dir_.empty()) return;
    std::vector<fs::path> written;
    try {
      fs::create_directories(dir_);
      for (const auto& [name, content] : pending_) {
        const auto path = fs::path(dir_) / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + path.string() + "'");
        written.push_back(path);
        out << content;
        if (!out) throw DataError("failed writing '" + path.string() + "'");
      }
    } catch (...) {
      std::error_code ec;
      for (const auto& p : written) fs::remove(p, ec);
      throw;
    }
  }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> pending_;
};

inline std::string records_csv(const std::vector<cf::CounterfactualRecord>& records,
                               const data::FeatureSchema& schema) {
  std::ostringstream os;
  cf::write_records_csv(os, records, schema);
  return os.str();
}

// ---------------------------------------------------------------------------
// Benchmarks

struct RunOutput {
  ModelParams model;
  std::vector<EpochLog> log;
  std::vector<cf::CounterfactualRecord> records;
  metrics::MetricsReport report;
};

inline std::vector<cf::CounterfactualRecord> generate_all(const ModelParams& m, const data::Matrix& rows) {
  std::vector<cf::CounterfactualRecord> out;
  out.reserve(rows.size());
  for (const auto& x : rows) out.push_back(cf::generate(m, x));
  return out;
}

inline RunOutput score(ModelParams model, std::vector<EpochLog> log, const PreparedData& d,
                       const ExperimentConfig& c, const std::string& method) {
  require(d.eval.size() > 0, "benchmark: evaluation sample is empty");
  RunOutput r;
  r.records = generate_all(model, d.eval.examples);
  r.report = metrics::evaluate(model, d.eval.examples, d.eval.labels, r.records, c.name, method, c.seed);
  r.model = std::move(model);
  r.log = std::move(log);
  return r;
}

inline void add_run_artifacts(ArtifactWriter& w, const RunOutput& r, const PreparedData& d,
                              const ExperimentConfig& c, const std::string& suffix) {
  w.add("model" + suffix + ".json", model_to_json(r.model, d.schema).dump(1) + "\n");
  w.add("counterfactuals" + suffix + ".csv", records_csv(r.records, d.schema));
  w.add("counterfactuals" + suffix + ".json",
        records_to_json(r.records, d.eval.labels, c.name, r.report.method, c.seed).dump() + "\n");
  w.add("training_log" + suffix + ".csv", training_log_csv(r.log));
}

inline constexpr const char* kJointMethod = "VCNet";
inline constexpr const char* kPosthocMethod = "Post-hoc VCNet";

// Split, joint training, one counterfactual per evaluation row, report.
// Writes model.json, counterfactuals.{csv,json}, report.json and
// training_log.csv when an output directory is configured.
inline RunOutput run_benchmark(const ExperimentConfig& c, PreparedData* prepared_out = nullptr) {
  auto d = prepare_data(c);
  auto trained = train_joint(d.train, c.arch, c.train);
  auto r = score(std::move(trained.params), std::move(trained.log), d, c, kJointMethod);
  ArtifactWriter w(c.output_dir);
  add_run_artifacts(w, r, d, c, "");
  w.add("report.json", metrics::report_to_json(r.report).dump(2) + "\n");
  w.commit();
  if (prepared_out) *prepared_out = std::move(d);
  return r;
}

struct PairedOutput {
  RunOutput joint;
  RunOutput posthoc;
  ModelParams posthoc_predictor_stage;
};

inline json paired_report_json(const PairedOutput& p) {
  return {{"joint", metrics::report_to_json(p.joint.report)},
          {"posthoc", metrics::report_to_json(p.posthoc.report)}};
}

// Joint and post-hoc models trained on one split with one seed and scored
// by the same protocol.
inline PairedOutput run_posthoc_benchmark(const ExperimentConfig& c, PreparedData* prepared_out = nullptr) {
  require(c.posthoc.has_value(), "config has no posthoc section");
  auto d = prepare_data(c);
  PairedOutput out;
  auto joint = train_joint(d.train, c.arch, c.train);
  out.joint = score(std::move(joint.params), std::move(joint.log), d, c, kJointMethod);
  auto ph = train_posthoc(d.train, c.arch, *c.posthoc);
  auto log = ph.predictor_log;
  log.insert(log.end(), ph.cvae_log.begin(), ph.cvae_log.end());
  out.posthoc_predictor_stage = std::move(ph.predictor_stage);
  out.posthoc = score(std::move(ph.model), std::move(log), d, c, kPosthocMethod);
  ArtifactWriter w(c.output_dir);
  add_run_artifacts(w, out.joint, d, c, "");
  add_run_artifacts(w, out.posthoc, d, c, "_posthoc");
  w.add("report.json", paired_report_json(out).dump(2) + "\n");
  w.commit();
  if (prepared_out) *prepared_out = std::move(d);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic latent-perturbation study

struct PerturbationSpec {
  std::vector<double> norms = {0.0, 0.5, 1.0, 2.0, 3.0, 5.0};
  std::size_t repeats = 10;
  std::uint64_t seed = 0;

  void check() const {
    require(!norms.empty() && norms.front() == 0.0, "perturbation: norms must start at 0");
    for (std::size_t i = 1; i < norms.size(); ++i) {
      require(norms[i] > norms[i - 1], "perturbation: norms must be strictly increasing");
    }
    require(repeats >= 1, "perturbation: repeats must be >= 1");
  }
};

// Uniform direction on the sphere of radius `norm`.
inline std::vector<double> sphere_sample(std::size_t dim, double norm, Rng& rng) {
  std::vector<double> v(dim, 0.0);
  if (norm == 0.0) return v;
  double len = 0.0;
  while (len == 0.0) {
    v = rng.normal_vector(dim);
    len = 0.0;
    for (double x : v) len += x * x;
    len = std::sqrt(len);
  }
  for (auto& x : v) x *= norm / len;
  return v;
}

struct CurvePoint {
  std::size_t origin_class = 0;
  std::size_t target_class = 0;
  double norm = 0.0;
  double mean_distance = 0.0;  // mean over examples of the per-example mean over repeats
  double mean_variance = 0.0;  // mean over examples of the per-example variance over repeats
  std::size_t examples = 0;
};

struct GeneratedPoint {
  std::size_t origin_class = 0;
  std::size_t target_class = 0;
  double x0 = 0.0;  // first two features, original units
  double x1 = 0.0;
  bool valid = false;
};

struct SynthStudyOutput {
  RunOutput run;
  std::vector<CurvePoint> curves;
  std::vector<GeneratedPoint> points;
  std::size_t skipped = 0;  // (x, c') pairs where c' is already the predicted class
};

inline std::string curves_csv(const std::vector<CurvePoint>& curves) {
  std::ostringstream os;
  os << std::setprecision(17) << "origin_class,target_class,delta_norm,mean_distance,mean_variance,examples\n";
  for (const auto& c : curves) {
    os << c.origin_class << ',' << c.target_class << ',' << c.norm << ',' << c.mean_distance << ','
       << c.mean_variance << ',' << c.examples << '\n';
  }
  return os.str();
}

inline std::string points_csv(const std::vector<GeneratedPoint>& points) {
  std::ostringstream os;
  os << std::setprecision(17) << "origin_class,target_class,x0,x1,valid\n";
  for (const auto& p : points) {
    os << p.origin_class << ',' << p.target_class << ',' << p.x0 << ',' << p.x1 << ',' << (p.valid ? 1 : 0) << '\n';
  }
  return os.str();
}

// Trains on the synthetic data, then for every evaluation example x of true
// class c and every other class c' decodes (a) the latent mean under c' and
// (b) the latent mean plus random offsets of each configured norm. Distances
// are Euclidean in the encoded space.
inline SynthStudyOutput run_synth_study(const PerturbationSpec& spec, const ExperimentConfig& c) {
  spec.check();
  require(c.is_synthetic(), "synth study requires the synthetic dataset");
  auto d = prepare_data(c);
  auto trained = train_joint(d.train, c.arch, c.train);
  SynthStudyOutput out;
  out.run = score(std::move(trained.params), std::move(trained.log), d, c, kJointMethod);
  const auto& m = out.run.model;
  const std::size_t classes = m.class_count;

  // accumulators[c][c'][k]
  std::vector<std::vector<std::vector<CurvePoint>>> acc(
      classes, std::vector<std::vector<CurvePoint>>(classes, std::vector<CurvePoint>(spec.norms.size())));
  Rng rng(spec.seed);
  const auto& col0 = d.schema.columns[0];
  const auto& col1 = d.schema.columns[1];
  for (std::size_t i = 0; i < d.eval.size(); ++i) {
    const auto& x = d.eval.examples[i];
    const std::size_t origin = d.eval.labels[i];
    const std::size_t predicted = predicted_class(m, x);
    for (std::size_t target = 0; target < classes; ++target) {
      if (target == origin) continue;
      if (target == predicted) {
        ++out.skipped;
        continue;
      }
      const auto rec = cf::generate(m, x, target);
      out.points.push_back({origin, target, col0.min + rec.counterfactual[0] * (col0.max - col0.min),
                            col1.min + rec.counterfactual[1] * (col1.max - col1.min), rec.valid});
      for (std::size_t k = 0; k < spec.norms.size(); ++k) {
        std::vector<double> dist;
        for (std::size_t r = 0; r < spec.repeats; ++r) {
          const auto delta = sphere_sample(m.latent_dim, spec.norms[k], rng);
          dist.push_back(metrics::euclidean(x, cf::perturbed_generate(m, x, delta, target).counterfactual));
        }
        const auto s = metrics::aggregate(dist);
        auto& a = acc[origin][target][k];
        a.mean_distance += s.mean;
        a.mean_variance += s.std * s.std;
        ++a.examples;
      }
    }
  }
  for (std::size_t o = 0; o < classes; ++o) {
    for (std::size_t t = 0; t < classes; ++t) {
      if (o == t) continue;
      for (std::size_t k = 0; k < spec.norms.size(); ++k) {
        auto a = acc[o][t][k];
        a.origin_class = o;
        a.target_class = t;
        a.norm = spec.norms[k];
        if (a.examples > 0) {
          a.mean_distance /= static_cast<double>(a.examples);
          a.mean_variance /= static_cast<double>(a.examples);
        }
        out.curves.push_back(a);
      }
    }
  }

  ArtifactWriter w(c.output_dir);
  add_run_artifacts(w, out.run, d, c, "");
  w.add("report.json", metrics::report_to_json(out.run.report).dump(2) + "\n");
  w.add("synth_curves.csv", curves_csv(out.curves));
  w.add("synth_points.csv", points_csv(out.points));
  w.commit();
  return out;
}

}  // namespace vcnet::exp
