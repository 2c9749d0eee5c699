// vcnet: train joint or post-hoc models, explain rows with counterfactuals,
// re-score stored counterfactuals, run the synthetic study and print reports.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vcnet/counterfactual.hpp"
#include "vcnet/data.hpp"
#include "vcnet/experiments.hpp"
#include "vcnet/metrics.hpp"
#include "vcnet/serialize.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vcnet;

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

exp::ExperimentConfig experiment_config(const GlobalOptions& g, const std::string& default_out) {
  if (g.config.empty()) throw DataError("--config is required");
  auto c = exp::load_config(g.config);
  if (g.seed) c.set_seed(*g.seed);
  c.output_dir = g.out.empty() ? default_out : g.out;
  return c;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_train(const GlobalOptions& g) {
  const auto c = experiment_config(g, "run");
  exp::PreparedData d;
  const auto r = exp::run_benchmark(c, &d);
  print_warnings(d.warnings);
  std::cout << metrics::render_table({r.report});
  std::cout << "artifacts written to " << c.output_dir << '\n';
  return 0;
}

int cmd_posthoc(const GlobalOptions& g) {
  const auto c = experiment_config(g, "run_posthoc");
  exp::PreparedData d;
  const auto r = exp::run_posthoc_benchmark(c, &d);
  print_warnings(d.warnings);
  std::cout << metrics::render_table({r.joint.report, r.posthoc.report});
  std::cout << "artifacts written to " << c.output_dir << '\n';
  return 0;
}

int cmd_explain(const GlobalOptions& g, const std::string& model_path, const std::string& input) {
  const auto stored = load_model(model_path);
  const auto table = data::load_csv(input, stored.schema, /*label_optional=*/true);
  std::vector<cf::CounterfactualRecord> records;
  std::size_t clamped = 0;
  for (const auto& row : table.rows) {
    records.push_back(cf::generate(stored.params, data::transform_row(stored.schema, row, &clamped)));
  }
  if (clamped > 0) {
    std::cerr << "warning: " << clamped << " value(s) outside the training range were clamped\n";
  }
  if (g.out.empty()) {
    cf::write_records_csv(std::cout, records, stored.schema);
  } else {
    exp::ArtifactWriter w(g.out);
    w.add("counterfactuals.csv", exp::records_csv(records, stored.schema));
    w.commit();
    std::cout << records.size() << " counterfactual(s) written to "
              << (fs::path(g.out) / "counterfactuals.csv").string() << '\n';
  }
  return 0;
}

int cmd_evaluate(const GlobalOptions& g, const std::string& model_path, const std::string& records_path) {
  const auto stored = load_model(model_path);
  const auto recs = exp::records_from_json(read_json(records_path));
  data::Matrix originals;
  for (const auto& r : recs.records) originals.push_back(r.original);
  const auto report =
      metrics::evaluate(stored.params, originals, recs.labels, recs.records, recs.dataset, recs.method, recs.seed);
  const std::string text = metrics::report_to_json(report).dump(2) + "\n";
  if (g.out.empty()) {
    std::cout << text;
  } else {
    exp::ArtifactWriter w(g.out);
    w.add("report.json", text);
    w.commit();
    std::cout << metrics::render_table({report});
  }
  return 0;
}

int cmd_synth(const GlobalOptions& g, const std::vector<double>& norms, std::size_t repeats) {
  const auto c = experiment_config(g, "run_synth");
  exp::PerturbationSpec spec;
  if (!norms.empty()) spec.norms = norms;
  spec.repeats = repeats;
  spec.seed = c.seed;
  const auto out = exp::run_synth_study(spec, c);
  std::cout << metrics::render_table({out.run.report});
  std::cout << "origin  target  |delta|  mean distance\n";
  for (const auto& p : out.curves) {
    std::cout << std::setw(6) << p.origin_class << "  " << std::setw(6) << p.target_class << "  "
              << std::setw(7) << p.norm << "  " << p.mean_distance << '\n';
  }
  std::cout << "artifacts written to " << c.output_dir << '\n';
  return 0;
}

int cmd_report(const std::string& path) {
  const auto j = read_json(path);
  std::vector<metrics::MetricsReport> reports;
  if (j.contains("joint")) {
    reports.push_back(metrics::report_from_json(j.at("joint")));
    reports.push_back(metrics::report_from_json(j.at("posthoc")));
  } else {
    reports.push_back(metrics::report_from_json(j));
  }
  std::cout << metrics::render_table(reports);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual explanations with a jointly trained predictor and conditional VAE"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config, "experiment config (JSON)");
  app.add_option("--seed", g.seed, "override the config seed");
  app.add_option("--out", g.out, "output directory");

  auto* train = app.add_subcommand("train", "joint training + benchmark report")->fallthrough();
  auto* posthoc = app.add_subcommand("posthoc-train", "joint vs post-hoc comparison")->fallthrough();

  std::string model_path, input_path, records_path = "counterfactuals.json";
  auto* explain = app.add_subcommand("explain", "counterfactuals for the rows of a CSV file")->fallthrough();
  explain->add_option("--model", model_path, "model file")->required();
  explain->add_option("--input", input_path, "CSV rows in original units")->required();

  auto* evaluate = app.add_subcommand("evaluate", "recompute a report from stored counterfactuals")->fallthrough();
  evaluate->add_option("--model", model_path, "model file")->required();
  evaluate->add_option("--records", records_path, "counterfactuals.json from a training run")->required();

  std::vector<double> norms;
  std::size_t repeats = 10;
  auto* synth = app.add_subcommand("synth", "synthetic latent-perturbation study")->fallthrough();
  synth->add_option("--norms", norms, "perturbation norms, starting at 0");
  synth->add_option("--repeats", repeats, "random offsets per norm");

  std::string report_path;
  auto* report = app.add_subcommand("report", "print a report.json as a table");
  report->add_option("path", report_path, "report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) return cmd_train(g);
    if (*posthoc) return cmd_posthoc(g);
    if (*explain) return cmd_explain(g, model_path, input_path);
    if (*evaluate) return cmd_evaluate(g, model_path, records_path);
    if (*synth) return cmd_synth(g, norms, repeats);
    if (*report) return cmd_report(report_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
