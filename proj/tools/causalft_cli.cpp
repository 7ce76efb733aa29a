#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "causalft/error.hpp"
#include "causalft/experiment.hpp"

namespace fs = std::filesystem;
using namespace causalft;
using nlohmann::json;

namespace {

// Flags that override the config document. Unset optionals keep the file's value.
struct Overrides {
  std::string config;
  std::string dataset, schema;
  std::vector<std::string> sensitive, models, generators;
  std::string selector;
  std::optional<std::size_t> budget, runs, m, bootstrap_repeats, workers, retest_runs;
  std::optional<double> k_percent, train_fraction;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
};

void add_config_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config, "Experiment config (JSON)");
  cmd->add_option("--dataset", o.dataset, "CSV dataset");
  cmd->add_option("--schema", o.schema, "Schema JSON for the dataset");
  cmd->add_option("--sensitive", o.sensitive, "Sensitive feature(s) to test");
  cmd->add_option("--model", o.models, "Model preset(s): logistic, dnn5, dnn6");
  cmd->add_option("--generator", o.generators, "Generator(s): random, sg_lite, adf_lite");
  cmd->add_option("--selector", o.selector, "causal, correlation or none")
      ->check(CLI::IsMember({"causal", "correlation", "none"}));
  cmd->add_option("--budget", o.budget, "Generation budget per run");
  cmd->add_option("--runs", o.runs, "Bootstrap runs");
  cmd->add_option("--k-percent", o.k_percent, "Share of training rows used for causal discovery");
  cmd->add_option("--m", o.m, "Rows per causal-effect estimate");
  cmd->add_option("--bootstrap-repeats", o.bootstrap_repeats, "Repeats per causal-effect estimate");
  cmd->add_option("--train-fraction", o.train_fraction, "Training share of each split");
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("-o,--output-dir", o.output_dir, "Output directory");
  cmd->add_option("--workers", o.workers, "Parallel runs");
  cmd->add_option("--retest-runs", o.retest_runs, "Re-test runs after retraining");
}

ExperimentConfig resolve_config(const Overrides& o) {
  ExperimentConfig c;
  if (!o.config.empty()) {
    c = load_experiment_config(o.config);
  }
  if (!o.dataset.empty()) c.dataset = o.dataset;
  if (!o.schema.empty()) c.schema = o.schema;
  if (!o.sensitive.empty()) c.sensitive = o.sensitive;
  if (!o.models.empty()) {
    c.models.clear();
    for (const auto& name : o.models) {
      c.models.push_back({name, model_config_from_json(json{{"preset", name}})});
    }
  }
  if (!o.generators.empty()) {
    c.generators.clear();
    for (const auto& name : o.generators) c.generators.push_back(generator_spec_from_json(json(name)));
  }
  if (!o.selector.empty()) c.selector = selector_from_string(o.selector);
  if (o.budget) c.budget = *o.budget;
  if (o.runs) c.runs = *o.runs;
  if (o.k_percent) c.k_percent = *o.k_percent;
  if (o.m) c.m = *o.m;
  if (o.bootstrap_repeats) c.bootstrap_repeats = *o.bootstrap_repeats;
  if (o.train_fraction) c.train_fraction = *o.train_fraction;
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.retest_runs) c.retest_runs = *o.retest_runs;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) c.output_dir = env;
  if (!o.output_dir.empty()) c.output_dir = o.output_dir;
  c.validate();
  return c;
}

int cmd_analyze(const ExperimentConfig& config) {
  const Schema schema = load_schema(config.schema);
  const Dataset data = load_csv(config.dataset, schema);
  const auto sensitive = config.sensitive.empty() ? schema.sensitive_features : config.sensitive;
  const std::string name = config.dataset.stem().string();
  json runs = json::array();
  for (std::size_t r = 0; r < config.runs; ++r) {
    const auto split = split_train_test(data, config.train_fraction, derive_seed(config.seed, name + "/split", r));
    const auto analysis = analyze_run(split.train, sensitive, config, derive_seed(config.seed, name + "/analysis", r));
    for (const auto& f : analysis.features) {
      spdlog::info("run {}: {} -> {}", r, f.sensitive, f.causal_feature.value_or("(no direct feature)"));
    }
    json doc = to_json(analysis);
    doc["run"] = r;
    runs.push_back(doc);
  }
  const fs::path out = config.output_dir / "analysis.json";
  write_json({{"schema_version", kReportSchemaVersion}, {"config", to_json(config)}, {"runs", runs}}, out);
  std::cout << out.string() << '\n';
  return 0;
}

int cmd_test(ExperimentConfig config, bool retrain) {
  config.retrain = retrain;
  const auto results = run_experiment(config);
  const json report = build_report(results);
  emit_report(report, config.output_dir);
  write_json(build_timings(results), config.output_dir / "timings.json");
  std::size_t failures = 0;
  for (const auto& c : results.cases) {
    for (const auto& r : c.runs) failures += r.error.has_value();
  }
  std::cout << (config.output_dir / "report.json").string() << '\n';
  if (failures) {
    spdlog::error("{} run(s) failed; see the errors field of the report", failures);
    return 1;
  }
  return 0;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out) {
  const json doc = compare_reports(read_json(a), read_json(b));
  if (out.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    write_json(doc, out);
  }
  return 0;
}

int cmd_report(const std::string& input, const std::string& dir) {
  const json report = read_json(input);
  if (report.value("schema_version", 0) != kReportSchemaVersion) {
    throw Error(ErrorCode::ParseError, "unsupported report schema version in " + input);
  }
  emit_report(report, dir.empty() ? fs::path(input).parent_path() : fs::path(dir));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causality-guided fairness testing for tabular classifiers"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  Overrides analyze_opts, test_opts, retrain_opts;
  auto* analyze = app.add_subcommand("analyze", "Causal graph, effects and chosen feature per run");
  add_config_flags(analyze, analyze_opts);
  auto* test = app.add_subcommand("test", "Generate test suites and compute fairness metrics");
  add_config_flags(test, test_opts);
  auto* retrain = app.add_subcommand("retrain", "Test, retrain on corrected pairs and re-test");
  add_config_flags(retrain, retrain_opts);

  std::string cmp_a, cmp_b, cmp_out;
  auto* compare = app.add_subcommand("compare", "Statistical comparison of two reports");
  compare->add_option("first", cmp_a, "report.json")->required()->check(CLI::ExistingFile);
  compare->add_option("second", cmp_b, "report.json")->required()->check(CLI::ExistingFile);
  compare->add_option("-o,--output", cmp_out, "Write the comparison here instead of stdout");

  std::string rep_in, rep_dir;
  auto* report = app.add_subcommand("report", "Re-emit report.json and report.csv from a report");
  report->add_option("input", rep_in, "report.json")->required()->check(CLI::ExistingFile);
  report->add_option("-o,--output-dir", rep_dir, "Target directory (default: alongside the input)");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*analyze) return cmd_analyze(resolve_config(analyze_opts));
    if (*test) return cmd_test(resolve_config(test_opts), false);
    if (*retrain) return cmd_test(resolve_config(retrain_opts), true);
    if (*compare) return cmd_compare(cmp_a, cmp_b, cmp_out);
    if (*report) return cmd_report(rep_in, rep_dir);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.code() == ErrorCode::ConfigInvalid ? 2 : 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
