#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "causalft/causal.hpp"
#include "causalft/generators.hpp"
#include "causalft/metrics.hpp"
#include "causalft/models.hpp"
#include "causalft/retrain.hpp"

namespace causalft {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kOutputDirEnv = "CAUSALFT_OUTPUT_DIR";

enum class Selector { Causal, Correlation, None };
std::string_view to_string(Selector s);
Selector selector_from_string(std::string_view name);

struct NamedModel {
  std::string name;
  ModelConfig config;
};

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::filesystem::path schema;
  // empty means every sensitive feature declared by the schema
  std::vector<std::string> sensitive;
  std::vector<NamedModel> models{{"logistic", ModelConfig::logistic()}};
  std::vector<GeneratorSpec> generators{GeneratorSpec{}};
  Selector selector = Selector::Causal;
  std::size_t budget = 10000;
  std::size_t runs = 10;
  double k_percent = 100;
  std::size_t m = 100;
  std::size_t bootstrap_repeats = 20;
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "results";
  std::size_t workers = 1;
  std::map<std::string, GroupRule> group_rules;
  bool retrain = false;
  std::size_t retest_runs = 1;

  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
// Relative dataset/schema paths resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc,
                                             const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Seed for run `run` of the case identified by `key`.
std::uint64_t derive_seed(std::uint64_t base, std::string_view key, std::size_t run);

struct FeatureAnalysis {
  std::string sensitive;
  std::vector<std::string> direct;
  std::vector<CausalEffect> effects;
  std::optional<std::string> causal_feature;
  std::string correlation_feature;
};

struct RunAnalysis {
  CausalGraph graph;
  std::vector<FeatureAnalysis> features;
};

// Causal graph on a k% subsample of the training data plus, per sensitive
// feature, the direct non-sensitive features, their bootstrapped effects and
// the chosen feature.
RunAnalysis analyze_run(const Dataset& train, const std::vector<std::string>& sensitive,
                        const ExperimentConfig& config, std::uint64_t seed);

nlohmann::json to_json(const RunAnalysis& analysis);

struct RunRecord {
  FairnessReport fairness;
  PairLedger ledger;
  std::optional<std::string> causal_feature;
  bool fell_back = false;
  bool budget_reached = true;
  std::optional<std::string> error;
};

struct CaseResult {
  std::string dataset;
  std::string sensitive;
  std::string model;
  std::string generator;
  std::string mode;
  std::vector<RunRecord> runs;

  std::string key() const;
};

struct RetrainRecord {
  std::string dataset;
  std::string sensitive;
  std::string model;
  std::string generator;
  std::vector<RetrainResult> runs;
};

struct Timing {
  std::string label;
  double analysis_seconds = 0;
  double generation_seconds = 0;
};

struct ExperimentResults {
  ExperimentConfig config;
  std::vector<CaseResult> cases;
  std::vector<RetrainRecord> retrain;
  std::vector<Timing> timings;
};

ExperimentResults run_experiment(const ExperimentConfig& config);

// Deterministic report document; timings are kept out of it.
nlohmann::json build_report(const ExperimentResults& results);
nlohmann::json build_timings(const ExperimentResults& results);

// Writes report.json and report.csv (one row per case) into `dir`.
void emit_report(const nlohmann::json& report, const std::filesystem::path& dir);
std::string report_csv(const nlohmann::json& report);

// Compares matching cases of two reports metric by metric.
nlohmann::json compare_reports(const nlohmann::json& a, const nlohmann::json& b);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace causalft
