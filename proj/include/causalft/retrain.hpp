#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "causalft/data.hpp"
#include "causalft/generators.hpp"
#include "causalft/metrics.hpp"
#include "causalft/models.hpp"

namespace causalft {

struct Corrections {
  std::vector<Sample> samples;
  std::vector<int> labels;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// Relabels the non-test member of each discriminatory pair with the test
// member's predicted label. When both members are test rows the one predicted
// positive anchors the pair; when neither is, both are emitted with the label
// of b (the partner found for a).
Corrections correct_pairs(const TestSuite& suite, const Model& model, const Dataset& test_data);

struct RetrainRequest {
  ModelConfig model_config;
  std::size_t sensitive = 0;
  std::size_t causal = 0;
  GeneratorSpec spec;
  GroupRule group_rule;
  std::size_t budget = 10000;
  std::size_t runs = 10;
  std::uint64_t seed = 0;
};

struct RetrainResult {
  Model retrained;
  std::vector<FairnessReport> before;
  std::vector<FairnessReport> after;
  QualityScores quality_before;
  QualityScores quality_after;
  std::size_t corrections = 0;
};

// Trains a fresh model on train_data plus the corrections, then re-runs the
// causal generator on the old and new models with the same run seeds.
RetrainResult retrain_and_retest(const RetrainRequest& request, const Model& before_model,
                                 const Dataset& train_data, const Corrections& corrections,
                                 const Dataset& test_data);

nlohmann::json to_json(const RetrainResult& result);

}  // namespace causalft
