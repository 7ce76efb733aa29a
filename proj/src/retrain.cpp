#include "causalft/retrain.hpp"

#include <spdlog/spdlog.h>

#include "causalft/error.hpp"
#include "causalft/seeds.hpp"

namespace causalft {

namespace {

// An empty re-test suite scores as an empty report instead of failing.
FairnessReport score(const TestSuite& suite, const Model& model, const Schema& schema, const GroupRule& rule) {
  if (suite.unique_samples.empty()) return FairnessReport{};
  return evaluate_fairness(suite, model, schema, rule);
}

}  // namespace

Corrections correct_pairs(const TestSuite& suite, const Model& model, const Dataset& test_data) {
  SampleSet test_rows;
  for (std::size_t i = 0; i < test_data.n_rows(); ++i) test_rows.insert(test_data.sample(i));

  Corrections out;
  SampleSet emitted;
  auto emit = [&](const Sample& s, int label) {
    if (emitted.insert(s).second) {
      out.samples.push_back(s);
      out.labels.push_back(label);
    }
  };
  for (const auto& p : suite.idi_pairs) {
    const bool a_test = test_rows.count(p.a) > 0;
    const bool b_test = test_rows.count(p.b) > 0;
    if (a_test && b_test) {
      const bool a_pos = model.label(p.a) == 1;
      emit(a_pos ? p.b : p.a, 1);
    } else if (a_test) {
      emit(p.b, model.label(p.a));
    } else {
      // b is the partner found for a; both are synthetic
      const int y = model.label(p.b);
      emit(p.a, y);
      emit(p.b, y);
    }
  }
  return out;
}

RetrainResult retrain_and_retest(const RetrainRequest& request, const Model& before_model,
                                 const Dataset& train_data, const Corrections& corrections,
                                 const Dataset& test_data) {
  if (request.runs == 0) throw Error(ErrorCode::InvalidArgument, "retrain needs at least one run");
  if (corrections.empty()) spdlog::warn("retraining without corrections");

  RetrainResult result;
  result.corrections = corrections.size();
  const Dataset augmented = train_data.with_rows(corrections.samples, corrections.labels);
  ModelConfig config = request.model_config;
  config.seed = mix_seed(request.seed, 0xffff);
  result.retrained = train(augmented, config);
  result.quality_before = evaluate_quality(before_model, test_data);
  result.quality_after = evaluate_quality(result.retrained, test_data);

  for (std::size_t r = 0; r < request.runs; ++r) {
    const std::uint64_t seed = mix_seed(request.seed, r);
    const auto before = run_causalft(request.spec, before_model, test_data, request.sensitive,
                                     request.causal, request.budget, seed);
    const auto after = run_causalft(request.spec, result.retrained, test_data, request.sensitive,
                                    request.causal, request.budget, seed);
    result.before.push_back(score(before, before_model, test_data.schema(), request.group_rule));
    result.after.push_back(score(after, result.retrained, test_data.schema(), request.group_rule));
  }
  return result;
}

nlohmann::json to_json(const RetrainResult& result) {
  auto quality = [](const QualityScores& q) {
    return nlohmann::json{{"accuracy", q.accuracy}, {"f1", q.f1}, {"auc", q.auc}};
  };
  nlohmann::json before = nlohmann::json::array();
  nlohmann::json after = nlohmann::json::array();
  for (const auto& r : result.before) before.push_back(to_json(r));
  for (const auto& r : result.after) after.push_back(to_json(r));
  return {{"corrections", result.corrections},
          {"before", before},
          {"after", after},
          {"quality_before", quality(result.quality_before)},
          {"quality_after", quality(result.quality_after)},
          {"quality_delta",
           {{"accuracy", result.quality_after.accuracy - result.quality_before.accuracy},
            {"f1", result.quality_after.f1 - result.quality_before.f1},
            {"auc", result.quality_after.auc - result.quality_before.auc}}}};
}

}  // namespace causalft
