#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "causalft/data.hpp"
#include "causalft/generators.hpp"
#include "causalft/models.hpp"

namespace causalft {

enum class GroupKind { BinaryValue, Range };

// Two-way split on one feature. BinaryValue puts samples whose value is in
// `alpha_values` into group alpha; Range puts samples with lo <= v <= hi there.
struct GroupRule {
  std::string feature;
  GroupKind kind = GroupKind::BinaryValue;
  std::vector<Code> alpha_values;
  Code lo = 0;
  Code hi = 0;

  void validate() const;

  static GroupRule value_map(std::string feature, std::vector<Code> alpha_values);
  static GroupRule range(std::string feature, Code lo, Code hi);
};

// Two-valued features split on their lower code; other categorical features
// put the most frequent code in alpha; integer features use [lo, hi].
GroupRule default_group_rule(const Dataset& data, const std::string& feature,
                             std::pair<Code, Code> integer_range = {25, 60});

nlohmann::json to_json(const GroupRule& rule);
GroupRule group_rule_from_json(const nlohmann::json& doc);

struct GroupSplit {
  std::vector<std::size_t> alpha;
  std::vector<std::size_t> beta;
};

GroupSplit group_split(std::span<const Sample> samples, const Schema& schema, const GroupRule& rule);

double idi_ratio(const TestSuite& suite);

// |P(yhat=1 | alpha, y=1) - P(yhat=1 | beta, y=1)|
double eod(std::span<const Sample> samples, std::span<const int> labels, const Model& model,
           const Schema& schema, const GroupRule& rule);
// |P(yhat=1 | alpha) - P(yhat=1 | beta)|
double spd(std::span<const Sample> samples, const Model& model, const Schema& schema,
           const GroupRule& rule);

struct FairnessReport {
  double idi_ratio = 0;
  // empty when a group is missing from the suite
  std::optional<double> eod;
  std::optional<double> spd;
  std::size_t idi_count = 0;
  std::size_t sample_count = 0;
};

// Scores a suite; EOD uses each sample's inherited true label.
FairnessReport evaluate_fairness(const TestSuite& suite, const Model& model, const Schema& schema,
                                 const GroupRule& rule);

nlohmann::json to_json(const FairnessReport& report);

}  // namespace causalft
