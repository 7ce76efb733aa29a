#include "causalft/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "causalft/error.hpp"

namespace causalft {

void GroupRule::validate() const {
  if (feature.empty()) throw Error(ErrorCode::InvalidArgument, "group rule without a feature");
  if (kind == GroupKind::BinaryValue && alpha_values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "binary group rule needs at least one alpha value");
  }
  if (kind == GroupKind::Range && lo > hi) {
    throw Error(ErrorCode::InvalidArgument, "group range with lo > hi");
  }
}

GroupRule GroupRule::value_map(std::string feature, std::vector<Code> alpha_values) {
  GroupRule r;
  r.feature = std::move(feature);
  r.kind = GroupKind::BinaryValue;
  r.alpha_values = std::move(alpha_values);
  std::sort(r.alpha_values.begin(), r.alpha_values.end());
  r.validate();
  return r;
}

GroupRule GroupRule::range(std::string feature, Code lo, Code hi) {
  GroupRule r;
  r.feature = std::move(feature);
  r.kind = GroupKind::Range;
  r.lo = lo;
  r.hi = hi;
  r.validate();
  return r;
}

GroupRule default_group_rule(const Dataset& data, const std::string& feature,
                             std::pair<Code, Code> integer_range) {
  const std::size_t j = data.schema().require_index(feature);
  const auto& domain = data.domain(j);
  if (domain.size() == 2) return GroupRule::value_map(feature, {domain.at(0)});
  if (data.schema().kinds.at(j) == FeatureKind::Integer) {
    return GroupRule::range(feature, integer_range.first, integer_range.second);
  }
  std::map<Code, std::size_t> counts;
  for (std::size_t i = 0; i < data.n_rows(); ++i) ++counts[data.at(i, j)];
  Code majority = domain.at(0);
  std::size_t best = 0;
  for (const auto& [code, n] : counts) {
    if (n > best) {
      best = n;
      majority = code;
    }
  }
  return GroupRule::value_map(feature, {majority});
}

nlohmann::json to_json(const GroupRule& rule) {
  nlohmann::json doc{{"feature", rule.feature}};
  if (rule.kind == GroupKind::Range) {
    doc["kind"] = "range";
    doc["range"] = {rule.lo, rule.hi};
  } else {
    doc["kind"] = "binary_value";
    doc["alpha_values"] = rule.alpha_values;
  }
  return doc;
}

GroupRule group_rule_from_json(const nlohmann::json& doc) {
  try {
    const auto feature = doc.at("feature").get<std::string>();
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "range") {
      const auto r = doc.at("range").get<std::vector<Code>>();
      if (r.size() != 2) throw Error(ErrorCode::ConfigInvalid, "group range must have two bounds");
      return GroupRule::range(feature, r[0], r[1]);
    }
    if (kind == "binary_value") {
      return GroupRule::value_map(feature, doc.at("alpha_values").get<std::vector<Code>>());
    }
    throw Error(ErrorCode::ConfigInvalid, "unknown group rule kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("group rule: ") + e.what());
  }
}

GroupSplit group_split(std::span<const Sample> samples, const Schema& schema, const GroupRule& rule) {
  rule.validate();
  const std::size_t j = schema.require_index(rule.feature);
  GroupSplit out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Code v = samples[i].at(j);
    const bool in_alpha =
        rule.kind == GroupKind::Range
            ? (v >= rule.lo && v <= rule.hi)
            : std::binary_search(rule.alpha_values.begin(), rule.alpha_values.end(), v);
    (in_alpha ? out.alpha : out.beta).push_back(i);
  }
  return out;
}

double idi_ratio(const TestSuite& suite) {
  if (suite.unique_samples.empty()) throw Error(ErrorCode::EmptySuite, "suite has no samples");
  return static_cast<double>(suite.idi_samples.size()) / static_cast<double>(suite.unique_samples.size());
}

namespace {

double positive_rate(std::span<const std::size_t> rows, const std::vector<int>& predicted) {
  std::size_t pos = 0;
  for (std::size_t i : rows) pos += predicted[i] == 1;
  return static_cast<double>(pos) / static_cast<double>(rows.size());
}

std::vector<int> predict_all(std::span<const Sample> samples, const Model& model) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(model.label(s));
  return out;
}

}  // namespace

double eod(std::span<const Sample> samples, std::span<const int> labels, const Model& model,
           const Schema& schema, const GroupRule& rule) {
  if (samples.size() != labels.size()) {
    throw Error(ErrorCode::InvalidArgument, "samples and labels differ in length");
  }
  const auto split = group_split(samples, schema, rule);
  std::vector<std::size_t> alpha, beta;
  for (std::size_t i : split.alpha) {
    if (labels[i] == 1) alpha.push_back(i);
  }
  for (std::size_t i : split.beta) {
    if (labels[i] == 1) beta.push_back(i);
  }
  if (alpha.empty() || beta.empty()) {
    throw Error(ErrorCode::MissingGroup, "a group has no positive rows for " + rule.feature);
  }
  const auto predicted = predict_all(samples, model);
  return std::abs(positive_rate(alpha, predicted) - positive_rate(beta, predicted));
}

double spd(std::span<const Sample> samples, const Model& model, const Schema& schema,
           const GroupRule& rule) {
  const auto split = group_split(samples, schema, rule);
  if (split.alpha.empty() || split.beta.empty()) {
    throw Error(ErrorCode::MissingGroup, "a group is empty for " + rule.feature);
  }
  const auto predicted = predict_all(samples, model);
  return std::abs(positive_rate(split.alpha, predicted) - positive_rate(split.beta, predicted));
}

FairnessReport evaluate_fairness(const TestSuite& suite, const Model& model, const Schema& schema,
                                 const GroupRule& rule) {
  FairnessReport r;
  r.idi_ratio = idi_ratio(suite);
  r.idi_count = suite.idi_samples.size();
  r.sample_count = suite.unique_samples.size();
  try {
    r.eod = eod(suite.unique_samples, suite.inherited_labels, model, schema, rule);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MissingGroup) throw;
  }
  try {
    r.spd = spd(suite.unique_samples, model, schema, rule);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MissingGroup) throw;
  }
  return r;
}

nlohmann::json to_json(const FairnessReport& report) {
  nlohmann::json doc{{"idi_ratio", report.idi_ratio},
                     {"idi_count", report.idi_count},
                     {"sample_count", report.sample_count}};
  doc["eod"] = report.eod ? nlohmann::json(*report.eod) : nlohmann::json(nullptr);
  doc["spd"] = report.spd ? nlohmann::json(*report.spd) : nlohmann::json(nullptr);
  return doc;
}

}  // namespace causalft
