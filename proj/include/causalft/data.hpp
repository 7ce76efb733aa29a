#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace causalft {

using Code = int;
using Sample = std::vector<Code>;

enum class FeatureKind { Categorical, Integer };

struct Schema {
  std::vector<std::string> feature_names;
  std::vector<std::string> sensitive_features;
  std::string label_name;
  std::vector<FeatureKind> kinds;

  // Throws SchemaMismatch when names collide or the sensitive list is not a
  // subset of the features.
  void validate() const;

  std::optional<std::size_t> index_of(const std::string& feature) const;
  std::size_t require_index(const std::string& feature) const;
  std::size_t width() const { return feature_names.size(); }
};

// Either a contiguous integer range or an explicit code set. Explicit sets are
// kept sorted and unique.
class ValueDomain {
 public:
  static ValueDomain range(Code lo, Code hi);
  static ValueDomain set(std::vector<Code> codes);

  bool is_range() const { return is_range_; }
  Code lo() const { return lo_; }
  Code hi() const { return hi_; }
  bool contains(Code v) const;
  std::size_t size() const;
  // Enumerates every admissible code, ascending.
  std::vector<Code> values() const;
  // i-th admissible code in ascending order.
  Code at(std::size_t i) const;
  Code clamp(Code v) const;

  bool operator==(const ValueDomain&) const = default;

 private:
  bool is_range_ = true;
  Code lo_ = 0;
  Code hi_ = 0;
  std::vector<Code> codes_;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(Schema schema, std::vector<Code> cells, std::vector<int> labels,
          std::vector<ValueDomain> domains,
          std::vector<std::vector<std::string>> decode_maps);

  const Schema& schema() const { return schema_; }
  std::size_t n_rows() const { return labels_.size(); }
  std::size_t n_features() const { return schema_.width(); }
  bool empty() const { return labels_.empty(); }

  std::span<const Code> row(std::size_t i) const {
    return {cells_.data() + i * n_features(), n_features()};
  }
  Sample sample(std::size_t i) const {
    auto r = row(i);
    return {r.begin(), r.end()};
  }
  Code at(std::size_t i, std::size_t j) const { return cells_[i * n_features() + j]; }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<Code>& cells() const { return cells_; }
  const std::vector<ValueDomain>& domains() const { return domains_; }
  const ValueDomain& domain(std::size_t j) const { return domains_.at(j); }
  // code -> original string for categorical columns, empty for integer ones
  const std::vector<std::vector<std::string>>& decode_maps() const { return decode_maps_; }

  // New dataset over the given row indices. Domains are carried over
  // unchanged (frozen from the parent).
  Dataset subset(std::span<const std::size_t> rows) const;
  // Appends labelled samples; domains must already admit every value.
  Dataset with_rows(std::span<const Sample> samples, std::span<const int> labels) const;

  // Throws EmptyData when there are no rows.
  void require_rows(std::string_view context) const;

 private:
  Schema schema_;
  std::vector<Code> cells_;
  std::vector<int> labels_;
  std::vector<ValueDomain> domains_;
  std::vector<std::vector<std::string>> decode_maps_;
};

// Schema document:
//   {"label": "income", "sensitive": ["age", ...],
//    "features": [{"name": "age", "kind": "integer"}, ...]}
Schema schema_from_json(const nlohmann::json& doc);
Schema load_schema(const std::filesystem::path& path);

// Loads a comma-separated file with a header row. Categorical codes follow
// first-occurrence order; rows with empty cells are dropped and counted.
Dataset load_csv(const std::filesystem::path& path, const Schema& schema);
Dataset parse_csv(std::istream& in, const Schema& schema);

ValueDomain feature_domain(const Dataset& dataset, const std::string& feature);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

TrainTestSplit split_train_test(const Dataset& dataset, double train_fraction,
                                std::uint64_t seed);

// Recovers the original cell text of column j for code v.
std::string decode_cell(const Dataset& dataset, std::size_t j, Code v);

}  // namespace causalft
