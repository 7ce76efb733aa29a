#include "causalft/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "causalft/error.hpp"

namespace causalft {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::NonBinaryLabel: return "NonBinaryLabel";
    case ErrorCode::EmptyData: return "EmptyData";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::InsufficientRows: return "InsufficientRows";
    case ErrorCode::DegenerateColumn: return "DegenerateColumn";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::NotDirectlyRelevant: return "NotDirectlyRelevant";
    case ErrorCode::EmptyDomain: return "EmptyDomain";
    case ErrorCode::NoDirectFeature: return "NoDirectFeature";
    case ErrorCode::NodeSetMismatch: return "NodeSetMismatch";
    case ErrorCode::IndexCollision: return "IndexCollision";
    case ErrorCode::EmptySuite: return "EmptySuite";
    case ErrorCode::MissingGroup: return "MissingGroup";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::IOError: return "IOError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------- Schema

void Schema::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& name : feature_names) {
    if (!seen.insert(name).second) {
      throw Error(ErrorCode::SchemaMismatch, "duplicate feature name '" + name + "'");
    }
  }
  if (label_name.empty()) throw Error(ErrorCode::SchemaMismatch, "label name is empty");
  if (seen.contains(label_name)) {
    throw Error(ErrorCode::SchemaMismatch, "label '" + label_name + "' is also a feature");
  }
  if (kinds.size() != feature_names.size()) {
    throw Error(ErrorCode::SchemaMismatch, "one kind per feature required");
  }
  for (const auto& s : sensitive_features) {
    if (!seen.contains(s)) {
      throw Error(ErrorCode::SchemaMismatch, "sensitive feature '" + s + "' is not a feature");
    }
  }
}

std::optional<std::size_t> Schema::index_of(const std::string& feature) const {
  auto it = std::find(feature_names.begin(), feature_names.end(), feature);
  if (it == feature_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - feature_names.begin());
}

std::size_t Schema::require_index(const std::string& feature) const {
  if (auto idx = index_of(feature)) return *idx;
  throw Error(ErrorCode::UnknownFeature, "'" + feature + "'");
}

Schema schema_from_json(const nlohmann::json& doc) {
  Schema schema;
  try {
    schema.label_name = doc.at("label").get<std::string>();
    if (doc.contains("sensitive")) {
      schema.sensitive_features = doc.at("sensitive").get<std::vector<std::string>>();
    }
    for (const auto& f : doc.at("features")) {
      schema.feature_names.push_back(f.at("name").get<std::string>());
      const auto kind = f.value("kind", std::string("categorical"));
      if (kind == "categorical") {
        schema.kinds.push_back(FeatureKind::Categorical);
      } else if (kind == "integer") {
        schema.kinds.push_back(FeatureKind::Integer);
      } else {
        throw Error(ErrorCode::SchemaMismatch, "unsupported feature kind '" + kind + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("schema document: ") + e.what());
  }
  schema.validate();
  return schema;
}

Schema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOError, "cannot open schema " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return schema_from_json(doc);
}

// ---------------------------------------------------------------- ValueDomain

ValueDomain ValueDomain::range(Code lo, Code hi) {
  if (lo > hi) throw Error(ErrorCode::EmptyDomain, "range with lo > hi");
  ValueDomain d;
  d.is_range_ = true;
  d.lo_ = lo;
  d.hi_ = hi;
  return d;
}

ValueDomain ValueDomain::set(std::vector<Code> codes) {
  if (codes.empty()) throw Error(ErrorCode::EmptyDomain, "empty code set");
  std::sort(codes.begin(), codes.end());
  codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
  ValueDomain d;
  d.is_range_ = false;
  d.lo_ = codes.front();
  d.hi_ = codes.back();
  d.codes_ = std::move(codes);
  return d;
}

bool ValueDomain::contains(Code v) const {
  if (is_range_) return v >= lo_ && v <= hi_;
  return std::binary_search(codes_.begin(), codes_.end(), v);
}

std::size_t ValueDomain::size() const {
  return is_range_ ? static_cast<std::size_t>(hi_ - lo_) + 1 : codes_.size();
}

std::vector<Code> ValueDomain::values() const {
  if (!is_range_) return codes_;
  std::vector<Code> out(size());
  std::iota(out.begin(), out.end(), lo_);
  return out;
}

Code ValueDomain::at(std::size_t i) const {
  return is_range_ ? lo_ + static_cast<Code>(i) : codes_.at(i);
}

Code ValueDomain::clamp(Code v) const {
  if (is_range_) return std::clamp(v, lo_, hi_);
  auto it = std::lower_bound(codes_.begin(), codes_.end(), v);
  if (it == codes_.end()) return codes_.back();
  if (*it == v || it == codes_.begin()) return *it;
  auto prev = std::prev(it);
  return (v - *prev) <= (*it - v) ? *prev : *it;
}

// ---------------------------------------------------------------- Dataset

Dataset::Dataset(Schema schema, std::vector<Code> cells, std::vector<int> labels,
                 std::vector<ValueDomain> domains,
                 std::vector<std::vector<std::string>> decode_maps)
    : schema_(std::move(schema)),
      cells_(std::move(cells)),
      labels_(std::move(labels)),
      domains_(std::move(domains)),
      decode_maps_(std::move(decode_maps)) {
  if (cells_.size() != labels_.size() * schema_.width()) {
    throw Error(ErrorCode::InvalidArgument, "cell count does not match rows x features");
  }
  if (domains_.size() != schema_.width()) {
    throw Error(ErrorCode::InvalidArgument, "one domain per feature required");
  }
  decode_maps_.resize(schema_.width());
  for (int y : labels_) {
    if (y != 0 && y != 1) throw Error(ErrorCode::NonBinaryLabel, std::to_string(y));
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<Code> cells;
  cells.reserve(rows.size() * n_features());
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (auto i : rows) {
    auto r = row(i);
    cells.insert(cells.end(), r.begin(), r.end());
    labels.push_back(labels_[i]);
  }
  return Dataset(schema_, std::move(cells), std::move(labels), domains_, decode_maps_);
}

Dataset Dataset::with_rows(std::span<const Sample> samples, std::span<const int> labels) const {
  if (samples.size() != labels.size()) {
    throw Error(ErrorCode::InvalidArgument, "one label per appended sample required");
  }
  auto cells = cells_;
  auto all_labels = labels_;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& s = samples[k];
    if (s.size() != n_features()) throw Error(ErrorCode::WidthMismatch, "appended sample");
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!domains_[j].contains(s[j])) {
        throw Error(ErrorCode::InvalidArgument,
                    "appended value outside domain of '" + schema_.feature_names[j] + "'");
      }
    }
    cells.insert(cells.end(), s.begin(), s.end());
    all_labels.push_back(labels[k]);
  }
  return Dataset(schema_, std::move(cells), std::move(all_labels), domains_, decode_maps_);
}

void Dataset::require_rows(std::string_view context) const {
  if (empty()) throw Error(ErrorCode::EmptyData, std::string(context));
}

// ---------------------------------------------------------------- CSV

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Splits one CSV record; double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

Code parse_int(const std::string& cell, const std::string& column) {
  Code v = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw Error(ErrorCode::ParseError,
                "column '" + column + "' expects integers, got '" + cell + "'");
  }
  return v;
}

std::vector<ValueDomain> observed_domains(const Schema& schema, const std::vector<Code>& cells,
                                          std::size_t n_rows) {
  const auto width = schema.width();
  std::vector<ValueDomain> domains;
  domains.reserve(width);
  for (std::size_t j = 0; j < width; ++j) {
    if (schema.kinds[j] == FeatureKind::Integer) {
      Code lo = cells[j];
      Code hi = cells[j];
      for (std::size_t i = 1; i < n_rows; ++i) {
        lo = std::min(lo, cells[i * width + j]);
        hi = std::max(hi, cells[i * width + j]);
      }
      domains.push_back(ValueDomain::range(lo, hi));
    } else {
      std::set<Code> seen;
      for (std::size_t i = 0; i < n_rows; ++i) seen.insert(cells[i * width + j]);
      domains.push_back(ValueDomain::set({seen.begin(), seen.end()}));
    }
  }
  return domains;
}

}  // namespace

Dataset parse_csv(std::istream& in, const Schema& schema) {
  schema.validate();
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw Error(ErrorCode::MissingHeader, "no header row");
  }
  const auto header = split_record(line);

  // column position in the file for each feature, plus the label column
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!position.emplace(header[c], c).second) {
      throw Error(ErrorCode::SchemaMismatch, "duplicate column '" + header[c] + "'");
    }
  }
  std::vector<std::size_t> feature_col;
  for (const auto& name : schema.feature_names) {
    auto it = position.find(name);
    if (it == position.end()) throw Error(ErrorCode::SchemaMismatch, "column '" + name + "' absent");
    feature_col.push_back(it->second);
  }
  auto label_it = position.find(schema.label_name);
  if (label_it == position.end()) {
    throw Error(ErrorCode::SchemaMismatch, "label column '" + schema.label_name + "' absent");
  }
  const auto label_col = label_it->second;
  if (header.size() != schema.width() + 1) {
    for (const auto& h : header) {
      if (h != schema.label_name && !schema.index_of(h)) {
        throw Error(ErrorCode::SchemaMismatch, "undeclared column '" + h + "'");
      }
    }
  }

  const auto width = schema.width();
  std::vector<std::unordered_map<std::string, Code>> encoders(width);
  std::vector<std::vector<std::string>> decode_maps(width);
  std::vector<Code> cells;
  std::vector<int> labels;
  std::size_t dropped = 0;
  std::size_t line_no = 1;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto record = split_record(line);
    if (record.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " fields");
    }
    bool missing = record[label_col].empty();
    for (auto c : feature_col) missing = missing || record[c].empty();
    if (missing) {
      ++dropped;
      continue;
    }
    const auto& y = record[label_col];
    if (y != "0" && y != "1") {
      throw Error(ErrorCode::NonBinaryLabel, "line " + std::to_string(line_no) + ": '" + y + "'");
    }
    for (std::size_t j = 0; j < width; ++j) {
      const auto& cell = record[feature_col[j]];
      if (schema.kinds[j] == FeatureKind::Integer) {
        cells.push_back(parse_int(cell, schema.feature_names[j]));
      } else {
        auto [it, inserted] =
            encoders[j].emplace(cell, static_cast<Code>(decode_maps[j].size()));
        if (inserted) decode_maps[j].push_back(cell);
        cells.push_back(it->second);
      }
    }
    labels.push_back(y == "1" ? 1 : 0);
  }

  if (dropped > 0) spdlog::info("dropped {} rows with missing cells", dropped);
  if (labels.empty()) throw Error(ErrorCode::EmptyData, "no data rows");

  auto domains = observed_domains(schema, cells, labels.size());
  return Dataset(schema, std::move(cells), std::move(labels), std::move(domains),
                 std::move(decode_maps));
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IOError, "cannot open " + path.string());
  return parse_csv(in, schema);
}

ValueDomain feature_domain(const Dataset& dataset, const std::string& feature) {
  return dataset.domain(dataset.schema().require_index(feature));
}

TrainTestSplit split_train_test(const Dataset& dataset, double train_fraction,
                                std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0, 1]");
  }
  const auto n = dataset.n_rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  std::span<const std::size_t> all(order);
  return {dataset.subset(all.first(n_train)), dataset.subset(all.subspan(n_train))};
}

std::string decode_cell(const Dataset& dataset, std::size_t j, Code v) {
  const auto& map = dataset.decode_maps().at(j);
  if (dataset.schema().kinds.at(j) == FeatureKind::Categorical && v >= 0 &&
      static_cast<std::size_t>(v) < map.size()) {
    return map[static_cast<std::size_t>(v)];
  }
  return std::to_string(v);
}

}  // namespace causalft
