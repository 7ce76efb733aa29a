#include "causalft/generators.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include <spdlog/spdlog.h>

#include "causalft/error.hpp"

namespace causalft {

std::size_t SampleHash::operator()(const Sample& s) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (Code v : s) {
    h ^= static_cast<std::size_t>(static_cast<std::uint32_t>(v)) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

std::string_view to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::Random: return "random";
    case GeneratorKind::SgLite: return "sg_lite";
    case GeneratorKind::AdfLite: return "adf_lite";
  }
  return "random";
}

GeneratorKind generator_kind_from_string(std::string_view name) {
  if (name == "random") return GeneratorKind::Random;
  if (name == "sg_lite") return GeneratorKind::SgLite;
  if (name == "adf_lite") return GeneratorKind::AdfLite;
  throw Error(ErrorCode::ConfigInvalid, "unknown generator kind '" + std::string(name) + "'");
}

void GeneratorSpec::validate() const {
  if (global_steps < 1) throw Error(ErrorCode::ConfigInvalid, "global_steps must be positive");
  if (local_steps < 1) throw Error(ErrorCode::ConfigInvalid, "local_steps must be positive");
  if (step_size < 1) throw Error(ErrorCode::ConfigInvalid, "step_size must be positive");
  if (max_attempts_per_pair < 1) throw Error(ErrorCode::ConfigInvalid, "max_attempts_per_pair must be positive");
}

nlohmann::json to_json(const GeneratorSpec& spec) {
  return {{"kind", std::string(to_string(spec.kind))},
          {"global_steps", spec.global_steps},
          {"local_steps", spec.local_steps},
          {"step_size", spec.step_size},
          {"max_attempts_per_pair", spec.max_attempts_per_pair}};
}

GeneratorSpec generator_spec_from_json(const nlohmann::json& doc) {
  GeneratorSpec spec;
  try {
    if (doc.is_string()) {
      spec.kind = generator_kind_from_string(doc.get<std::string>());
    } else {
      spec.kind = generator_kind_from_string(doc.at("kind").get<std::string>());
      spec.global_steps = doc.value("global_steps", spec.global_steps);
      spec.local_steps = doc.value("local_steps", spec.local_steps);
      spec.step_size = doc.value("step_size", spec.step_size);
      spec.max_attempts_per_pair = doc.value("max_attempts_per_pair", spec.max_attempts_per_pair);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("generator spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

PairLedger& PairLedger::operator+=(const PairLedger& other) {
  pairs_without_relaxation += other.pairs_without_relaxation;
  pairs_with_relaxation += other.pairs_with_relaxation;
  invalid_pairs += other.invalid_pairs;
  repaired_pairs += other.repaired_pairs;
  failed_samples += other.failed_samples;
  return *this;
}

nlohmann::json to_json(const PairLedger& ledger) {
  return {{"pairs_without_relaxation", ledger.pairs_without_relaxation},
          {"pairs_with_relaxation", ledger.pairs_with_relaxation},
          {"invalid_pairs", ledger.invalid_pairs},
          {"repaired_pairs", ledger.repaired_pairs},
          {"failed_samples", ledger.failed_samples}};
}

TestSuite& TestSuite::merge(const TestSuite& other) {
  SampleSet seen(unique_samples.begin(), unique_samples.end());
  for (std::size_t i = 0; i < other.unique_samples.size(); ++i) {
    if (!seen.insert(other.unique_samples[i]).second) continue;
    unique_samples.push_back(other.unique_samples[i]);
    inherited_labels.push_back(other.inherited_labels.at(i));
  }
  SampleSet seen_idi(idi_samples.begin(), idi_samples.end());
  for (const auto& s : other.idi_samples) {
    if (seen_idi.insert(s).second) idi_samples.push_back(s);
  }
  idi_pairs.insert(idi_pairs.end(), other.idi_pairs.begin(), other.idi_pairs.end());
  ledger += other.ledger;
  budget_reached = budget_reached && other.budget_reached;
  fell_back_to_base = fell_back_to_base || other.fell_back_to_base;
  return *this;
}

namespace {

void check_pair_width(const Pair& pair, const Model& model) {
  if (pair.a.size() != pair.b.size() || pair.a.size() != model.input_width()) {
    throw Error(ErrorCode::WidthMismatch, "pair width does not match the model");
  }
}

// Indices where the two samples differ.
std::vector<std::size_t> differing(const Sample& a, const Sample& b) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] != b[j]) out.push_back(j);
  }
  return out;
}

Code uniform_other(const ValueDomain& domain, Code current, std::mt19937_64& rng) {
  const std::size_t n = domain.size();
  if (n == 1) return domain.at(0);
  if (!domain.contains(current)) {
    return domain.at(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  }
  // draw from n - 1 slots and skip over the current value
  auto k = std::uniform_int_distribution<std::size_t>(0, n - 2)(rng);
  Code v = domain.at(k);
  if (v >= current) v = domain.at(k + 1);
  return v;
}

std::size_t position_in(const ValueDomain& domain, Code v) {
  if (domain.is_range()) return static_cast<std::size_t>(domain.clamp(v) - domain.lo());
  const auto values = domain.values();
  auto it = std::lower_bound(values.begin(), values.end(), domain.clamp(v));
  return static_cast<std::size_t>(it - values.begin());
}

// Moves `steps` admissible values up or down, stopping at the domain edge.
Code step_in(const ValueDomain& domain, Code v, long steps) {
  const long pos = static_cast<long>(position_in(domain, v)) + steps;
  const long last = static_cast<long>(domain.size()) - 1;
  return domain.at(static_cast<std::size_t>(std::clamp(pos, 0L, last)));
}

Sample masked_key(std::span<const Code> x, std::size_t sensitive) {
  Sample key(x.begin(), x.end());
  key[sensitive] = std::numeric_limits<Code>::min();
  return key;
}

// Test rows grouped by everything except the sensitive feature.
class TestIndex {
 public:
  TestIndex(const Dataset& test, std::size_t sensitive) : test_(test), sensitive_(sensitive) {
    for (std::size_t i = 0; i < test.n_rows(); ++i) {
      rows_.emplace(test.sample(i), test.label(i));
      buckets_[masked_key(test.row(i), sensitive)].push_back(i);
    }
  }

  bool contains(const Sample& x) const { return rows_.count(x) > 0; }
  std::optional<int> true_label(const Sample& x) const {
    auto it = rows_.find(x);
    if (it == rows_.end()) return std::nullopt;
    return it->second;
  }

  struct Partner {
    Sample sample;
    bool from_test = false;
  };

  // A partner for x under the true definition: a test row differing only at
  // the sensitive feature with a different predicted label, chosen at random.
  // Without such a row, x itself with its sensitive value replaced by another
  // admissible one is tried, in random order.
  template <typename LabelFn>
  std::optional<Partner> partner(const Sample& x, int label_x, LabelFn&& label_of,
                                 std::mt19937_64& rng) const {
    std::vector<std::size_t> eligible;
    if (auto it = buckets_.find(masked_key(x, sensitive_)); it != buckets_.end()) {
      for (std::size_t i : it->second) {
        if (test_.at(i, sensitive_) == x[sensitive_]) continue;
        if (label_of(test_.sample(i)) != label_x) eligible.push_back(i);
      }
    }
    if (!eligible.empty()) {
      auto k = std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(rng);
      return Partner{test_.sample(eligible[k]), true};
    }
    auto values = test_.domain(sensitive_).values();
    std::shuffle(values.begin(), values.end(), rng);
    Sample probe = x;
    for (Code v : values) {
      if (v == x[sensitive_]) continue;
      probe[sensitive_] = v;
      if (label_of(probe) != label_x) return Partner{probe, contains(probe)};
    }
    return std::nullopt;
  }

  // Any test row differing from x only at the sensitive feature.
  std::optional<Sample> neighbour(const Sample& x, std::mt19937_64& rng) const {
    auto it = buckets_.find(masked_key(x, sensitive_));
    if (it == buckets_.end()) return std::nullopt;
    std::vector<std::size_t> eligible;
    for (std::size_t i : it->second) {
      if (test_.at(i, sensitive_) != x[sensitive_]) eligible.push_back(i);
    }
    if (eligible.empty()) return std::nullopt;
    auto k = std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(rng);
    return test_.sample(eligible[k]);
  }

 private:
  const Dataset& test_;
  std::size_t sensitive_;
  std::unordered_map<Sample, int, SampleHash> rows_;
  std::unordered_map<Sample, std::vector<std::size_t>, SampleHash> buckets_;
};

Sample pair_key(const Pair& p) {
  const bool swap = p.b < p.a;
  const Sample& first = swap ? p.b : p.a;
  const Sample& second = swap ? p.a : p.b;
  Sample key(first);
  key.insert(key.end(), second.begin(), second.end());
  return key;
}

class LabelCache {
 public:
  explicit LabelCache(const Model& model) : model_(model) {}
  int operator()(const Sample& x) {
    auto it = cache_.find(x);
    if (it != cache_.end()) return it->second;
    const int y = model_.label(x);
    cache_.emplace(x, y);
    return y;
  }

 private:
  const Model& model_;
  std::unordered_map<Sample, int, SampleHash> cache_;
};

RepairOutcome repair_with_index(const Pair& pair, const TestIndex& index, LabelCache& labels,
                                std::size_t sensitive, std::mt19937_64& rng) {
  RepairOutcome out;
  const auto diff = differing(pair.a, pair.b);
  if (diff.size() == 1 && diff[0] == sensitive && labels(pair.a) != labels(pair.b)) {
    out.was_valid = true;
    out.pairs.push_back(pair);
    return out;
  }
  for (const Sample* member : {&pair.a, &pair.b}) {
    const bool member_in_test = member == &pair.a ? pair.a_from_test : pair.b_from_test;
    auto partner = index.partner(*member, labels(*member), labels, rng);
    if (partner) {
      out.pairs.push_back(Pair{*member, std::move(partner->sample), member_in_test, partner->from_test});
    } else {
      ++out.failed;
      out.dropped.push_back(*member);
    }
  }
  return out;
}

class Run {
 public:
  Run(const GeneratorSpec& spec, const Model& model, const Dataset& test, std::size_t sensitive,
      std::optional<std::size_t> causal, std::size_t budget, std::uint64_t seed)
      : spec_(spec),
        model_(model),
        test_(test),
        sensitive_(sensitive),
        causal_(causal),
        budget_(budget),
        rng_(seed),
        index_(test, sensitive),
        labels_(model) {
    suite_.seed = seed;
    suite_.mode = causal ? SuiteMode::CausalFt : SuiteMode::Base;
    for (std::size_t j = 0; j < test.n_features(); ++j) {
      if (j == sensitive || (causal && j == *causal)) continue;
      if (test.domain(j).size() > 1) mutable_.push_back(j);
    }
  }

  TestSuite execute() {
    if (budget_ == 0) return std::move(suite_);
    std::size_t idle = 0;
    while (suite_.unique_samples.size() < budget_) {
      const std::size_t before = suite_.unique_samples.size();
      if (causal_) {
        causal_round();
      } else {
        explore(base_seed());
      }
      if (suite_.unique_samples.size() == before) {
        if (++idle >= static_cast<std::size_t>(spec_.max_attempts_per_pair)) {
          suite_.budget_reached = false;
          spdlog::debug("generation stopped after {} idle rounds with {} samples", idle, before);
          break;
        }
      } else {
        idle = 0;
      }
    }
    finish();
    return std::move(suite_);
  }

 private:
  std::size_t random_row() {
    return std::uniform_int_distribution<std::size_t>(0, test_.n_rows() - 1)(rng_);
  }

  bool true_valid(const Pair& p) {
    const auto diff = differing(p.a, p.b);
    return diff.size() == 1 && diff[0] == sensitive_ && labels_(p.a) != labels_(p.b);
  }

  bool relaxed_valid(const Pair& p) {
    const auto diff = differing(p.a, p.b);
    if (diff.empty()) return false;
    for (std::size_t j : diff) {
      if (j != sensitive_ && j != *causal_) return false;
    }
    return labels_(p.a) != labels_(p.b);
  }

  bool valid(const Pair& p) { return causal_ ? relaxed_valid(p) : true_valid(p); }

  Pair base_seed() {
    const std::size_t i = random_row();
    origin_label_ = test_.label(i);
    Pair p;
    p.a = test_.sample(i);
    p.a_from_test = true;
    if (auto n = index_.neighbour(p.a, rng_)) {
      p.b = std::move(*n);
      p.b_from_test = true;
    } else {
      p.b = p.a;
      p.b[sensitive_] = uniform_other(test_.domain(sensitive_), p.a[sensitive_], rng_);
      p.b_from_test = index_.contains(p.b);
    }
    return p;
  }

  void causal_round() {
    const std::size_t i = random_row();
    std::size_t j = i;
    if (test_.n_rows() > 1) {
      while (j == i) j = random_row();
    }
    origin_label_ = test_.label(i);
    Pair drawn{test_.sample(i), test_.sample(j), true, true};
    if (relaxed_valid(drawn)) {
      emit(drawn);
      return;
    }
    // keep a and rebuild b inside the synthetic sensitive set
    const auto& ds = test_.domain(sensitive_);
    const auto& dc = test_.domain(*causal_);
    Pair p{drawn.a, drawn.a, true, false};
    do {
      p.b[sensitive_] = ds.at(std::uniform_int_distribution<std::size_t>(0, ds.size() - 1)(rng_));
      p.b[*causal_] = dc.at(std::uniform_int_distribution<std::size_t>(0, dc.size() - 1)(rng_));
    } while (p.b == p.a);
    p.b_from_test = index_.contains(p.b);
    explore(p);
  }

  // Applies the base strategy to a starting pair. A start that already meets
  // the active definition is banked as is.
  void explore(const Pair& start) {
    const bool start_valid = valid(start);
    if (start_valid) emit(start);
    switch (spec_.kind) {
      case GeneratorKind::Random:
        if (!start_valid) random_step(start);
        break;
      case GeneratorKind::SgLite:
        if (!start_valid) sg_sweep(start);
        break;
      case GeneratorKind::AdfLite:
        adf_search(start, start_valid);
        break;
    }
  }

  Pair with_feature(const Pair& p, std::size_t j, Code v) const {
    Pair q = p;
    q.a[j] = v;
    q.b[j] = v;
    q.a_from_test = index_.contains(q.a);
    q.b_from_test = index_.contains(q.b);
    return q;
  }

  void random_step(const Pair& start) {
    if (mutable_.empty()) return;
    const std::size_t j =
        mutable_[std::uniform_int_distribution<std::size_t>(0, mutable_.size() - 1)(rng_)];
    const std::size_t idx[] = {j};
    Sample a = perturb_values(start.a, idx, test_.domains(), rng_);
    emit(with_feature(start, j, a[j]));
  }

  void sg_sweep(const Pair& start) {
    if (mutable_.empty()) return;
    for (int k = 0; k < spec_.local_steps; ++k) {
      const std::size_t j = mutable_[sweep_cursor_++ % mutable_.size()];
      const auto& d = test_.domain(j);
      const std::size_t round = 1 + static_cast<std::size_t>(k) / mutable_.size();
      const std::size_t pos =
          (position_in(d, start.a[j]) + round * static_cast<std::size_t>(spec_.step_size)) % d.size();
      emit(with_feature(start, j, d.at(pos)));
    }
  }

  void adf_search(const Pair& start, bool start_valid) {
    Pair cur = start;
    bool found = start_valid;
    for (int g = 0; g < spec_.global_steps && !found && !mutable_.empty(); ++g) {
      const Eigen::VectorXd ga = model_.input_gradient(cur.a);
      const Eigen::VectorXd gb = model_.input_gradient(cur.b);
      const double flip = model_.predict(cur.a).prob >= model_.predict(cur.b).prob ? 1.0 : -1.0;
      Pair next = cur;
      for (std::size_t j : mutable_) {
        const double d = flip * (ga[static_cast<Eigen::Index>(j)] - gb[static_cast<Eigen::Index>(j)]);
        if (d == 0.0) continue;
        const long steps = d > 0 ? spec_.step_size : -spec_.step_size;
        const Code v = step_in(test_.domain(j), cur.a[j], steps);
        next.a[j] = v;
        next.b[j] = v;
      }
      if (next.a == cur.a) break;
      cur = std::move(next);
      cur.a_from_test = index_.contains(cur.a);
      cur.b_from_test = index_.contains(cur.b);
      emit(cur);
      found = valid(cur);
    }
    if (!found || mutable_.empty()) return;

    for (int l = 0; l < spec_.local_steps; ++l) {
      const Eigen::VectorXd ga = model_.input_gradient(cur.a);
      const Eigen::VectorXd gb = model_.input_gradient(cur.b);
      std::vector<double> w;
      w.reserve(mutable_.size());
      for (std::size_t j : mutable_) {
        const auto e = static_cast<Eigen::Index>(j);
        w.push_back(1.0 / (std::abs(ga[e]) + std::abs(gb[e]) + 1e-8));
      }
      std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
      const std::size_t j = mutable_[pick(rng_)];
      const long steps = std::bernoulli_distribution(0.5)(rng_) ? spec_.step_size : -spec_.step_size;
      const Code v = step_in(test_.domain(j), cur.a[j], steps);
      if (v == cur.a[j]) continue;
      Pair cand = with_feature(cur, j, v);
      emit(cand);
      if (valid(cand)) cur = std::move(cand);
    }
  }

  void bank(const Sample& x) {
    if (suite_.unique_samples.size() >= budget_) return;
    if (!seen_.insert(x).second) return;
    suite_.unique_samples.push_back(x);
    suite_.inherited_labels.push_back(index_.true_label(x).value_or(origin_label_));
  }

  void add_final(const Pair& p) {
    if (final_keys_.insert(pair_key(p)).second) suite_.idi_pairs.push_back(p);
  }

  void emit(Pair p) {
    if (suite_.unique_samples.size() >= budget_) return;
    p.a_from_test = p.a_from_test || index_.contains(p.a);
    p.b_from_test = p.b_from_test || index_.contains(p.b);
    bank(p.a);
    bank(p.b);
    const bool tv = true_valid(p);
    // the ledger only counts pairs anchored on at least one test row
    const bool anchored = p.has_test_member();
    if (!causal_) {
      if (tv && counted_.insert(pair_key(p)).second) {
        suite_.ledger.pairs_without_relaxation += anchored;
        suite_.idi_pairs.push_back(p);
      }
      return;
    }
    const bool rv = relaxed_valid(p);
    if (rv && counted_.insert(pair_key(p)).second) suite_.ledger.pairs_with_relaxation += anchored;
    if (rv && !tv) {
      if (invalid_keys_.insert(pair_key(p)).second) invalid_.push_back(p);
      return;
    }
    if (tv && p.has_test_member()) {
      add_final(p);
      return;
    }
    if (p.has_test_member()) return;
    // neither member is a test row: look for true-definition partners
    for (const Sample* member : {&p.a, &p.b}) {
      auto partner = index_.partner(*member, labels_(*member), labels_, rng_);
      if (!partner) continue;
      Pair q{*member, std::move(partner->sample), false, partner->from_test};
      if (counted_.insert(pair_key(q)).second) suite_.ledger.pairs_with_relaxation += q.has_test_member();
      add_final(q);
    }
  }

  bool is_idi_sample(const Sample& x) {
    const int y = labels_(x);
    Sample probe = x;
    for (Code v : test_.domain(sensitive_).values()) {
      if (v == x[sensitive_]) continue;
      probe[sensitive_] = v;
      if (labels_(probe) != y) return true;
    }
    return false;
  }

  void finish() {
    if (causal_) {
      SampleSet dropped;
      for (const auto& p : invalid_) {
        auto r = repair_with_index(p, index_, labels_, sensitive_, rng_);
        if (p.has_test_member()) {
          ++suite_.ledger.invalid_pairs;
          suite_.ledger.repaired_pairs += !r.pairs.empty();
          suite_.ledger.failed_samples += r.failed;
        }
        for (const auto& q : r.pairs) add_final(q);
        dropped.insert(r.dropped.begin(), r.dropped.end());
      }
      // members of invalid pairs that found no partner leave the suite
      if (!dropped.empty()) {
        std::vector<Sample> kept;
        std::vector<int> kept_labels;
        for (std::size_t i = 0; i < suite_.unique_samples.size(); ++i) {
          if (dropped.count(suite_.unique_samples[i])) continue;
          kept.push_back(std::move(suite_.unique_samples[i]));
          kept_labels.push_back(suite_.inherited_labels[i]);
        }
        suite_.unique_samples = std::move(kept);
        suite_.inherited_labels = std::move(kept_labels);
      }
    }
    for (const auto& x : suite_.unique_samples) {
      if (is_idi_sample(x)) suite_.idi_samples.push_back(x);
    }
  }

  const GeneratorSpec& spec_;
  const Model& model_;
  const Dataset& test_;
  std::size_t sensitive_;
  std::optional<std::size_t> causal_;
  std::size_t budget_;
  std::mt19937_64 rng_;
  TestIndex index_;
  LabelCache labels_;
  std::vector<std::size_t> mutable_;
  std::size_t sweep_cursor_ = 0;
  int origin_label_ = 0;

  TestSuite suite_;
  SampleSet seen_;
  std::unordered_set<Sample, SampleHash> counted_;
  std::unordered_set<Sample, SampleHash> invalid_keys_;
  std::unordered_set<Sample, SampleHash> final_keys_;
  std::vector<Pair> invalid_;
};

void check_run_args(const GeneratorSpec& spec, const Model& model, const Dataset& test,
                    std::size_t sensitive) {
  spec.validate();
  test.require_rows("generation");
  if (test.n_features() != model.input_width()) {
    throw Error(ErrorCode::WidthMismatch, "test data width does not match the model");
  }
  if (sensitive >= test.n_features()) {
    throw Error(ErrorCode::UnknownFeature, "sensitive index out of range");
  }
  if (test.domain(sensitive).size() < 2) {
    throw Error(ErrorCode::EmptyDomain, "sensitive feature has a single admissible value");
  }
}

}  // namespace

bool is_true_idi(const Pair& pair, const Model& model, std::size_t sensitive) {
  check_pair_width(pair, model);
  const auto diff = differing(pair.a, pair.b);
  if (diff.size() != 1 || diff[0] != sensitive) return false;
  return model.label(pair.a) != model.label(pair.b);
}

bool is_relaxed_idi(const Pair& pair, const Model& model, std::size_t sensitive, std::size_t causal) {
  if (sensitive == causal) throw Error(ErrorCode::IndexCollision, "sensitive and causal indices coincide");
  check_pair_width(pair, model);
  const auto diff = differing(pair.a, pair.b);
  if (diff.empty()) return false;
  for (std::size_t j : diff) {
    if (j != sensitive && j != causal) return false;
  }
  return model.label(pair.a) != model.label(pair.b);
}

Sample perturb_values(std::span<const Code> sample, std::span<const std::size_t> mutable_features,
                      std::span<const ValueDomain> domains, std::mt19937_64& rng) {
  Sample out(sample.begin(), sample.end());
  for (std::size_t j : mutable_features) {
    if (j >= domains.size() || j >= out.size()) {
      throw Error(ErrorCode::InvalidArgument, "mutable feature index out of range");
    }
    if (domains[j].size() == 0) throw Error(ErrorCode::EmptyDomain, "empty domain");
    out[j] = uniform_other(domains[j], out[j], rng);
  }
  return out;
}

TestSuite run_base_generator(const GeneratorSpec& spec, const Model& model, const Dataset& test_data,
                             std::size_t sensitive, std::size_t budget, std::uint64_t seed) {
  check_run_args(spec, model, test_data, sensitive);
  return Run(spec, model, test_data, sensitive, std::nullopt, budget, seed).execute();
}

TestSuite run_causalft(const GeneratorSpec& spec, const Model& model, const Dataset& test_data,
                       std::size_t sensitive, std::size_t causal, std::size_t budget, std::uint64_t seed) {
  check_run_args(spec, model, test_data, sensitive);
  if (causal == sensitive) throw Error(ErrorCode::IndexCollision, "sensitive and causal indices coincide");
  if (causal >= test_data.n_features()) throw Error(ErrorCode::UnknownFeature, "causal index out of range");
  return Run(spec, model, test_data, sensitive, causal, budget, seed).execute();
}

RepairOutcome repair_invalid(const Pair& pair, const Dataset& test_data, const Model& model,
                             std::size_t sensitive, std::mt19937_64& rng) {
  check_pair_width(pair, model);
  TestIndex index(test_data, sensitive);
  LabelCache labels(model);
  return repair_with_index(pair, index, labels, sensitive, rng);
}

void write_suite(std::ostream& out, const TestSuite& suite) {
  for (const auto& s : suite.unique_samples) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (j) out << ',';
      out << s[j];
    }
    out << '\n';
  }
  out << '\n' << to_json(suite.ledger).dump(2) << '\n';
}

}  // namespace causalft
