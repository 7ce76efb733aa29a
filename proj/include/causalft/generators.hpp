#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "causalft/data.hpp"
#include "causalft/models.hpp"

namespace causalft {

struct SampleHash {
  std::size_t operator()(const Sample& s) const noexcept;
};
using SampleSet = std::unordered_set<Sample, SampleHash>;

struct Pair {
  Sample a;
  Sample b;
  bool a_from_test = false;
  bool b_from_test = false;

  bool has_test_member() const { return a_from_test || b_from_test; }
};

enum class GeneratorKind { Random, SgLite, AdfLite };

std::string_view to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(std::string_view name);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::Random;
  // ADF-lite: gradient-guided moves per seed before giving up on it
  int global_steps = 5;
  // ADF-lite local refinements around a discriminatory pair; SG-lite sweep
  // length per seed
  int local_steps = 10;
  // integer move per feature (ADF-lite, SG-lite)
  int step_size = 1;
  // consecutive seeds that add no new sample before the run gives up
  int max_attempts_per_pair = 1000;

  void validate() const;
};

nlohmann::json to_json(const GeneratorSpec& spec);
GeneratorSpec generator_spec_from_json(const nlohmann::json& doc);

// Pair accounting. Base runs fill pairs_without_relaxation; causal runs fill
// the remaining counters.
struct PairLedger {
  std::size_t pairs_without_relaxation = 0;
  std::size_t pairs_with_relaxation = 0;
  std::size_t invalid_pairs = 0;
  std::size_t repaired_pairs = 0;
  std::size_t failed_samples = 0;

  PairLedger& operator+=(const PairLedger& other);
  bool operator==(const PairLedger&) const = default;
};

nlohmann::json to_json(const PairLedger& ledger);

enum class SuiteMode { Base, CausalFt };

struct TestSuite {
  std::vector<Sample> unique_samples;  // in discovery order
  // True label of the test row each sample was derived from; aligned with
  // unique_samples.
  std::vector<int> inherited_labels;
  // Samples with a partner differing only at the sensitive feature that the
  // model labels differently; in discovery order.
  std::vector<Sample> idi_samples;
  // True-definition pairs found during the run. In causal mode every pair has
  // a test-data member.
  std::vector<Pair> idi_pairs;
  PairLedger ledger;
  std::uint64_t seed = 0;
  SuiteMode mode = SuiteMode::Base;
  // false when the run gave up before filling the budget; the suite can also
  // end below budget because unrepairable samples are discarded
  bool budget_reached = true;
  // causal mode was requested but no causal feature existed
  bool fell_back_to_base = false;

  // Union of samples and pairs with ledger addition.
  TestSuite& merge(const TestSuite& other);
};

// Exactly the sensitive feature differs and the predicted labels differ.
bool is_true_idi(const Pair& pair, const Model& model, std::size_t sensitive);
// Samples agree outside {sensitive, causal}, differ somewhere inside it, and
// the predicted labels differ.
bool is_relaxed_idi(const Pair& pair, const Model& model, std::size_t sensitive, std::size_t causal);

// Resamples every index in `mutable_features` uniformly from its domain,
// avoiding the current value unless the domain is a singleton.
Sample perturb_values(std::span<const Code> sample, std::span<const std::size_t> mutable_features,
                      std::span<const ValueDomain> domains, std::mt19937_64& rng);

TestSuite run_base_generator(const GeneratorSpec& spec, const Model& model, const Dataset& test_data,
                             std::size_t sensitive, std::size_t budget, std::uint64_t seed);

TestSuite run_causalft(const GeneratorSpec& spec, const Model& model, const Dataset& test_data,
                       std::size_t sensitive, std::size_t causal, std::size_t budget, std::uint64_t seed);

struct RepairOutcome {
  std::vector<Pair> pairs;
  std::size_t failed = 0;
  std::vector<Sample> dropped;  // members left without a partner
  bool was_valid = false;  // input already met the true definition
};

// Re-pairs each member of a relaxed-valid pair with a partner that differs
// from it only at the sensitive feature and is predicted differently: a test
// row when one exists, otherwise the member with another admissible sensitive
// value. Members without a partner are reported as dropped.
RepairOutcome repair_invalid(const Pair& pair, const Dataset& test_data, const Model& model,
                             std::size_t sensitive, std::mt19937_64& rng);

// One sample per line (comma-separated codes), a blank line, then the ledger
// as a JSON object.
void write_suite(std::ostream& out, const TestSuite& suite);

}  // namespace causalft
