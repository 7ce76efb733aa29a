#include <doctest.h>

#include <set>
#include <sstream>

#include "causalft/error.hpp"
#include "causalft/generators.hpp"
#include "fixtures.hpp"

using namespace causalft;

namespace {

std::set<Sample> brute_force_idi(const fixtures::Binary4& f, std::size_t s) {
  std::set<Sample> out;
  for (std::size_t i = 0; i < f.data.n_rows(); ++i) {
    Sample x = f.data.sample(i);
    Sample y = x;
    y[s] = 1 - y[s];
    if (f.model.label(x) != f.model.label(y)) out.insert(x);
  }
  return out;
}

// A sample is discriminatory when some other admissible sensitive value flips
// the model's label.
bool has_flip(const Sample& x, const Model& m, std::size_t s, const ValueDomain& d) {
  for (Code v : d.values()) {
    if (v == x[s]) continue;
    Sample y = x;
    y[s] = v;
    if (m.label(y) != m.label(x)) return true;
  }
  return false;
}

std::size_t differences(const Sample& a, const Sample& b) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < a.size(); ++j) n += a[j] != b[j];
  return n;
}

GeneratorSpec spec_of(GeneratorKind kind) {
  GeneratorSpec s;
  s.kind = kind;
  return s;
}

const GeneratorKind kKinds[] = {GeneratorKind::Random, GeneratorKind::SgLite, GeneratorKind::AdfLite};

}  // namespace

TEST_CASE("true definition") {
  const auto m = fixtures::logistic({5, 0, 0, 0, 0}, -2.5);
  CHECK(is_true_idi({{0, 7, 4, 5, 1}, {1, 7, 4, 5, 1}}, m, 0));
  CHECK_FALSE(is_true_idi({{0, 7, 4, 5, 1}, {0, 7, 4, 5, 1}}, m, 0));
  CHECK_FALSE(is_true_idi({{0, 7, 4, 5, 1}, {1, 6, 4, 5, 1}}, m, 0));
  // same sensitive difference but equal labels
  CHECK_FALSE(is_true_idi({{0, 7, 4, 5, 1}, {1, 7, 4, 5, 1}}, fixtures::logistic({0, 1, 0, 0, 0}, -1), 0));
}

TEST_CASE("relaxed definition") {
  // sensitive at index 5, causal feature at index 7
  const auto m = fixtures::logistic({0, 0, 0, 0, 0, 0.2, 0, 0.3, 0}, -9);
  const Sample a{2, 1, 0, 3, 1, 20, 0, 10, 5};
  const Sample b{2, 1, 0, 3, 1, 60, 0, 35, 5};
  REQUIRE(m.label(a) != m.label(b));
  CHECK(is_relaxed_idi({a, b}, m, 5, 7));
  Sample c = b;
  c[0] = 3;
  CHECK_FALSE(is_relaxed_idi({a, c}, m, 5, 7));
  CHECK_FALSE(is_relaxed_idi({a, a}, m, 5, 7));
  CHECK_THROWS_AS(is_relaxed_idi({a, b}, m, 5, 5), Error);
}

TEST_CASE("true implies relaxed on random pairs") {
  const auto m = fixtures::logistic({1.1, -0.4, 0.7, 0.2}, -1.5);
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<Code> v(0, 3);
  std::uniform_int_distribution<int> coin(0, 3);
  std::size_t true_count = 0;
  for (int k = 0; k < 2000; ++k) {
    Sample a{v(rng), v(rng), v(rng), v(rng)};
    Sample b = a;
    // bias the draw toward near pairs so that true IDIs occur
    for (std::size_t j = 0; j < 4; ++j) {
      if (j == 0 || coin(rng) == 0) b[j] = v(rng);
    }
    const Pair p{a, b};
    if (is_true_idi(p, m, 0)) {
      ++true_count;
      CHECK(is_relaxed_idi(p, m, 0, 2));
    }
  }
  CHECK(true_count > 50);
}

TEST_CASE("perturbation respects domains") {
  std::mt19937_64 rng(1);
  const std::vector<ValueDomain> singles(3, ValueDomain::range(4, 4));
  const Sample x{4, 4, 4};
  const std::vector<std::size_t> all{0, 1, 2};
  CHECK(perturb_values(x, all, singles, rng) == x);

  const std::vector<ValueDomain> domains{ValueDomain::range(0, 5), ValueDomain::set({1, 3, 9}),
                                         ValueDomain::range(2, 3)};
  for (int k = 0; k < 500; ++k) {
    const Sample y{2, 3, 2};
    const std::vector<std::size_t> pick{1, 2};
    const auto z = perturb_values(y, pick, domains, rng);
    CHECK(z[0] == 2);
    CHECK(z[1] != 3);
    CHECK(z[2] == 3);
    for (std::size_t j = 0; j < 3; ++j) CHECK(domains[j].contains(z[j]));
  }
}

TEST_CASE("generator spec") {
  GeneratorSpec s;
  s.local_steps = 0;
  CHECK_THROWS_AS(s.validate(), Error);
  CHECK(generator_spec_from_json("adf_lite").kind == GeneratorKind::AdfLite);
  const auto round = generator_spec_from_json(to_json(spec_of(GeneratorKind::SgLite)));
  CHECK(round.kind == GeneratorKind::SgLite);
  CHECK_THROWS_AS(generator_kind_from_string("aequitas"), Error);
}

TEST_CASE("zero budget gives an empty suite") {
  const auto f = fixtures::binary4();
  for (auto kind : kKinds) {
    CHECK(run_base_generator(spec_of(kind), f.model, f.data, 0, 0, 1).unique_samples.empty());
    CHECK(run_causalft(spec_of(kind), f.model, f.data, 0, 1, 0, 1).unique_samples.empty());
  }
}

TEST_CASE("saturated suites match exhaustive enumeration") {
  const auto f = fixtures::binary4();
  const auto oracle = brute_force_idi(f, 0);
  // s flips the label exactly when a - 1.5b + 0.5c - 1.2 lies in [-2, 0):
  // five of the eight (a, b, c) settings, each with both values of s
  REQUIRE(oracle.size() == 10);
  for (auto kind : kKinds) {
    CAPTURE(to_string(kind));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto base = run_base_generator(spec_of(kind), f.model, f.data, 0, 16, seed);
      CHECK(std::set<Sample>(base.idi_samples.begin(), base.idi_samples.end()) == oracle);
      const auto causal = run_causalft(spec_of(kind), f.model, f.data, 0, 1, 16, seed);
      CHECK(std::set<Sample>(causal.idi_samples.begin(), causal.idi_samples.end()) == oracle);
    }
  }
}

TEST_CASE("suite laws on a multi-valued table") {
  const auto data = fixtures::random_table(400, 5, 6, 12);
  const auto model = fixtures::logistic({0.9, 0.3, -0.5, 0.2, 0.1}, -2.5);
  const std::size_t s = 0, c = 3;
  for (auto kind : kKinds) {
    CAPTURE(to_string(kind));
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      for (bool causal : {false, true}) {
        const auto suite = causal ? run_causalft(spec_of(kind), model, data, s, c, 300, seed)
                                  : run_base_generator(spec_of(kind), model, data, s, 300, seed);
        CHECK(suite.unique_samples.size() <= 300);
        CHECK(suite.inherited_labels.size() == suite.unique_samples.size());
        CHECK(SampleSet(suite.unique_samples.begin(), suite.unique_samples.end()).size() ==
              suite.unique_samples.size());
        // domain law
        for (const auto& x : suite.unique_samples) {
          for (std::size_t j = 0; j < x.size(); ++j) CHECK(data.domain(j).contains(x[j]));
        }
        // every reported IDI is discriminatory, and no other sample is
        const SampleSet idi(suite.idi_samples.begin(), suite.idi_samples.end());
        for (const auto& x : suite.unique_samples) {
          CHECK(has_flip(x, model, s, data.domain(s)) == (idi.count(x) > 0));
        }
        for (const auto& p : suite.idi_pairs) CHECK(is_true_idi(p, model, s));
        // ledger law
        const auto& l = suite.ledger;
        CHECK(l.repaired_pairs <= l.invalid_pairs);
        if (causal) {
          CHECK(l.pairs_without_relaxation == 0);
          CHECK(l.invalid_pairs <= l.pairs_with_relaxation);
          CHECK(l.failed_samples <= 2 * (l.invalid_pairs - l.repaired_pairs) + l.repaired_pairs);
        } else {
          CHECK(l.pairs_with_relaxation == 0);
          CHECK(l.invalid_pairs == 0);
        }
      }
    }
  }
}

TEST_CASE("causal pairs keep their difference inside the fixed features") {
  // with a model blind to the sensitive feature no pair is truly valid, so
  // every banked relaxed pair stays visible through the ledger
  const auto data = fixtures::random_table(300, 4, 5, 2);
  const auto model = fixtures::logistic({0.0, 0.4, 0.6, -0.3}, -1.5);
  const auto suite = run_causalft(spec_of(GeneratorKind::Random), model, data, 0, 2, 200, 8);
  CHECK(suite.idi_samples.empty());
  CHECK(suite.idi_pairs.empty());
  CHECK(suite.ledger.repaired_pairs == 0);
  CHECK(suite.ledger.failed_samples == 2 * suite.ledger.invalid_pairs);
  CHECK(suite.ledger.invalid_pairs == suite.ledger.pairs_with_relaxation);
}

TEST_CASE("generation is seed deterministic") {
  const auto data = fixtures::random_table(300, 5, 6, 21);
  const auto model = fixtures::logistic({0.9, 0.3, -0.5, 0.2, 0.1}, -2.5);
  for (auto kind : kKinds) {
    const auto a = run_causalft(spec_of(kind), model, data, 0, 1, 250, 42);
    const auto b = run_causalft(spec_of(kind), model, data, 0, 1, 250, 42);
    CHECK(a.unique_samples == b.unique_samples);
    CHECK(a.idi_samples == b.idi_samples);
    CHECK(a.ledger == b.ledger);
    const auto c = run_base_generator(spec_of(kind), model, data, 0, 250, 42);
    const auto d = run_base_generator(spec_of(kind), model, data, 0, 250, 42);
    CHECK(c.unique_samples == d.unique_samples);
  }
}

TEST_CASE("argument checks") {
  const auto f = fixtures::binary4();
  CHECK_THROWS_AS(run_base_generator(spec_of(GeneratorKind::Random), f.model, f.data, 7, 10, 1), Error);
  CHECK_THROWS_AS(run_causalft(spec_of(GeneratorKind::Random), f.model, f.data, 0, 0, 10, 1), Error);
  CHECK_THROWS_AS(run_base_generator(spec_of(GeneratorKind::Random), fixtures::logistic({1, 1}, 0), f.data, 0,
                                     10, 1),
                  Error);
  const auto flat = fixtures::dataset(f.schema, {{0, 1, 0, 1}, {0, 0, 1, 1}}, {1, 0});
  try {
    run_base_generator(spec_of(GeneratorKind::Random), f.model, flat, 0, 10, 1);
    FAIL("expected EmptyDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDomain);
  }
}

TEST_CASE("unreachable budget stops softly") {
  const auto f = fixtures::binary4();
  for (auto kind : kKinds) {
    const auto suite = run_base_generator(spec_of(kind), f.model, f.data, 0, 100, 1);
    CHECK(suite.unique_samples.size() <= 16);
    CHECK_FALSE(suite.budget_reached);
  }
  // SG-lite sweeps every neighbour of each start, so it covers the whole space
  CHECK(run_base_generator(spec_of(GeneratorKind::SgLite), f.model, f.data, 0, 100, 1).unique_samples.size() == 16);
}

TEST_CASE("repair of invalid pairs") {
  // features: s (binary), c, x
  const auto schema = fixtures::schema({"s", "c", "x"}, {"s"});
  const std::vector<ValueDomain> domains{ValueDomain::range(0, 1), ValueDomain::range(0, 4),
                                         ValueDomain::range(0, 2)};
  const auto test = fixtures::dataset(schema, {{1, 2, 1}, {0, 3, 1}, {0, 0, 0}}, {1, 0, 0}, domains);
  const auto model = fixtures::logistic({3, 0.1, 0}, -1.6);
  std::mt19937_64 rng(1);

  SUBCASE("both members repaired against test rows") {
    const Pair p{{0, 2, 1}, {1, 3, 1}};
    REQUIRE(is_relaxed_idi(p, model, 0, 1));
    REQUIRE_FALSE(is_true_idi(p, model, 0));
    const auto r = repair_invalid(p, test, model, 0, rng);
    CHECK_FALSE(r.was_valid);
    CHECK(r.failed == 0);
    REQUIRE(r.pairs.size() == 2);
    CHECK(r.pairs[0].b == Sample{1, 2, 1});
    CHECK(r.pairs[0].b_from_test);
    CHECK(r.pairs[1].b == Sample{0, 3, 1});
    for (const auto& q : r.pairs) CHECK(is_true_idi(q, model, 0));
  }
  SUBCASE("valid pairs pass through") {
    const Pair p{{0, 2, 1}, {1, 2, 1}};
    const auto r = repair_invalid(p, test, model, 0, rng);
    CHECK(r.was_valid);
    REQUIRE(r.pairs.size() == 1);
    CHECK(r.pairs[0].a == p.a);
    CHECK(r.pairs[0].b == p.b);
  }
  SUBCASE("members without any flipping partner fail") {
    const auto blind = fixtures::logistic({0, 1, 0}, -2.5);
    const Pair p{{0, 2, 1}, {1, 3, 1}};
    REQUIRE(is_relaxed_idi(p, blind, 0, 1));
    const auto r = repair_invalid(p, test, blind, 0, rng);
    CHECK(r.pairs.empty());
    CHECK(r.failed == 2);
    CHECK(r.dropped.size() == 2);
  }
  SUBCASE("a member with no matching test row gets a constructed partner") {
    const Pair p{{0, 4, 2}, {1, 1, 2}};
    REQUIRE(is_relaxed_idi(p, model, 0, 1));
    const auto r = repair_invalid(p, test, model, 0, rng);
    REQUIRE(r.pairs.size() == 2);
    CHECK(r.pairs[0].b == Sample{1, 4, 2});
    CHECK_FALSE(r.pairs[0].b_from_test);
    for (const auto& q : r.pairs) CHECK(is_true_idi(q, model, 0));
  }
}

TEST_CASE("suite serialisation") {
  TestSuite s;
  s.unique_samples = {{1, 2}, {3, 4}};
  s.ledger.pairs_with_relaxation = 5;
  std::ostringstream out;
  write_suite(out, s);
  const auto text = out.str();
  CHECK(text.rfind("1,2\n3,4\n\n", 0) == 0);
  CHECK(nlohmann::json::parse(text.substr(9)).at("pairs_with_relaxation") == 5);
}

TEST_CASE("suite merge") {
  TestSuite a, b;
  a.unique_samples = {{1}, {2}};
  a.inherited_labels = {0, 1};
  a.idi_samples = {{2}};
  a.ledger.invalid_pairs = 1;
  b.unique_samples = {{2}, {3}};
  b.inherited_labels = {1, 1};
  b.idi_samples = {{2}, {3}};
  b.ledger.invalid_pairs = 2;
  a.merge(b);
  CHECK(a.unique_samples == std::vector<Sample>{{1}, {2}, {3}});
  CHECK(a.inherited_labels == std::vector<int>{0, 1, 1});
  CHECK(a.idi_samples == std::vector<Sample>{{2}, {3}});
  CHECK(a.ledger.invalid_pairs == 3);
}

TEST_CASE("the ledger only counts pairs with a test-row member") {
  const auto data = fixtures::random_table(300, 5, 6, 21);
  const auto model = fixtures::logistic({0.9, 0.3, -0.5, 0.2, 0.1}, -2.5);
  for (auto kind : kKinds) {
    const auto base = run_base_generator(spec_of(kind), model, data, 0, 250, 5);
    std::size_t anchored = 0;
    for (const auto& p : base.idi_pairs) anchored += p.has_test_member();
    CHECK(base.ledger.pairs_without_relaxation == anchored);
    const auto causal = run_causalft(spec_of(kind), model, data, 0, 1, 250, 5);
    CHECK(causal.ledger.repaired_pairs <= causal.ledger.invalid_pairs);
    CHECK(causal.ledger.invalid_pairs <= causal.ledger.pairs_with_relaxation);
  }
}
