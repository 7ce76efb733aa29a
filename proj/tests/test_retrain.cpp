#include <doctest.h>

#include "causalft/error.hpp"
#include "causalft/retrain.hpp"
#include "fixtures.hpp"

using namespace causalft;

namespace {

struct Fixture {
  Schema schema = fixtures::schema({"s", "x"}, {"s"});
  std::vector<ValueDomain> domains{ValueDomain::range(0, 1), ValueDomain::range(0, 4)};
  Model model = fixtures::logistic({3, 0.5}, -3.2);  // positive iff s = 1 and x >= 1
  Dataset test = fixtures::dataset(schema, {{1, 2}, {0, 2}, {1, 3}}, {1, 0, 1}, domains);
};

}  // namespace

TEST_CASE("test member anchors the synthetic partner's label") {
  Fixture f;
  REQUIRE(f.model.label(Sample{1, 3}) == 1);
  REQUIRE(f.model.label(Sample{0, 3}) == 0);
  TestSuite suite;
  suite.idi_pairs = {Pair{{1, 3}, {0, 3}, true, false}};
  const auto c = correct_pairs(suite, f.model, f.test);
  REQUIRE(c.size() == 1);
  CHECK(c.samples[0] == Sample{0, 3});
  CHECK(c.labels[0] == 1);
}

TEST_CASE("two test rows: the negative member is relabelled positive") {
  Fixture f;
  TestSuite suite;
  suite.idi_pairs = {Pair{{0, 2}, {1, 2}, true, true}, Pair{{1, 2}, {0, 2}, true, true}};
  const auto c = correct_pairs(suite, f.model, f.test);
  REQUIRE(c.size() == 1);
  CHECK(c.samples[0] == Sample{0, 2});
  CHECK(c.labels[0] == 1);
}

TEST_CASE("two synthetic members share the partner's label") {
  Fixture f;
  TestSuite suite;
  suite.idi_pairs = {Pair{{0, 4}, {1, 4}, false, false}};
  const auto c = correct_pairs(suite, f.model, f.test);
  REQUIRE(c.size() == 2);
  CHECK(c.labels == std::vector<int>{1, 1});
}

TEST_CASE("no pairs, no corrections") {
  Fixture f;
  CHECK(correct_pairs(TestSuite{}, f.model, f.test).empty());
}

TEST_CASE("corrections from a generated suite respect domains") {
  const auto data = fixtures::random_table(400, 4, 5, 3);
  const auto model = fixtures::logistic({0.8, 0.3, -0.2, 0.4}, -2.0);
  const auto suite = run_causalft(GeneratorSpec{}, model, data, 0, 1, 200, 4);
  const auto c = correct_pairs(suite, model, data);
  CHECK_FALSE(c.empty());
  for (const auto& x : c.samples) {
    for (std::size_t j = 0; j < x.size(); ++j) CHECK(data.domain(j).contains(x[j]));
  }
  CHECK(SampleSet(c.samples.begin(), c.samples.end()).size() == c.size());
}

TEST_CASE("retraining without corrections reproduces the control") {
  const auto data = fixtures::random_table(600, 4, 5, 6);
  const auto split = split_train_test(data, 0.7, 1);
  const auto config = ModelConfig::logistic();
  const auto before = train(split.train, config);
  RetrainRequest req;
  req.model_config = config;
  req.sensitive = 0;
  req.causal = 1;
  req.group_rule = GroupRule::range("f0", 0, 2);
  req.budget = 150;
  req.runs = 2;
  req.seed = 9;
  const auto r = retrain_and_retest(req, before, split.train, Corrections{}, split.test);
  CHECK(r.corrections == 0);
  for (std::size_t l = 0; l < before.layers().size(); ++l) {
    CHECK(r.retrained.layers()[l].weights == before.layers()[l].weights);
    CHECK(r.retrained.layers()[l].bias == before.layers()[l].bias);
  }
  REQUIRE(r.before.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) CHECK(r.before[k].idi_ratio == r.after[k].idi_ratio);
  CHECK(r.quality_after.accuracy == r.quality_before.accuracy);
  const auto doc = to_json(r);
  CHECK(doc.at("quality_delta").at("f1") == 0.0);

  req.runs = 0;
  CHECK_THROWS_AS(retrain_and_retest(req, before, split.train, Corrections{}, split.test), Error);
}

TEST_CASE("retraining on corrections changes the model") {
  const auto data = fixtures::random_table(600, 4, 5, 6);
  const auto split = split_train_test(data, 0.7, 2);
  const auto before = train(split.train, ModelConfig::logistic());
  const auto suite = run_causalft(GeneratorSpec{}, before, split.test, 0, 1, 300, 3);
  const auto c = correct_pairs(suite, before, split.test);
  REQUIRE_FALSE(c.empty());
  RetrainRequest req;
  req.model_config = ModelConfig::logistic();
  req.causal = 1;
  req.group_rule = GroupRule::range("f0", 0, 2);
  req.budget = 300;
  req.runs = 1;
  const auto r = retrain_and_retest(req, before, split.train, c, split.test);
  CHECK(r.corrections == c.size());
  CHECK_FALSE(r.retrained == before);
}
