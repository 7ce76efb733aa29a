#include <doctest.h>

#include <cmath>
#include <sstream>

#include "causalft/causal.hpp"
#include "causalft/error.hpp"
#include "fixtures.hpp"

using namespace causalft;

namespace {

// s -> c -> y with a direct s -> y edge; all variables binary.
struct ThreeNode {
  Dataset data;
  CausalGraph graph;
  double s_c = 0.8, c_y = 0.7, s_y = 0.25;
};

ThreeNode three_node() {
  ThreeNode f;
  const std::vector<Sample> rows{{0, 0}, {0, 1}, {1, 1}, {1, 0}, {1, 1}, {0, 0}, {1, 0}, {0, 1}, {1, 1}, {0, 0}};
  const std::vector<int> y{0, 1, 1, 0, 0, 1, 1, 0, 1, 0};
  f.data = fixtures::dataset(fixtures::schema({"s", "c"}, {"s"}), rows, y);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  w(1, 0) = f.s_c;
  w(2, 1) = f.c_y;
  w(2, 0) = f.s_y;
  f.graph = make_graph({"s", "c", "y"}, w);
  return f;
}

// Exhaustive do-intervention oracle written against the three-node equations.
double three_node_oracle(const ThreeNode& f) {
  const std::size_t n = f.data.n_rows();
  auto p_do_s = [&](double a) {
    double hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = f.data.at(i, 0), c = f.data.at(i, 1), y = f.data.label(i);
      const double ec = c - f.s_c * s, ey = y - f.c_y * c - f.s_y * s;
      const double c2 = f.s_c * a + ec;
      hits += f.c_y * c2 + f.s_y * a + ey >= 0.5;
    }
    return hits / n;
  };
  auto p_do_c = [&](double b) {
    double hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = f.data.at(i, 0), c = f.data.at(i, 1), y = f.data.label(i);
      const double ey = y - f.c_y * c - f.s_y * s;
      hits += f.c_y * b + f.s_y * s + ey >= 0.5;
    }
    return hits / n;
  };
  double total = 0;
  for (double a : {0.0, 1.0}) {
    for (double b : {0.0, 1.0}) total += std::abs(p_do_s(a) - p_do_c(b));
  }
  return f.s_c * total / 4;
}

std::size_t edges_matching(const CausalGraph& g, const Eigen::MatrixXd& truth, double* worst_coef) {
  std::size_t hit = 0;
  for (Eigen::Index r = 0; r < truth.rows(); ++r) {
    for (Eigen::Index c = 0; c < truth.cols(); ++c) {
      if (truth(r, c) != 0 && g.weights(r, c) != 0) {
        ++hit;
        *worst_coef = std::max(*worst_coef, std::abs(truth(r, c) - g.weights(r, c)));
      }
    }
  }
  return hit;
}

}  // namespace

TEST_CASE("graph construction and structure") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  w(1, 0) = 1;
  w(2, 1) = 1;
  const auto g = make_graph({"a", "b", "y"}, w);
  CHECK(g.is_acyclic());
  CHECK(g.order_is_consistent());
  CHECK(g.edge_count() == 2);
  CHECK(g.has_edge(0, 1));
  CHECK_FALSE(g.has_edge(1, 0));
  CHECK(g.reachable_from(0) == std::vector<bool>{false, true, true});

  w(0, 2) = 1;
  CHECK_THROWS_AS(make_graph({"a", "b", "y"}, w), Error);
}

TEST_CASE("two-edge SEM is recovered") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> e(-1, 1);
  Eigen::MatrixXd x(5000, 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x(i, 0) = e(rng);
    x(i, 1) = 2.0 * x(i, 0) + e(rng);
    x(i, 2) = -1.5 * x(i, 1) + e(rng);
  }
  const auto g = discover_graph(x, {"x1", "x2", "y"});
  CHECK(g.edge_count() == 2);
  CHECK(g.coefficient(0, 1) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(g.coefficient(1, 2) == doctest::Approx(-1.5).epsilon(0.1));
  CHECK(g.is_acyclic());
}

TEST_CASE("independent columns give no edges") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> e(-1, 1);
  Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(5000, 5, [&] { return e(rng); });
  const auto g = discover_graph(x, {"a", "b", "c", "d", "e"});
  CHECK(g.edge_count() == 0);
}

TEST_CASE("five-variable SEM recovery") {
  const auto f = fixtures::sem5(5000, 1);
  const auto g = discover_graph(f.data, f.nodes);
  double worst = 0;
  CHECK(edges_matching(g, f.weights, &worst) == 5);
  CHECK(g.edge_count() == 5);
  CHECK(worst <= 0.2);
}

TEST_CASE("label is a sink and the graph stays acyclic on tabular data") {
  const auto d = fixtures::random_table(600, 4, 5, 4);
  const auto g = discover_graph(d, "f0", 1);
  CHECK(g.is_acyclic());
  CHECK(g.order_is_consistent());
  const auto y = g.require_node("y");
  for (std::size_t j = 0; j < g.size(); ++j) CHECK_FALSE(g.has_edge(y, j));
  // a subsample still yields a graph over every node
  CHECK(discover_graph(d, "f0", 1, 0.5).size() == 5);
  CHECK_THROWS_AS(discover_graph(d, "f0", 1, 0.1), Error);
}

TEST_CASE("direct features") {
  // age -> marital -> gender -> label, age -> marital -> label
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
  w(1, 0) = 0.5;
  w(2, 1) = 0.4;
  w(3, 2) = 0.3;
  w(3, 1) = 0.6;
  const auto g = make_graph({"age", "marital", "gender", "label"}, w);
  CHECK(direct_features(g, "age", "label") == std::vector<std::string>{"marital"});

  Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(4, 4);
  chain(1, 0) = 1;
  chain(2, 1) = 1;
  chain(3, 2) = 1;
  CHECK(direct_features(make_graph({"s", "a", "b", "label"}, chain), "s", "label") ==
        std::vector<std::string>{"a"});

  Eigen::MatrixXd dead_end = Eigen::MatrixXd::Zero(3, 3);
  dead_end(1, 0) = 1;
  CHECK(direct_features(make_graph({"s", "a", "label"}, dead_end), "s", "label").empty());
  CHECK_THROWS_AS(direct_features(g, "race", "label"), Error);
}

TEST_CASE("causal effect matches exhaustive enumeration") {
  const auto f = three_node();
  const double oracle = three_node_oracle(f);
  CHECK(oracle == doctest::Approx(0.24));
  const double effect = causal_effect(f.graph, f.data, "s", "c", f.data.n_rows(), 0);
  CHECK(std::abs(effect - oracle) <= 0.02 * oracle);
}

TEST_CASE("causal effect edge cases") {
  auto f = three_node();
  // a label with no structural parents is constant under every intervention
  Eigen::MatrixXd w = f.graph.weights;
  w(2, 0) = 0;
  w(2, 1) = 0;
  const auto flat = make_graph(f.graph.nodes, w);
  CHECK_THROWS_AS(causal_effect(flat, f.data, "s", "c", 10, 0), Error);  // c no longer reaches y

  Eigen::MatrixXd tiny = f.graph.weights;
  tiny(2, 1) = 1e-9;
  tiny(2, 0) = 0;
  const auto weak = make_graph(f.graph.nodes, tiny, 0);
  CHECK(causal_effect(weak, f.data, "s", "c", 10, 0) >= 0.0);

  CHECK_THROWS_AS(causal_effect(f.graph, f.data, "s", "c", 0, 0), Error);
  CHECK_THROWS_AS(causal_effect(f.graph, f.data, "s", "c", 11, 0), Error);
  try {
    causal_effect(f.graph, f.data, "c", "s", 5, 0);
    FAIL("expected NotDirectlyRelevant");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotDirectlyRelevant);
  }
}

TEST_CASE("constant structural label gives zero effect") {
  const auto f = three_node();
  const Eigen::MatrixXd rows = node_matrix(f.data);
  Eigen::MatrixXd constant_rows = rows;
  constant_rows.col(2).setZero();
  Eigen::MatrixXd w = f.graph.weights;
  w(2, 0) = 0;
  w(2, 1) = 1e-12;
  const auto g = make_graph(f.graph.nodes, w, 0);
  const auto est = intervention_effect(g, constant_rows, 2, 0, 1, {0, 1}, {0, 1});
  CHECK(est.effect == doctest::Approx(0.0));
}

TEST_CASE("bootstrap effect") {
  const auto f = three_node();
  const auto one = bootstrap_effect(f.graph, f.data, "s", "c", 6, 1, 5);
  REQUIRE(one.raw_repeats.size() == 1);
  CHECK(one.effect == one.raw_repeats[0]);

  const auto many = bootstrap_effect(f.graph, f.data, "s", "c", 6, 20, 5);
  CHECK(many.raw_repeats.size() == 20);
  CHECK(many.effect >= *std::min_element(many.raw_repeats.begin(), many.raw_repeats.end()));
  CHECK(many.effect <= *std::max_element(many.raw_repeats.begin(), many.raw_repeats.end()));
  for (double r : many.raw_repeats) CHECK(r >= 0.0);

  const auto again = bootstrap_effect(f.graph, f.data, "s", "c", 6, 20, 5);
  CHECK(again.effect == many.effect);
  CHECK(again.raw_repeats == many.raw_repeats);
}

TEST_CASE("causal feature selection") {
  const std::vector<std::string> order{"Lsat", "Decile1b", "Decile3"};
  CHECK(select_causal_feature({{"Lsat", 4.75, {}}, {"Decile3", 2.29, {}}, {"Decile1b", 2.11, {}}}, order) == "Lsat");
  CHECK(select_causal_feature({{"b", 1.0, {}}, {"a", 1.0, {}}}, {"a", "b"}) == "a");
  try {
    select_causal_feature({}, order);
    FAIL("expected NoDirectFeature");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoDirectFeature);
  }
}

TEST_CASE("correlation feature selection") {
  const auto s = fixtures::schema({"s", "copy", "noise"}, {"s"});
  std::vector<Sample> rows;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    rows.push_back({i % 2, i % 2, (i / 2) % 3});
    y.push_back(i % 3 == 0);
  }
  CHECK(select_correlation_feature(fixtures::dataset(s, rows, y), "s") == "copy");

  // |r| = 0.9 beats r = 0.5 regardless of sign
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<Sample> mixed;
  std::vector<double> sv, a, b;
  for (int i = 0; i < 4000; ++i) {
    const double z = g(rng);
    sv.push_back(z);
    a.push_back(-0.9 * z + std::sqrt(1 - 0.81) * g(rng));
    b.push_back(0.5 * z + std::sqrt(1 - 0.25) * g(rng));
  }
  for (int i = 0; i < 4000; ++i) {
    mixed.push_back({static_cast<Code>(std::lround(sv[i] * 10)), static_cast<Code>(std::lround(b[i] * 10)),
                     static_cast<Code>(std::lround(a[i] * 10))});
  }
  const auto s2 = fixtures::schema({"s", "pos", "neg"}, {"s"});
  CHECK(select_correlation_feature(fixtures::dataset(s2, mixed, std::vector<int>(4000, 0)), "s") == "neg");

  // equal |r| resolves to the lowest index; other protected features are skipped
  const auto s3 = fixtures::schema({"s", "t", "a", "b"}, {"s", "t"});
  std::vector<Sample> tie;
  for (int i = 0; i < 8; ++i) tie.push_back({i % 2, i % 2, i % 4 < 2, i % 4 < 2});
  CHECK(select_correlation_feature(fixtures::dataset(s3, tie, std::vector<int>(8, 1)), "s") == "a");
}

TEST_CASE("graph distances") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 3);
  w(1, 0) = 1;
  const auto a = make_graph({"a", "b", "y"}, w);
  CHECK(hamming_distance(a, a) == 0);
  w(2, 1) = 0.5;
  const auto b = make_graph({"a", "b", "y"}, w);
  CHECK(hamming_distance(a, b) == 1);
  CHECK(graph_stability({a, a, b}) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(hamming_distance(a, make_graph({"p", "q", "y"}, w)), Error);
}

TEST_CASE("edge list round trip") {
  const auto f = fixtures::sem5(2000, 4);
  const auto g = discover_graph(f.data, f.nodes);
  std::stringstream io;
  write_edge_list(io, g);
  const auto back = read_edge_list(io, f.nodes);
  CHECK(back.weights == g.weights);
}
