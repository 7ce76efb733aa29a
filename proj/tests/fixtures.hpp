#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causalft/data.hpp"
#include "causalft/models.hpp"

namespace fixtures {

using causalft::Code;
using causalft::Dataset;
using causalft::FeatureKind;
using causalft::Model;
using causalft::Sample;
using causalft::Schema;
using causalft::ValueDomain;

inline Schema schema(std::vector<std::string> names, std::vector<std::string> sensitive,
                     std::vector<FeatureKind> kinds = {}) {
  Schema s;
  s.feature_names = std::move(names);
  s.sensitive_features = std::move(sensitive);
  s.label_name = "y";
  s.kinds = kinds.empty() ? std::vector<FeatureKind>(s.feature_names.size(), FeatureKind::Integer) : kinds;
  s.validate();
  return s;
}

// Domains default to the observed [min, max] of each column.
inline Dataset dataset(const Schema& schema, const std::vector<Sample>& rows, const std::vector<int>& labels,
                       std::vector<ValueDomain> domains = {}) {
  std::vector<Code> cells;
  for (const auto& r : rows) cells.insert(cells.end(), r.begin(), r.end());
  if (domains.empty()) {
    for (std::size_t j = 0; j < schema.width(); ++j) {
      Code lo = rows.front()[j], hi = rows.front()[j];
      for (const auto& r : rows) {
        lo = std::min(lo, r[j]);
        hi = std::max(hi, r[j]);
      }
      domains.push_back(ValueDomain::range(lo, hi));
    }
  }
  return Dataset(schema, cells, labels, domains, {});
}

// Logistic model acting directly on raw codes.
inline Model logistic(const std::vector<double>& w, double b) {
  const auto d = static_cast<Eigen::Index>(w.size());
  Model::Layer layer;
  layer.weights = Eigen::Map<const Eigen::RowVectorXd>(w.data(), d);
  layer.bias = Eigen::VectorXd::Constant(1, b);
  return Model(causalft::ModelConfig::logistic(), Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d), {layer});
}

// Every point of {0,1}^4 once, labelled by the model itself.
struct Binary4 {
  Schema schema;
  Dataset data;
  Model model;
};

inline Binary4 binary4() {
  Binary4 f;
  f.schema = schema({"s", "a", "b", "c"}, {"s"});
  f.model = logistic({2.0, 1.0, -1.5, 0.5}, -1.2);
  std::vector<Sample> rows;
  std::vector<int> labels;
  for (int m = 0; m < 16; ++m) {
    Sample x{m & 1, (m >> 1) & 1, (m >> 2) & 1, (m >> 3) & 1};
    labels.push_back(f.model.label(x));
    rows.push_back(std::move(x));
  }
  f.data = dataset(f.schema, rows, labels);
  return f;
}

// Random multi-valued integer data; labels from a noisy linear rule.
inline Dataset random_table(std::size_t n, std::size_t width, Code hi, std::uint64_t seed) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < width; ++j) names.push_back("f" + std::to_string(j));
  const Schema s = schema(names, {"f0"});
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Code> value(0, hi);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Sample> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    Sample x(width);
    double z = 0;
    for (std::size_t j = 0; j < width; ++j) {
      x[j] = value(rng);
      z += (j % 2 ? 1.0 : -0.7) * (x[j] - hi / 2.0);
    }
    labels.push_back(z + noise(rng) > 0 ? 1 : 0);
    rows.push_back(std::move(x));
  }
  std::vector<ValueDomain> domains(width, ValueDomain::range(0, hi));
  return dataset(s, rows, labels, domains);
}

// Linear non-Gaussian SEM over five variables with uniform noise.
// B(j, i) is the coefficient of i -> j.
struct Sem5 {
  Eigen::MatrixXd data;
  Eigen::MatrixXd weights;
  std::vector<std::string> nodes{"x0", "x1", "x2", "x3", "x4"};
};

inline Sem5 sem5(std::size_t n, std::uint64_t seed) {
  Sem5 f;
  f.weights = Eigen::MatrixXd::Zero(5, 5);
  f.weights(1, 0) = 1.5;
  f.weights(2, 1) = -1.2;
  f.weights(3, 0) = 0.9;
  f.weights(4, 2) = 0.8;
  f.weights(4, 3) = -1.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> e(-1.0, 1.0);
  f.data.resize(static_cast<Eigen::Index>(n), 5);
  for (Eigen::Index i = 0; i < f.data.rows(); ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) {
      // variables are listed in causal order
      f.data(i, j) = f.weights.row(j).head(j).dot(f.data.row(i).head(j)) + e(rng);
    }
  }
  return f;
}

}  // namespace fixtures
