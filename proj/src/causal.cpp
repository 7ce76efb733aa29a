#include "causalft/causal.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "causalft/error.hpp"

namespace causalft {

// ---------------------------------------------------------------- graph

std::optional<std::size_t> CausalGraph::node_index(const std::string& name) const {
  auto it = std::find(nodes.begin(), nodes.end(), name);
  if (it == nodes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - nodes.begin());
}

std::size_t CausalGraph::require_node(const std::string& name) const {
  if (auto i = node_index(name)) return *i;
  throw Error(ErrorCode::UnknownNode, "'" + name + "'");
}

std::size_t CausalGraph::edge_count() const {
  return static_cast<std::size_t>((weights.array() != 0.0).count());
}

std::vector<bool> CausalGraph::reachable_from(std::size_t from) const {
  std::vector<bool> seen(size(), false);
  std::vector<std::size_t> stack{from};
  while (!stack.empty()) {
    auto u = stack.back();
    stack.pop_back();
    for (std::size_t v = 0; v < size(); ++v) {
      if (has_edge(u, v) && !seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

namespace {

// Kahn's algorithm; empty result when the graph has a cycle.
std::vector<std::size_t> topological_sort(const Eigen::MatrixXd& w) {
  const auto n = static_cast<std::size_t>(w.rows());
  std::vector<int> indegree(n, 0);
  for (std::size_t to = 0; to < n; ++to) {
    for (std::size_t from = 0; from < n; ++from) {
      if (w(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from)) != 0.0) ++indegree[to];
    }
  }
  std::vector<std::size_t> order;
  std::vector<bool> done(n, false);
  while (order.size() < n) {
    bool progressed = false;
    for (std::size_t v = 0; v < n; ++v) {
      if (done[v] || indegree[v] != 0) continue;
      done[v] = true;
      order.push_back(v);
      progressed = true;
      for (std::size_t to = 0; to < n; ++to) {
        if (w(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(v)) != 0.0) --indegree[to];
      }
      break;
    }
    if (!progressed) return {};
  }
  return order;
}

}  // namespace

bool CausalGraph::is_acyclic() const { return topological_sort(weights).size() == size(); }

bool CausalGraph::order_is_consistent() const {
  if (topo_order.size() != size()) return false;
  std::vector<std::size_t> position(size(), size());
  for (std::size_t k = 0; k < topo_order.size(); ++k) {
    if (topo_order[k] >= size() || position[topo_order[k]] != size()) return false;
    position[topo_order[k]] = k;
  }
  for (std::size_t from = 0; from < size(); ++from) {
    for (std::size_t to = 0; to < size(); ++to) {
      if (has_edge(from, to) && position[from] >= position[to]) return false;
    }
  }
  return true;
}

CausalGraph make_graph(std::vector<std::string> nodes, Eigen::MatrixXd weights, double edge_threshold) {
  if (weights.rows() != static_cast<Eigen::Index>(nodes.size()) || weights.cols() != weights.rows()) {
    throw Error(ErrorCode::InvalidArgument, "weights must be square over the node set");
  }
  auto order = topological_sort(weights);
  if (order.size() != nodes.size()) throw Error(ErrorCode::InvalidArgument, "weights contain a cycle");
  return {std::move(nodes), std::move(weights), std::move(order), edge_threshold};
}

// ---------------------------------------------------------------- DirectLiNGAM

namespace {

double mean(const Eigen::VectorXd& v) { return v.mean(); }

double population_variance(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return (v.array() - m).square().mean();
}

Eigen::VectorXd standardized(const Eigen::VectorXd& v) {
  const double sd = std::sqrt(population_variance(v));
  if (sd <= 0) return Eigen::VectorXd::Zero(v.size());
  return (v.array() - mean(v)) / sd;
}

// Residual of xi after regressing it on xj (both centred by the covariance).
Eigen::VectorXd residual(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj) {
  const double var_j = population_variance(xj);
  if (var_j <= 0) return xi;
  const double cov = ((xi.array() - xi.mean()) * (xj.array() - xj.mean())).mean();
  return xi - (cov / var_j) * xj;
}

// Maximum-entropy approximation of differential entropy for a unit-variance
// variable (Hyvarinen 1998).
double entropy(const Eigen::VectorXd& u) {
  constexpr double k1 = 79.047;
  constexpr double k2 = 7.4129;
  constexpr double gamma = 0.37457;
  double log_cosh = 0;
  double gauss = 0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double a = std::abs(u(i));
    // log(cosh(a)) without overflow
    log_cosh += a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
    gauss += u(i) * std::exp(-u(i) * u(i) / 2.0);
  }
  const double n = static_cast<double>(u.size());
  log_cosh /= n;
  gauss /= n;
  return (1.0 + std::log(2.0 * std::numbers::pi)) / 2.0 - k1 * (log_cosh - gamma) * (log_cosh - gamma) -
         k2 * gauss * gauss;
}

// Likelihood-ratio measure of "xi causes xj" minus "xj causes xi".
double entropy_difference(double h_i, double h_j, const Eigen::VectorXd& ri_j, const Eigen::VectorXd& rj_i) {
  return (h_j + entropy(standardized(ri_j))) - (h_i + entropy(standardized(rj_i)));
}

Eigen::VectorXd to_column(const Dataset& data, std::size_t j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(data.n_rows()));
  for (std::size_t i = 0; i < data.n_rows(); ++i) v(static_cast<Eigen::Index>(i)) = data.at(i, j);
  return v;
}

// OLS with intercept; returns slope coefficients.
Eigen::VectorXd least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.cols() == 0) return {};
  Eigen::MatrixXd centred = x.rowwise() - x.colwise().mean();
  Eigen::VectorXd yc = y.array() - y.mean();
  return centred.completeOrthogonalDecomposition().solve(yc);
}

}  // namespace

CausalGraph discover_graph(const Eigen::MatrixXd& data, std::vector<std::string> nodes,
                           const DiscoveryOptions& options) {
  const auto p = static_cast<std::size_t>(data.cols());
  if (nodes.size() != p) throw Error(ErrorCode::InvalidArgument, "one name per column required");
  if (options.sink && *options.sink >= p) throw Error(ErrorCode::InvalidArgument, "sink out of range");

  std::vector<double> sd(p);
  std::vector<std::size_t> remaining;
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < p; ++j) {
    sd[j] = std::sqrt(population_variance(data.col(static_cast<Eigen::Index>(j))));
    if (sd[j] < 1e-12) {
      spdlog::warn("column '{}' has zero variance; kept as an isolated node", nodes[j]);
      order.push_back(j);
    } else {
      remaining.push_back(j);
    }
  }
  const std::vector<std::size_t> isolated = order;

  Eigen::MatrixXd work = data;
  while (!remaining.empty()) {
    std::vector<std::size_t> candidates;
    for (auto i : remaining) {
      if (!options.sink || i != *options.sink || remaining.size() == 1) candidates.push_back(i);
    }
    std::size_t chosen = candidates.front();
    if (candidates.size() > 1) {
      std::vector<Eigen::VectorXd> z(p);
      std::vector<double> h(p, 0.0);
      std::vector<bool> exhausted(p, false);
      for (auto i : remaining) {
        const auto col = work.col(static_cast<Eigen::Index>(i));
        // fully explained by earlier variables: carries no independent noise
        exhausted[i] = std::sqrt(population_variance(col)) < 1e-9 * sd[i];
        z[i] = standardized(col);
        h[i] = entropy(z[i]);
      }
      double best = -std::numeric_limits<double>::infinity();
      for (auto i : candidates) {
        if (exhausted[i]) continue;
        double m = 0;
        for (auto j : remaining) {
          if (i == j || exhausted[j]) continue;
          const double diff = entropy_difference(h[i], h[j], residual(z[i], z[j]), residual(z[j], z[i]));
          m += std::min(0.0, diff) * std::min(0.0, diff);
        }
        if (-m > best) {
          best = -m;
          chosen = i;
        }
      }
    }
    order.push_back(chosen);
    remaining.erase(std::find(remaining.begin(), remaining.end(), chosen));
    for (auto i : remaining) {
      work.col(static_cast<Eigen::Index>(i)) =
          residual(work.col(static_cast<Eigen::Index>(i)), work.col(static_cast<Eigen::Index>(chosen)));
    }
  }

  // Edge weights: regress each node on its predecessors, prune on the
  // standardised scale, then refit the survivors in raw units.
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto j = order[k];
    if (std::find(isolated.begin(), isolated.end(), j) != isolated.end()) continue;
    std::vector<std::size_t> preds;
    for (std::size_t q = 0; q < k; ++q) {
      if (std::find(isolated.begin(), isolated.end(), order[q]) == isolated.end()) preds.push_back(order[q]);
    }
    if (preds.empty()) continue;
    Eigen::MatrixXd x(data.rows(), static_cast<Eigen::Index>(preds.size()));
    for (std::size_t c = 0; c < preds.size(); ++c) x.col(static_cast<Eigen::Index>(c)) = data.col(static_cast<Eigen::Index>(preds[c]));
    const Eigen::VectorXd y = data.col(static_cast<Eigen::Index>(j));
    const Eigen::VectorXd b = least_squares(x, y);
    std::vector<std::size_t> parents;
    for (std::size_t c = 0; c < preds.size(); ++c) {
      const double standardized_b = b(static_cast<Eigen::Index>(c)) * sd[preds[c]] / sd[j];
      if (std::abs(standardized_b) >= options.edge_threshold) parents.push_back(preds[c]);
    }
    if (parents.empty()) continue;
    Eigen::MatrixXd xp(data.rows(), static_cast<Eigen::Index>(parents.size()));
    for (std::size_t c = 0; c < parents.size(); ++c) xp.col(static_cast<Eigen::Index>(c)) = data.col(static_cast<Eigen::Index>(parents[c]));
    const Eigen::VectorXd bp = least_squares(xp, y);
    for (std::size_t c = 0; c < parents.size(); ++c) {
      weights(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(parents[c])) = bp(static_cast<Eigen::Index>(c));
    }
  }
  return {std::move(nodes), std::move(weights), std::move(order), options.edge_threshold};
}

Eigen::MatrixXd node_matrix(const Dataset& data) {
  const auto w = data.n_features();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(data.n_rows()), static_cast<Eigen::Index>(w + 1));
  for (std::size_t i = 0; i < data.n_rows(); ++i) {
    auto r = data.row(i);
    for (std::size_t j = 0; j < w; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w)) = data.label(i);
  }
  return m;
}

CausalGraph discover_graph(const Dataset& data, const std::string& sensitive, std::uint64_t seed,
                           double fraction, double edge_threshold) {
  data.schema().require_index(sensitive);
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "subsample fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> rows(data.n_rows());
  std::iota(rows.begin(), rows.end(), 0);
  if (fraction < 1.0) {
    std::mt19937_64 rng(seed);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size()))));
    std::sort(rows.begin(), rows.end());
  }
  const auto needed = std::max<std::size_t>(10 * data.n_features(), 100);
  if (rows.size() < needed) {
    throw Error(ErrorCode::InsufficientRows,
                std::to_string(rows.size()) + " rows, need " + std::to_string(needed));
  }
  const Dataset sample = data.subset(rows);
  auto names = data.schema().feature_names;
  names.push_back(data.schema().label_name);
  DiscoveryOptions options;
  options.edge_threshold = edge_threshold;
  options.sink = data.n_features();
  return discover_graph(node_matrix(sample), std::move(names), options);
}

// ---------------------------------------------------------------- direct features

std::vector<std::string> direct_features(const CausalGraph& graph, const std::string& sensitive,
                                         const std::string& label) {
  const auto s = graph.require_node(sensitive);
  const auto y = graph.require_node(label);
  std::vector<std::string> out;
  for (std::size_t f = 0; f < graph.size(); ++f) {
    if (f == s || f == y || !graph.has_edge(s, f)) continue;
    if (graph.has_edge(f, y) || graph.reachable_from(f)[y]) out.push_back(graph.nodes[f]);
  }
  return out;
}

// ---------------------------------------------------------------- effects

InterventionEstimate intervention_effect(const CausalGraph& graph, const Eigen::MatrixXd& rows,
                                         std::size_t label, std::size_t sensitive,
                                         std::size_t candidate,
                                         const std::vector<Code>& sensitive_values,
                                         const std::vector<Code>& candidate_values) {
  if (sensitive_values.empty() || candidate_values.empty()) {
    throw Error(ErrorCode::EmptyDomain, "intervention value set is empty");
  }
  if (rows.cols() != static_cast<Eigen::Index>(graph.size())) {
    throw Error(ErrorCode::WidthMismatch, "rows do not span the graph's nodes");
  }
  // exogenous terms e = x - B x, one row per observation
  const Eigen::MatrixXd exogenous = rows - rows * graph.weights.transpose();
  const auto y = static_cast<Eigen::Index>(label);

  auto interventional = [&](std::size_t node, double value) {
    Eigen::MatrixXd x = rows;
    for (auto v : graph.topo_order) {
      const auto c = static_cast<Eigen::Index>(v);
      if (v == node) {
        x.col(c).setConstant(value);
      } else if (graph.weights.row(c).any()) {
        x.col(c) = x * graph.weights.row(c).transpose() + exogenous.col(c);
      }
    }
    const auto positives = (x.col(y).array() >= 0.5).count();
    return static_cast<double>(positives) / static_cast<double>(rows.rows());
  };

  InterventionEstimate est;
  for (auto a : sensitive_values) est.p_sensitive.push_back(interventional(sensitive, a));
  for (auto b : candidate_values) est.p_candidate.push_back(interventional(candidate, b));
  double total = 0;
  for (double pa : est.p_sensitive) {
    for (double pb : est.p_candidate) total += std::abs(pa - pb);
  }
  const double theta = std::abs(graph.coefficient(sensitive, candidate));
  const double n_pairs = static_cast<double>(sensitive_values.size() * candidate_values.size());
  est.effect = theta * total / n_pairs;
  return est;
}

namespace {

struct EffectSetup {
  std::size_t label;
  std::size_t sensitive;
  std::size_t candidate;
  std::vector<Code> sensitive_values;
  std::vector<Code> candidate_values;
};

EffectSetup prepare_effect(const CausalGraph& graph, const Dataset& data, const std::string& sensitive,
                           const std::string& candidate, std::size_t m) {
  const auto& schema = data.schema();
  const auto direct = direct_features(graph, sensitive, schema.label_name);
  if (std::find(direct.begin(), direct.end(), candidate) == direct.end()) {
    throw Error(ErrorCode::NotDirectlyRelevant, "'" + candidate + "' is not a direct feature of '" + sensitive + "'");
  }
  if (graph.size() != data.n_features() + 1) {
    throw Error(ErrorCode::NodeSetMismatch, "graph nodes do not match the dataset");
  }
  data.require_rows("causal effect data");
  if (m == 0 || m > data.n_rows()) {
    throw Error(ErrorCode::InvalidArgument, "m must lie in [1, rows]");
  }
  EffectSetup s;
  s.label = graph.require_node(schema.label_name);
  s.sensitive = graph.require_node(sensitive);
  s.candidate = graph.require_node(candidate);
  s.sensitive_values = data.domain(schema.require_index(sensitive)).values();
  s.candidate_values = data.domain(schema.require_index(candidate)).values();
  return s;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& all, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), all.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = all.row(static_cast<Eigen::Index>(rows[k]));
  return out;
}

}  // namespace

double causal_effect(const CausalGraph& graph, const Dataset& data, const std::string& sensitive,
                     const std::string& candidate, std::size_t m, std::uint64_t seed) {
  const auto s = prepare_effect(graph, data, sensitive, candidate, m);
  std::vector<std::size_t> rows(data.n_rows());
  std::iota(rows.begin(), rows.end(), 0);
  if (m < rows.size()) {
    std::mt19937_64 rng(seed);
    std::shuffle(rows.begin(), rows.end(), rng);
    rows.resize(m);
  }
  return intervention_effect(graph, gather_rows(node_matrix(data), rows), s.label, s.sensitive, s.candidate,
                             s.sensitive_values, s.candidate_values)
      .effect;
}

CausalEffect bootstrap_effect(const CausalGraph& graph, const Dataset& data, const std::string& sensitive,
                              const std::string& candidate, std::size_t m, std::size_t repeats,
                              std::uint64_t seed) {
  if (repeats == 0) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
  const auto s = prepare_effect(graph, data, sensitive, candidate, m);
  const auto all = node_matrix(data);
  CausalEffect result{candidate, 0.0, {}};
  for (std::size_t r = 0; r < repeats; ++r) {
    std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * (r + 1));
    std::uniform_int_distribution<std::size_t> pick(0, data.n_rows() - 1);
    std::vector<std::size_t> rows(m);
    for (auto& i : rows) i = pick(rng);
    result.raw_repeats.push_back(
        intervention_effect(graph, gather_rows(all, rows), s.label, s.sensitive, s.candidate,
                            s.sensitive_values, s.candidate_values)
            .effect);
  }
  auto sorted = result.raw_repeats;
  std::sort(sorted.begin(), sorted.end());
  result.effect = sorted[(sorted.size() - 1) / 2];
  return result;
}

std::string select_causal_feature(const std::vector<CausalEffect>& effects,
                                  const std::vector<std::string>& schema_order) {
  if (effects.empty()) throw Error(ErrorCode::NoDirectFeature, "no directly relevant feature");
  auto rank = [&](const std::string& f) {
    auto it = std::find(schema_order.begin(), schema_order.end(), f);
    return static_cast<std::size_t>(it - schema_order.begin());
  };
  const CausalEffect* best = &effects.front();
  for (const auto& e : effects) {
    if (e.effect > best->effect || (e.effect == best->effect && rank(e.feature) < rank(best->feature))) {
      best = &e;
    }
  }
  return best->feature;
}

std::string select_correlation_feature(const Dataset& data, const std::string& sensitive) {
  const auto& schema = data.schema();
  const auto s = schema.require_index(sensitive);
  data.require_rows("correlation data");
  const auto x = to_column(data, s);
  const double sd_s = std::sqrt(population_variance(x));
  if (sd_s < 1e-12) throw Error(ErrorCode::DegenerateColumn, "sensitive column '" + sensitive + "' is constant");

  std::size_t best = schema.width();
  double best_r = -1;
  const auto& protected_names = schema.sensitive_features;
  for (std::size_t j = 0; j < schema.width(); ++j) {
    if (j == s) continue;
    if (std::find(protected_names.begin(), protected_names.end(), schema.feature_names[j]) !=
        protected_names.end()) {
      continue;
    }
    const auto v = to_column(data, j);
    const double sd_v = std::sqrt(population_variance(v));
    const double r = sd_v < 1e-12
                         ? 0.0
                         : std::abs(((x.array() - x.mean()) * (v.array() - v.mean())).mean() / (sd_s * sd_v));
    if (best == schema.width() || r > best_r + 1e-12) {
      best = j;
      best_r = r;
    }
  }
  if (best == schema.width()) throw Error(ErrorCode::InvalidArgument, "no non-sensitive feature to rank");
  return schema.feature_names[best];
}

// ---------------------------------------------------------------- stability

std::size_t hamming_distance(const CausalGraph& a, const CausalGraph& b) {
  if (a.nodes != b.nodes) throw Error(ErrorCode::NodeSetMismatch, "graphs span different nodes");
  return static_cast<std::size_t>(((a.weights.array() != 0.0) != (b.weights.array() != 0.0)).count());
}

double graph_stability(const std::vector<CausalGraph>& graphs) {
  if (graphs.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two graphs");
  double total = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    for (std::size_t j = i + 1; j < graphs.size(); ++j) {
      total += static_cast<double>(hamming_distance(graphs[i], graphs[j]));
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

// ---------------------------------------------------------------- edge list

void write_edge_list(std::ostream& out, const CausalGraph& graph) {
  std::ostringstream line;
  for (std::size_t from = 0; from < graph.size(); ++from) {
    for (std::size_t to = 0; to < graph.size(); ++to) {
      if (!graph.has_edge(from, to)) continue;
      line.str({});
      line.precision(17);
      line << graph.nodes[from] << ',' << graph.nodes[to] << ',' << graph.coefficient(from, to) << '\n';
      out << line.str();
    }
  }
}

CausalGraph read_edge_list(std::istream& in, std::vector<std::string> nodes) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  auto index = [&](const std::string& name) {
    auto it = std::find(nodes.begin(), nodes.end(), name);
    if (it == nodes.end()) throw Error(ErrorCode::UnknownNode, "'" + name + "'");
    return static_cast<Eigen::Index>(it - nodes.begin());
  };
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.rfind(',');
    if (c1 == std::string::npos || c1 == c2) throw Error(ErrorCode::ParseError, "edge line '" + line + "'");
    w(index(line.substr(c1 + 1, c2 - c1 - 1)), index(line.substr(0, c1))) =
        std::stod(line.substr(c2 + 1));
  }
  return make_graph(std::move(nodes), std::move(w));
}

}  // namespace causalft
