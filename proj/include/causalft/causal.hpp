#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "causalft/data.hpp"

namespace causalft {

// Weighted DAG over named nodes. weights(j, i) is the coefficient of the edge
// i -> j in raw data units; zero means no edge.
struct CausalGraph {
  std::vector<std::string> nodes;
  Eigen::MatrixXd weights;
  std::vector<std::size_t> topo_order;
  double edge_threshold = 0.05;

  std::size_t size() const { return nodes.size(); }
  std::size_t require_node(const std::string& name) const;
  std::optional<std::size_t> node_index(const std::string& name) const;
  bool has_edge(std::size_t from, std::size_t to) const { return weights(to, from) != 0.0; }
  double coefficient(std::size_t from, std::size_t to) const { return weights(to, from); }
  std::size_t edge_count() const;
  // Nodes reachable from `from` along directed edges (excluding `from`).
  std::vector<bool> reachable_from(std::size_t from) const;
  bool is_acyclic() const;
  bool order_is_consistent() const;
};

// Builds a graph from explicit weights, deriving a topological order.
// Throws InvalidArgument when the weights contain a cycle.
CausalGraph make_graph(std::vector<std::string> nodes, Eigen::MatrixXd weights,
                       double edge_threshold = 0.05);

struct DiscoveryOptions {
  double edge_threshold = 0.05;
  // Node forced to have no outgoing edges (usually the label).
  std::optional<std::size_t> sink;
};

// DirectLiNGAM on a dense real matrix (rows = observations). Zero-variance
// columns stay in the graph as isolated nodes.
CausalGraph discover_graph(const Eigen::MatrixXd& data, std::vector<std::string> nodes,
                           const DiscoveryOptions& options = {});

// Dataset overload: nodes are the features followed by the label, and the
// label is forced to be a sink. `sensitive` is validated but does not steer
// the search. The seed selects the subsample when fraction < 1.
CausalGraph discover_graph(const Dataset& data, const std::string& sensitive, std::uint64_t seed,
                           double fraction = 1.0, double edge_threshold = 0.05);

Eigen::MatrixXd node_matrix(const Dataset& data);

// Children of `sensitive` that lie on some directed path to `label`.
std::vector<std::string> direct_features(const CausalGraph& graph, const std::string& sensitive,
                                         const std::string& label);

struct InterventionEstimate {
  double effect = 0;
  std::vector<double> p_sensitive;  // p(y=1 | do(f_s = alpha)) per alpha
  std::vector<double> p_candidate;  // p(y=1 | do(f_n = beta)) per beta
};

// Coefficient-weighted mean absolute gap between interventional label
// probabilities under do(sensitive = alpha) and do(candidate = beta), using
// `m` rows sampled without replacement.
double causal_effect(const CausalGraph& graph, const Dataset& data, const std::string& sensitive,
                     const std::string& candidate, std::size_t m, std::uint64_t seed);

// The estimator on explicit rows of node values; exposed for the bootstrap
// and for callers holding non-Dataset fixtures.
InterventionEstimate intervention_effect(const CausalGraph& graph, const Eigen::MatrixXd& rows,
                                         std::size_t label, std::size_t sensitive,
                                         std::size_t candidate,
                                         const std::vector<Code>& sensitive_values,
                                         const std::vector<Code>& candidate_values);

struct CausalEffect {
  std::string feature;
  double effect = 0;
  std::vector<double> raw_repeats;
};

CausalEffect bootstrap_effect(const CausalGraph& graph, const Dataset& data,
                              const std::string& sensitive, const std::string& candidate,
                              std::size_t m, std::size_t repeats, std::uint64_t seed);

// Highest effect wins; ties go to the earliest feature in `schema_order`.
std::string select_causal_feature(const std::vector<CausalEffect>& effects,
                                  const std::vector<std::string>& schema_order);

// Feature outside the schema's sensitive list with the largest |Pearson r|
// against the sensitive column.
std::string select_correlation_feature(const Dataset& data, const std::string& sensitive);

std::size_t hamming_distance(const CausalGraph& a, const CausalGraph& b);
// Mean pairwise Hamming distance between binarised adjacency matrices.
double graph_stability(const std::vector<CausalGraph>& graphs);

// "src,dst,weight" lines, one per edge, in node order.
void write_edge_list(std::ostream& out, const CausalGraph& graph);
CausalGraph read_edge_list(std::istream& in, std::vector<std::string> nodes);

}  // namespace causalft
