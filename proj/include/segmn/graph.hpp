#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "segmn/matrix.hpp"

namespace segmn {

/// Raised for malformed graph input (self-loops, duplicate edges, bad endpoints).
class GraphValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Undirected edge, stored with u < v.
struct Edge {
  std::size_t u;
  std::size_t v;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected labeled graph with node features X (N x d1) and edge features Y (M x d2).
///
/// Immutable after construction. Edges keep their input order; endpoints are
/// canonicalized so that u < v.
class NodeGraph {
 public:
  NodeGraph() = default;

  /// Validates the edge list. `labels`, when present, must have `num_nodes`
  /// entries in [0, label_count). Node features are one-hot over
  /// `label_count` when labels are present, otherwise a constant 1.0 column.
  NodeGraph(std::string id, std::size_t num_nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
            std::optional<std::vector<int>> labels = std::nullopt, std::size_t label_count = 0);

  /// Explicit features. `edge_features` may be empty, in which case it defaults to ones(M, 1).
  NodeGraph(std::string id, std::size_t num_nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
            std::optional<std::vector<int>> labels, Matrix node_features, Matrix edge_features = {});

  const std::string& id() const { return id_; }
  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::optional<std::vector<int>>& labels() const { return labels_; }
  /// Label of node i, or 0 for unlabeled graphs.
  int label(std::size_t i) const { return labels_ ? (*labels_)[i] : 0; }
  const Matrix& node_features() const { return x_; }
  const Matrix& edge_features() const { return y_; }

  std::size_t degree(std::size_t i) const { return adj_[i].size(); }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return adj_[i]; }
  bool has_edge(std::size_t i, std::size_t j) const;
  /// Dense 0/1 adjacency.
  Matrix adjacency() const;
  /// Plain 0/1 incidence matrix K (N x M).
  Matrix incidence() const;

  /// Node-relabeled copy: node i of this graph becomes node perm[i].
  NodeGraph permuted(const std::vector<std::size_t>& perm) const;

 private:
  void build(const std::vector<std::pair<std::size_t, std::size_t>>& edges);

  std::string id_;
  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::optional<std::vector<int>> labels_;
  Matrix x_;
  Matrix y_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<std::vector<char>> adj_bits_;
};

/// Line graph: one node per base edge, adjacent when base edges share an endpoint.
struct LineGraph {
  std::string base_id;
  std::size_t num_nodes = 0;             ///< = M of the base graph
  std::vector<Edge> edges;               ///< pairs of base-edge indices
  std::vector<std::size_t> shared_node;  ///< base node joining each line edge
  Matrix node_features;                  ///< X_E: M x d1, sum of endpoint features
  Matrix edge_features;                  ///< Y_E: M_E x d1, feature of the shared node
  Matrix incidence;                      ///< K_E: M x M_E

  std::size_t num_edges() const { return edges.size(); }
};

/// Assignment graph over cross-graph node pairs; node (i, a) has index i * n2 + a.
struct AssignmentGraph {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::vector<Edge> edges;
  std::vector<std::size_t> degrees;

  std::size_t num_nodes() const { return n1 * n2; }
  std::size_t num_edges() const { return edges.size(); }
  std::size_t index(std::size_t i, std::size_t a) const { return i * n2 + a; }
  /// D~^{-1/2} (A + I) D~^{-1/2} in coordinate form, self-loops included.
  SparseMatrix normalized_propagation() const;
};

LineGraph build_line_graph(const NodeGraph& g);
AssignmentGraph build_assignment_graph(const NodeGraph& g1, const NodeGraph& g2);

/// K' with K'(i,k) = (d_i d_j)^{-1/2} for each endpoint i of edge k = {i, j}.
Matrix modified_incidence(const NodeGraph& g);

/// D~^{-1/2} (A + I) D~^{-1/2} for an edge list over n nodes.
Matrix normalized_adjacency(std::size_t n, const std::vector<Edge>& edges);
inline Matrix normalized_adjacency(const NodeGraph& g) {
  return normalized_adjacency(g.num_nodes(), g.edges());
}

}  // namespace segmn
