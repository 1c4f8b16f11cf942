#include "segmn/graph.hpp"

#include <cmath>

namespace segmn {

namespace {

Matrix features_from_labels(std::size_t n, const std::optional<std::vector<int>>& labels,
                            std::size_t label_count) {
  if (!labels || label_count == 0) return Matrix(n, 1, 1.0);
  Matrix x(n, label_count);
  for (std::size_t i = 0; i < n; ++i) x(i, static_cast<std::size_t>((*labels)[i])) = 1.0;
  return x;
}

}  // namespace

NodeGraph::NodeGraph(std::string id, std::size_t num_nodes,
                     const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                     std::optional<std::vector<int>> labels, std::size_t label_count)
    : id_(std::move(id)), num_nodes_(num_nodes), labels_(std::move(labels)) {
  if (labels_) {
    for (int l : *labels_) {
      if (l < 0 || (label_count > 0 && static_cast<std::size_t>(l) >= label_count))
        throw GraphValidationError("graph '" + id_ + "': label " + std::to_string(l) +
                                   " outside vocabulary of size " + std::to_string(label_count));
    }
  }
  build(edges);
  x_ = features_from_labels(num_nodes_, labels_, label_count);
  y_ = Matrix(edges_.size(), 1, 1.0);
}

NodeGraph::NodeGraph(std::string id, std::size_t num_nodes,
                     const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                     std::optional<std::vector<int>> labels, Matrix node_features, Matrix edge_features)
    : id_(std::move(id)), num_nodes_(num_nodes), labels_(std::move(labels)), x_(std::move(node_features)) {
  build(edges);
  if (x_.rows() != num_nodes_)
    throw GraphValidationError("graph '" + id_ + "': node feature rows " + std::to_string(x_.rows()) +
                               " != N = " + std::to_string(num_nodes_));
  if (edge_features.empty() && edge_features.rows() == 0) edge_features = Matrix(edges_.size(), 1, 1.0);
  if (edge_features.rows() != edges_.size())
    throw GraphValidationError("graph '" + id_ + "': edge feature rows " +
                               std::to_string(edge_features.rows()) + " != M = " + std::to_string(edges_.size()));
  y_ = std::move(edge_features);
}

void NodeGraph::build(const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  if (labels_ && labels_->size() != num_nodes_)
    throw GraphValidationError("graph '" + id_ + "': " + std::to_string(labels_->size()) +
                               " labels for " + std::to_string(num_nodes_) + " nodes");
  adj_.assign(num_nodes_, {});
  adj_bits_.assign(num_nodes_, std::vector<char>(num_nodes_, 0));
  edges_.reserve(edges.size());
  for (auto [a, b] : edges) {
    const std::string where = "graph '" + id_ + "': edge {" + std::to_string(a) + "," + std::to_string(b) + "}";
    if (a >= num_nodes_ || b >= num_nodes_) throw GraphValidationError(where + " has endpoint >= N");
    if (a == b) throw GraphValidationError(where + " is a self-loop");
    if (adj_bits_[a][b]) throw GraphValidationError(where + " is a duplicate");
    adj_bits_[a][b] = adj_bits_[b][a] = 1;
    adj_[a].push_back(b);
    adj_[b].push_back(a);
    edges_.push_back(a < b ? Edge{a, b} : Edge{b, a});
  }
}

bool NodeGraph::has_edge(std::size_t i, std::size_t j) const { return adj_bits_[i][j] != 0; }

Matrix NodeGraph::adjacency() const {
  Matrix a(num_nodes_, num_nodes_);
  for (const auto& e : edges_) a(e.u, e.v) = a(e.v, e.u) = 1.0;
  return a;
}

Matrix NodeGraph::incidence() const {
  Matrix k(num_nodes_, edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) k(edges_[e].u, e) = k(edges_[e].v, e) = 1.0;
  return k;
}

NodeGraph NodeGraph::permuted(const std::vector<std::size_t>& perm) const {
  if (perm.size() != num_nodes_) throw ContractViolation("permuted: permutation size mismatch");
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(edges_.size());
  for (const auto& e : edges_) edges.emplace_back(perm[e.u], perm[e.v]);
  std::optional<std::vector<int>> labels;
  Matrix x(num_nodes_, x_.cols());
  if (labels_) labels.emplace(num_nodes_);
  for (std::size_t i = 0; i < num_nodes_; ++i) {
    if (labels_) (*labels)[perm[i]] = (*labels_)[i];
    for (std::size_t c = 0; c < x_.cols(); ++c) x(perm[i], c) = x_(i, c);
  }
  return NodeGraph(id_, num_nodes_, edges, std::move(labels), std::move(x), y_);
}

LineGraph build_line_graph(const NodeGraph& g) {
  LineGraph lg;
  lg.base_id = g.id();
  lg.num_nodes = g.num_edges();
  const Matrix& x = g.node_features();
  const std::size_t d1 = x.cols();

  lg.node_features = Matrix(lg.num_nodes, d1);
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    const Edge& e = g.edges()[k];
    for (std::size_t c = 0; c < d1; ++c) lg.node_features(k, c) = x(e.u, c) + x(e.v, c);
  }

  // Incident edge lists per base node, in edge-index order.
  std::vector<std::vector<std::size_t>> incident(g.num_nodes());
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    incident[g.edges()[k].u].push_back(k);
    incident[g.edges()[k].v].push_back(k);
  }
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    const auto& inc = incident[v];
    for (std::size_t a = 0; a < inc.size(); ++a)
      for (std::size_t b = a + 1; b < inc.size(); ++b) {
        lg.edges.push_back(Edge{inc[a], inc[b]});
        lg.shared_node.push_back(v);
      }
  }

  lg.edge_features = Matrix(lg.edges.size(), d1);
  lg.incidence = Matrix(lg.num_nodes, lg.edges.size());
  for (std::size_t k = 0; k < lg.edges.size(); ++k) {
    for (std::size_t c = 0; c < d1; ++c) lg.edge_features(k, c) = x(lg.shared_node[k], c);
    lg.incidence(lg.edges[k].u, k) = 1.0;
    lg.incidence(lg.edges[k].v, k) = 1.0;
  }
  return lg;
}

AssignmentGraph build_assignment_graph(const NodeGraph& g1, const NodeGraph& g2) {
  AssignmentGraph ag;
  ag.n1 = g1.num_nodes();
  ag.n2 = g2.num_nodes();
  ag.degrees.assign(ag.num_nodes(), 0);
  ag.edges.reserve(2 * g1.num_edges() * g2.num_edges());
  for (const Edge& e1 : g1.edges()) {
    for (const Edge& e2 : g2.edges()) {
      // (i,a)-(j,b) and (i,b)-(j,a)
      const std::size_t p = ag.index(e1.u, e2.u), q = ag.index(e1.v, e2.v);
      const std::size_t r = ag.index(e1.u, e2.v), s = ag.index(e1.v, e2.u);
      ag.edges.push_back(Edge{std::min(p, q), std::max(p, q)});
      ag.edges.push_back(Edge{std::min(r, s), std::max(r, s)});
      ++ag.degrees[p];
      ++ag.degrees[q];
      ++ag.degrees[r];
      ++ag.degrees[s];
    }
  }
  return ag;
}

SparseMatrix AssignmentGraph::normalized_propagation() const {
  SparseMatrix s;
  s.rows = s.cols = num_nodes();
  s.entries.reserve(num_nodes() + 2 * edges.size());
  std::vector<double> inv_sqrt(num_nodes());
  for (std::size_t i = 0; i < num_nodes(); ++i) inv_sqrt[i] = 1.0 / std::sqrt(double(degrees[i] + 1));
  for (std::size_t i = 0; i < num_nodes(); ++i) s.entries.push_back({i, i, inv_sqrt[i] * inv_sqrt[i]});
  for (const Edge& e : edges) {
    const double w = inv_sqrt[e.u] * inv_sqrt[e.v];
    s.entries.push_back({e.u, e.v, w});
    s.entries.push_back({e.v, e.u, w});
  }
  return s;
}

Matrix modified_incidence(const NodeGraph& g) {
  Matrix k(g.num_nodes(), g.num_edges());
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edges()[e];
    const double w = 1.0 / std::sqrt(double(g.degree(ed.u)) * double(g.degree(ed.v)));
    k(ed.u, e) = w;
    k(ed.v, e) = w;
  }
  return k;
}

Matrix normalized_adjacency(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<double> deg(n, 1.0);
  for (const Edge& e : edges) {
    deg[e.u] += 1.0;
    deg[e.v] += 1.0;
  }
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0 / deg[i];
  for (const Edge& e : edges) {
    const double w = 1.0 / std::sqrt(deg[e.u] * deg[e.v]);
    a(e.u, e.v) = w;
    a(e.v, e.u) = w;
  }
  return a;
}

}  // namespace segmn
