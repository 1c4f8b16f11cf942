#include "segmn/ged.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

namespace segmn {

namespace {

constexpr std::size_t kMaxNodes = 32;
constexpr std::int8_t kDeleted = -1;

struct SearchNode {
  int f;
  int g;
  std::uint8_t depth;
  bool complete;
  std::uint32_t used;  // bitmask of g2 nodes already taken
  std::uint64_t seq;
  std::array<std::int8_t, kMaxNodes> image;
};

struct ByPriority {
  bool operator()(const SearchNode& a, const SearchNode& b) const {
    // Smallest f first, then deepest, then oldest.
    if (a.f != b.f) return a.f > b.f;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.seq > b.seq;
  }
};

class AStarSearch {
 public:
  AStarSearch(const NodeGraph& g1, const NodeGraph& g2, const EditCostModel& cost)
      : g1_(g1), g2_(g2), cost_(cost), n1_(g1.num_nodes()), n2_(g2.num_nodes()) {
    order_.resize(n1_);
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return g1.degree(a) > g1.degree(b); });

    adj2_.assign(n2_, 0);
    for (const Edge& e : g2.edges()) {
      adj2_[e.u] |= 1u << e.v;
      adj2_[e.v] |= 1u << e.u;
    }

    int max_label = 0;
    for (std::size_t i = 0; i < n1_; ++i) max_label = std::max(max_label, g1.label(i));
    for (std::size_t a = 0; a < n2_; ++a) max_label = std::max(max_label, g2.label(a));
    label_slots_ = static_cast<std::size_t>(max_label) + 1;

    // Edges of g1 among the first k processed nodes, and label counts of the
    // unprocessed suffix.
    processed_edges1_.assign(n1_ + 1, 0);
    std::vector<char> seen(n1_, 0);
    for (std::size_t k = 0; k < n1_; ++k) {
      int add = 0;
      for (std::size_t nb : g1.neighbors(order_[k])) add += seen[nb];
      seen[order_[k]] = 1;
      processed_edges1_[k + 1] = processed_edges1_[k] + add;
    }
    suffix_labels1_.assign((n1_ + 1) * label_slots_, 0);
    for (std::size_t k = n1_; k-- > 0;) {
      for (std::size_t l = 0; l < label_slots_; ++l)
        suffix_labels1_[k * label_slots_ + l] = suffix_labels1_[(k + 1) * label_slots_ + l];
      ++suffix_labels1_[k * label_slots_ + static_cast<std::size_t>(g1.label(order_[k]))];
    }
  }

  int run() {
    std::priority_queue<SearchNode, std::vector<SearchNode>, ByPriority> open;
    SearchNode root{};
    root.image.fill(kDeleted);
    root.f = heuristic(root);
    root.seq = seq_++;
    open.push(root);
    while (!open.empty()) {
      SearchNode cur = open.top();
      open.pop();
      if (cur.complete) return cur.g;
      if (cur.depth == n1_) {
        SearchNode done = cur;
        done.g += completion_cost(cur);
        done.f = done.g;
        done.complete = true;
        done.seq = seq_++;
        open.push(done);
        continue;
      }
      const std::size_t u = order_[cur.depth];
      for (std::size_t b = 0; b < n2_; ++b) {
        if (cur.used & (1u << b)) continue;
        open.push(extend(cur, u, static_cast<std::int8_t>(b)));
      }
      open.push(extend(cur, u, kDeleted));
    }
    return 0;  // unreachable: the deletion branch always leads to a complete mapping
  }

 private:
  SearchNode extend(const SearchNode& cur, std::size_t u, std::int8_t b) {
    SearchNode next = cur;
    next.image[cur.depth] = b;
    next.depth = static_cast<std::uint8_t>(cur.depth + 1);
    int step = b == kDeleted ? cost_.node_delete : cost_.relabel(g1_.label(u), g2_.label(std::size_t(b)));
    if (b != kDeleted) next.used |= 1u << b;
    for (std::size_t t = 0; t < cur.depth; ++t) {
      const std::size_t v = order_[t];
      const bool e1 = g1_.has_edge(u, v);
      const std::int8_t fv = cur.image[t];
      if (b != kDeleted && fv != kDeleted) {
        const bool e2 = g2_.has_edge(std::size_t(b), std::size_t(fv));
        if (e1 && !e2) step += cost_.edge_delete;
        if (!e1 && e2) step += cost_.edge_insert;
      } else if (e1) {
        step += cost_.edge_delete;
      }
    }
    next.g = cur.g + step;
    next.f = next.g + heuristic(next);
    next.seq = seq_++;
    return next;
  }

  int completion_cost(const SearchNode& s) const {
    int c = 0;
    for (std::size_t a = 0; a < n2_; ++a)
      if (!(s.used & (1u << a))) c += cost_.node_insert;
    c += (static_cast<int>(g2_.num_edges()) - used_edges2(s.used)) * cost_.edge_insert;
    return c;
  }

  int used_edges2(std::uint32_t used) const {
    int twice = 0;
    for (std::size_t a = 0; a < n2_; ++a)
      if (used & (1u << a)) twice += std::popcount(adj2_[a] & used);
    return twice / 2;
  }

  int heuristic(const SearchNode& s) const {
    if (s.depth == n1_) return 0;
    const int r1 = static_cast<int>(n1_ - s.depth);
    const int r2 = static_cast<int>(n2_) - std::popcount(s.used);

    std::vector<int> labels2(label_slots_, 0);
    for (std::size_t a = 0; a < n2_; ++a)
      if (!(s.used & (1u << a))) ++labels2[static_cast<std::size_t>(g2_.label(a))];
    int common = 0;
    for (std::size_t l = 0; l < label_slots_; ++l)
      common += std::min(labels2[l], suffix_labels1_[s.depth * label_slots_ + l]);

    int h = std::max(0, r1 - r2) * cost_.node_delete + std::max(0, r2 - r1) * cost_.node_insert +
            std::max(0, std::min(r1, r2) - common) *
                std::min(cost_.node_relabel, cost_.node_delete + cost_.node_insert);

    const int e1 = static_cast<int>(g1_.num_edges()) - processed_edges1_[s.depth];
    const int e2 = static_cast<int>(g2_.num_edges()) - used_edges2(s.used);
    h += std::max(0, e1 - e2) * cost_.edge_delete + std::max(0, e2 - e1) * cost_.edge_insert;
    return h;
  }

  const NodeGraph& g1_;
  const NodeGraph& g2_;
  EditCostModel cost_;
  std::size_t n1_, n2_;
  std::vector<std::size_t> order_;
  std::vector<std::uint32_t> adj2_;
  std::size_t label_slots_ = 1;
  std::vector<int> processed_edges1_;
  std::vector<int> suffix_labels1_;
  std::uint64_t seq_ = 0;
};

}  // namespace

int exact_ged_astar(const NodeGraph& g1, const NodeGraph& g2, const EditCostModel& cost, std::size_t node_budget) {
  const std::size_t n = std::max(g1.num_nodes(), g2.num_nodes());
  if (n > node_budget || n > kMaxNodes)
    throw GedTooLarge("graph pair (" + g1.id() + ", " + g2.id() + ") with " + std::to_string(n) +
                      " nodes is too large for exact GED (budget " + std::to_string(std::min(node_budget, kMaxNodes)) +
                      ")");
  return AStarSearch(g1, g2, cost).run();
}

double normalized_target(int ged, std::size_t n1, std::size_t n2) {
  if (ged < 0) throw std::invalid_argument("normalized_target: negative GED");
  if (ged == 0) return 1.0;
  return std::exp(-double(ged) / (double(n1 + n2) / 2.0));
}

}  // namespace segmn
