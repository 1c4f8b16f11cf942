#pragma once

#include <cstddef>
#include <stdexcept>

#include "segmn/graph.hpp"

namespace segmn {

/// Unit-cost edit model. Relabelling is free when labels agree.
struct EditCostModel {
  int node_insert = 1;
  int node_delete = 1;
  int node_relabel = 1;
  int edge_insert = 1;
  int edge_delete = 1;

  int relabel(int a, int b) const { return a == b ? 0 : node_relabel; }
};

class GedTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact graph edit distance by best-first search over partial node mappings.
///
/// Nodes of g1 are assigned in descending-degree order, each either to an
/// unused node of g2 or to deletion; completing a mapping inserts the
/// untouched part of g2. The lower bound on the unmapped remainder is the
/// label-multiset mismatch of the remaining nodes plus the difference in
/// the number of edges still to be accounted for on each side.
///
/// Throws GedTooLarge when either graph has more than `node_budget` nodes.
int exact_ged_astar(const NodeGraph& g1, const NodeGraph& g2, const EditCostModel& cost = {},
                    std::size_t node_budget = 10);

/// exp(-ged / ((n1 + n2) / 2)); 1 exactly when ged = 0.
double normalized_target(int ged, std::size_t n1, std::size_t n2);

}  // namespace segmn
