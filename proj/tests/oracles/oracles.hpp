#pragma once

// Independent reference implementations used only by the test suites.

#include <vector>

#include "segmn/ged.hpp"
#include "segmn/graph.hpp"
#include "segmn/matrix.hpp"

namespace segmn::oracle {

/// Exact GED by enumerating every injective partial mapping g1 -> g2 (unmapped
/// nodes deleted or inserted). Both graphs must have at most 6 nodes.
int brute_force_ged(const NodeGraph& g1, const NodeGraph& g2, const EditCostModel& cost = {});

/// Structure-enhanced algorithm, pair by pair: gather the structurally related
/// pairs of (i, a) plus (i, a) itself, aggregate their scores with symmetric
/// degree normalisation, scale by w_a, rectify. `s` is N_max x N_max.
Matrix brute_force_spm(const Matrix& s, const NodeGraph& g1, const NodeGraph& g2, double w_a);

/// Spearman's rho in the tie-corrected rank-difference form.
double spearman_textbook(const std::vector<double>& x, const std::vector<double>& y);
/// Kendall's tau-b from explicit concordant / discordant / tie counts.
double kendall_textbook(const std::vector<double>& x, const std::vector<double>& y);
/// |predicted top-k (index tie-break) ∩ true top-k (boundary ties kept)| / k.
double precision_at_k_textbook(const std::vector<double>& pred, const std::vector<double>& truth, std::size_t k);

}  // namespace segmn::oracle
