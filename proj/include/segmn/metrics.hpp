#pragma once

#include <string>
#include <vector>

namespace segmn {

/// Predicted and true similarities of one query graph against its candidates.
struct QueryResult {
  std::string query_id;
  std::vector<std::string> candidate_ids;
  std::vector<double> predicted;
  std::vector<double> truth;
};

struct QueryMetrics {
  std::string query_id;
  std::size_t candidates = 0;
  double mse = 0.0;
  double rho = 0.0;
  double tau = 0.0;
  double p10 = 0.0;
  double p20 = 0.0;
};

struct EvalReport {
  double mse = 0.0;  ///< raw mean squared error; tables print it in units of 1e-3
  double rho = 0.0;
  double tau = 0.0;
  double p10 = 0.0;
  double p20 = 0.0;
  std::size_t pairs = 0;
  std::vector<QueryMetrics> per_query;
  std::vector<std::string> warnings;
  double runtime_seconds = 0.0;
};

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& x);
/// Pearson correlation of average ranks. NaN when either side is constant.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y);
/// Kendall tau-b. NaN when either side is constant.
double kendall_tau(const std::vector<double>& x, const std::vector<double>& y);
/// Fraction of the true top-k recovered by the predicted top-k. The predicted
/// set breaks ties by lower index; the true set keeps every candidate tied
/// with the k-th best true value. Requires k <= size.
double precision_at_k(const std::vector<double>& predicted, const std::vector<double>& truth, std::size_t k);

/// MSE over all pairs; rho, tau and p@k per query, then averaged. Queries with
/// fewer than k candidates (for p@k) or constant rankings (for rho/tau) are
/// left out of that average and reported in `warnings`.
EvalReport compute_metrics(const std::vector<QueryResult>& queries);

}  // namespace segmn
