#include "segmn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>
#include <stdexcept>

namespace segmn {

namespace {

void require_same_length(const std::vector<double>& x, const std::vector<double>& y, const char* what) {
  if (x.size() != y.size())
    throw std::invalid_argument(std::string(what) + ": lengths " + std::to_string(x.size()) + " and " +
                                std::to_string(y.size()) + " differ");
}

}  // namespace

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && x[idx[j]] == x[idx[i]]) ++j;
    const double r = (double(i + 1) + double(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = r;
    i = j;
  }
  return ranks;
}

double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  require_same_length(x, y, "spearman_rho");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = double(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
  require_same_length(x, y, "kendall_tau");
  double num = 0, vx = 0, vy = 0;
  auto sign = [](double d) { return double((d > 0) - (d < 0)); };
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double sx = sign(x[i] - x[j]), sy = sign(y[i] - y[j]);
      num += sx * sy;
      vx += sx * sx;
      vy += sy * sy;
    }
  if (vx == 0.0 || vy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return num / std::sqrt(vx * vy);
}

double precision_at_k(const std::vector<double>& predicted, const std::vector<double>& truth, std::size_t k) {
  require_same_length(predicted, truth, "precision_at_k");
  if (k == 0 || k > predicted.size())
    throw std::invalid_argument("precision_at_k: k = " + std::to_string(k) + " with " +
                                std::to_string(predicted.size()) + " candidates");
  std::vector<std::size_t> by_pred(predicted.size());
  std::iota(by_pred.begin(), by_pred.end(), 0);
  std::stable_sort(by_pred.begin(), by_pred.end(),
                   [&](std::size_t a, std::size_t b) { return predicted[a] > predicted[b]; });
  std::vector<double> sorted_truth = truth;
  std::nth_element(sorted_truth.begin(), sorted_truth.begin() + std::ptrdiff_t(k - 1), sorted_truth.end(),
                   std::greater<>());
  const double boundary = sorted_truth[k - 1];
  std::size_t hits = 0;
  for (std::size_t r = 0; r < k; ++r)
    if (truth[by_pred[r]] >= boundary) ++hits;
  return double(hits) / double(k);
}

EvalReport compute_metrics(const std::vector<QueryResult>& queries) {
  EvalReport rep;
  double sq = 0.0;
  double rho_sum = 0, tau_sum = 0, p10_sum = 0, p20_sum = 0;
  std::size_t rho_n = 0, tau_n = 0, p10_n = 0, p20_n = 0;
  for (const auto& q : queries) {
    require_same_length(q.predicted, q.truth, "compute_metrics");
    QueryMetrics qm;
    qm.query_id = q.query_id;
    qm.candidates = q.predicted.size();
    double qsq = 0.0;
    for (std::size_t i = 0; i < q.predicted.size(); ++i) {
      const double d = q.predicted[i] - q.truth[i];
      qsq += d * d;
    }
    sq += qsq;
    rep.pairs += q.predicted.size();
    qm.mse = q.predicted.empty() ? 0.0 : qsq / double(q.predicted.size());

    qm.rho = spearman_rho(q.predicted, q.truth);
    qm.tau = kendall_tau(q.predicted, q.truth);
    if (std::isnan(qm.rho) || std::isnan(qm.tau)) {
      rep.warnings.push_back("query " + q.query_id + ": constant ranking, rho/tau excluded");
    } else {
      rho_sum += qm.rho;
      tau_sum += qm.tau;
      ++rho_n;
      ++tau_n;
    }
    for (auto [k, sum, n, slot] : {std::tuple{std::size_t(10), &p10_sum, &p10_n, &qm.p10},
                                   std::tuple{std::size_t(20), &p20_sum, &p20_n, &qm.p20}}) {
      if (q.predicted.size() < k) {
        *slot = std::numeric_limits<double>::quiet_NaN();
        rep.warnings.push_back("query " + q.query_id + ": fewer than " + std::to_string(k) +
                               " candidates, p@" + std::to_string(k) + " excluded");
        continue;
      }
      *slot = precision_at_k(q.predicted, q.truth, k);
      *sum += *slot;
      ++*n;
    }
    rep.per_query.push_back(std::move(qm));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rep.mse = rep.pairs ? sq / double(rep.pairs) : nan;
  rep.rho = rho_n ? rho_sum / double(rho_n) : nan;
  rep.tau = tau_n ? tau_sum / double(tau_n) : nan;
  rep.p10 = p10_n ? p10_sum / double(p10_n) : nan;
  rep.p20 = p20_n ? p20_sum / double(p20_n) : nan;
  return rep;
}

}  // namespace segmn
