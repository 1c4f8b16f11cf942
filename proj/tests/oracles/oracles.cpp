#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace segmn::oracle {

int brute_force_ged(const NodeGraph& g1, const NodeGraph& g2, const EditCostModel& cost) {
  const std::size_t n1 = g1.num_nodes(), n2 = g2.num_nodes();
  if (n1 > 6 || n2 > 6) throw GedTooLarge("brute_force_ged: size bound 6 exceeded");

  // image[i] in [0, n2) or -1 for deletion.
  std::vector<int> image(n1, -1);
  std::vector<char> taken(n2, 0);
  int best = std::numeric_limits<int>::max();

  auto total_cost = [&]() {
    int c = 0;
    for (std::size_t i = 0; i < n1; ++i)
      c += image[i] < 0 ? cost.node_delete : cost.relabel(g1.label(i), g2.label(std::size_t(image[i])));
    for (std::size_t a = 0; a < n2; ++a)
      if (!taken[a]) c += cost.node_insert;
    // Every g1 edge survives only if both endpoints map onto a g2 edge.
    for (const Edge& e : g1.edges()) {
      const bool kept = image[e.u] >= 0 && image[e.v] >= 0 &&
                        g2.has_edge(std::size_t(image[e.u]), std::size_t(image[e.v]));
      if (!kept) c += cost.edge_delete;
    }
    // Every g2 edge not hit by a kept g1 edge is inserted.
    std::vector<int> preimage(n2, -1);
    for (std::size_t i = 0; i < n1; ++i)
      if (image[i] >= 0) preimage[std::size_t(image[i])] = int(i);
    for (const Edge& e : g2.edges()) {
      const bool hit = preimage[e.u] >= 0 && preimage[e.v] >= 0 &&
                       g1.has_edge(std::size_t(preimage[e.u]), std::size_t(preimage[e.v]));
      if (!hit) c += cost.edge_insert;
    }
    return c;
  };

  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == n1) {
      best = std::min(best, total_cost());
      return;
    }
    image[i] = -1;
    rec(i + 1);
    for (std::size_t a = 0; a < n2; ++a) {
      if (taken[a]) continue;
      taken[a] = 1;
      image[i] = int(a);
      rec(i + 1);
      taken[a] = 0;
    }
    image[i] = -1;
  };
  rec(0);
  return best;
}

Matrix brute_force_spm(const Matrix& s, const NodeGraph& g1, const NodeGraph& g2, double w_a) {
  const std::size_t n1 = g1.num_nodes(), n2 = g2.num_nodes();
  auto gen_structure = [&](std::size_t i, std::size_t a) {
    std::vector<std::pair<std::size_t, std::size_t>> set{{i, a}};
    for (std::size_t j = 0; j < n1; ++j)
      for (std::size_t b = 0; b < n2; ++b)
        if (g1.has_edge(i, j) && g2.has_edge(a, b)) set.emplace_back(j, b);
    return set;
  };
  Matrix out(s.rows(), s.cols());
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t a = 0; a < n2; ++a) {
      const auto set = gen_structure(i, a);
      const double di = double(set.size());
      double message = 0.0;
      for (auto [j, b] : set) message += s(j, b) / std::sqrt(di * double(gen_structure(j, b).size()));
      out(i, a) = std::max(0.0, message * w_a);
    }
  return out;
}

namespace {

std::vector<double> average_ranks_quadratic(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double less = 0, equal = 0;
    for (double v : x) {
      if (v < x[i]) ++less;
      if (v == x[i]) ++equal;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

double tie_term(const std::vector<double>& x) {
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  double t_sum = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = double(j - i);
    t_sum += (t * t * t - t) / 12.0;
    i = j;
  }
  return t_sum;
}

}  // namespace

double spearman_textbook(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  const auto rx = average_ranks_quadratic(x), ry = average_ranks_quadratic(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double base = (n * n * n - n) / 12.0;
  const double sx = base - tie_term(x), sy = base - tie_term(y);
  return (sx + sy - d2) / (2.0 * std::sqrt(sx * sy));
}

double kendall_textbook(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool tx = x[i] == x[j], ty = y[i] == y[j];
      if (tx) ++ties_x;
      if (ty) ++ties_y;
      if (tx || ty) continue;
      if ((x[i] < x[j]) == (y[i] < y[j]))
        ++concordant;
      else
        ++discordant;
    }
  const double n0 = double(n) * double(n - 1) / 2.0;
  return (concordant - discordant) / std::sqrt((n0 - ties_x) * (n0 - ties_y));
}

double precision_at_k_textbook(const std::vector<double>& pred, const std::vector<double>& truth, std::size_t k) {
  const std::size_t n = pred.size();
  // Predicted top-k: repeatedly take the largest remaining score, lowest index first.
  std::vector<char> picked(n, 0);
  for (std::size_t round = 0; round < k; ++round) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!picked[i] && (best == n || pred[i] > pred[best])) best = i;
    picked[best] = 1;
  }
  std::vector<double> sorted = truth;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double threshold = sorted[k - 1];
  double hits = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (picked[i] && truth[i] >= threshold) ++hits;
  return hits / double(k);
}

}  // namespace segmn::oracle
