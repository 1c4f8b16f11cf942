#include "support.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace segmn::testing {

NodeGraph random_graph(std::mt19937_64& rng, std::size_t n_lo, std::size_t n_hi, double edge_prob,
                       std::size_t label_count, const std::string& id) {
  const std::size_t n = std::uniform_int_distribution<std::size_t>(n_lo, n_hi)(rng);
  std::bernoulli_distribution coin(edge_prob);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) edges.emplace_back(i, j);
  std::optional<std::vector<int>> labels;
  if (label_count > 0) {
    std::uniform_int_distribution<int> pick(0, int(label_count) - 1);
    labels.emplace(n);
    for (int& l : *labels) l = pick(rng);
  }
  return NodeGraph(id, n, edges, std::move(labels), label_count);
}

NodeGraph random_connected_graph(std::mt19937_64& rng, std::size_t n_lo, std::size_t n_hi, double edge_prob,
                                 std::size_t label_count, const std::string& id) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    NodeGraph g = random_graph(rng, n_lo, n_hi, edge_prob, label_count, id);
    std::vector<char> seen(g.num_nodes(), 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v : g.neighbors(u))
        if (!seen[v]) seen[v] = 1, ++reached, stack.push_back(v);
    }
    if (reached == g.num_nodes()) return g;
  }
  throw std::runtime_error("random_connected_graph: gave up");
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = d(rng);
  return m;
}

std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

double relative_error(const Matrix& analytic, const Matrix& numeric, double floor) {
  Matrix diff = analytic;
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= numeric[i];
  return frobenius_norm(diff) / std::max({frobenius_norm(analytic), frobenius_norm(numeric), floor});
}

Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double h) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

PrimitiveCheck check_primitive(const std::function<ad::Tensor(ad::Tape&, const ad::Tensor&)>& op, const Matrix& x,
                               std::mt19937_64& rng, double h) {
  Matrix weights;
  auto scalar_of = [&](ad::Tape& tape, const ad::Tensor& xt) {
    ad::Tensor out = op(tape, xt);
    if (weights.empty()) weights = random_matrix(out.rows(), out.cols(), rng, 0.5, 1.5);
    return ad::sum(ad::mask(out, weights));
  };
  PrimitiveCheck c;
  {
    ad::Tape tape;
    ad::Tensor xt = tape.variable(x);
    tape.backward(scalar_of(tape, xt));
    c.analytic = xt.grad().empty() ? Matrix(x.rows(), x.cols()) : xt.grad();
  }
  c.numeric = numeric_gradient(
      [&](const Matrix& probe) {
        ad::Tape tape;
        return scalar_of(tape, tape.constant(probe)).value()(0, 0);
      },
      x, h);
  c.rel_error = relative_error(c.analytic, c.numeric);
  return c;
}

std::vector<ParamCheck> check_param_gradients(const ParamStore& params,
                                              const std::function<ad::Tensor(ParamBinding&)>& loss, double h) {
  GradMap analytic;
  {
    ad::Tape tape;
    ParamBinding binding(params, tape);
    ad::Tensor l = loss(binding);
    tape.backward(l);
    analytic = binding.grads();
  }
  std::vector<ParamCheck> out;
  ParamStore probe = params;
  for (const auto& name : params.names()) {
    Matrix& slot = probe.get(name);
    const Matrix original = slot;
    Matrix numeric = numeric_gradient(
        [&](const Matrix& value) {
          slot = value;
          ad::Tape tape;
          ParamBinding binding(probe, tape, false);
          return loss(binding).value()(0, 0);
        },
        original, h);
    slot = original;
    out.push_back({name, relative_error(analytic.at(name), numeric)});
  }
  return out;
}

}  // namespace segmn::testing
