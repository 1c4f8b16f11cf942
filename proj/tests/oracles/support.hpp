#pragma once

// Shared helpers for the unit and acceptance suites: random inputs and
// central-difference gradient checks.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "segmn/autodiff.hpp"
#include "segmn/graph.hpp"
#include "segmn/params.hpp"

namespace segmn::testing {

/// Erdos-Renyi graph with n drawn uniformly from [n_lo, n_hi]; may be disconnected.
NodeGraph random_graph(std::mt19937_64& rng, std::size_t n_lo, std::size_t n_hi, double edge_prob,
                       std::size_t label_count = 0, const std::string& id = "r");

/// Connected variant (rejection sampled).
NodeGraph random_connected_graph(std::mt19937_64& rng, std::size_t n_lo, std::size_t n_hi, double edge_prob,
                                 std::size_t label_count = 0, const std::string& id = "r");

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);
std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937_64& rng);

/// ||a - f|| / max(||a||, ||f||, floor), Frobenius norms.
double relative_error(const Matrix& analytic, const Matrix& numeric, double floor = 1e-6);

/// Central differences of a scalar function of one matrix.
Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double h = 1e-4);

/// Reverse-mode gradient of sum(out .* weights) w.r.t. x, next to the numeric one.
/// `weights` are drawn once so that every output entry contributes.
struct PrimitiveCheck {
  Matrix analytic;
  Matrix numeric;
  double rel_error = 0.0;
};
PrimitiveCheck check_primitive(const std::function<ad::Tensor(ad::Tape&, const ad::Tensor&)>& op, const Matrix& x,
                               std::mt19937_64& rng, double h = 1e-4);

struct ParamCheck {
  std::string name;
  double rel_error = 0.0;
};

/// For every parameter in the store: reverse-mode gradient of the scalar `loss`
/// against central differences, one relative error per parameter tensor.
std::vector<ParamCheck> check_param_gradients(const ParamStore& params,
                                              const std::function<ad::Tensor(ParamBinding&)>& loss, double h = 1e-4);

}  // namespace segmn::testing
