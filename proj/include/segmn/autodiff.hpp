#pragma once

// Reverse-mode differentiation over dense 2-D tensors.
//
// A Tape owns every value produced during one forward pass. Tensors are cheap
// handles (tape pointer + node index). Each primitive appends one record that
// knows how to push its output gradient back to its inputs; backward() walks
// the records once in reverse order.

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "segmn/matrix.hpp"

namespace segmn::ad {

class Tape;

/// Raised when backward() is called on a non-scalar, on a consumed tape, or
/// when tensors from different tapes are mixed.
class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  /// Gradient after backward(); an empty matrix when nothing flowed here.
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  /// Receives the output gradient and the output value; accumulates into inputs
  /// via Tape::accumulate / Tape::grad_sink.
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out, const Matrix& out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor constant(Matrix value);
  Tensor variable(Matrix value);

  /// Appends a primitive application. `backward` is dropped when no input requires grad.
  Tensor record(Matrix value, std::initializer_list<Tensor> inputs, BackwardFn backward);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Allowed once per tape.
  void backward(const Tensor& loss);

  /// Adds `g` into the gradient of `t` if `t` requires grad.
  void accumulate(const Tensor& t, const Matrix& g);
  /// Gradient buffer of `t` (allocated on first use), or nullptr if `t` needs no grad.
  Matrix* grad_sink(const Tensor& t);

  const Matrix& value_of(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad_of(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad_of(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  void check_owned(const Tensor& t) const;

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Primitives. Every function throws ContractViolation naming both shapes on mismatch.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor hadamard(const Tensor& a, const Tensor& b);
/// Elementwise product with a constant (e.g. a 0/1 mask).
Tensor mask(const Tensor& a, const Matrix& m);
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
/// Softmax along each row over entries where mask != 0. Masked entries are 0;
/// rows with no valid entry are all 0.
Tensor row_softmax_masked(const Tensor& a, const Matrix& mask);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
/// Sum of all entries, 1x1.
Tensor sum(const Tensor& a);
/// Column means over rows, 1 x cols.
Tensor mean_rows(const Tensor& a);
/// Max pooling over a (height x width) grid stored as (height*width) x channels,
/// cell (r, c) at row r*width + c. Output grid is ceil(h/window) x ceil(w/window).
Tensor max_pool(const Tensor& a, std::size_t height, std::size_t width, std::size_t window = 2);
/// Mean squared error between congruent tensors, 1x1.
Tensor mse(const Tensor& pred, const Tensor& target);

/// a + broadcast of the 1 x cols row `b` over every row.
Tensor add_row(const Tensor& a, const Tensor& b);
/// a * broadcast of the 1 x cols row `g` over every row.
Tensor mul_row(const Tensor& a, const Tensor& g);
/// Constant sparse matrix times x.
Tensor spmm(const SparseMatrix& s, const Tensor& x);
/// Zero-pad to rows x cols, original block at the top-left.
Tensor pad(const Tensor& a, std::size_t rows, std::size_t cols);
Tensor slice(const Tensor& a, std::size_t row0, std::size_t col0, std::size_t rows, std::size_t cols);
/// Row-major reinterpretation.
Tensor reshape(const Tensor& a, std::size_t rows, std::size_t cols);
/// Grid layout as in max_pool. Each cell (r, c) receives, per channel, the sum
/// over its grid row: sum_c' a(r, c').
Tensor grid_row_sum(const Tensor& a, std::size_t height, std::size_t width);
/// Each cell (r, c) receives the sum over its grid column: sum_r' a(r', c).
Tensor grid_col_sum(const Tensor& a, std::size_t height, std::size_t width);

}  // namespace segmn::ad
