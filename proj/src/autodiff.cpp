#include "segmn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace segmn::ad {

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw ContractViolation(std::string(op) + ": shape " + a.shape_string() + " vs " + b.shape_string());
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const std::string& expected) {
  throw ContractViolation(std::string(op) + ": shape " + a.shape_string() + " vs " + expected);
}

std::string grid_string(std::size_t h, std::size_t w) {
  return "grid " + std::to_string(h) + "x" + std::to_string(w);
}

Tape& tape_of(const Tensor& a) {
  if (!a.valid()) throw TapeError("tensor is not attached to a tape");
  return *a.tape();
}

Tape& tape_of(const Tensor& a, const Tensor& b) {
  Tape& t = tape_of(a);
  if (b.tape() != &t) throw TapeError("tensors belong to different tapes");
  return t;
}

}  // namespace

const Matrix& Tensor::value() const { return tape_->value_of(id_); }
const Matrix& Tensor::grad() const { return tape_->grad_of(id_); }
bool Tensor::requires_grad() const { return tape_->requires_grad_of(id_); }

void Tape::check_owned(const Tensor& t) const {
  if (t.tape() != this) throw TapeError("tensor belongs to a different tape");
}

Tensor Tape::constant(Matrix value) {
  if (consumed_) throw TapeError("tape already consumed by backward()");
  nodes_.push_back(Node{std::move(value), {}, false, nullptr});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::variable(Matrix value) {
  if (consumed_) throw TapeError("tape already consumed by backward()");
  nodes_.push_back(Node{std::move(value), {}, true, nullptr});
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(Matrix value, std::initializer_list<Tensor> inputs, BackwardFn backward) {
  if (consumed_) throw TapeError("tape already consumed by backward()");
  bool needs = false;
  for (const Tensor& in : inputs) {
    check_owned(in);
    needs = needs || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, needs ? std::move(backward) : nullptr});
  return Tensor(this, nodes_.size() - 1);
}

Matrix* Tape::grad_sink(const Tensor& t) {
  check_owned(t);
  Node& n = nodes_[t.id()];
  if (!n.requires_grad) return nullptr;
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols())
    n.grad = Matrix(n.value.rows(), n.value.cols());
  return &n.grad;
}

void Tape::accumulate(const Tensor& t, const Matrix& g) {
  if (Matrix* sink = grad_sink(t)) sink->add_in_place(g);
}

void Tape::backward(const Tensor& loss) {
  check_owned(loss);
  if (consumed_) throw TapeError("backward() called twice on the same tape");
  if (loss.rows() != 1 || loss.cols() != 1)
    throw TapeError("backward() needs a scalar loss, got " + loss.value().shape_string());
  consumed_ = true;
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Matrix(1, 1, 1.0);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.backward || n.grad.empty()) continue;
    // Inputs always precede their consumer, so writes never alias n.grad.
    n.backward(*this, n.grad, n.value);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  Tape& t = tape_of(a, b);
  if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
  Matrix out = segmn::matmul(a.value(), b.value());
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a)) matmul_a_bt_acc(g, b.value(), *ga);
    if (Matrix* gb = tp.grad_sink(b)) matmul_at_b_acc(a.value(), g, *gb);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  Tape& t = tape_of(a, b);
  if (!a.value().same_shape(b.value())) shape_error("add", a.value(), b.value());
  Matrix out = a.value();
  out.add_in_place(b.value());
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  Tape& t = tape_of(a, b);
  if (!a.value().same_shape(b.value())) shape_error("sub", a.value(), b.value());
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, g);
    if (Matrix* gb = tp.grad_sink(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  });
}

Tensor scale(const Tensor& a, double s) {
  Tape& t = tape_of(a);
  Matrix out = a.value();
  for (double& v : out.values()) v *= s;
  return t.record(std::move(out), {a}, [a, s](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += s * g[i];
  });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  Tape& t = tape_of(a, b);
  if (!a.value().same_shape(b.value())) shape_error("hadamard", a.value(), b.value());
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * b.value()[i];
    if (Matrix* gb = tp.grad_sink(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * a.value()[i];
  });
}

Tensor mask(const Tensor& a, const Matrix& m) {
  Tape& t = tape_of(a);
  if (!a.value().same_shape(m)) shape_error("mask", a.value(), m);
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= m[i];
  return t.record(std::move(out), {a}, [a, m](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * m[i];
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  Tape& t = tape_of(a, b);
  if (a.rows() != b.rows()) shape_error("concat_cols", a.value(), b.value());
  const std::size_t ca = a.cols(), cb = b.cols();
  Matrix out(a.rows(), ca + cb);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < ca; ++c) out(r, c) = a.value()(r, c);
    for (std::size_t c = 0; c < cb; ++c) out(r, ca + c) = b.value()(r, c);
  }
  return t.record(std::move(out), {a, b}, [a, b, ca, cb](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a))
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < ca; ++c) (*ga)(r, c) += g(r, c);
    if (Matrix* gb = tp.grad_sink(b))
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < cb; ++c) (*gb)(r, c) += g(r, ca + c);
  });
}

Tensor transpose(const Tensor& a) {
  Tape& t = tape_of(a);
  return t.record(a.value().transposed(), {a}, [a](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a)) ga->add_in_place(g.transposed());
  });
}

Tensor row_softmax_masked(const Tensor& a, const Matrix& m) {
  Tape& t = tape_of(a);
  if (!a.value().same_shape(m)) shape_error("row_softmax_masked", a.value(), m);
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (m(r, c) != 0.0) mx = std::max(mx, x(r, c));
    if (mx == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c)
      if (m(r, c) != 0.0) z += (out(r, c) = std::exp(x(r, c) - mx));
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) /= z;
  }
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& g, const Matrix& y) {
    Matrix* ga = tp.grad_sink(a);
    if (!ga) return;
    // dx = y * (g - <g, y>) per row; masked entries have y = 0 and get 0.
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) (*ga)(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

Tensor tanh(const Tensor& a) {
  Tape& t = tape_of(a);
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.value()[i]);
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& g, const Matrix& y) {
    if (Matrix* ga = tp.grad_sink(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Tensor relu(const Tensor& a) {
  Tape& t = tape_of(a);
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, a.value()[i]);
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a))
      for (std::size_t i = 0; i < g.size(); ++i)
        if (a.value()[i] > 0.0) (*ga)[i] += g[i];
  });
}

Tensor sigmoid(const Tensor& a) {
  Tape& t = tape_of(a);
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-a.value()[i]));
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& g, const Matrix& y) {
    if (Matrix* ga = tp.grad_sink(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Tensor sum(const Tensor& a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return t.record(Matrix::scalar(s), {a}, [a](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a))
      for (double& v : ga->values()) v += g[0];
  });
}

Tensor mean_rows(const Tensor& a) {
  Tape& t = tape_of(a);
  const std::size_t n = a.rows();
  Matrix out(1, a.cols());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(0, c) += a.value()(r, c);
  if (n > 0)
    for (double& v : out.values()) v /= double(n);
  return t.record(std::move(out), {a}, [a, n](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix* ga = tp.grad_sink(a);
    if (!ga || n == 0) return;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) (*ga)(r, c) += g(0, c) / double(n);
  });
}

Tensor max_pool(const Tensor& a, std::size_t height, std::size_t width, std::size_t window) {
  Tape& t = tape_of(a);
  if (window == 0) throw ContractViolation("max_pool: window must be positive");
  if (a.rows() != height * width) shape_error("max_pool", a.value(), grid_string(height, width));
  const std::size_t oh = (height + window - 1) / window, ow = (width + window - 1) / window;
  const std::size_t ch = a.cols();
  Matrix out(oh * ow, ch);
  std::vector<std::size_t> argmax(oh * ow * ch, 0);
  const Matrix& x = a.value();
  for (std::size_t pr = 0; pr < oh; ++pr)
    for (std::size_t pc = 0; pc < ow; ++pc)
      for (std::size_t c = 0; c < ch; ++c) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_cell = 0;
        for (std::size_t r = pr * window; r < std::min(height, (pr + 1) * window); ++r)
          for (std::size_t q = pc * window; q < std::min(width, (pc + 1) * window); ++q) {
            const std::size_t cell = r * width + q;
            if (x(cell, c) > best) {
              best = x(cell, c);
              best_cell = cell;
            }
          }
        out(pr * ow + pc, c) = best;
        argmax[(pr * ow + pc) * ch + c] = best_cell;
      }
  return t.record(std::move(out), {a}, [a, argmax, ch](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a))
      for (std::size_t o = 0; o < g.rows(); ++o)
        for (std::size_t c = 0; c < ch; ++c) (*ga)(argmax[o * ch + c], c) += g(o, c);
  });
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  Tape& t = tape_of(pred, target);
  if (!pred.value().same_shape(target.value())) shape_error("mse", pred.value(), target.value());
  const std::size_t n = pred.value().size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred.value()[i] - target.value()[i];
    s += d * d;
  }
  if (n > 0) s /= double(n);
  return t.record(Matrix::scalar(s), {pred, target}, [pred, target, n](Tape& tp, const Matrix& g, const Matrix&) {
    Matrix* gp = tp.grad_sink(pred);
    Matrix* gt = tp.grad_sink(target);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = 2.0 * g[0] * (pred.value()[i] - target.value()[i]) / double(n);
      if (gp) (*gp)[i] += d;
      if (gt) (*gt)[i] -= d;
    }
  });
}

Tensor add_row(const Tensor& a, const Tensor& b) {
  Tape& t = tape_of(a, b);
  if (b.rows() != 1 || b.cols() != a.cols()) shape_error("add_row", a.value(), b.value());
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += b.value()(0, c);
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, g);
    if (Matrix* gb = tp.grad_sink(b))
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) (*gb)(0, c) += g(r, c);
  });
}

Tensor mul_row(const Tensor& a, const Tensor& gate) {
  Tape& t = tape_of(a, gate);
  if (gate.rows() != 1 || gate.cols() != a.cols()) shape_error("mul_row", a.value(), gate.value());
  Matrix out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) *= gate.value()(0, c);
  return t.record(std::move(out), {a, gate}, [a, gate](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a))
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) (*ga)(r, c) += g(r, c) * gate.value()(0, c);
    if (Matrix* gg = tp.grad_sink(gate))
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) (*gg)(0, c) += g(r, c) * a.value()(r, c);
  });
}

Tensor spmm(const SparseMatrix& s, const Tensor& x) {
  Tape& t = tape_of(x);
  if (s.cols != x.rows())
    shape_error("spmm", x.value(), "sparse [" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + "]");
  const std::size_t ch = x.cols();
  Matrix out(s.rows, ch);
  for (const auto& e : s.entries)
    for (std::size_t c = 0; c < ch; ++c) out(e.row, c) += e.weight * x.value()(e.col, c);
  return t.record(std::move(out), {x}, [s, x, ch](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* gx = tp.grad_sink(x))
      for (const auto& e : s.entries)
        for (std::size_t c = 0; c < ch; ++c) (*gx)(e.col, c) += e.weight * g(e.row, c);
  });
}

Tensor pad(const Tensor& a, std::size_t rows, std::size_t cols) {
  Tape& t = tape_of(a);
  if (a.rows() > rows || a.cols() > cols)
    shape_error("pad", a.value(), "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]");
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a.value()(r, c);
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a))
      for (std::size_t r = 0; r < ga->rows(); ++r)
        for (std::size_t c = 0; c < ga->cols(); ++c) (*ga)(r, c) += g(r, c);
  });
}

Tensor slice(const Tensor& a, std::size_t row0, std::size_t col0, std::size_t rows, std::size_t cols) {
  Tape& t = tape_of(a);
  if (row0 + rows > a.rows() || col0 + cols > a.cols())
    shape_error("slice", a.value(),
                "window at (" + std::to_string(row0) + "," + std::to_string(col0) + ") of [" +
                    std::to_string(rows) + "x" + std::to_string(cols) + "]");
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = a.value()(row0 + r, col0 + c);
  return t.record(std::move(out), {a}, [a, row0, col0](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a))
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) (*ga)(row0 + r, col0 + c) += g(r, c);
  });
}

Tensor reshape(const Tensor& a, std::size_t rows, std::size_t cols) {
  Tape& t = tape_of(a);
  if (rows * cols != a.value().size())
    shape_error("reshape", a.value(), "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]");
  Matrix out(rows, cols, a.value().values());
  return t.record(std::move(out), {a}, [a](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a))
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
  });
}

namespace {

// Row and column sums over a grid are self-adjoint, so forward and backward
// share one kernel.
void grid_row_sum_acc(const Matrix& x, std::size_t h, std::size_t w, Matrix& out) {
  const std::size_t ch = x.cols();
  std::vector<double> acc(ch);
  for (std::size_t r = 0; r < h; ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t q = 0; q < w; ++q)
      for (std::size_t c = 0; c < ch; ++c) acc[c] += x(r * w + q, c);
    for (std::size_t q = 0; q < w; ++q)
      for (std::size_t c = 0; c < ch; ++c) out(r * w + q, c) += acc[c];
  }
}

void grid_col_sum_acc(const Matrix& x, std::size_t h, std::size_t w, Matrix& out) {
  const std::size_t ch = x.cols();
  std::vector<double> acc(ch);
  for (std::size_t q = 0; q < w; ++q) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < ch; ++c) acc[c] += x(r * w + q, c);
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < ch; ++c) out(r * w + q, c) += acc[c];
  }
}

}  // namespace

Tensor grid_row_sum(const Tensor& a, std::size_t height, std::size_t width) {
  Tape& t = tape_of(a);
  if (a.rows() != height * width) shape_error("grid_row_sum", a.value(), grid_string(height, width));
  Matrix out(a.rows(), a.cols());
  grid_row_sum_acc(a.value(), height, width, out);
  return t.record(std::move(out), {a}, [a, height, width](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a)) grid_row_sum_acc(g, height, width, *ga);
  });
}

Tensor grid_col_sum(const Tensor& a, std::size_t height, std::size_t width) {
  Tape& t = tape_of(a);
  if (a.rows() != height * width) shape_error("grid_col_sum", a.value(), grid_string(height, width));
  Matrix out(a.rows(), a.cols());
  grid_col_sum_acc(a.value(), height, width, out);
  return t.record(std::move(out), {a}, [a, height, width](Tape& tp, const Matrix& g, const Matrix&) {
    if (Matrix* ga = tp.grad_sink(a)) grid_col_sum_acc(g, height, width, *ga);
  });
}

}  // namespace segmn::ad
