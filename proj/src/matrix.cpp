#include "segmn/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace segmn {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (data_.size() != rows * cols) {
    throw ContractViolation("Matrix: " + std::to_string(data_.size()) +
                            " values do not fill shape " + std::to_string(rows) + "x" +
                            std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string Matrix::shape_string() const {
  return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Matrix::add_in_place(const Matrix& o) {
  if (!same_shape(o))
    throw ContractViolation("add_in_place: shape " + shape_string() + " vs " + o.shape_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
}

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = po + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ContractViolation("matmul: shape " + a.shape_string() + " vs " + b.shape_string());
  Matrix out(a.rows(), b.cols());
  matmul_acc(a, b, out);
  return out;
}

void matmul_at_b_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  // a: k x n, b: k x m, out: n x m
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = pb + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double av = pa[p * n + i];
      if (av == 0.0) continue;
      double* orow = po + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

void matmul_a_bt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  // a: n x k, b: m x k, out: n x m
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = pb + j * k;
      // Four partial sums let the compiler vectorise without reassociating.
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        s0 += arow[p] * brow[p];
        s1 += arow[p + 1] * brow[p + 1];
        s2 += arow[p + 2] * brow[p + 2];
        s3 += arow[p + 3] * brow[p + 3];
      }
      for (; p < k; ++p) s0 += arow[p] * brow[p];
      po[i * m + j] += (s0 + s1) + (s2 + s3);
    }
  }
}

Matrix SparseMatrix::to_dense() const {
  Matrix m(rows, cols);
  for (const auto& e : entries) m(e.row, e.col) += e.weight;
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b))
    throw ContractViolation("max_abs_diff: shape " + a.shape_string() + " vs " + b.shape_string());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return std::sqrt(s);
}

}  // namespace segmn
