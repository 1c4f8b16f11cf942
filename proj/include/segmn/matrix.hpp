#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace segmn {

/// Raised when operand shapes or indices violate an operation's contract.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Dense row-major matrix of doubles. Scalars are 1x1, vectors are Nx1 or 1xN.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);
  static Matrix scalar(double v) { return Matrix(1, 1, v); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_string() const;

  Matrix transposed() const;
  void fill(double v);
  void add_in_place(const Matrix& o);

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Coordinate-list sparse matrix. Entries may repeat; repeats add.
struct SparseMatrix {
  struct Entry {
    std::size_t row;
    std::size_t col;
    double weight;
  };
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Entry> entries;

  Matrix to_dense() const;
};

/// out = a * b (fresh allocation).
Matrix matmul(const Matrix& a, const Matrix& b);
/// out += a^T * b
void matmul_at_b_acc(const Matrix& a, const Matrix& b, Matrix& out);
/// out += a * b^T
void matmul_a_bt_acc(const Matrix& a, const Matrix& b, Matrix& out);
/// out += a * b
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out);

double max_abs_diff(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);

}  // namespace segmn
