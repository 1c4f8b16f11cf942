#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "segmn/autodiff.hpp"
#include "segmn/matrix.hpp"

namespace segmn {

/// Named learnable matrices, kept in insertion order.
class ParamStore {
 public:
  void add(const std::string& name, Matrix init);
  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  const Matrix& get(const std::string& name) const;
  Matrix& get(const std::string& name);
  const std::vector<std::string>& names() const { return order_; }
  std::size_t scalar_count() const;
  /// FNV-1a over names, shapes and the raw bytes of every value.
  std::uint64_t checksum() const;

  /// Text checkpoint: a header line, then per parameter a "name rows cols" line
  /// and one line of values printed with 17 significant digits.
  void write(std::ostream& out) const;
  static ParamStore read(std::istream& in);
  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

  friend bool operator==(const ParamStore& a, const ParamStore& b) {
    return a.order_ == b.order_ && a.values_ == b.values_;
  }

 private:
  std::vector<std::string> order_;
  std::map<std::string, Matrix> values_;
};

using GradMap = std::map<std::string, Matrix>;

/// Lazily places parameters on a tape as leaves, once per name.
class ParamBinding {
 public:
  ParamBinding(const ParamStore& store, ad::Tape& tape, bool requires_grad = true)
      : store_(store), tape_(tape), requires_grad_(requires_grad) {}

  ad::Tensor operator()(const std::string& name);
  ad::Tape& tape() { return tape_; }
  const ParamStore& store() const { return store_; }
  /// Gradients of every parameter in the store after tape.backward(); zero for
  /// parameters the forward pass never touched.
  GradMap grads() const;
  /// Adds the gradients of bound parameters into `acc` (entries created as needed).
  void accumulate_grads(GradMap& acc) const;

 private:
  const ParamStore& store_;
  ad::Tape& tape_;
  bool requires_grad_;
  std::map<std::string, ad::Tensor> bound_;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::size_t step = 0;
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;
};

/// One bias-corrected Adam update. Checks every gradient for finiteness before
/// touching anything; throws NonFiniteGradient naming the parameter otherwise.
void adam_step(ParamStore& params, const GradMap& grads, AdamState& state, const AdamConfig& cfg);

/// Glorot-uniform initialisation.
Matrix glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

}  // namespace segmn
