#include "segmn/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace segmn {

namespace {
constexpr const char* kCheckpointHeader = "segmn-checkpoint 1";
}

void ParamStore::add(const std::string& name, Matrix init) {
  if (values_.count(name)) throw ContractViolation("parameter '" + name + "' already registered");
  order_.push_back(name);
  values_.emplace(name, std::move(init));
}

const Matrix& ParamStore::get(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw ContractViolation("unknown parameter '" + name + "'");
  return it->second;
}

Matrix& ParamStore::get(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw ContractViolation("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : values_) n += m.size();
  return n;
}

std::uint64_t ParamStore::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& name : order_) {
    const Matrix& m = values_.at(name);
    mix(name.data(), name.size());
    const std::size_t shape[2] = {m.rows(), m.cols()};
    mix(shape, sizeof shape);
    mix(m.data(), m.size() * sizeof(double));
  }
  return h;
}

void ParamStore::write(std::ostream& out) const {
  out << kCheckpointHeader << '\n' << order_.size() << '\n';
  out << std::setprecision(17);
  for (const auto& name : order_) {
    const Matrix& m = values_.at(name);
    out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) out << (i ? " " : "") << m[i];
    out << '\n';
  }
}

ParamStore ParamStore::read(std::istream& in) {
  std::string header;
  std::getline(in, header);
  if (header != kCheckpointHeader) throw std::runtime_error("checkpoint: bad header '" + header + "'");
  std::size_t count = 0;
  if (!(in >> count)) throw std::runtime_error("checkpoint: missing parameter count");
  ParamStore store;
  for (std::size_t p = 0; p < count; ++p) {
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols)) throw std::runtime_error("checkpoint: truncated at parameter " + std::to_string(p));
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (!(in >> m[i])) throw std::runtime_error("checkpoint: truncated values for '" + name + "'");
    store.add(name, std::move(m));
  }
  return store;
}

void ParamStore::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  write(out);
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  return read(in);
}

ad::Tensor ParamBinding::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  const Matrix& m = store_.get(name);
  ad::Tensor t = requires_grad_ ? tape_.variable(m) : tape_.constant(m);
  bound_.emplace(name, t);
  return t;
}

GradMap ParamBinding::grads() const {
  GradMap out;
  for (const auto& name : store_.names()) {
    const Matrix& v = store_.get(name);
    auto it = bound_.find(name);
    if (it != bound_.end() && it->second.grad().same_shape(v))
      out.emplace(name, it->second.grad());
    else
      out.emplace(name, Matrix(v.rows(), v.cols()));
  }
  return out;
}

void ParamBinding::accumulate_grads(GradMap& acc) const {
  for (const auto& [name, t] : bound_) {
    const Matrix& g = t.grad();
    if (g.empty()) continue;
    auto [it, fresh] = acc.try_emplace(name, g.rows(), g.cols());
    it->second.add_in_place(g);
  }
}

void adam_step(ParamStore& params, const GradMap& grads, AdamState& state, const AdamConfig& cfg) {
  for (const auto& [name, g] : grads) {
    if (!params.get(name).same_shape(g))
      throw ContractViolation("adam_step: gradient for '" + name + "' has shape " + g.shape_string() +
                              " vs " + params.get(name).shape_string());
    for (double v : g.values())
      if (!std::isfinite(v)) throw NonFiniteGradient("non-finite gradient for parameter '" + name + "'");
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
  for (const auto& [name, g] : grads) {
    Matrix& p = params.get(name);
    auto [mit, _m] = state.m.try_emplace(name, p.rows(), p.cols());
    auto [vit, _v] = state.v.try_emplace(name, p.rows(), p.cols());
    Matrix& m = mit->second;
    Matrix& v = vit->second;
    if (!m.same_shape(p) || !v.same_shape(p))
      throw ContractViolation("adam_step: optimizer state shape mismatch for '" + name + "'");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

Matrix glorot(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / double(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

}  // namespace segmn
