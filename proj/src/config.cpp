#include "segmn/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace segmn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw std::invalid_argument("config: " + key + " expects a count, got '" + v + "'");
  return static_cast<std::size_t>(x);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: " + key + " expects true/false, got '" + v + "'");
}

template <typename Range>
std::string join(const Range& r) {
  std::string s;
  for (auto x : r) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_size(key, item));
  }
  return out;
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "variant") variant = parse_variant(v);
  else if (key == "spm_layers") spm_layers = to_size(key, v);
  else if (key == "hidden") hidden = to_size(key, v);
  else if (key == "layers") layers = to_size(key, v);
  else if (key == "key_dim") key_dim = to_size(key, v);
  else if (key == "attention_dim") attention_dim = to_size(key, v);
  else if (key == "conv_channels") conv_channels = to_list(key, v);
  else if (key == "pool_window") pool_window = to_size(key, v);
  else if (key == "lr") lr = to_double(key, v);
  else if (key == "beta1") beta1 = to_double(key, v);
  else if (key == "beta2") beta2 = to_double(key, v);
  else if (key == "eps") eps = to_double(key, v);
  else if (key == "batch_size") batch_size = to_size(key, v);
  else if (key == "epochs") epochs = to_size(key, v);
  else if (key == "pairs_per_epoch") pairs_per_epoch = to_size(key, v);
  else if (key == "eval_every") eval_every = to_size(key, v);
  else if (key == "include_self_pairs") include_self_pairs = to_bool(key, v);
  else if (key == "seed") seed = to_size(key, v);
  else if (key == "threads") threads = to_size(key, v);
  else if (key == "dataset") dataset = v;
  else if (key == "baseline") {
    if (v == "none") baseline = false;
    else if (v == "graphsim-stub") baseline = true;
    else throw std::invalid_argument("config: baseline expects none or graphsim-stub, got '" + v + "'");
  } else if (key == "spm_positions") {
    spm_positions.clear();
    for (std::size_t p : to_list(key, v)) {
      if (p < 1 || p > 3) throw std::invalid_argument("config: spm_positions must be within {1,2,3}");
      spm_positions.insert(p);
    }
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  if (batch_size == 0) throw std::invalid_argument("config: batch_size must be positive");
  if (hidden == 0 || key_dim == 0 || attention_dim == 0) throw std::invalid_argument("config: widths must be positive");
  if (pool_window == 0) throw std::invalid_argument("config: pool_window must be positive");
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << "variant = " << to_string(variant) << '\n'
      << "spm_layers = " << spm_layers << '\n'
      << "hidden = " << hidden << '\n'
      << "layers = " << layers << '\n'
      << "key_dim = " << key_dim << '\n'
      << "attention_dim = " << attention_dim << '\n'
      << "conv_channels = " << join(conv_channels) << '\n'
      << "pool_window = " << pool_window << '\n'
      << "lr = " << lr << '\n'
      << "beta1 = " << beta1 << '\n'
      << "beta2 = " << beta2 << '\n'
      << "eps = " << eps << '\n'
      << "batch_size = " << batch_size << '\n'
      << "epochs = " << epochs << '\n'
      << "pairs_per_epoch = " << pairs_per_epoch << '\n'
      << "eval_every = " << eval_every << '\n'
      << "include_self_pairs = " << (include_self_pairs ? "true" : "false") << '\n'
      << "seed = " << seed << '\n'
      << "threads = " << threads << '\n'
      << "dataset = " << dataset << '\n'
      << "baseline = " << (baseline ? "graphsim-stub" : "none") << '\n'
      << "spm_positions = " << join(spm_positions) << '\n';
  return out.str();
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace segmn
