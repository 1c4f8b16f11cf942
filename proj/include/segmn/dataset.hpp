#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "segmn/graph.hpp"

namespace segmn {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LabelCacheMiss : public DatasetError {
 public:
  using DatasetError::DatasetError;
};

/// Symmetric (id, id) -> GED table. Text form: one "id_i id_j ged" line per pair.
class LabelCache {
 public:
  void set(const std::string& a, const std::string& b, int ged);
  bool contains(const std::string& a, const std::string& b) const;
  /// Throws LabelCacheMiss.
  int get(const std::string& a, const std::string& b) const;
  std::size_t size() const { return table_.size(); }

  void save(const std::string& path) const;
  static LabelCache load(const std::string& path);

  friend bool operator==(const LabelCache&, const LabelCache&) = default;

 private:
  static std::pair<std::string, std::string> key(const std::string& a, const std::string& b);
  std::map<std::pair<std::string, std::string>, int> table_;
};

struct Corpus {
  std::string name;
  std::vector<std::string> label_vocab;  ///< empty for unlabeled datasets
  std::vector<NodeGraph> graphs;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::size_t n_max = 0;
  LabelCache labels;

  std::size_t index_of(const std::string& id) const;
  const NodeGraph& graph(const std::string& id) const { return graphs[index_of(id)]; }
  /// Node feature width: vocabulary size, or 1 for unlabeled corpora.
  std::size_t feature_dim() const { return label_vocab.empty() ? 1 : label_vocab.size(); }

 private:
  mutable std::map<std::string, std::size_t> index_;
};

struct SyntheticSpec {
  std::size_t n_graphs = 200;
  std::size_t min_nodes = 4;
  std::size_t max_nodes = 8;
  double edge_prob = 0.3;
  std::size_t label_count = 0;  ///< 0 = unlabeled
  std::uint64_t seed = 1;
  std::size_t max_retries = 1000;
  double train_fraction = 0.8;
  std::string name = "synthetic";
};

/// Connected random graphs by rejection sampling, split train/test by seed.
/// Throws DatasetError when the node range leaves [2, 10] or a graph cannot
/// be made connected within `max_retries` draws.
Corpus generate_synthetic(const SyntheticSpec& spec);

/// Directory layout: manifest.json, graphs/<id>.json, optional labels.txt.
Corpus load_corpus(const std::string& dir);
void save_corpus(const Corpus& corpus, const std::string& dir);

/// Graph record <-> NodeGraph. Labels are vocabulary strings; unknown ones are rejected.
NodeGraph parse_graph_record(const std::string& text, const std::vector<std::string>& vocab,
                             const std::string& source);
std::string graph_record(const NodeGraph& g, const std::vector<std::string>& vocab);
NodeGraph load_graph_file(const std::string& path, const std::vector<std::string>& vocab);

/// Fills the label cache for every train x train and test x train pair with
/// the exact oracle. Pairs are solved in parallel; the result is deterministic.
void label_corpus(Corpus& corpus, std::size_t node_budget = 10, std::size_t threads = 0);

struct PairSample {
  std::size_t first;   ///< index into Corpus::graphs
  std::size_t second;  ///< index into Corpus::graphs
  int ged;
  double target;
};

enum class PairMode { Train, Eval };

/// Train: unordered train x train pairs (self-pairs only on request), shuffled by `seed`.
/// Eval: each test graph against every train graph, in split order.
/// Throws LabelCacheMiss when a pair has no label.
std::vector<PairSample> enumerate_pairs(const Corpus& corpus, PairMode mode, std::uint64_t seed = 0,
                                        bool include_self_pairs = false);

}  // namespace segmn
