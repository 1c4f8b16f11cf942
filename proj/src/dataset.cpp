#include "segmn/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "segmn/ged.hpp"

namespace segmn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DatasetError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw DatasetError("cannot write " + p.string());
  out << text;
}

bool is_connected(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        stack.push_back(w);
      }
  }
  return count == n;
}

}  // namespace

std::pair<std::string, std::string> LabelCache::key(const std::string& a, const std::string& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

void LabelCache::set(const std::string& a, const std::string& b, int ged) { table_[key(a, b)] = ged; }

bool LabelCache::contains(const std::string& a, const std::string& b) const { return table_.count(key(a, b)) != 0; }

int LabelCache::get(const std::string& a, const std::string& b) const {
  auto it = table_.find(key(a, b));
  if (it == table_.end()) throw LabelCacheMiss("no GED label for pair (" + a + ", " + b + ")");
  return it->second;
}

void LabelCache::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write " + path);
  for (const auto& [k, ged] : table_) out << k.first << ' ' << k.second << ' ' << ged << '\n';
}

LabelCache LabelCache::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot read " + path);
  LabelCache cache;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b;
    int ged = 0;
    if (!(ls >> a >> b >> ged) || ged < 0)
      throw DatasetError(path + ":" + std::to_string(lineno) + ": expected 'id_i id_j ged'");
    cache.set(a, b, ged);
  }
  return cache;
}

std::size_t Corpus::index_of(const std::string& id) const {
  if (index_.size() != graphs.size()) {
    index_.clear();
    for (std::size_t i = 0; i < graphs.size(); ++i) index_[graphs[i].id()] = i;
  }
  auto it = index_.find(id);
  if (it == index_.end()) throw DatasetError("unknown graph id '" + id + "'");
  return it->second;
}

NodeGraph parse_graph_record(const std::string& text, const std::vector<std::string>& vocab,
                             const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DatasetError(source + ": parse error: " + e.what());
  }
  try {
    const std::string id = j.at("id").get<std::string>();
    std::optional<std::vector<int>> labels;
    std::size_t n = 0;
    if (j.contains("node_labels")) {
      labels.emplace();
      for (const auto& l : j.at("node_labels")) {
        const std::string name = l.get<std::string>();
        auto it = std::find(vocab.begin(), vocab.end(), name);
        if (it == vocab.end()) throw DatasetError(source + ": unknown label '" + name + "'");
        labels->push_back(int(it - vocab.begin()));
      }
      n = labels->size();
    }
    if (j.contains("num_nodes")) {
      const std::size_t declared = j.at("num_nodes").get<std::size_t>();
      if (labels && declared != n)
        throw DatasetError(source + ": num_nodes " + std::to_string(declared) + " disagrees with " +
                           std::to_string(n) + " labels");
      n = declared;
    } else if (!labels) {
      throw DatasetError(source + ": record needs num_nodes or node_labels");
    }
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw DatasetError(source + ": edge must be a [i, j] pair");
      edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
    }
    const std::size_t label_count = labels ? vocab.size() : 0;
    return NodeGraph(id, n, edges, std::move(labels), label_count);
  } catch (const GraphValidationError& e) {
    throw DatasetError(source + ": " + e.what());
  } catch (const json::exception& e) {
    throw DatasetError(source + ": malformed record: " + e.what());
  }
}

std::string graph_record(const NodeGraph& g, const std::vector<std::string>& vocab) {
  json j;
  j["id"] = g.id();
  j["num_nodes"] = g.num_nodes();
  if (g.labels()) {
    json labels = json::array();
    for (int l : *g.labels()) labels.push_back(vocab.at(std::size_t(l)));
    j["node_labels"] = labels;
  }
  json edges = json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.u, e.v});
  j["edges"] = edges;
  return j.dump();
}

NodeGraph load_graph_file(const std::string& path, const std::vector<std::string>& vocab) {
  return parse_graph_record(read_file(path), vocab, path);
}

Corpus generate_synthetic(const SyntheticSpec& spec) {
  if (spec.min_nodes < 2 || spec.max_nodes > 10 || spec.min_nodes > spec.max_nodes)
    throw DatasetError("node range [" + std::to_string(spec.min_nodes) + ", " + std::to_string(spec.max_nodes) +
                       "] must lie within [2, 10]");
  if (spec.n_graphs == 0) throw DatasetError("no graphs requested");
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> size_dist(spec.min_nodes, spec.max_nodes);
  std::bernoulli_distribution edge_dist(spec.edge_prob);

  Corpus c;
  c.name = spec.name;
  for (std::size_t l = 0; l < spec.label_count; ++l) c.label_vocab.push_back("L" + std::to_string(l));

  for (std::size_t gi = 0; gi < spec.n_graphs; ++gi) {
    const std::size_t n = size_dist(rng);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::size_t attempt = 0;
    for (;; ++attempt) {
      if (attempt == spec.max_retries)
        throw DatasetError("retry bound exceeded: no connected graph with " + std::to_string(n) +
                           " nodes at edge_prob " + std::to_string(spec.edge_prob) + " after " +
                           std::to_string(spec.max_retries) + " draws");
      edges.clear();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          if (edge_dist(rng)) edges.emplace_back(i, j);
      if (is_connected(n, edges)) break;
    }
    std::optional<std::vector<int>> labels;
    if (spec.label_count > 0) {
      std::uniform_int_distribution<int> label_dist(0, int(spec.label_count) - 1);
      labels.emplace(n);
      for (int& l : *labels) l = label_dist(rng);
    }
    c.graphs.emplace_back("g" + std::to_string(gi), n, edges, std::move(labels), spec.label_count);
    c.n_max = std::max(c.n_max, n);
  }

  std::vector<std::string> ids;
  for (const auto& g : c.graphs) ids.push_back(g.id());
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * double(ids.size())));
  c.train_ids.assign(ids.begin(), ids.begin() + std::ptrdiff_t(n_train));
  c.test_ids.assign(ids.begin() + std::ptrdiff_t(n_train), ids.end());
  return c;
}

Corpus load_corpus(const std::string& dir) {
  const fs::path root(dir);
  const fs::path manifest = root / "manifest.json";
  if (!fs::exists(manifest)) {
    if (!fs::exists(root) || fs::is_empty(root)) throw DatasetError(dir + ": no graphs (empty dataset directory)");
    throw DatasetError(dir + ": missing manifest.json");
  }
  json m;
  try {
    m = json::parse(read_file(manifest));
  } catch (const json::parse_error& e) {
    throw DatasetError(manifest.string() + ": parse error: " + e.what());
  }
  Corpus c;
  try {
    c.name = m.value("name", std::string("dataset"));
    c.label_vocab = m.value("label_vocab", std::vector<std::string>{});
    c.train_ids = m.at("train").get<std::vector<std::string>>();
    c.test_ids = m.at("test").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DatasetError(manifest.string() + ": " + e.what());
  }
  std::vector<std::string> ids = c.train_ids;
  ids.insert(ids.end(), c.test_ids.begin(), c.test_ids.end());
  if (ids.empty()) throw DatasetError(dir + ": no graphs listed in manifest");
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DatasetError(dir + ": train/test split is not disjoint");

  for (const auto& id : ids) {
    const fs::path p = root / "graphs" / (id + ".json");
    NodeGraph g = load_graph_file(p.string(), c.label_vocab);
    if (g.id() != id) throw DatasetError(p.string() + ": record id '" + g.id() + "' does not match file name");
    c.n_max = std::max(c.n_max, g.num_nodes());
    c.graphs.push_back(std::move(g));
  }
  if (fs::exists(root / "labels.txt")) c.labels = LabelCache::load((root / "labels.txt").string());
  return c;
}

void save_corpus(const Corpus& corpus, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root / "graphs");
  json m;
  m["name"] = corpus.name;
  m["label_vocab"] = corpus.label_vocab;
  m["train"] = corpus.train_ids;
  m["test"] = corpus.test_ids;
  m["n_max"] = corpus.n_max;
  write_file(root / "manifest.json", m.dump(2) + "\n");
  for (const auto& g : corpus.graphs)
    write_file(root / "graphs" / (g.id() + ".json"), graph_record(g, corpus.label_vocab) + "\n");
  if (corpus.labels.size() > 0) corpus.labels.save((root / "labels.txt").string());
}

void label_corpus(Corpus& corpus, std::size_t node_budget, std::size_t threads) {
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  std::vector<std::size_t> train, test;
  for (const auto& id : corpus.train_ids) train.push_back(corpus.index_of(id));
  for (const auto& id : corpus.test_ids) test.push_back(corpus.index_of(id));
  for (std::size_t a = 0; a < train.size(); ++a)
    for (std::size_t b = a; b < train.size(); ++b) jobs.emplace_back(train[a], train[b]);
  for (std::size_t q : test)
    for (std::size_t t : train) jobs.emplace_back(q, t);

  std::vector<int> result(jobs.size(), -1);
  std::vector<std::string> errors(jobs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(jobs.size(), 1));
  auto worker = [&](std::size_t w) {
    for (std::size_t j = w; j < jobs.size(); j += threads) {
      const auto [a, b] = jobs[j];
      if (corpus.labels.contains(corpus.graphs[a].id(), corpus.graphs[b].id())) continue;
      try {
        result[j] = exact_ged_astar(corpus.graphs[a], corpus.graphs[b], {}, node_budget);
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (!errors[j].empty()) throw DatasetError(errors[j]);
    if (result[j] >= 0) corpus.labels.set(corpus.graphs[jobs[j].first].id(), corpus.graphs[jobs[j].second].id(), result[j]);
  }
}

std::vector<PairSample> enumerate_pairs(const Corpus& corpus, PairMode mode, std::uint64_t seed,
                                        bool include_self_pairs) {
  std::vector<PairSample> out;
  auto make = [&](const std::string& a, const std::string& b) {
    const std::size_t ia = corpus.index_of(a), ib = corpus.index_of(b);
    const int ged = corpus.labels.get(a, b);
    out.push_back(PairSample{ia, ib, ged,
                             normalized_target(ged, corpus.graphs[ia].num_nodes(), corpus.graphs[ib].num_nodes())});
  };
  if (mode == PairMode::Train) {
    for (std::size_t a = 0; a < corpus.train_ids.size(); ++a)
      for (std::size_t b = include_self_pairs ? a : a + 1; b < corpus.train_ids.size(); ++b)
        make(corpus.train_ids[a], corpus.train_ids[b]);
    std::mt19937_64 rng(seed);
    std::shuffle(out.begin(), out.end(), rng);
  } else {
    for (const auto& q : corpus.test_ids)
      for (const auto& t : corpus.train_ids) make(q, t);
  }
  return out;
}

}  // namespace segmn
