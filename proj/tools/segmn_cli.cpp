// segmn command-line entry point.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "segmn/config.hpp"
#include "segmn/dataset.hpp"
#include "segmn/ged.hpp"
#include "segmn/harness.hpp"
#include "segmn/model.hpp"
#include "segmn/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace segmn;

namespace {

/// Options shared by every model-facing subcommand.
struct CommonOpts {
  std::string config_path;
  std::string dataset;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  long spm_layers = -1;
  std::string variant;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, CommonOpts& o, bool needs_dataset) {
  sub->add_option("--config", o.config_path, "flat key = value experiment config")->check(CLI::ExistingFile);
  auto* ds = sub->add_option("--dataset", o.dataset, "dataset directory");
  if (needs_dataset) ds->required();
  sub->add_option("--out", o.out, "output directory")->capture_default_str();
  sub->add_option_function<std::uint64_t>("--seed", [&o](std::uint64_t s) { o.seed = s, o.seed_set = true; },
                                          "random seed");
  sub->add_option("--spm-layers", o.spm_layers, "SPM layers (0 disables SPM)")->check(CLI::NonNegativeNumber);
  sub->add_option("--variant", o.variant, "node | edge | dual")->check(CLI::IsMember({"node", "edge", "dual"}));
  sub->add_option("--set", o.overrides, "config override key=value (repeatable)");
}

ExperimentConfig resolve(const CommonOpts& o) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (!o.dataset.empty()) cfg.dataset = o.dataset;
  if (o.seed_set) cfg.seed = o.seed;
  if (o.spm_layers >= 0) cfg.spm_layers = std::size_t(o.spm_layers);
  if (!o.variant.empty()) cfg.variant = parse_variant(o.variant);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
      return s;
    };
    cfg.set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string argv_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

/// Records what was run and with what settings next to the artifacts.
void write_manifest(const fs::path& dir, const std::string& command, const std::string& argv, json settings,
                    const ExperimentConfig* cfg, json artifacts) {
  json m;
  m["command"] = command;
  m["argv"] = argv;
  m["settings"] = std::move(settings);
  if (cfg) {
    m["config"] = cfg->to_text();
    write_text(dir / "config.txt", cfg->to_text());
  }
  m["artifacts"] = std::move(artifacts);
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  m["created"] = stamp;
  write_text(dir / "run-manifest.json", m.dump(2) + "\n");
}

Corpus load_labeled(const std::string& dir, std::size_t threads) {
  Corpus c = load_corpus(dir);
  if (c.labels.size() == 0) {
    std::cerr << "labels.txt missing; labelling " << dir << " with the exact oracle\n";
    label_corpus(c, 10, threads);
    c.labels.save((fs::path(dir) / "labels.txt").string());
  }
  return c;
}

/// Vocabulary for standalone graph files: the sorted union of their labels.
std::vector<std::string> vocab_of_files(const std::vector<std::string>& paths) {
  std::set<std::string> labels;
  for (const auto& p : paths) {
    std::ifstream in(p);
    if (!in) throw DatasetError("cannot read " + p);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw DatasetError(p + ": parse error: " + e.what());
    }
    if (j.contains("node_labels"))
      for (const auto& l : j["node_labels"]) labels.insert(l.get<std::string>());
  }
  return {labels.begin(), labels.end()};
}

std::string adjacency_dump(std::size_t n, const std::vector<Edge>& edges, const std::string& title) {
  std::vector<std::string> rows(n, std::string(n, '.'));
  for (const auto& e : edges) rows[e.u][e.v] = rows[e.v][e.u] = '1';
  std::ostringstream out;
  out << "# " << title << ": " << n << " nodes, " << edges.size() << " edges\n";
  for (std::size_t i = 0; i < n; ++i) out << std::setw(4) << i << "  " << rows[i] << '\n';
  return out.str();
}

json edge_list(const std::vector<Edge>& edges) {
  json a = json::array();
  for (const auto& e : edges) a.push_back({e.u, e.v});
  return a;
}

std::string grid_text(const Matrix& m, std::size_t n1, std::size_t n2) {
  std::ostringstream out;
  out << std::setprecision(10);
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t a = 0; a < n2; ++a) out << (a ? " " : "") << m(i, a);
    out << '\n';
  }
  return out.str();
}

std::string heat_table(const Matrix& m, std::size_t n1, std::size_t n2, const std::string& title) {
  static const std::string ramp = " .:-=+*#%@";
  double lo = m(0, 0), hi = m(0, 0);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t a = 0; a < n2; ++a) lo = std::min(lo, m(i, a)), hi = std::max(hi, m(i, a));
  std::ostringstream out;
  out << title << "  (min " << lo << ", max " << hi << ")\n     ";
  for (std::size_t a = 0; a < n2; ++a) out << std::setw(3) << a;
  out << '\n';
  for (std::size_t i = 0; i < n1; ++i) {
    out << std::setw(4) << i << ' ';
    for (std::size_t a = 0; a < n2; ++a) {
      const double t = hi > lo ? (m(i, a) - lo) / (hi - lo) : 0.0;
      const char c = ramp[std::min(ramp.size() - 1, std::size_t(t * double(ramp.size())))];
      out << ' ' << c << c;
    }
    out << '\n';
  }
  return out.str();
}

json report_record(const EvalReport& r) {
  json q = json::array();
  for (const auto& m : r.per_query)
    q.push_back({{"query", m.query_id}, {"candidates", m.candidates}, {"mse", m.mse}, {"rho", m.rho},
                 {"tau", m.tau}, {"p10", m.p10}, {"p20", m.p20}});
  return {{"mse", r.mse},  {"mse_e3", r.mse * 1e3}, {"rho", r.rho},         {"tau", r.tau},
          {"p10", r.p10},  {"p20", r.p20},         {"pairs", r.pairs},     {"runtime_seconds", r.runtime_seconds},
          {"warnings", r.warnings}, {"per_query", q}};
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const LabelCacheMiss*>(&e)) return "label_cache_miss";
  if (dynamic_cast<const DatasetError*>(&e)) return "dataset";
  if (dynamic_cast<const GedTooLarge*>(&e)) return "ged_too_large";
  if (dynamic_cast<const TrainingDiverged*>(&e)) return "diverged";
  if (dynamic_cast<const ConfigurationError*>(&e)) return "configuration";
  if (dynamic_cast<const GraphValidationError*>(&e)) return "graph";
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "config";
  return "runtime";
}

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"segmn: graph similarity learning with structure-aware matching"};
  app.require_subcommand(0, 1);
  const std::string invocation = argv_line(argc, argv);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic corpus");
  SyntheticSpec spec;
  std::string gen_out;
  bool gen_label = false;
  std::size_t gen_threads = 0;
  gen->add_option("--out", gen_out, "dataset directory")->required();
  gen->add_option("--graphs", spec.n_graphs)->capture_default_str();
  gen->add_option("--min-nodes", spec.min_nodes)->capture_default_str();
  gen->add_option("--max-nodes", spec.max_nodes)->capture_default_str();
  gen->add_option("--edge-prob", spec.edge_prob)->capture_default_str();
  gen->add_option("--labels", spec.label_count, "node label vocabulary size (0 = unlabeled)")->capture_default_str();
  gen->add_option("--train-fraction", spec.train_fraction)->capture_default_str();
  gen->add_option("--name", spec.name)->capture_default_str();
  gen->add_option("--seed", spec.seed)->capture_default_str();
  gen->add_flag("--label", gen_label, "also compute exact GED labels");
  gen->add_option("--threads", gen_threads);

  // label
  auto* lab = app.add_subcommand("label", "fill a dataset's label cache with exact GED");
  std::string lab_dataset, lab_out;
  std::size_t lab_budget = 10, lab_threads = 0;
  lab->add_option("--dataset", lab_dataset)->required();
  lab->add_option("--out", lab_out, "manifest directory (default: the dataset)");
  lab->add_option("--budget", lab_budget, "largest graph the oracle accepts")->capture_default_str();
  lab->add_option("--threads", lab_threads);

  // transform
  auto* tr = app.add_subcommand("transform", "dump line graphs and the assignment graph");
  std::string tr_g1, tr_g2, tr_dataset, tr_out = "transform";
  tr->add_option("--graph", tr_g1, "graph record")->required()->check(CLI::ExistingFile);
  tr->add_option("--graph2", tr_g2, "second graph record, enables the assignment graph")->check(CLI::ExistingFile);
  tr->add_option("--dataset", tr_dataset, "dataset whose label vocabulary applies");
  tr->add_option("--out", tr_out)->capture_default_str();

  // oracle
  auto* orc = app.add_subcommand("oracle", "exact GED of two graph records");
  std::vector<std::string> orc_pair;
  std::string orc_dataset;
  std::size_t orc_budget = 10;
  orc->add_option("--pair", orc_pair, "two graph records")->required()->expected(2)->check(CLI::ExistingFile);
  orc->add_option("--dataset", orc_dataset, "dataset whose label vocabulary applies");
  orc->add_option("--budget", orc_budget)->capture_default_str();

  CommonOpts train_o, eval_o, ablate_o, port_o, dump_o;
  auto* trn = app.add_subcommand("train", "train a model and write checkpoints");
  add_common(trn, train_o, true);
  auto* evl = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  add_common(evl, eval_o, true);
  std::string eval_ckpt;
  evl->add_option("--checkpoint", eval_ckpt)->required()->check(CLI::ExistingFile);
  auto* abl = app.add_subcommand("ablate", "node/edge/dual x SPM ablation table");
  add_common(abl, ablate_o, true);
  auto* por = app.add_subcommand("portability", "SPM inserted into a GraphSim-style baseline");
  add_common(por, port_o, true);
  auto* dmp = app.add_subcommand("dump-matrix", "similarity matrices before and after SPM for one pair");
  add_common(dmp, dump_o, true);
  std::string dump_ckpt;
  std::vector<std::string> dump_pair;
  dmp->add_option("--checkpoint", dump_ckpt, "defaults to freshly initialised parameters")->check(CLI::ExistingFile);
  dmp->add_option("--pair", dump_pair, "two graph ids of the dataset")->required()->expected(2);

  if (argc <= 1) {
    std::cout << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 2;
  }

  try {
    if (*gen) {
      Corpus c = generate_synthetic(spec);
      if (gen_label) label_corpus(c, 10, gen_threads);
      save_corpus(c, gen_out);
      write_manifest(gen_out, "gen", invocation,
                     {{"graphs", spec.n_graphs}, {"min_nodes", spec.min_nodes}, {"max_nodes", spec.max_nodes},
                      {"edge_prob", spec.edge_prob}, {"labels", spec.label_count}, {"seed", spec.seed},
                      {"train_fraction", spec.train_fraction}, {"name", spec.name}, {"label", gen_label}},
                     nullptr, {"manifest.json", "graphs/", gen_label ? "labels.txt" : ""});
      std::cout << "wrote " << c.graphs.size() << " graphs (" << c.train_ids.size() << " train, "
                << c.test_ids.size() << " test) to " << gen_out << '\n';
    } else if (*lab) {
      Corpus c = load_corpus(lab_dataset);
      const auto t0 = std::chrono::steady_clock::now();
      label_corpus(c, lab_budget, lab_threads);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const fs::path labels = fs::path(lab_dataset) / "labels.txt";
      c.labels.save(labels.string());
      write_manifest(lab_out.empty() ? lab_dataset : lab_out, "label", invocation,
                     {{"dataset", lab_dataset}, {"budget", lab_budget}, {"threads", lab_threads}}, nullptr,
                     {labels.string()});
      std::cout << "labelled " << c.labels.size() << " pairs in " << secs << " s\n";
    } else if (*tr) {
      std::vector<std::string> vocab =
          tr_dataset.empty() ? vocab_of_files(tr_g2.empty() ? std::vector{tr_g1} : std::vector{tr_g1, tr_g2})
                             : load_corpus(tr_dataset).label_vocab;
      const NodeGraph g1 = load_graph_file(tr_g1, vocab);
      const fs::path out(tr_out);
      json artifacts = json::array();
      auto dump_line = [&](const NodeGraph& g) {
        const LineGraph lg = build_line_graph(g);
        json rec{{"id", g.id() + ".line"}, {"num_nodes", lg.num_nodes}, {"edges", edge_list(lg.edges)},
                 {"shared_node", lg.shared_node}};
        json base_edges = json::array();
        for (const auto& e : g.edges()) base_edges.push_back({e.u, e.v});
        rec["base_edges"] = base_edges;
        write_text(out / (g.id() + ".line.json"), rec.dump() + "\n");
        write_text(out / (g.id() + ".line.adj.txt"), adjacency_dump(lg.num_nodes, lg.edges, g.id() + " line graph"));
        artifacts.push_back(g.id() + ".line.json");
        std::cout << g.id() << ": line graph " << lg.num_nodes << " nodes, " << lg.num_edges() << " edges\n";
      };
      dump_line(g1);
      if (!tr_g2.empty()) {
        const NodeGraph g2 = load_graph_file(tr_g2, vocab);
        dump_line(g2);
        const AssignmentGraph ag = build_assignment_graph(g1, g2);
        json pairs = json::array();
        for (std::size_t i = 0; i < ag.n1; ++i)
          for (std::size_t a = 0; a < ag.n2; ++a) pairs.push_back({i, a});
        const std::string id = g1.id() + "_x_" + g2.id();
        json rec{{"id", id}, {"num_nodes", ag.num_nodes()}, {"edges", edge_list(ag.edges)}, {"pairs", pairs}};
        write_text(out / (id + ".assignment.json"), rec.dump() + "\n");
        write_text(out / (id + ".assignment.adj.txt"), adjacency_dump(ag.num_nodes(), ag.edges, id + " assignment graph"));
        artifacts.push_back(id + ".assignment.json");
        std::cout << id << ": assignment graph " << ag.num_nodes() << " nodes, " << ag.num_edges() << " edges\n";
      }
      write_manifest(out, "transform", invocation, {{"graph", tr_g1}, {"graph2", tr_g2}, {"dataset", tr_dataset}},
                     nullptr, artifacts);
    } else if (*orc) {
      const std::vector<std::string> vocab =
          orc_dataset.empty() ? vocab_of_files(orc_pair) : load_corpus(orc_dataset).label_vocab;
      const NodeGraph a = load_graph_file(orc_pair[0], vocab);
      const NodeGraph b = load_graph_file(orc_pair[1], vocab);
      const int ged = exact_ged_astar(a, b, {}, orc_budget);
      std::cout << "ged=" << ged << " target=" << std::setprecision(10)
                << normalized_target(ged, a.num_nodes(), b.num_nodes()) << '\n';
    } else if (*trn) {
      const ExperimentConfig cfg = resolve(train_o);
      const Corpus corpus = load_labeled(cfg.dataset, cfg.threads);
      auto model = make_model(cfg, corpus);
      const fs::path out(train_o.out);
      fs::create_directories(out);
      std::ofstream log(out / "train_log.jsonl");
      TrainResult res = train(*model, corpus, cfg, [&](const EpochRecord& r) {
        log << to_log_line(r) << '\n' << std::flush;
        std::cout << to_log_line(r) << '\n';
      });
      res.final_params.save((out / "final.ckpt").string());
      res.best_params.save((out / "best.ckpt").string());
      write_manifest(out, "train", invocation, {{"model", model->name()}, {"best_epoch", res.best_epoch},
                                                {"best_val_mse", res.best_val_mse}},
                     &cfg, {"final.ckpt", "best.ckpt", "train_log.jsonl", "config.txt"});
    } else if (*evl) {
      const ExperimentConfig cfg = resolve(eval_o);
      const Corpus corpus = load_labeled(cfg.dataset, cfg.threads);
      auto model = make_model(cfg, corpus);
      const ParamStore params = ParamStore::load(eval_ckpt);
      const EvalReport rep = evaluate(*model, params, corpus, cfg.threads);
      const fs::path out(eval_o.out);
      write_text(out / "eval.json", report_record(rep).dump(2) + "\n");
      write_manifest(out, "eval", invocation, {{"checkpoint", eval_ckpt}}, &cfg, {"eval.json"});
      for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
      std::printf("mse(1e-3)=%.4f rho=%.4f tau=%.4f p@10=%.4f p@20=%.4f pairs=%zu\n", rep.mse * 1e3, rep.rho,
                  rep.tau, rep.p10, rep.p20, rep.pairs);
    } else if (*abl || *por) {
      const bool ablation = bool(*abl);
      const CommonOpts& o = ablation ? ablate_o : port_o;
      const ExperimentConfig cfg = resolve(o);
      const Corpus corpus = load_labeled(cfg.dataset, cfg.threads);
      const HarnessReport rep = ablation ? ablation_harness(corpus, cfg) : portability_harness(corpus, cfg);
      const fs::path out(o.out);
      const std::string stem = ablation ? "ablation" : "portability";
      write_text(out / (stem + ".json"), report_json(rep) + "\n");
      write_text(out / (stem + ".txt"), report_table(rep));
      write_manifest(out, ablation ? "ablate" : "portability", invocation, json::object(), &cfg, {stem + ".json", stem + ".txt"});
      std::cout << report_table(rep);
    } else if (*dmp) {
      ExperimentConfig cfg = resolve(dump_o);
      if (cfg.baseline) throw std::invalid_argument("dump-matrix needs the SEGMN model (baseline = false)");
      const Corpus corpus = load_corpus(cfg.dataset);
      SegmnModel model(segmn_config(cfg, corpus));
      const ParamStore params = dump_ckpt.empty() ? model.init_params(cfg.seed) : ParamStore::load(dump_ckpt);
      const GraphInputs g1 = prepare_graph(corpus.graph(dump_pair[0]));
      const GraphInputs g2 = prepare_graph(corpus.graph(dump_pair[1]));
      ad::Tape tape;
      ParamBinding binding(params, tape, false);
      const PairTrace t = model.trace(binding, g1, g2);
      const fs::path out(dump_o.out);
      const std::size_t n1 = t.s1.n1, n2 = t.s1.n2;
      const Matrix& s1 = t.s1.scores.value();
      const Matrix& s1p = t.s1_spm.scores.value();
      write_text(out / "S1.txt", grid_text(s1, n1, n2));
      write_text(out / "S1_spm.txt", grid_text(s1p, n1, n2));
      const std::string heat = heat_table(s1, n1, n2, "S1 " + dump_pair[0] + " x " + dump_pair[1]) + "\n" +
                               heat_table(s1p, n1, n2, "S1 after SPM");
      write_text(out / "heat.txt", heat);
      write_manifest(out, "dump-matrix", invocation,
                     {{"pair", dump_pair}, {"checkpoint", dump_ckpt}, {"prediction", t.prediction.value()(0, 0)}},
                     &cfg, {"S1.txt", "S1_spm.txt", "heat.txt"});
      std::cout << heat;
    }
  } catch (const std::exception& e) {
    print_error(error_kind(e), e.what());
    return 1;
  }
  return 0;
}
