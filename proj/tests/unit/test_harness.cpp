#include <algorithm>
#include <limits>

#include "doctest.h"
#include "json.hpp"
#include "segmn/harness.hpp"

using namespace segmn;

namespace {

Corpus small_corpus() {
  SyntheticSpec spec;
  spec.n_graphs = 14;
  spec.min_nodes = 4;
  spec.max_nodes = 6;
  spec.seed = 7;
  Corpus c = generate_synthetic(spec);
  label_corpus(c, 10, 1);
  return c;
}

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.hidden = 8;
  c.layers = 3;
  c.key_dim = 4;
  c.attention_dim = 4;
  c.conv_channels = {4};
  c.batch_size = 8;
  c.epochs = 2;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_SUITE("harness") {
  TEST_CASE("ablation produces six rows with the full model marked") {
    const Corpus c = small_corpus();
    const HarnessReport r = ablation_harness(c, tiny_config());
    CHECK(r.kind == "ablation");
    REQUIRE(r.rows.size() == 6);
    const std::vector<std::string> labels{"node", "node+SPM", "edge", "edge+SPM", "DE", "DE+SPM (SEGMN)"};
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(r.rows[i].label == labels[i]);
      CHECK(r.rows[i].ok);
      CHECK(r.rows[i].full_model == (i == 5));
      CHECK((r.rows[i].spm_calls > 0) == (i % 2 == 1));
    }
    const std::string table = report_table(r);
    for (const auto& l : labels) CHECK(table.find(l) != std::string::npos);
  }

  TEST_CASE("all six rows on the bundled 100-graph corpus") {
    const Corpus c = load_corpus(std::string(SEGMN_DATA_DIR) + "/synthetic100");
    REQUIRE(c.graphs.size() == 100);
    ExperimentConfig cfg = tiny_config();
    cfg.epochs = 1;
    cfg.pairs_per_epoch = 256;
    const HarnessReport r = ablation_harness(c, cfg);
    REQUIRE(r.rows.size() == 6);
    for (const auto& row : r.rows) {
      CHECK(row.ok);
      CHECK(row.report.pairs == 1600);
    }
  }

  TEST_CASE("portability rows differ once SPM is inserted") {
    const Corpus c = small_corpus();
    const HarnessReport r = portability_harness(c, tiny_config());
    CHECK(r.kind == "portability");
    REQUIRE(r.rows.size() == 4);
    CHECK(r.rows[0].spm_calls == 0);
    const std::size_t pairs = c.test_ids.size() * c.train_ids.size();
    for (std::size_t i = 0; i < 4; ++i) {
      REQUIRE(r.rows[i].ok);
      CHECK(r.rows[i].predictions.size() == pairs);
      CHECK(r.rows[i].label == "GraphSim-stub +" + std::to_string(i) + " SPM");
      if (i > 0) {
        CHECK(r.rows[i].spm_calls == i * pairs);
        CHECK(r.rows[i].predictions != r.rows[0].predictions);
      }
    }
  }

  TEST_CASE("reports are reproducible under a fixed seed") {
    const Corpus c = small_corpus();
    const ExperimentConfig cfg = tiny_config();
    // Everything but the measured wall-clock time must match.
    auto strip = [](const HarnessReport& r) {
      auto j = nlohmann::json::parse(report_json(r));
      for (auto& row : j.at("rows")) row.erase("eval_runtime_seconds");
      return j.dump();
    };
    CHECK(strip(portability_harness(c, cfg)) == strip(portability_harness(c, cfg)));
  }

  TEST_CASE("a failing row is recorded and the harness carries on") {
    const Corpus c = small_corpus();
    ExperimentConfig cfg = tiny_config();
    cfg.lr = std::numeric_limits<double>::infinity();
    const HarnessReport r = ablation_harness(c, cfg);
    REQUIRE(r.rows.size() == 6);
    for (const auto& row : r.rows) {
      CHECK_FALSE(row.ok);
      CHECK_FALSE(row.error.empty());
    }
    CHECK(report_json(r).find("\"error\"") != std::string::npos);
  }
}
