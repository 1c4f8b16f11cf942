#include <cmath>
#include <limits>

#include "doctest.h"
#include "segmn/train.hpp"

using namespace segmn;

namespace {

Corpus labeled_corpus(std::size_t n_graphs, double train_fraction, std::uint64_t seed = 1) {
  SyntheticSpec spec;
  spec.n_graphs = n_graphs;
  spec.train_fraction = train_fraction;
  spec.seed = seed;
  Corpus c = generate_synthetic(spec);
  label_corpus(c, 10, 1);
  return c;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.hidden = 8;
  c.layers = 2;
  c.key_dim = 4;
  c.attention_dim = 4;
  c.conv_channels = {4, 4};
  c.batch_size = 4;
  c.epochs = 3;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_SUITE("train") {
  TEST_CASE("zero learning rate leaves parameters untouched") {
    const Corpus c = labeled_corpus(10, 0.6);
    ExperimentConfig cfg = small_config();
    cfg.lr = 0.0;
    auto model = make_model(cfg, c);
    const TrainResult r = train(*model, c, cfg);
    CHECK(r.final_params == model->init_params(cfg.seed));
    CHECK(r.log.size() == 3);
  }

  TEST_CASE("same seed reproduces the run, another seed does not") {
    const Corpus c = labeled_corpus(12, 0.75);
    ExperimentConfig cfg = small_config();
    auto model = make_model(cfg, c);
    const TrainResult a = train(*model, c, cfg), b = train(*model, c, cfg);
    CHECK(a.final_params == b.final_params);
    CHECK(a.best_params == b.best_params);
    for (std::size_t e = 0; e < a.log.size(); ++e) CHECK(a.log[e].train_mse == b.log[e].train_mse);
    cfg.seed = 2;
    CHECK_FALSE(train(*model, c, cfg).final_params == a.final_params);
  }

  TEST_CASE("overfits ten pairs") {
    const Corpus c = labeled_corpus(6, 5.0 / 6.0, 3);
    REQUIRE(c.train_ids.size() == 5);
    ExperimentConfig cfg;  // default model; one full-batch step per epoch
    cfg.epochs = 500;
    cfg.eval_every = 0;
    cfg.threads = 1;
    auto model = make_model(cfg, c);
    const TrainResult r = train(*model, c, cfg);
    CHECK(enumerate_pairs(c, PairMode::Train).size() == 10);
    // The logged value is the running mean during the epoch; re-measure with the final parameters.
    const auto pairs = enumerate_pairs(c, PairMode::Train);
    const auto pred = predict_pairs(*model, r.final_params, prepare_corpus(c), pairs, 1);
    double mse = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) mse += std::pow(pred[i] - pairs[i].target, 2);
    mse /= double(pairs.size());
    MESSAGE("overfit train MSE = " << mse);
    CHECK(mse <= 1e-4);
  }

  TEST_CASE("loss decreases over the first ten epochs with the default model") {
    const Corpus c = labeled_corpus(200, 0.8);
    ExperimentConfig cfg;
    cfg.epochs = 10;
    cfg.pairs_per_epoch = 512;
    cfg.eval_every = 0;
    cfg.threads = 1;
    auto model = make_model(cfg, c);
    const TrainResult r = train(*model, c, cfg);
    std::vector<double> smooth;
    for (std::size_t e = 1; e + 1 < r.log.size(); ++e)
      smooth.push_back((r.log[e - 1].train_mse + r.log[e].train_mse + r.log[e + 1].train_mse) / 3.0);
    for (std::size_t i = 1; i < smooth.size(); ++i) CHECK(smooth[i] <= smooth[i - 1]);
    CHECK(r.log.back().train_mse < r.log.front().train_mse);
  }

  TEST_CASE("best checkpoint tracks the lowest validation error") {
    const Corpus c = labeled_corpus(15, 0.8);
    ExperimentConfig cfg = small_config();
    cfg.epochs = 6;
    cfg.eval_every = 2;
    auto model = make_model(cfg, c);
    std::vector<EpochRecord> seen;
    const TrainResult r = train(*model, c, cfg, [&](const EpochRecord& e) { seen.push_back(e); });
    REQUIRE(seen.size() == 6);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    for (const auto& e : seen) {
      if (e.epoch % 2) CHECK(e.val_mse == -1.0);
      else if (e.val_mse < best) best = e.val_mse, best_epoch = e.epoch;
    }
    CHECK(r.best_epoch == best_epoch);
    CHECK(r.best_val_mse == best);
    const EvalReport rep = evaluate(*model, r.best_params, c, 1);
    CHECK(rep.mse == doctest::Approx(best).epsilon(1e-12));
    CHECK(to_log_line(seen[1]).find("\"epoch\":2") != std::string::npos);
  }

  TEST_CASE("evaluation is read-only and thread-count independent") {
    const Corpus c = labeled_corpus(20, 0.8);
    ExperimentConfig cfg = small_config();
    auto model = make_model(cfg, c);
    const ParamStore p = model->init_params(5);
    const auto sum = p.checksum();
    std::vector<double> one, three;
    const EvalReport a = evaluate(*model, p, c, 1, &one);
    const EvalReport b = evaluate(*model, p, c, 3, &three);
    CHECK(p.checksum() == sum);
    CHECK(one == three);
    CHECK(a.mse == b.mse);
    CHECK(a.pairs == c.test_ids.size() * c.train_ids.size());
    CHECK(a.per_query.size() == c.test_ids.size());
  }

  TEST_CASE("divergence aborts with a diagnostic") {
    const Corpus c = labeled_corpus(10, 0.6);
    ExperimentConfig cfg = small_config();
    cfg.lr = std::numeric_limits<double>::infinity();
    auto model = make_model(cfg, c);
    CHECK_THROWS_AS(train(*model, c, cfg), TrainingDiverged);
  }

  TEST_CASE("baseline flag selects the GraphSim-style stub") {
    const Corpus c = labeled_corpus(10, 0.6);
    ExperimentConfig cfg = small_config();
    cfg.baseline = true;
    cfg.spm_positions = {2};
    auto model = make_model(cfg, c);
    CHECK(model->name() == "graphsim+1spm");
    CHECK(model->init_params(1).contains("spm.WA.2"));
  }
}
