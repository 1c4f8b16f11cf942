#include "segmn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <thread>

namespace segmn {

std::vector<GraphInputs> prepare_corpus(const Corpus& corpus) {
  std::vector<GraphInputs> out;
  out.reserve(corpus.graphs.size());
  for (const auto& g : corpus.graphs) out.push_back(prepare_graph(g));
  return out;
}

SegmnConfig segmn_config(const ExperimentConfig& cfg, const Corpus& corpus) {
  SegmnConfig sc;
  sc.encoder.input_dim = corpus.feature_dim();
  sc.encoder.hidden = cfg.hidden;
  sc.encoder.layers = cfg.layers;
  sc.encoder.variant = cfg.variant;
  sc.matcher.embed_width = sc.encoder.output_width();
  sc.matcher.key_dim = cfg.key_dim;
  sc.matcher.attention_dim = cfg.attention_dim;
  sc.matcher.spm_layers = cfg.spm_layers;
  sc.matcher.conv_channels = cfg.conv_channels;
  sc.matcher.pool_window = cfg.pool_window;
  sc.matcher.n_max = corpus.n_max;
  return sc;
}

std::unique_ptr<SimilarityModel> make_model(const ExperimentConfig& cfg, const Corpus& corpus) {
  if (cfg.baseline) {
    const SegmnConfig sc = segmn_config(cfg, corpus);
    return std::make_unique<GraphSimStub>(corpus.feature_dim(), cfg.hidden, 3, cfg.spm_positions, sc.matcher);
  }
  return std::make_unique<SegmnModel>(segmn_config(cfg, corpus));
}

double predict(const SimilarityModel& model, const ParamStore& params, const GraphInputs& g1, const GraphInputs& g2) {
  ad::Tape tape;
  ParamBinding binding(params, tape, /*requires_grad=*/false);
  return model.predict(binding, g1, g2).value()(0, 0);
}

std::vector<double> predict_pairs(const SimilarityModel& model, const ParamStore& params,
                                  const std::vector<GraphInputs>& inputs, const std::vector<PairSample>& pairs,
                                  std::size_t threads) {
  std::vector<double> out(pairs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::max<std::size_t>(1, std::min(threads, pairs.size()));
  std::vector<std::exception_ptr> failures(threads);
  auto worker = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < pairs.size(); i += threads)
        out[i] = predict(model, params, inputs[pairs[i].first], inputs[pairs[i].second]);
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return out;
}

std::string to_log_line(const EpochRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "{\"epoch\":%zu,\"train_mse\":%.10g,\"val_mse\":%.10g,\"wallclock\":%.3f}", r.epoch,
                r.train_mse, r.val_mse, r.wallclock);
  return buf;
}

namespace {

double mse_of(const std::vector<double>& pred, const std::vector<PairSample>& pairs) {
  double s = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double d = pred[i] - pairs[i].target;
    s += d * d;
  }
  return pairs.empty() ? 0.0 : s / double(pairs.size());
}

}  // namespace

TrainResult train(const SimilarityModel& model, const Corpus& corpus, const ExperimentConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<GraphInputs> inputs = prepare_corpus(corpus);
  std::vector<PairSample> train_pairs = enumerate_pairs(corpus, PairMode::Train, cfg.seed, cfg.include_self_pairs);
  if (train_pairs.empty()) throw DatasetError("no training pairs");
  std::vector<PairSample> val_pairs;
  if (cfg.eval_every > 0) val_pairs = enumerate_pairs(corpus, PairMode::Eval);

  TrainResult res;
  res.final_params = model.init_params(cfg.seed);
  res.best_params = res.final_params;
  ParamStore& params = res.final_params;
  AdamState state;
  const AdamConfig adam{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps};
  std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + 17);
  double best = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train_pairs.begin(), train_pairs.end(), rng);
    const std::size_t n = cfg.pairs_per_epoch ? std::min(cfg.pairs_per_epoch, train_pairs.size()) : train_pairs.size();
    double sq = 0.0;
    for (std::size_t b0 = 0; b0 < n; b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(n, b0 + cfg.batch_size);
      GradMap acc;
      for (std::size_t i = b0; i < b1; ++i) {
        const PairSample& ps = train_pairs[i];
        ad::Tape tape;
        ParamBinding binding(params, tape);
        ad::Tensor pred = model.predict(binding, inputs[ps.first], inputs[ps.second]);
        ad::Tensor loss = ad::mse(pred, tape.constant(Matrix::scalar(ps.target)));
        const double l = loss.value()(0, 0);
        if (!std::isfinite(l))
          throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + " on pair (" +
                                 corpus.graphs[ps.first].id() + ", " + corpus.graphs[ps.second].id() + ")");
        sq += l;
        tape.backward(loss);
        binding.accumulate_grads(acc);
      }
      const double inv = 1.0 / double(b1 - b0);
      for (auto& [_, g] : acc)
        for (double& v : g.values()) v *= inv;
      try {
        adam_step(params, acc, state, adam);
      } catch (const NonFiniteGradient& e) {
        throw TrainingDiverged("epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = sq / double(n);
    const bool validate = cfg.eval_every > 0 && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs);
    if (validate) {
      rec.val_mse = mse_of(predict_pairs(model, params, inputs, val_pairs, cfg.threads), val_pairs);
      if (rec.val_mse < best) {
        best = rec.val_mse;
        res.best_params = params;
        res.best_val_mse = best;
        res.best_epoch = epoch;
      }
    }
    rec.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    res.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  if (cfg.eval_every == 0) {
    res.best_params = params;
    res.best_epoch = cfg.epochs;
  }
  return res;
}

EvalReport evaluate(const SimilarityModel& model, const ParamStore& params, const Corpus& corpus, std::size_t threads,
                    std::vector<double>* predictions) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<GraphInputs> inputs = prepare_corpus(corpus);
  const std::vector<PairSample> pairs = enumerate_pairs(corpus, PairMode::Eval);
  const std::vector<double> pred = predict_pairs(model, params, inputs, pairs, threads);

  std::vector<QueryResult> queries;
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    auto [it, fresh] = slot.try_emplace(pairs[i].first, queries.size());
    if (fresh) queries.push_back(QueryResult{corpus.graphs[pairs[i].first].id(), {}, {}, {}});
    QueryResult& q = queries[it->second];
    q.candidate_ids.push_back(corpus.graphs[pairs[i].second].id());
    q.predicted.push_back(pred[i]);
    q.truth.push_back(pairs[i].target);
  }
  EvalReport rep = compute_metrics(queries);
  rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (predictions) *predictions = pred;
  return rep;
}

}  // namespace segmn
