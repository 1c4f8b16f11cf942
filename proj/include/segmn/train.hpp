#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "segmn/config.hpp"
#include "segmn/dataset.hpp"
#include "segmn/metrics.hpp"
#include "segmn/model.hpp"

namespace segmn {

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-graph constants for every graph of the corpus, indexed like Corpus::graphs.
std::vector<GraphInputs> prepare_corpus(const Corpus& corpus);

SegmnConfig segmn_config(const ExperimentConfig& cfg, const Corpus& corpus);
/// SEGMN, or the GraphSim-style stub when cfg.baseline is set.
std::unique_ptr<SimilarityModel> make_model(const ExperimentConfig& cfg, const Corpus& corpus);

double predict(const SimilarityModel& model, const ParamStore& params, const GraphInputs& g1, const GraphInputs& g2);

/// Forward passes only, fanned out over `threads` workers with read-only parameters.
std::vector<double> predict_pairs(const SimilarityModel& model, const ParamStore& params,
                                  const std::vector<GraphInputs>& inputs, const std::vector<PairSample>& pairs,
                                  std::size_t threads = 0);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_mse = 0.0;
  double val_mse = -1.0;  ///< negative when no validation ran this epoch
  double wallclock = 0.0; ///< seconds since training started
};

std::string to_log_line(const EpochRecord& r);

struct TrainResult {
  ParamStore final_params;
  ParamStore best_params;  ///< lowest validation MSE; final params when never validated
  double best_val_mse = -1.0;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> log;
};

/// Minimises the mean of (prediction - target)^2 over train pairs with Adam.
/// Gradients within a batch are accumulated sequentially, so a seed fixes the run.
/// Throws TrainingDiverged on a non-finite loss or gradient.
TrainResult train(const SimilarityModel& model, const Corpus& corpus, const ExperimentConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Every test graph against every train graph.
EvalReport evaluate(const SimilarityModel& model, const ParamStore& params, const Corpus& corpus,
                    std::size_t threads = 0, std::vector<double>* predictions = nullptr);

}  // namespace segmn
