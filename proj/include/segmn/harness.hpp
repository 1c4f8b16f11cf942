#pragma once

#include <string>
#include <vector>

#include "segmn/config.hpp"
#include "segmn/dataset.hpp"
#include "segmn/metrics.hpp"

namespace segmn {

struct HarnessRow {
  std::string label;
  bool full_model = false;
  bool ok = false;
  std::string error;          ///< set when the run threw; metrics are then meaningless
  EvalReport report;
  std::uint64_t spm_calls = 0;  ///< SPM executions during evaluation
  std::vector<double> predictions;  ///< evaluation-pair predictions, in enumerate_pairs(Eval) order
  std::string config;           ///< resolved config of this row
};

struct HarnessReport {
  std::string kind;  ///< "ablation" or "portability"
  std::vector<HarnessRow> rows;
};

/// Six rows: {node, edge, dual} x {no SPM, SPM}. Rows without SPM force
/// spm_layers = 0; rows with SPM use base.spm_layers (at least 1).
HarnessReport ablation_harness(const Corpus& corpus, const ExperimentConfig& base);

/// Four rows on the GraphSim-style stub: SPM inserted after the first 0, 1, 2, 3 layers.
HarnessReport portability_harness(const Corpus& corpus, const ExperimentConfig& base);

/// Trains and evaluates one config; failures land in the row instead of propagating.
HarnessRow run_row(const Corpus& corpus, const ExperimentConfig& cfg, std::string label);

std::string report_json(const HarnessReport& r);
/// Fixed-width table; MSE is printed in units of 1e-3.
std::string report_table(const HarnessReport& r);

}  // namespace segmn
