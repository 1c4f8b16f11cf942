#include "segmn/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "segmn/matcher.hpp"
#include "segmn/train.hpp"

namespace segmn {

HarnessRow run_row(const Corpus& corpus, const ExperimentConfig& cfg, std::string label) {
  HarnessRow row;
  row.label = std::move(label);
  row.config = cfg.to_text();
  try {
    auto model = make_model(cfg, corpus);
    TrainResult tr = train(*model, corpus, cfg);
    reset_spm_invocations();
    row.report = evaluate(*model, tr.best_params, corpus, cfg.threads, &row.predictions);
    row.spm_calls = spm_invocations();
    row.ok = true;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  return row;
}

HarnessReport ablation_harness(const Corpus& corpus, const ExperimentConfig& base) {
  HarnessReport rep;
  rep.kind = "ablation";
  const std::size_t k = std::max<std::size_t>(1, base.spm_layers);
  const struct {
    Variant v;
    const char* name;
  } variants[] = {{Variant::NodeOnly, "node"}, {Variant::EdgeOnly, "edge"}, {Variant::Dual, "DE"}};
  for (const auto& [v, name] : variants) {
    for (bool spm : {false, true}) {
      ExperimentConfig cfg = base;
      cfg.baseline = false;
      cfg.variant = v;
      cfg.spm_layers = spm ? k : 0;
      std::string label = std::string(name) + (spm ? "+SPM" : "");
      const bool full = v == Variant::Dual && spm;
      if (full) label += " (SEGMN)";
      HarnessRow row = run_row(corpus, cfg, label);
      row.full_model = full;
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

HarnessReport portability_harness(const Corpus& corpus, const ExperimentConfig& base) {
  HarnessReport rep;
  rep.kind = "portability";
  for (std::size_t count = 0; count <= 3; ++count) {
    ExperimentConfig cfg = base;
    cfg.baseline = true;
    cfg.spm_positions.clear();
    for (std::size_t p = 1; p <= count; ++p) cfg.spm_positions.insert(p);
    rep.rows.push_back(run_row(corpus, cfg, "GraphSim-stub +" + std::to_string(count) + " SPM"));
  }
  return rep;
}

std::string report_json(const HarnessReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json j{{"label", row.label}, {"full_model", row.full_model}, {"ok", row.ok}, {"config", row.config}};
    if (row.ok) {
      j["mse"] = row.report.mse;
      j["mse_e3"] = row.report.mse * 1e3;
      j["rho"] = row.report.rho;
      j["tau"] = row.report.tau;
      j["p10"] = row.report.p10;
      j["p20"] = row.report.p20;
      j["pairs"] = row.report.pairs;
      j["spm_calls"] = row.spm_calls;
      j["eval_runtime_seconds"] = row.report.runtime_seconds;
    } else {
      j["error"] = row.error;
    }
    rows.push_back(std::move(j));
  }
  return nlohmann::json{{"kind", r.kind}, {"rows", rows}}.dump(2);
}

std::string report_table(const HarnessReport& r) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %12s %8s %8s %8s %10s\n", r.kind == "ablation" ? "variant" : "model",
                "mse(1e-3)", "rho", "tau", "p@10", "spm_calls");
  out << line;
  for (const auto& row : r.rows) {
    if (row.ok)
      std::snprintf(line, sizeof line, "%-24s %12.4f %8.4f %8.4f %8.4f %10llu\n", row.label.c_str(),
                    row.report.mse * 1e3, row.report.rho, row.report.tau, row.report.p10,
                    static_cast<unsigned long long>(row.spm_calls));
    else
      std::snprintf(line, sizeof line, "%-24s FAILED: %s\n", row.label.c_str(), row.error.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace segmn
