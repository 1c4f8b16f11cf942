#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>

#include "segmn/encoder.hpp"
#include "segmn/matcher.hpp"
#include "segmn/params.hpp"

namespace segmn {

/// Predicts a similarity in (0, 1) for a graph pair.
class SimilarityModel {
 public:
  virtual ~SimilarityModel() = default;
  virtual std::string name() const = 0;
  virtual ParamStore init_params(std::uint64_t seed) const = 0;
  virtual ad::Tensor predict(ParamBinding& p, const GraphInputs& g1, const GraphInputs& g2) const = 0;
};

/// Intermediate matrices of one forward pass, for inspection.
struct PairTrace {
  SimilarityMatrix s1, s2;            ///< after cross-graph attention
  SimilarityMatrix s1_spm, s2_spm;    ///< after structure perception matching
  SimilarityMatrix s1_att, s2_att;    ///< after flattened self-attention
  ad::Tensor prediction;
};

struct SegmnConfig {
  EncoderConfig encoder;
  MatcherConfig matcher;
};

class SegmnModel : public SimilarityModel {
 public:
  explicit SegmnModel(SegmnConfig cfg);

  std::string name() const override;
  ParamStore init_params(std::uint64_t seed) const override;
  ad::Tensor predict(ParamBinding& p, const GraphInputs& g1, const GraphInputs& g2) const override;
  PairTrace trace(ParamBinding& p, const GraphInputs& g1, const GraphInputs& g2) const;

  const SegmnConfig& config() const { return cfg_; }

 private:
  SegmnConfig cfg_;
};

/// Minimal GraphSim-style baseline: plain GCN layers, one dot-product
/// similarity matrix per layer, optional SPM after selected layers (1-based),
/// shared cross-shaped readout over all matrices.
class GraphSimStub : public SimilarityModel {
 public:
  GraphSimStub(std::size_t input_dim, std::size_t hidden, std::size_t layers, std::set<std::size_t> spm_positions,
               MatcherConfig readout);

  std::string name() const override;
  ParamStore init_params(std::uint64_t seed) const override;
  ad::Tensor predict(ParamBinding& p, const GraphInputs& g1, const GraphInputs& g2) const override;

  const std::set<std::size_t>& spm_positions() const { return spm_positions_; }

 private:
  std::size_t input_dim_;
  std::size_t hidden_;
  std::size_t layers_;
  std::set<std::size_t> spm_positions_;
  MatcherConfig readout_;
};

}  // namespace segmn
