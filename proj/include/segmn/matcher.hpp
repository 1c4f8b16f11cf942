#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "segmn/autodiff.hpp"
#include "segmn/graph.hpp"
#include "segmn/params.hpp"

namespace segmn {

class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// N_max x N_max cross-graph scores; only the top-left n1 x n2 block is real.
struct SimilarityMatrix {
  ad::Tensor scores;
  Matrix mask;  ///< 1 on real (i, a) pairs, 0 on padding
  std::size_t n1 = 0;
  std::size_t n2 = 0;

  std::size_t n_max() const { return mask.rows(); }
};

Matrix block_mask(std::size_t n_max, std::size_t n1, std::size_t n2);

struct MatcherConfig {
  std::size_t embed_width = 128;  ///< column width of the encoder output
  std::size_t key_dim = 64;       ///< d_k of the cross-graph attention
  std::size_t attention_dim = 64; ///< per-token lift width of the flattened self-attention
  std::size_t spm_layers = 1;
  std::vector<std::size_t> conv_channels{16, 16};
  std::size_t pool_window = 1;    ///< spatial max pooling after each conv layer; 1 disables it
  std::size_t n_max = 10;
};

void init_matcher_params(ParamStore& params, const MatcherConfig& cfg, std::mt19937_64& rng);
/// conv.* and mlp.* only; the readout is shared with the GraphSim-style baseline.
void init_readout_params(ParamStore& params, const MatcherConfig& cfg, std::size_t matrices, std::mt19937_64& rng);

/// S1 = softmax(Q1 K2^T / sqrt(d_k)), S2 = softmax(Q2 K1^T / sqrt(d_k)), each
/// masked, row-normalised over the real block and zero-padded to N_max.
std::pair<SimilarityMatrix, SimilarityMatrix> cross_graph_similarity(ParamBinding& p, const MatcherConfig& cfg,
                                                                     const ad::Tensor& h1, const ad::Tensor& h2);

/// One structure-perception layer: the real block becomes the node signal of the
/// assignment graph, is convolved as ReLU(Â_A x W_A), and is written back.
/// `ag` must have been built from (rows graph, cols graph) of `s`.
SimilarityMatrix spm_apply(const SimilarityMatrix& s, const AssignmentGraph& ag, const ad::Tensor& weight);

/// Number of spm_apply calls since the last reset (process-wide).
std::uint64_t spm_invocations();
void reset_spm_invocations();

/// Self-attention over the N_max^2 entries as scalar tokens, with residual;
/// padding is excluded from attention and stays 0.
SimilarityMatrix matrix_self_attention(ParamBinding& p, const MatcherConfig& cfg, const SimilarityMatrix& s);

/// Cross-shaped convolution stack followed by masked global mean pooling, 1 x C.
ad::Tensor cross_conv_features(ParamBinding& p, const MatcherConfig& cfg, const SimilarityMatrix& s);

/// Features of both matrices, concatenated, then a one-layer MLP and a sigmoid.
ad::Tensor cross_conv_readout(ParamBinding& p, const MatcherConfig& cfg, const SimilarityMatrix& s1,
                              const SimilarityMatrix& s2);

/// MLP head over already-pooled features.
ad::Tensor mlp_head(ParamBinding& p, const ad::Tensor& features);

}  // namespace segmn
