#pragma once

#include <random>
#include <string>

#include "segmn/autodiff.hpp"
#include "segmn/graph.hpp"
#include "segmn/params.hpp"

namespace segmn {

/// Which embeddings feed cross-graph matching.
enum class Variant { NodeOnly, EdgeOnly, Dual };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

struct EncoderConfig {
  std::size_t input_dim = 1;  ///< d1: width of raw node features
  std::size_t hidden = 64;    ///< d
  std::size_t layers = 3;     ///< L, shared by both stacks
  Variant variant = Variant::Dual;

  /// Column width of the embedding handed to the matcher: d, or 2d for Dual.
  std::size_t output_width() const { return variant == Variant::Dual ? 2 * hidden : hidden; }
  bool uses_node_stack() const { return variant != Variant::EdgeOnly; }
  bool uses_edge_stack() const { return variant != Variant::NodeOnly; }
};

/// Graph-dependent constants the encoder consumes. Pure function of the graph.
struct GraphInputs {
  NodeGraph graph;
  Matrix norm_adj;            ///< D~^-1/2 (A+I) D~^-1/2 of the node graph
  Matrix modified_incidence;  ///< K'
  LineGraph line;
  Matrix line_norm_adj;  ///< same normalisation on the line graph
};

GraphInputs prepare_graph(const NodeGraph& g);

/// Registers enc.* parameters used by `cfg.variant`.
void init_encoder_params(ParamStore& params, const EncoderConfig& cfg, std::mt19937_64& rng);

/// Edge embeddings H^e (M x d) from the edge-enhanced GCN on the line graph.
/// Each layer: H <- ReLU(Â_E H W_E^l) + H + (K_E tanh(Y_E W2 + b)) * gate.
ad::Tensor edge_embed(ParamBinding& p, const EncoderConfig& cfg, const GraphInputs& in);

/// Node embeddings H^v (N x d): H <- ReLU(Â H W^l) + H, L times.
ad::Tensor node_embed(ParamBinding& p, const EncoderConfig& cfg, const GraphInputs& in);

struct DualEmbedding {
  ad::Tensor h_dual;     ///< N x 2d
  ad::Tensor node_part;  ///< N x d
  ad::Tensor edge_part;  ///< N x d, K' H^e
};

/// H_dual = hv ++ (K' he).
DualEmbedding dual_embed(const Matrix& modified_incidence, const ad::Tensor& hv, const ad::Tensor& he);

/// Embedding selected by the variant: hv, K' he, or their concatenation.
ad::Tensor encode(ParamBinding& p, const EncoderConfig& cfg, const GraphInputs& in);

}  // namespace segmn
