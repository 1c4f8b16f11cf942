#include "segmn/model.hpp"

#include <cmath>
#include <optional>
#include <tuple>
#include <random>

namespace segmn {

SegmnModel::SegmnModel(SegmnConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.matcher.embed_width = cfg_.encoder.output_width();
}

std::string SegmnModel::name() const {
  std::string n = to_string(cfg_.encoder.variant);
  if (cfg_.matcher.spm_layers > 0) n += "+spm";
  return n;
}

ParamStore SegmnModel::init_params(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  ParamStore params;
  init_encoder_params(params, cfg_.encoder, rng);
  init_matcher_params(params, cfg_.matcher, rng);
  return params;
}

PairTrace SegmnModel::trace(ParamBinding& p, const GraphInputs& g1, const GraphInputs& g2) const {
  ad::Tensor h1 = encode(p, cfg_.encoder, g1);
  ad::Tensor h2 = encode(p, cfg_.encoder, g2);
  PairTrace t;
  std::tie(t.s1, t.s2) = cross_graph_similarity(p, cfg_.matcher, h1, h2);
  t.s1_spm = t.s1;
  t.s2_spm = t.s2;
  if (cfg_.matcher.spm_layers > 0) {
    const AssignmentGraph ag12 = build_assignment_graph(g1.graph, g2.graph);
    const AssignmentGraph ag21 = build_assignment_graph(g2.graph, g1.graph);
    for (std::size_t k = 0; k < cfg_.matcher.spm_layers; ++k) {
      ad::Tensor w = p("spm.WA." + std::to_string(k));
      t.s1_spm = spm_apply(t.s1_spm, ag12, w);
      t.s2_spm = spm_apply(t.s2_spm, ag21, w);
    }
  }
  t.s1_att = matrix_self_attention(p, cfg_.matcher, t.s1_spm);
  t.s2_att = matrix_self_attention(p, cfg_.matcher, t.s2_spm);
  t.prediction = cross_conv_readout(p, cfg_.matcher, t.s1_att, t.s2_att);
  return t;
}

ad::Tensor SegmnModel::predict(ParamBinding& p, const GraphInputs& g1, const GraphInputs& g2) const {
  return trace(p, g1, g2).prediction;
}

GraphSimStub::GraphSimStub(std::size_t input_dim, std::size_t hidden, std::size_t layers,
                           std::set<std::size_t> spm_positions, MatcherConfig readout)
    : input_dim_(input_dim),
      hidden_(hidden),
      layers_(layers),
      spm_positions_(std::move(spm_positions)),
      readout_(std::move(readout)) {
  for (std::size_t pos : spm_positions_)
    if (pos < 1 || pos > layers_)
      throw ConfigurationError("SPM position " + std::to_string(pos) + " outside layers 1.." + std::to_string(layers_));
}

std::string GraphSimStub::name() const { return "graphsim+" + std::to_string(spm_positions_.size()) + "spm"; }

ParamStore GraphSimStub::init_params(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  ParamStore params;
  params.add("gs.P_node", glorot(input_dim_, hidden_, rng));
  for (std::size_t l = 0; l < layers_; ++l) params.add("gs.W." + std::to_string(l), glorot(hidden_, hidden_, rng));
  for (std::size_t pos : spm_positions_) params.add("spm.WA." + std::to_string(pos), Matrix(1, 1, 1.0));
  init_readout_params(params, readout_, layers_, rng);
  return params;
}

ad::Tensor GraphSimStub::predict(ParamBinding& p, const GraphInputs& g1, const GraphInputs& g2) const {
  ad::Tape& tape = p.tape();
  const std::size_t n1 = g1.graph.num_nodes(), n2 = g2.graph.num_nodes();
  const std::size_t n_max = readout_.n_max;
  if (n1 > n_max || n2 > n_max)
    throw ConfigurationError("graph with " + std::to_string(std::max(n1, n2)) + " nodes exceeds N_max = " +
                             std::to_string(n_max));
  ad::Tensor h1 = ad::matmul(tape.constant(g1.graph.node_features()), p("gs.P_node"));
  ad::Tensor h2 = ad::matmul(tape.constant(g2.graph.node_features()), p("gs.P_node"));
  ad::Tensor a1 = tape.constant(g1.norm_adj);
  ad::Tensor a2 = tape.constant(g2.norm_adj);
  const double inv_sqrt_d = 1.0 / std::sqrt(double(hidden_));

  std::optional<AssignmentGraph> ag;
  ad::Tensor features;
  for (std::size_t l = 0; l < layers_; ++l) {
    ad::Tensor w = p("gs.W." + std::to_string(l));
    h1 = ad::relu(ad::matmul(ad::matmul(a1, h1), w));
    h2 = ad::relu(ad::matmul(ad::matmul(a2, h2), w));
    ad::Tensor raw = ad::scale(ad::matmul(h1, ad::transpose(h2)), inv_sqrt_d);
    SimilarityMatrix s{ad::pad(raw, n_max, n_max), block_mask(n_max, n1, n2), n1, n2};
    if (spm_positions_.count(l + 1)) {
      if (!ag) ag = build_assignment_graph(g1.graph, g2.graph);
      s = spm_apply(s, *ag, p("spm.WA." + std::to_string(l + 1)));
    }
    ad::Tensor f = cross_conv_features(p, readout_, s);
    features = features.valid() ? ad::concat_cols(features, f) : f;
  }
  return mlp_head(p, features);
}

}  // namespace segmn
