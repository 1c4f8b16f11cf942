#include "segmn/encoder.hpp"

#include <stdexcept>

namespace segmn {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::NodeOnly: return "node";
    case Variant::EdgeOnly: return "edge";
    case Variant::Dual: return "dual";
  }
  return "dual";
}

Variant parse_variant(const std::string& s) {
  if (s == "node") return Variant::NodeOnly;
  if (s == "edge") return Variant::EdgeOnly;
  if (s == "dual") return Variant::Dual;
  throw std::invalid_argument("unknown variant '" + s + "' (expected node, edge or dual)");
}

GraphInputs prepare_graph(const NodeGraph& g) {
  GraphInputs in;
  in.graph = g;
  in.norm_adj = normalized_adjacency(g);
  in.modified_incidence = modified_incidence(g);
  in.line = build_line_graph(g);
  in.line_norm_adj = normalized_adjacency(in.line.num_nodes, in.line.edges);
  return in;
}

void init_encoder_params(ParamStore& params, const EncoderConfig& cfg, std::mt19937_64& rng) {
  const std::size_t d = cfg.hidden;
  if (cfg.uses_node_stack()) {
    params.add("enc.P_node", glorot(cfg.input_dim, d, rng));
    for (std::size_t l = 0; l < cfg.layers; ++l) params.add("enc.ng.W." + std::to_string(l), glorot(d, d, rng));
  }
  if (cfg.uses_edge_stack()) {
    params.add("enc.P_line", glorot(cfg.input_dim, d, rng));
    for (std::size_t l = 0; l < cfg.layers; ++l) params.add("enc.lg.W_E." + std::to_string(l), glorot(d, d, rng));
    params.add("enc.W2", glorot(cfg.input_dim, d, rng));
    params.add("enc.b", Matrix(1, d));
    params.add("enc.gate", Matrix(1, d, 1.0));
  }
}

namespace {

ad::Tensor residual_gcn_layer(ad::Tape& tape, const Matrix& norm_adj, const ad::Tensor& h, const ad::Tensor& w) {
  ad::Tensor a = tape.constant(norm_adj);
  return ad::add(ad::relu(ad::matmul(ad::matmul(a, h), w)), h);
}

}  // namespace

ad::Tensor edge_embed(ParamBinding& p, const EncoderConfig& cfg, const GraphInputs& in) {
  ad::Tape& tape = p.tape();
  const LineGraph& lg = in.line;
  ad::Tensor h = ad::matmul(tape.constant(lg.node_features), p("enc.P_line"));

  // Edge messages do not depend on the layer: Y_E is a fixed input.
  ad::Tensor edge_msg = ad::tanh(ad::add_row(ad::matmul(tape.constant(lg.edge_features), p("enc.W2")), p("enc.b")));
  ad::Tensor from_edges = ad::mul_row(ad::matmul(tape.constant(lg.incidence), edge_msg), p("enc.gate"));

  for (std::size_t l = 0; l < cfg.layers; ++l) {
    ad::Tensor from_nodes = residual_gcn_layer(tape, in.line_norm_adj, h, p("enc.lg.W_E." + std::to_string(l)));
    h = ad::add(from_nodes, from_edges);
  }
  return h;
}

ad::Tensor node_embed(ParamBinding& p, const EncoderConfig& cfg, const GraphInputs& in) {
  ad::Tape& tape = p.tape();
  ad::Tensor h = ad::matmul(tape.constant(in.graph.node_features()), p("enc.P_node"));
  for (std::size_t l = 0; l < cfg.layers; ++l)
    h = residual_gcn_layer(tape, in.norm_adj, h, p("enc.ng.W." + std::to_string(l)));
  return h;
}

DualEmbedding dual_embed(const Matrix& modified_incidence, const ad::Tensor& hv, const ad::Tensor& he) {
  ad::Tape& tape = *hv.tape();
  if (modified_incidence.rows() != hv.rows() || modified_incidence.cols() != he.rows())
    throw ContractViolation("dual_embed: K' " + modified_incidence.shape_string() + " vs hv " +
                            hv.value().shape_string() + ", he " + he.value().shape_string());
  ad::Tensor edge_part = ad::matmul(tape.constant(modified_incidence), he);
  return DualEmbedding{ad::concat_cols(hv, edge_part), hv, edge_part};
}

ad::Tensor encode(ParamBinding& p, const EncoderConfig& cfg, const GraphInputs& in) {
  switch (cfg.variant) {
    case Variant::NodeOnly: return node_embed(p, cfg, in);
    case Variant::EdgeOnly:
      return ad::matmul(p.tape().constant(in.modified_incidence), edge_embed(p, cfg, in));
    case Variant::Dual: break;
  }
  return dual_embed(in.modified_incidence, node_embed(p, cfg, in), edge_embed(p, cfg, in)).h_dual;
}

}  // namespace segmn
