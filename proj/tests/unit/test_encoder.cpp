#include <cmath>
#include <random>

#include "doctest.h"
#include "segmn/encoder.hpp"
#include "support.hpp"

using namespace segmn;

namespace {

EncoderConfig config(Variant v, std::size_t input_dim = 1, std::size_t hidden = 8, std::size_t layers = 3) {
  EncoderConfig c;
  c.variant = v;
  c.input_dim = input_dim;
  c.hidden = hidden;
  c.layers = layers;
  return c;
}

ParamStore params_for(const EncoderConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParamStore p;
  init_encoder_params(p, cfg, rng);
  // Give the edge bias and gate non-trivial values so every path is exercised.
  if (p.contains("enc.b")) p.get("enc.b") = testing::random_matrix(1, cfg.hidden, rng, -0.5, 0.5);
  if (p.contains("enc.gate")) p.get("enc.gate") = testing::random_matrix(1, cfg.hidden, rng, 0.5, 1.5);
  return p;
}

Matrix run(const std::function<ad::Tensor(ParamBinding&)>& f, const ParamStore& p) {
  ad::Tape tape;
  ParamBinding b(p, tape, false);
  return f(b).value();
}

Matrix residual_gcn_reference(const Matrix& a, Matrix h, const ParamStore& p, const std::string& prefix,
                              std::size_t layers) {
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = matmul(matmul(a, h), p.get(prefix + std::to_string(l)));
    for (std::size_t i = 0; i < z.size(); ++i) h[i] += std::max(0.0, z[i]);
  }
  return h;
}

Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t c = 0; c < m.cols(); ++c) out(perm[i], c) = m(i, c);
  return out;
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("variant names round trip") {
    for (Variant v : {Variant::NodeOnly, Variant::EdgeOnly, Variant::Dual}) CHECK(parse_variant(to_string(v)) == v);
    CHECK_THROWS_AS(parse_variant("both"), std::invalid_argument);
  }

  TEST_CASE("parameters follow the variant") {
    ParamStore node = params_for(config(Variant::NodeOnly), 1);
    CHECK(node.contains("enc.ng.W.2"));
    CHECK_FALSE(node.contains("enc.W2"));
    ParamStore edge = params_for(config(Variant::EdgeOnly), 1);
    CHECK(edge.contains("enc.lg.W_E.0"));
    CHECK(edge.contains("enc.gate"));
    CHECK_FALSE(edge.contains("enc.P_node"));
    CHECK(config(Variant::Dual).output_width() == 16);
  }

  TEST_CASE("single edge: edge embedding is the residual GCN of the lone line node") {
    const EncoderConfig cfg = config(Variant::EdgeOnly);
    const ParamStore p = params_for(cfg, 2);
    const GraphInputs in = prepare_graph(NodeGraph("k2", 2, {{0, 1}}));
    const Matrix he = run([&](ParamBinding& b) { return edge_embed(b, cfg, in); }, p);
    const Matrix h0 = matmul(in.line.node_features, p.get("enc.P_line"));
    const Matrix expect = residual_gcn_reference(Matrix(1, 1, 1.0), h0, p, "enc.lg.W_E.", cfg.layers);
    CHECK(max_abs_diff(he, expect) <= 1e-12);
  }

  TEST_CASE("zero edge features with zero bias reduce to the plain residual GCN") {
    // Path a-b-c where the shared node b carries a zero feature row, so Y_E = 0.
    const EncoderConfig cfg = config(Variant::EdgeOnly, 2);
    ParamStore p = params_for(cfg, 3);
    p.get("enc.b") = Matrix(1, cfg.hidden);
    NodeGraph g("p3", 3, {{0, 1}, {1, 2}}, std::nullopt, Matrix(3, 2, {1, 0, 0, 0, 0, 1}));
    const GraphInputs in = prepare_graph(g);
    REQUIRE(in.line.edge_features == Matrix(1, 2));
    const Matrix he = run([&](ParamBinding& b) { return edge_embed(b, cfg, in); }, p);
    const Matrix h0 = matmul(in.line.node_features, p.get("enc.P_line"));
    const Matrix expect = residual_gcn_reference(in.line_norm_adj, h0, p, "enc.lg.W_E.", cfg.layers);
    CHECK(max_abs_diff(he, expect) <= 1e-12);
  }

  TEST_CASE("4-cycle: all edge embeddings coincide") {
    const EncoderConfig cfg = config(Variant::EdgeOnly);
    const ParamStore p = params_for(cfg, 4);
    const GraphInputs in = prepare_graph(NodeGraph("c4", 4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}));
    const Matrix he = run([&](ParamBinding& b) { return edge_embed(b, cfg, in); }, p);
    for (std::size_t r = 1; r < 4; ++r)
      for (std::size_t c = 0; c < cfg.hidden; ++c) CHECK(std::abs(he(r, c) - he(0, c)) <= 1e-12);
  }

  TEST_CASE("edgeless graph: zero-row edge embedding and a zero edge part") {
    const EncoderConfig cfg = config(Variant::Dual);
    const ParamStore p = params_for(cfg, 5);
    const GraphInputs in = prepare_graph(NodeGraph("e", 3, {}));
    ad::Tape tape;
    ParamBinding b(p, tape, false);
    ad::Tensor he = edge_embed(b, cfg, in);
    CHECK(he.rows() == 0);
    CHECK(he.cols() == cfg.hidden);
    DualEmbedding d = dual_embed(in.modified_incidence, node_embed(b, cfg, in), he);
    CHECK(d.edge_part.value() == Matrix(3, cfg.hidden));
    CHECK(d.h_dual.cols() == 2 * cfg.hidden);
  }

  TEST_CASE("twin nodes get identical embeddings") {
    const EncoderConfig cfg = config(Variant::NodeOnly, 2);
    const ParamStore p = params_for(cfg, 6);
    // Leaves 1, 2, 3 of the star share label and neighbourhood.
    NodeGraph star("s", 4, {{0, 1}, {0, 2}, {0, 3}}, std::vector<int>{0, 1, 1, 1}, 2);
    const Matrix hv = run([&](ParamBinding& b) { return node_embed(b, cfg, prepare_graph(star)); }, p);
    for (std::size_t r : {2u, 3u})
      for (std::size_t c = 0; c < cfg.hidden; ++c) CHECK(hv(r, c) == hv(1, c));
  }

  TEST_CASE("zero layer weights leave only the projected input") {
    const EncoderConfig cfg = config(Variant::NodeOnly, 3);
    ParamStore p = params_for(cfg, 7);
    for (std::size_t l = 0; l < cfg.layers; ++l) p.get("enc.ng.W." + std::to_string(l)).fill(0.0);
    NodeGraph g("g", 4, {{0, 1}, {1, 2}, {2, 3}}, std::vector<int>{0, 1, 2, 0}, 3);
    const Matrix hv = run([&](ParamBinding& b) { return node_embed(b, cfg, prepare_graph(g)); }, p);
    CHECK(hv == matmul(g.node_features(), p.get("enc.P_node")));
  }

  TEST_CASE("dual embedding examples") {
    ad::Tape tape;
    const NodeGraph k2("k2", 2, {{0, 1}});
    DualEmbedding d = dual_embed(modified_incidence(k2), tape.constant(Matrix(2, 3, 0.5)), tape.constant(Matrix(1, 3, 1.0)));
    CHECK(d.edge_part.value() == Matrix(2, 3, 1.0));
    CHECK(d.h_dual.value() == Matrix(2, 6, {0.5, 0.5, 0.5, 1, 1, 1, 0.5, 0.5, 0.5, 1, 1, 1}));

    const NodeGraph p3("p3", 3, {{0, 1}, {1, 2}});
    const Matrix he(2, 2, {1.0, 2.0, -3.0, 0.5});
    DualEmbedding e = dual_embed(modified_incidence(p3), tape.constant(Matrix(3, 2)), tape.constant(he));
    for (std::size_t c = 0; c < 2; ++c)
      CHECK(e.edge_part.value()(1, c) == doctest::Approx((he(0, c) + he(1, c)) / std::sqrt(2.0)).epsilon(1e-15));
  }

  TEST_CASE("edge part is local to incident edges") {
    const NodeGraph g("g", 5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    const Matrix k = modified_incidence(g);
    std::mt19937_64 rng(8);
    Matrix he = testing::random_matrix(4, 3, rng);
    ad::Tape tape;
    const Matrix before = dual_embed(k, tape.constant(Matrix(5, 3)), tape.constant(he)).edge_part.value();
    for (std::size_t c = 0; c < 3; ++c) he(3, c) += 10.0;  // edge {3,4}
    const Matrix after = dual_embed(k, tape.constant(Matrix(5, 3)), tape.constant(he)).edge_part.value();
    for (std::size_t node : {0u, 1u, 2u})
      for (std::size_t c = 0; c < 3; ++c) CHECK(after(node, c) == before(node, c));
    CHECK(after(4, 0) != before(4, 0));
  }

  TEST_CASE("permutation equivariance of every variant") {
    std::mt19937_64 rng(9);
    for (Variant v : {Variant::NodeOnly, Variant::EdgeOnly, Variant::Dual}) {
      const EncoderConfig cfg = config(v, 3);
      const ParamStore p = params_for(cfg, 10);
      for (int t = 0; t < 20; ++t) {
        const NodeGraph g = testing::random_graph(rng, 2, 9, 0.4, 3);
        const auto perm = testing::random_permutation(g.num_nodes(), rng);
        const Matrix h = run([&](ParamBinding& b) { return encode(b, cfg, prepare_graph(g)); }, p);
        const Matrix hp = run([&](ParamBinding& b) { return encode(b, cfg, prepare_graph(g.permuted(perm))); }, p);
        CAPTURE(to_string(v));
        CHECK(max_abs_diff(permute_rows(h, perm), hp) <= 1e-9);
        for (double x : h.values()) CHECK(std::isfinite(x));
      }
    }
  }

  TEST_CASE("encoder gradients agree with central differences") {
    std::mt19937_64 rng(11);
    const EncoderConfig cfg = config(Variant::Dual, 2, 4, 2);
    const ParamStore p = params_for(cfg, 12);
    const GraphInputs in = prepare_graph(testing::random_connected_graph(rng, 5, 6, 0.5, 2));
    const Matrix w = testing::random_matrix(in.graph.num_nodes(), cfg.output_width(), rng);
    auto loss = [&](ParamBinding& b) { return ad::sum(ad::mask(ad::tanh(encode(b, cfg, in)), w)); };
    for (const auto& c : testing::check_param_gradients(p, loss)) {
      CAPTURE(c.name);
      CHECK(c.rel_error <= 1e-5);
    }
  }
}
