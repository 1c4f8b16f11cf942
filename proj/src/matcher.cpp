#include "segmn/matcher.hpp"

#include <atomic>
#include <cmath>
#include <string>

namespace segmn {

namespace {

std::atomic<std::uint64_t> g_spm_calls{0};

Matrix broadcast_cols(const Matrix& column, std::size_t cols) {
  Matrix m(column.rows(), cols);
  for (std::size_t r = 0; r < column.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = column(r, 0);
  return m;
}

Matrix pool_mask(const Matrix& cells, std::size_t h, std::size_t w, std::size_t window) {
  const std::size_t oh = (h + window - 1) / window, ow = (w + window - 1) / window;
  Matrix out(oh * ow, 1);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      if (cells(r * w + c, 0) != 0.0) out((r / window) * ow + c / window, 0) = 1.0;
  return out;
}

}  // namespace

Matrix block_mask(std::size_t n_max, std::size_t n1, std::size_t n2) {
  Matrix m(n_max, n_max);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t a = 0; a < n2; ++a) m(i, a) = 1.0;
  return m;
}

void init_readout_params(ParamStore& params, const MatcherConfig& cfg, std::size_t matrices,
                         std::mt19937_64& rng) {
  std::size_t in_ch = 1;
  for (std::size_t l = 0; l < cfg.conv_channels.size(); ++l) {
    const std::size_t out_ch = cfg.conv_channels[l];
    const std::string base = "conv." + std::to_string(l);
    params.add(base + ".row", glorot(in_ch, out_ch, rng));
    params.add(base + ".col", glorot(in_ch, out_ch, rng));
    params.add(base + ".bias", Matrix(1, out_ch));
    in_ch = out_ch;
  }
  params.add("mlp.W", glorot(matrices * in_ch, 1, rng));
  params.add("mlp.b", Matrix(1, 1));
}

void init_matcher_params(ParamStore& params, const MatcherConfig& cfg, std::mt19937_64& rng) {
  for (const char* name : {"match.Wq1", "match.Wk1", "match.Wq2", "match.Wk2"})
    params.add(name, glorot(cfg.embed_width, cfg.key_dim, rng));
  for (std::size_t k = 0; k < cfg.spm_layers; ++k) params.add("spm.WA." + std::to_string(k), Matrix(1, 1, 1.0));
  const std::size_t da = cfg.attention_dim;
  params.add("att.wq", glorot(1, da, rng));
  params.add("att.bq", glorot(1, da, rng));
  params.add("att.wk", glorot(1, da, rng));
  params.add("att.bk", glorot(1, da, rng));
  params.add("att.wv", glorot(1, da, rng));
  params.add("att.bv", Matrix(1, da));
  params.add("att.wo", glorot(da, 1, rng));
  params.add("att.bo", Matrix(1, 1));
  init_readout_params(params, cfg, 2, rng);
}

std::pair<SimilarityMatrix, SimilarityMatrix> cross_graph_similarity(ParamBinding& p, const MatcherConfig& cfg,
                                                                     const ad::Tensor& h1, const ad::Tensor& h2) {
  const std::size_t n1 = h1.rows(), n2 = h2.rows();
  if (n1 > cfg.n_max || n2 > cfg.n_max)
    throw ConfigurationError("graph with " + std::to_string(std::max(n1, n2)) + " nodes exceeds N_max = " +
                             std::to_string(cfg.n_max));
  if (h1.cols() != cfg.embed_width || h2.cols() != cfg.embed_width)
    throw ContractViolation("cross_graph_similarity: embeddings " + h1.value().shape_string() + " and " +
                            h2.value().shape_string() + " vs width " + std::to_string(cfg.embed_width));
  const double inv_sqrt_dk = 1.0 / std::sqrt(double(cfg.key_dim));
  ad::Tensor q1 = ad::matmul(h1, p("match.Wq1"));
  ad::Tensor k1 = ad::matmul(h1, p("match.Wk1"));
  ad::Tensor q2 = ad::matmul(h2, p("match.Wq2"));
  ad::Tensor k2 = ad::matmul(h2, p("match.Wk2"));

  auto side = [&](const ad::Tensor& q, const ad::Tensor& k, std::size_t rows, std::size_t cols) {
    ad::Tensor logits = ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt_dk);
    Matrix m = block_mask(cfg.n_max, rows, cols);
    ad::Tensor s = ad::row_softmax_masked(ad::pad(logits, cfg.n_max, cfg.n_max), m);
    return SimilarityMatrix{s, std::move(m), rows, cols};
  };
  return {side(q1, k2, n1, n2), side(q2, k1, n2, n1)};
}

SimilarityMatrix spm_apply(const SimilarityMatrix& s, const AssignmentGraph& ag, const ad::Tensor& weight) {
  if (ag.n1 != s.n1 || ag.n2 != s.n2)
    throw ContractViolation("spm_apply: assignment graph " + std::to_string(ag.n1) + "x" + std::to_string(ag.n2) +
                            " vs similarity block " + std::to_string(s.n1) + "x" + std::to_string(s.n2));
  if (weight.rows() != 1 || weight.cols() != 1)
    throw ContractViolation("spm_apply: weight shape " + weight.value().shape_string() + " vs [1x1]");
  g_spm_calls.fetch_add(1, std::memory_order_relaxed);
  const std::size_t n_max = s.n_max();
  ad::Tensor x = ad::reshape(ad::slice(s.scores, 0, 0, s.n1, s.n2), s.n1 * s.n2, 1);
  ad::Tensor y = ad::relu(ad::matmul(ad::spmm(ag.normalized_propagation(), x), weight));
  ad::Tensor back = ad::pad(ad::reshape(y, s.n1, s.n2), n_max, n_max);
  return SimilarityMatrix{back, s.mask, s.n1, s.n2};
}

std::uint64_t spm_invocations() { return g_spm_calls.load(); }
void reset_spm_invocations() { g_spm_calls.store(0); }

SimilarityMatrix matrix_self_attention(ParamBinding& p, const MatcherConfig& cfg, const SimilarityMatrix& s) {
  // Padding tokens neither attend nor get attended to and come out as 0, so
  // only the real block is run through attention and the result is re-padded.
  const std::size_t n_max = s.n_max();
  const std::size_t tokens = s.n1 * s.n2;
  const Matrix all(tokens, tokens, 1.0);

  ad::Tensor x = ad::reshape(ad::slice(s.scores, 0, 0, s.n1, s.n2), tokens, 1);
  ad::Tensor q = ad::add_row(ad::matmul(x, p("att.wq")), p("att.bq"));
  ad::Tensor k = ad::add_row(ad::matmul(x, p("att.wk")), p("att.bk"));
  ad::Tensor v = ad::add_row(ad::matmul(x, p("att.wv")), p("att.bv"));
  ad::Tensor logits = ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(double(cfg.attention_dim)));
  ad::Tensor attended = ad::matmul(ad::row_softmax_masked(logits, all), v);
  ad::Tensor out = ad::add(ad::add_row(ad::matmul(attended, p("att.wo")), p("att.bo")), x);
  return SimilarityMatrix{ad::pad(ad::reshape(out, s.n1, s.n2), n_max, n_max), s.mask, s.n1, s.n2};
}

ad::Tensor cross_conv_features(ParamBinding& p, const MatcherConfig& cfg, const SimilarityMatrix& s) {
  std::size_t h = s.n_max(), w = s.n_max();
  Matrix valid(h * w, 1, s.mask.values());
  ad::Tensor x = ad::reshape(s.scores, h * w, 1);
  for (std::size_t l = 0; l < cfg.conv_channels.size(); ++l) {
    const std::string base = "conv." + std::to_string(l);
    ad::Tensor rows = ad::matmul(ad::grid_row_sum(x, h, w), p(base + ".row"));
    ad::Tensor cols = ad::matmul(ad::grid_col_sum(x, h, w), p(base + ".col"));
    x = ad::relu(ad::add_row(ad::add(rows, cols), p(base + ".bias")));
    x = ad::mask(x, broadcast_cols(valid, x.cols()));
    if (cfg.pool_window > 1) {
      x = ad::max_pool(x, h, w, cfg.pool_window);
      valid = pool_mask(valid, h, w, cfg.pool_window);
      h = (h + cfg.pool_window - 1) / cfg.pool_window;
      w = (w + cfg.pool_window - 1) / cfg.pool_window;
    }
  }
  double count = 0.0;
  for (double v : valid.values()) count += v;
  Matrix weights = valid.transposed();
  if (count > 0.0)
    for (double& v : weights.values()) v /= count;
  return ad::matmul(p.tape().constant(std::move(weights)), x);
}

ad::Tensor mlp_head(ParamBinding& p, const ad::Tensor& features) {
  return ad::sigmoid(ad::add(ad::matmul(features, p("mlp.W")), p("mlp.b")));
}

ad::Tensor cross_conv_readout(ParamBinding& p, const MatcherConfig& cfg, const SimilarityMatrix& s1,
                              const SimilarityMatrix& s2) {
  return mlp_head(p, ad::concat_cols(cross_conv_features(p, cfg, s1), cross_conv_features(p, cfg, s2)));
}

}  // namespace segmn
