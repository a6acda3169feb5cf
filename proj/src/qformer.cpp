#include "stfm/qformer.hpp"

#include <cmath>

#include "stfm/errors.hpp"
#include "stfm/grad_ops.hpp"

namespace stfm {

namespace {
constexpr std::size_t kFeedForwardMult = 4;
}

QFormerParams init_qformer(std::size_t query_count, std::size_t input_dim,
                           std::size_t embed_dim, RngState& rng) {
  const std::size_t m = query_count, c = input_dim, d = embed_dim;
  const std::size_t f = kFeedForwardMult * d;
  QFormerParams p;
  p.queries = gaussian(rng, {m, d});
  p.w_q = gaussian(rng, {d, d});
  scale_inplace(p.w_q, 1.0 / std::sqrt(static_cast<double>(d)));
  p.w_k = gaussian(rng, {c, d});
  scale_inplace(p.w_k, 1.0 / std::sqrt(static_cast<double>(c)));
  p.w_v = gaussian(rng, {c, d});
  scale_inplace(p.w_v, 1.0 / std::sqrt(static_cast<double>(c)));
  p.ff_w1 = gaussian(rng, {d, f});
  scale_inplace(p.ff_w1, 1.0 / std::sqrt(static_cast<double>(d)));
  p.ff_b1 = Tensor({f});
  p.ff_w2 = gaussian(rng, {f, d});
  scale_inplace(p.ff_w2, 1.0 / std::sqrt(static_cast<double>(f)));
  p.ff_b2 = Tensor({d});
  p.ln_gamma = Tensor({d});
  for (double& v : p.ln_gamma.flat()) v = 1.0;
  p.ln_beta = Tensor({d});
  return p;
}

QFormerGrads zero_grads(const QFormerParams& p) {
  QFormerGrads g;
  g.queries = Tensor(p.queries.shape());
  g.w_q = Tensor(p.w_q.shape());
  g.w_k = Tensor(p.w_k.shape());
  g.w_v = Tensor(p.w_v.shape());
  g.ff_w1 = Tensor(p.ff_w1.shape());
  g.ff_b1 = Tensor(p.ff_b1.shape());
  g.ff_w2 = Tensor(p.ff_w2.shape());
  g.ff_b2 = Tensor(p.ff_b2.shape());
  g.ln_gamma = Tensor(p.ln_gamma.shape());
  g.ln_beta = Tensor(p.ln_beta.shape());
  return g;
}

Tensor qformer_compress(const Tensor& input, const QFormerParams& p, QFormerCache* cache) {
  if (input.rank() != 2)
    throw Error::dimension("qformer_compress: input must be rank 2, got " + input.shape_str());
  if (input.dim(1) != p.input_dim())
    throw Error::dimension("qformer_compress: input width " + input.shape_str() +
                           " does not match key projection " + p.w_k.shape_str());
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.embed_dim()));

  Tensor q = matmul(p.queries, p.w_q);  // M x D
  Tensor k = matmul(input, p.w_k);      // L x D
  Tensor v = matmul(input, p.w_v);      // L x D
  Tensor scores = matmul_nt(q, k);      // M x L
  scale_inplace(scores, scale);
  Tensor attn = softmax_rows(scores);
  Tensor attn_out = matmul(attn, v);    // M x D
  Tensor h = add(p.queries, attn_out);
  Tensor ff_pre = affine_rows(h, p.ff_w1, p.ff_b1);
  Tensor ff_act = relu(ff_pre);
  Tensor ff_out = affine_rows(ff_act, p.ff_w2, p.ff_b2);
  Tensor ln_in = add(h, ff_out);
  Tensor out = layer_norm_rows(ln_in, p.ln_gamma, p.ln_beta, kLayerNormEps);

  if (cache) {
    cache->input = input;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->attn = std::move(attn);
    cache->h = std::move(h);
    cache->ff_pre = std::move(ff_pre);
    cache->ff_act = std::move(ff_act);
    cache->ln_in = std::move(ln_in);
  }
  return out;
}

void qformer_backward(const QFormerParams& p, const QFormerCache& c,
                      const Tensor& d_out, QFormerGrads& g) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.embed_dim()));

  Tensor d_ln_in = layer_norm_rows_backward(c.ln_in, p.ln_gamma, kLayerNormEps, d_out,
                                            g.ln_gamma, g.ln_beta);
  // ln_in = h + ff_out
  Tensor d_h = d_ln_in;
  const Tensor& d_ff_out = d_ln_in;

  // ff_out = relu(h*w1 + b1)*w2 + b2
  add_inplace(g.ff_w2, matmul_tn(c.ff_act, d_ff_out));
  add_inplace(g.ff_b2, colsum(d_ff_out));
  Tensor d_ff_act = matmul_nt(d_ff_out, p.ff_w2);
  Tensor d_ff_pre = relu_backward(c.ff_pre, d_ff_act);
  add_inplace(g.ff_w1, matmul_tn(c.h, d_ff_pre));
  add_inplace(g.ff_b1, colsum(d_ff_pre));
  add_inplace(d_h, matmul_nt(d_ff_pre, p.ff_w1));

  // h = queries + attn*v
  add_inplace(g.queries, d_h);
  const Tensor& d_attn_out = d_h;
  Tensor d_attn = matmul_nt(d_attn_out, c.v);
  Tensor d_v = matmul_tn(c.attn, d_attn_out);
  Tensor d_scores = softmax_rows_backward(c.attn, d_attn);
  scale_inplace(d_scores, scale);
  Tensor d_q = matmul(d_scores, c.k);
  Tensor d_k = matmul_tn(d_scores, c.q);

  add_inplace(g.w_q, matmul_tn(p.queries, d_q));
  add_inplace(g.queries, matmul_nt(d_q, p.w_q));
  add_inplace(g.w_k, matmul_tn(c.input, d_k));
  add_inplace(g.w_v, matmul_tn(c.input, d_v));
}

VideoSemantics extract_video_semantics(const PatchFeatures& vf, const QFormerParams& p,
                                       std::vector<QFormerCache>* caches) {
  const std::size_t t_count = vf.frame_count();
  const std::size_t n_v = vf.patch_count();
  const std::size_t c = vf.channels();
  const std::size_t m = p.query_count();
  const std::size_t d = p.embed_dim();

  VideoSemantics vq{Tensor({t_count, m, d})};
  if (caches) caches->resize(t_count);
  Tensor frame({n_v, c});
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t i = 0; i < n_v; ++i) {
      auto src = vf.values.row(t, i);
      auto dst = frame.row(i);
      for (std::size_t j = 0; j < c; ++j) dst[j] = src[j];
    }
    Tensor out = qformer_compress(frame, p, caches ? &(*caches)[t] : nullptr);
    for (std::size_t i = 0; i < m; ++i) {
      auto src = out.row(i);
      auto dst = vq.values.row(t, i);
      for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
    }
  }
  return vq;
}

TextSemantics extract_text_semantics(const PromptFeatures& pf, const QFormerParams& p,
                                     QFormerCache* cache) {
  return TextSemantics{qformer_compress(pf.values, p, cache)};
}

}  // namespace stfm
