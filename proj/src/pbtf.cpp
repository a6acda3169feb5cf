#include "stfm/pbtf.hpp"

#include <cmath>

#include "stfm/errors.hpp"
#include "stfm/grad_ops.hpp"

namespace stfm {

PbtfParams init_pbtf(std::size_t token_count, std::size_t embed_dim, std::size_t kv_dim,
                     RngState& rng) {
  const std::size_t n = token_count, d = embed_dim;
  const double proj = 1.0 / std::sqrt(static_cast<double>(d));
  PbtfParams p;
  p.queries = gaussian(rng, {n, d});
  p.w_sa_q = gaussian(rng, {d, d});
  scale_inplace(p.w_sa_q, proj);
  p.w_sa_k = gaussian(rng, {d, d});
  scale_inplace(p.w_sa_k, proj);
  p.w_sa_v = gaussian(rng, {d, d});
  scale_inplace(p.w_sa_v, proj);
  p.w_out = gaussian(rng, {d, d});
  scale_inplace(p.w_out, proj);
  // the key projection starts small for the same reason as the filtering
  // query: the similarity bias should dominate the early attention maps
  p.w_k = gaussian(rng, {d, kv_dim});
  scale_inplace(p.w_k, 1.0 / static_cast<double>(d));
  p.w_v = gaussian(rng, {d, kv_dim});
  scale_inplace(p.w_v, proj);
  return p;
}

PbtfGrads zero_grads(const PbtfParams& p) {
  PbtfGrads g;
  g.queries = Tensor(p.queries.shape());
  g.w_sa_q = Tensor(p.w_sa_q.shape());
  g.w_sa_k = Tensor(p.w_sa_k.shape());
  g.w_sa_v = Tensor(p.w_sa_v.shape());
  g.w_out = Tensor(p.w_out.shape());
  g.w_k = Tensor(p.w_k.shape());
  g.w_v = Tensor(p.w_v.shape());
  return g;
}

TimeSensitiveQueries pbtf_queries(const TextSemantics& pq, const PbtfParams& p,
                                  PbtfCache* cache) {
  const std::size_t n = p.token_count();
  const std::size_t d = p.embed_dim();
  const bool has_text = !pq.values.empty();
  if (has_text && pq.embed_dim() != d)
    throw Error::dimension("pbtf_queries: text dim " + pq.values.shape_str() +
                           " does not match queries " + p.queries.shape_str());
  const std::size_t m = has_text ? pq.query_count() : 0;

  // g = [trainable queries; text vectors], no positional encoding
  Tensor g({n + m, d});
  for (std::size_t i = 0; i < n; ++i) {
    auto src = p.queries.row(i);
    auto dst = g.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
  }
  for (std::size_t i = 0; i < m; ++i) {
    auto src = pq.values.row(i);
    auto dst = g.row(n + i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor gq = matmul(g, p.w_sa_q);
  Tensor gk = matmul(g, p.w_sa_k);
  Tensor gv = matmul(g, p.w_sa_v);
  Tensor scores = matmul_nt(gq, gk);
  scale_inplace(scores, scale);
  Tensor attn = softmax_rows(scores);
  Tensor attn_out = matmul(attn, gv);

  Tensor kept({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    auto src = attn_out.row(i);
    auto dst = kept.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
  }
  TimeSensitiveQueries vs{matmul(kept, p.w_out)};

  if (cache) {
    cache->g = std::move(g);
    cache->gq = std::move(gq);
    cache->gk = std::move(gk);
    cache->gv = std::move(gv);
    cache->attn = std::move(attn);
    cache->attn_out = std::move(attn_out);
    cache->kept = std::move(kept);
    cache->has_text = has_text;
  }
  return vs;
}

void pbtf_queries_backward(const PbtfParams& p, const PbtfCache& c, const Tensor& d_vs,
                           PbtfGrads& g, Tensor* d_pq) {
  const std::size_t n = p.token_count();
  const std::size_t d = p.embed_dim();
  const std::size_t total = c.g.dim(0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  add_inplace(g.w_out, matmul_tn(c.kept, d_vs));
  Tensor d_kept = matmul_nt(d_vs, p.w_out);

  // Only the first n attention outputs feed w_out; the rest carry no grad.
  Tensor d_attn_out({total, d});
  for (std::size_t i = 0; i < n; ++i) {
    auto src = d_kept.row(i);
    auto dst = d_attn_out.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
  }

  Tensor d_attn = matmul_nt(d_attn_out, c.gv);
  Tensor d_gv = matmul_tn(c.attn, d_attn_out);
  Tensor d_scores = softmax_rows_backward(c.attn, d_attn);
  scale_inplace(d_scores, scale);
  Tensor d_gq = matmul(d_scores, c.gk);
  Tensor d_gk = matmul_tn(d_scores, c.gq);

  add_inplace(g.w_sa_q, matmul_tn(c.g, d_gq));
  add_inplace(g.w_sa_k, matmul_tn(c.g, d_gk));
  add_inplace(g.w_sa_v, matmul_tn(c.g, d_gv));

  Tensor d_g = matmul_nt(d_gq, p.w_sa_q);
  add_inplace(d_g, matmul_nt(d_gk, p.w_sa_k));
  add_inplace(d_g, matmul_nt(d_gv, p.w_sa_v));

  for (std::size_t i = 0; i < n; ++i) {
    auto src = d_g.row(i);
    auto dst = g.queries.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
  }
  if (c.has_text && d_pq) {
    for (std::size_t i = n; i < total; ++i) {
      auto src = d_g.row(i);
      auto dst = d_pq->row(i - n);
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  }
}

Tensor flatten_tokens(const VideoSemantics& vq) {
  const std::size_t t_count = vq.frame_count();
  const std::size_t m = vq.query_count();
  const std::size_t d = vq.embed_dim();
  Tensor flat({t_count * m, d});
  for (std::size_t t = 0; t < t_count; ++t)
    for (std::size_t i = 0; i < m; ++i) {
      auto src = vq.values.row(t, i);
      auto dst = flat.row(t * m + i);
      for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
    }
  return flat;
}

VideoSemantics unflatten_tokens(const Tensor& flat, std::size_t frames,
                                std::size_t queries) {
  if (flat.rank() != 2 || flat.dim(0) != frames * queries)
    throw Error::dimension("unflatten_tokens: " + flat.shape_str() + " does not hold " +
                           std::to_string(frames) + "x" + std::to_string(queries) +
                           " tokens");
  const std::size_t d = flat.dim(1);
  VideoSemantics vq{Tensor({frames, queries, d})};
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t i = 0; i < queries; ++i) {
      auto src = flat.row(t * queries + i);
      auto dst = vq.values.row(t, i);
      for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
    }
  return vq;
}

KeyValueBank project_kv(const VideoSemantics& vq_pe, const PbtfParams& p) {
  if (vq_pe.embed_dim() != p.embed_dim())
    throw Error::dimension("project_kv: feature dim " + vq_pe.values.shape_str() +
                           " does not match projections " + p.w_k.shape_str());
  Tensor flat = flatten_tokens(vq_pe);
  return KeyValueBank{matmul(flat, p.w_k), matmul(flat, p.w_v)};
}

}  // namespace stfm
