#include "stfm/hstf.hpp"

#include <cmath>

#include "stfm/errors.hpp"
#include "stfm/grad_ops.hpp"

namespace stfm {

namespace {

void check_params(const HstfParams& p) {
  if (p.alpha < 0.0) throw Error::config("hstf: alpha must be >= 0");
  if (p.beta < 0.0) throw Error::config("hstf: beta must be >= 0");
  if (p.h_floor <= 0.0) throw Error::config("hstf: h_floor must be positive");
}

Tensor clamp_similarities(const SimilarityMatrix& h, double floor) {
  Tensor hc({h.values.size()});
  const double* src = h.values.data();
  double* dst = hc.data();
  for (std::size_t i = 0; i < hc.size(); ++i) {
    double v = src[i];
    if (v < floor) v = floor;
    if (v > 1.0) v = 1.0;
    dst[i] = v;
  }
  return hc;
}

}  // namespace

HstfParams init_hstf(std::size_t embed_dim, std::size_t kv_dim, RngState& rng) {
  HstfParams p;
  // small query init keeps the logits near zero at the start, so early
  // attention is shaped by the similarity bias rather than random dot
  // products
  p.w_q = gaussian(rng, {embed_dim, kv_dim});
  scale_inplace(p.w_q, 1.0 / static_cast<double>(embed_dim));
  p.ln_gamma = Tensor({kv_dim});
  for (double& v : p.ln_gamma.flat()) v = 1.0;
  p.ln_beta = Tensor({kv_dim});
  return p;
}

HstfGrads zero_grads(const HstfParams& p) {
  HstfGrads g;
  g.w_q = Tensor(p.w_q.shape());
  g.ln_gamma = Tensor(p.ln_gamma.shape());
  g.ln_beta = Tensor(p.ln_beta.shape());
  return g;
}

AttentionMap hstf_sam(const TimeSensitiveQueries& vs, const KeyValueBank& kv,
                      const SimilarityMatrix& h, const HstfParams& p, HstfCache* cache) {
  check_params(p);
  if (vs.values.dim(1) != p.embed_dim())
    throw Error::dimension("hstf_sam: query dim " + vs.values.shape_str() +
                           " does not match w_q " + p.w_q.shape_str());
  if (kv.keys.dim(1) != p.kv_dim())
    throw Error::dimension("hstf_sam: key width " + kv.keys.shape_str() +
                           " does not match w_q " + p.w_q.shape_str());
  const std::size_t tokens = kv.token_count();
  if (h.values.size() != tokens)
    throw Error::dimension("hstf_sam: similarity grid " + h.values.shape_str() +
                           " does not cover " + std::to_string(tokens) + " tokens");

  const double scale = 1.0 / std::sqrt(static_cast<double>(p.kv_dim()));
  Tensor q = matmul(vs.values, p.w_q);    // N x d
  Tensor logits = matmul_nt(q, kv.keys);  // N x T*M
  scale_inplace(logits, scale);

  Tensor hc = clamp_similarities(h, p.h_floor);
  if (p.alpha != 0.0) {
    for (std::size_t j = 0; j < logits.dim(0); ++j) {
      auto row = logits.row(j);
      for (std::size_t i = 0; i < tokens; ++i) row[i] += p.alpha * std::log(hc.at(i));
    }
  }
  AttentionMap sam{softmax_rows(logits)};
  if (cache) {
    cache->q = std::move(q);
    cache->hc = std::move(hc);
  }
  return sam;
}

FilteredTokens hstf_output(const AttentionMap& sam, const KeyValueBank& kv,
                           const SimilarityMatrix& h, const HstfParams& p,
                           HstfCache* cache) {
  check_params(p);
  const std::size_t tokens = kv.token_count();
  if (sam.token_count() != tokens)
    throw Error::dimension("hstf_output: attention map " + sam.values.shape_str() +
                           " does not cover " + kv.values.shape_str());
  if (h.values.size() != tokens)
    throw Error::dimension("hstf_output: similarity grid " + h.values.shape_str() +
                           " does not cover " + std::to_string(tokens) + " tokens");

  Tensor hb = clamp_similarities(h, p.h_floor);
  if (p.beta == 0.0) {
    for (double& v : hb.flat()) v = 1.0;
  } else {
    for (double& v : hb.flat()) v = std::pow(v, p.beta);
  }

  Tensor weighted = sam.values;  // N x T*M, columns scaled by hb
  for (std::size_t j = 0; j < weighted.dim(0); ++j) {
    auto row = weighted.row(j);
    for (std::size_t i = 0; i < tokens; ++i) row[i] *= hb.at(i);
  }
  Tensor ln_in = matmul(weighted, kv.values);  // N x d
  FilteredTokens z{layer_norm_rows(ln_in, p.ln_gamma, p.ln_beta, kLayerNormEps)};
  if (cache) {
    cache->hb = std::move(hb);
    cache->ln_in = std::move(ln_in);
  }
  return z;
}

void hstf_backward(const HstfParams& p, const HstfCache& c, const AttentionMap& sam,
                   const KeyValueBank& kv, const TimeSensitiveQueries& vs,
                   const SimilarityMatrix& h, const Tensor& d_z, Tensor& d_vs,
                   Tensor& d_keys, Tensor& d_values, Tensor& d_h, HstfGrads& g) {
  const std::size_t n = sam.query_count();
  const std::size_t tokens = sam.token_count();
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.kv_dim()));

  Tensor d_ln_in =
      layer_norm_rows_backward(c.ln_in, p.ln_gamma, kLayerNormEps, d_z, g.ln_gamma, g.ln_beta);

  // ln_in = (sam .* hb per column) * values
  Tensor dots = matmul_nt(d_ln_in, kv.values);  // N x T*M, d_ln_in[j].values[i]
  Tensor d_sam({n, tokens});
  std::vector<double> d_hc(tokens, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    auto dot_row = dots.row(j);
    auto sam_row = sam.values.row(j);
    auto d_sam_row = d_sam.row(j);
    for (std::size_t i = 0; i < tokens; ++i) d_sam_row[i] = dot_row[i] * c.hb.at(i);
    if (p.beta != 0.0)
      for (std::size_t i = 0; i < tokens; ++i) {
        const double dhb = sam_row[i] * dot_row[i];
        d_hc[i] += p.beta * std::pow(c.hc.at(i), p.beta - 1.0) * dhb;
      }
  }
  {
    Tensor weighted = sam.values;
    for (std::size_t j = 0; j < n; ++j) {
      auto row = weighted.row(j);
      for (std::size_t i = 0; i < tokens; ++i) row[i] *= c.hb.at(i);
    }
    add_inplace(d_values, matmul_tn(weighted, d_ln_in));
  }

  Tensor d_logits = softmax_rows_backward(sam.values, d_sam);
  if (p.alpha != 0.0)
    for (std::size_t i = 0; i < tokens; ++i) {
      double col = 0.0;
      for (std::size_t j = 0; j < n; ++j) col += d_logits.at(j, i);
      d_hc[i] += p.alpha * col / c.hc.at(i);
    }

  scale_inplace(d_logits, scale);
  Tensor d_q = matmul(d_logits, kv.keys);
  add_inplace(d_keys, matmul_tn(d_logits, c.q));
  add_inplace(g.w_q, matmul_tn(vs.values, d_q));
  add_inplace(d_vs, matmul_nt(d_q, p.w_q));

  // clamp passes gradient only where the raw similarity was inside the range;
  // the T x M grid flattens row-major into token order
  const double* h_raw = h.values.data();
  double* d_h_flat = d_h.data();
  for (std::size_t i = 0; i < tokens; ++i)
    if (h_raw[i] >= p.h_floor) d_h_flat[i] += d_hc[i];
}

StfmOutput stfm_forward(const VideoSemantics& vq, const TextSemantics& pq,
                        const PbtfParams& pbtf, const HstfParams& hstf,
                        const VpeConfig& vpe, const StfmOptions& options,
                        const Tensor* pos_table, StfmCache* cache) {
  const std::size_t t_count = vq.frame_count();
  const std::size_t m = vq.query_count();
  const std::size_t d = vq.embed_dim();

  VideoSemantics vq_pe{vq.values};
  if (options.vpe) {
    vq_pe = add_temporal_encoding(vq, vpe);
  } else if (pos_table) {
    if (pos_table->rank() != 2 || pos_table->dim(0) != t_count || pos_table->dim(1) != d)
      throw Error::dimension("stfm_forward: positional table " + pos_table->shape_str() +
                             " does not match " + vq.values.shape_str());
    for (std::size_t t = 0; t < t_count; ++t)
      for (std::size_t i = 0; i < m; ++i) {
        auto row = vq_pe.values.row(t, i);
        auto enc = pos_table->row(t);
        for (std::size_t j = 0; j < d; ++j) row[j] += enc[j];
      }
  }

  SimilarityMatrix h = similarity_matrix(options.similarity_after_vpe ? vq_pe : vq, pq,
                                         cache ? &cache->sim : nullptr);

  Tensor flat = flatten_tokens(vq_pe);
  KeyValueBank kv{matmul(flat, pbtf.w_k), matmul(flat, pbtf.w_v)};

  TimeSensitiveQueries vs =
      options.pbtf ? pbtf_queries(pq, pbtf, cache ? &cache->pbtf : nullptr)
                   : TimeSensitiveQueries{matmul(pbtf.queries, pbtf.w_out)};

  AttentionMap sam = hstf_sam(vs, kv, h, hstf, cache ? &cache->hstf : nullptr);
  FilteredTokens z = hstf_output(sam, kv, h, hstf, cache ? &cache->hstf : nullptr);

  if (cache) {
    cache->vq_pe = vq_pe;
    cache->h = h;
    cache->flat = std::move(flat);
    cache->kv = kv;
    cache->vs = vs;
    cache->sam = sam;
    cache->z = z;
  }
  return StfmOutput{std::move(h), std::move(sam), std::move(z)};
}

}  // namespace stfm
