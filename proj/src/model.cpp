#include "stfm/model.hpp"

#include <cmath>

#include "stfm/errors.hpp"
#include "stfm/grad_ops.hpp"

namespace stfm {

StfmOptions stfm_options(const ExperimentConfig& cfg) {
  return StfmOptions{cfg.vpe, cfg.pbtf, cfg.similarity_after_vpe};
}

VpeConfig vpe_config(const ExperimentConfig& cfg) {
  return VpeConfig{cfg.vpe_scale, cfg.embed_dim};
}

ModelParams init_model_params(const ExperimentConfig& cfg) {
  cfg.validate();
  RngState rng = derive_stream(cfg.seed, "init");
  ModelParams p;
  p.share_qformers = cfg.share_qformers;
  p.img_qformer = init_qformer(cfg.qformer_queries, cfg.patch_channels, cfg.embed_dim, rng);
  if (!cfg.share_qformers) {
    // Both branches start from one draw when the widths allow it, the
    // desk-scale analog of initializing them from a common checkpoint;
    // they train independently afterwards.
    if (cfg.patch_channels == cfg.embed_dim)
      p.txt_qformer = p.img_qformer;
    else
      p.txt_qformer = init_qformer(cfg.qformer_queries, cfg.embed_dim, cfg.embed_dim, rng);
  }
  p.pbtf = init_pbtf(cfg.video_tokens, cfg.embed_dim, cfg.resolved_kv_dim(), rng);
  p.hstf = init_hstf(cfg.embed_dim, cfg.resolved_kv_dim(), rng);
  p.hstf.alpha = cfg.alpha;
  p.hstf.beta = cfg.beta;
  p.hstf.h_floor = cfg.h_floor;
  if (!cfg.vpe) {
    p.pos_table = gaussian(rng, {cfg.frames, cfg.embed_dim});
    scale_inplace(p.pos_table, 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim)));
  }
  return p;
}

ModelGrads zero_model_grads(const ModelParams& p) {
  ModelGrads g;
  g.share_qformers = p.share_qformers;
  g.has_pos_table = !p.pos_table.empty();
  g.img_qformer = zero_grads(p.img_qformer);
  if (!p.share_qformers) g.txt_qformer = zero_grads(p.txt_qformer);
  g.pbtf = zero_grads(p.pbtf);
  g.hstf = zero_grads(p.hstf);
  if (g.has_pos_table) g.pos_table = Tensor(p.pos_table.shape());
  return g;
}

namespace {

template <typename QF>
void push_qformer(std::vector<NamedTensorRef>& out, const std::string& prefix, QF& q) {
  out.push_back({prefix + ".queries", &q.queries});
  out.push_back({prefix + ".w_q", &q.w_q});
  out.push_back({prefix + ".w_k", &q.w_k});
  out.push_back({prefix + ".w_v", &q.w_v});
  out.push_back({prefix + ".ff_w1", &q.ff_w1});
  out.push_back({prefix + ".ff_b1", &q.ff_b1});
  out.push_back({prefix + ".ff_w2", &q.ff_w2});
  out.push_back({prefix + ".ff_b2", &q.ff_b2});
  out.push_back({prefix + ".ln_gamma", &q.ln_gamma});
  out.push_back({prefix + ".ln_beta", &q.ln_beta});
}

template <typename PB>
void push_pbtf(std::vector<NamedTensorRef>& out, PB& p) {
  out.push_back({"pbtf.queries", &p.queries});
  out.push_back({"pbtf.w_sa_q", &p.w_sa_q});
  out.push_back({"pbtf.w_sa_k", &p.w_sa_k});
  out.push_back({"pbtf.w_sa_v", &p.w_sa_v});
  out.push_back({"pbtf.w_out", &p.w_out});
  out.push_back({"pbtf.w_k", &p.w_k});
  out.push_back({"pbtf.w_v", &p.w_v});
}

template <typename HS>
void push_hstf(std::vector<NamedTensorRef>& out, HS& h) {
  out.push_back({"hstf.w_q", &h.w_q});
  out.push_back({"hstf.ln_gamma", &h.ln_gamma});
  out.push_back({"hstf.ln_beta", &h.ln_beta});
}

}  // namespace

std::vector<NamedTensorRef> named_tensors(ModelParams& p) {
  std::vector<NamedTensorRef> out;
  push_qformer(out, "img_qformer", p.img_qformer);
  if (!p.share_qformers) push_qformer(out, "txt_qformer", p.txt_qformer);
  push_pbtf(out, p.pbtf);
  push_hstf(out, p.hstf);
  if (!p.pos_table.empty()) out.push_back({"pos_table", &p.pos_table});
  return out;
}

std::vector<NamedTensorRef> named_tensors(ModelGrads& g) {
  std::vector<NamedTensorRef> out;
  push_qformer(out, "img_qformer", g.img_qformer);
  if (!g.share_qformers) push_qformer(out, "txt_qformer", g.txt_qformer);
  push_pbtf(out, g.pbtf);
  push_hstf(out, g.hstf);
  if (g.has_pos_table) out.push_back({"pos_table", &g.pos_table});
  return out;
}

ForwardResult model_forward(const SyntheticInstance& inst, const ModelParams& mp,
                            const ExperimentConfig& cfg, ModelCache* cache) {
  ModelCache local;
  ModelCache& c = cache ? *cache : local;

  c.vq = extract_video_semantics(inst.patches, mp.img_qformer, cache ? &c.img : nullptr);
  c.pq = extract_text_semantics(inst.prompt, mp.text_params(), cache ? &c.txt : nullptr);

  StfmOutput out = stfm_forward(c.vq, c.pq, mp.pbtf, mp.hstf, vpe_config(cfg),
                                stfm_options(cfg), mp.pos_table.empty() ? nullptr : &mp.pos_table,
                                cache ? &c.stfm : nullptr);

  const std::size_t n = out.z.values.dim(0);
  const std::size_t d = out.z.values.dim(1);
  if (inst.target.size() != d)
    throw Error::dimension("model_forward: target " + inst.target.shape_str() +
                           " does not match filtered tokens " + out.z.values.shape_str());

  Tensor pred({d});
  for (std::size_t j = 0; j < n; ++j) {
    auto row = out.z.values.row(j);
    for (std::size_t k = 0; k < d; ++k) pred.at(k) += row[k];
  }
  scale_inplace(pred, 1.0 / static_cast<double>(n));

  double loss = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double e = pred.at(k) - inst.target.at(k);
    loss += e * e;
  }
  loss /= static_cast<double>(d);

  if (cache) {
    c.pred = pred;
    c.loss = loss;
  }
  return ForwardResult{loss, std::move(pred), std::move(out)};
}

void model_backward(const SyntheticInstance& inst, const ModelParams& mp,
                    const ExperimentConfig& cfg, const ModelCache& c,
                    double loss_scale, ModelGrads& g) {
  const std::size_t t_count = cfg.frames;
  const std::size_t m = cfg.qformer_queries;
  const std::size_t d_embed = cfg.embed_dim;
  const std::size_t n = mp.pbtf.token_count();
  const std::size_t d_out = c.pred.size();

  // loss = mean_k (pred_k - y_k)^2, pred = mean_j z[j]
  Tensor d_z({n, d_out});
  for (std::size_t k = 0; k < d_out; ++k) {
    const double dp = loss_scale * 2.0 * (c.pred.at(k) - inst.target.at(k)) /
                      static_cast<double>(d_out) / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) d_z.at(j, k) = dp;
  }

  Tensor d_vs({n, d_embed});
  Tensor d_keys(c.stfm.kv.keys.shape());
  Tensor d_values(c.stfm.kv.values.shape());
  Tensor d_h({t_count, m});
  hstf_backward(mp.hstf, c.stfm.hstf, c.stfm.sam, c.stfm.kv, c.stfm.vs, c.stfm.h, d_z,
                d_vs, d_keys, d_values, d_h, g.hstf);

  Tensor d_pq({m, d_embed});
  if (cfg.pbtf) {
    pbtf_queries_backward(mp.pbtf, c.stfm.pbtf, d_vs, g.pbtf, &d_pq);
  } else {
    // vs = queries * w_out
    add_inplace(g.pbtf.w_out, matmul_tn(mp.pbtf.queries, d_vs));
    add_inplace(g.pbtf.queries, matmul_nt(d_vs, mp.pbtf.w_out));
  }

  // key/value bank
  add_inplace(g.pbtf.w_k, matmul_tn(c.stfm.flat, d_keys));
  add_inplace(g.pbtf.w_v, matmul_tn(c.stfm.flat, d_values));
  Tensor d_flat = matmul_nt(d_keys, mp.pbtf.w_k);
  add_inplace(d_flat, matmul_nt(d_values, mp.pbtf.w_v));
  VideoSemantics d_vq_pe = unflatten_tokens(d_flat, t_count, m);

  Tensor d_vq({t_count, m, d_embed});
  if (cfg.similarity_after_vpe)
    similarity_backward(c.stfm.vq_pe, c.pq, c.stfm.sim, d_h, d_vq_pe.values, d_pq);
  else
    similarity_backward(c.vq, c.pq, c.stfm.sim, d_h, d_vq, d_pq);

  // the temporal encoding is additive, learned or sinusoidal
  add_inplace(d_vq, d_vq_pe.values);
  if (!cfg.vpe && g.has_pos_table) {
    for (std::size_t t = 0; t < t_count; ++t) {
      auto dst = g.pos_table.row(t);
      for (std::size_t i = 0; i < m; ++i) {
        auto src = d_vq_pe.values.row(t, i);
        for (std::size_t j = 0; j < d_embed; ++j) dst[j] += src[j];
      }
    }
  }

  // image branch, one block per frame
  Tensor d_frame({m, d_embed});
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      auto src = d_vq.row(t, i);
      auto dst = d_frame.row(i);
      for (std::size_t j = 0; j < d_embed; ++j) dst[j] = src[j];
    }
    qformer_backward(mp.img_qformer, c.img[t], d_frame, g.img_qformer);
  }

  QFormerGrads& txt_grads = mp.share_qformers ? g.img_qformer : g.txt_qformer;
  qformer_backward(mp.text_params(), c.txt, d_pq, txt_grads);
}

}  // namespace stfm
