#pragma once

#include <vector>

#include "stfm/tensor.hpp"

namespace stfm {

struct PatchFeatures {
  Tensor values;  // T x N_v x C
  std::size_t frame_count() const { return values.dim(0); }
  std::size_t patch_count() const { return values.dim(1); }
  std::size_t channels() const { return values.dim(2); }
};

struct PromptFeatures {
  Tensor values;  // N_p x D
  std::size_t token_count() const { return values.dim(0); }
  std::size_t embed_dim() const { return values.dim(1); }
};

struct VideoSemantics {
  Tensor values;  // T x M x D
  std::size_t frame_count() const { return values.dim(0); }
  std::size_t query_count() const { return values.dim(1); }
  std::size_t embed_dim() const { return values.dim(2); }
};

struct TextSemantics {
  Tensor values;  // M x D, empty() when there is no text
  std::size_t query_count() const { return values.dim(0); }
  std::size_t embed_dim() const { return values.dim(1); }
};

// One cross-attention block: M learnable queries attend over an input
// sequence of width C, residual add, feed-forward, layer norm. There is
// deliberately no positional encoding over the keys, so the block is
// invariant to input row order.
struct QFormerParams {
  Tensor queries;             // M x D
  Tensor w_q;                 // D x D
  Tensor w_k, w_v;            // C x D
  Tensor ff_w1;               // D x F
  Tensor ff_b1;               // F
  Tensor ff_w2;               // F x D
  Tensor ff_b2;               // D
  Tensor ln_gamma, ln_beta;   // D

  std::size_t query_count() const { return queries.dim(0); }
  std::size_t embed_dim() const { return queries.dim(1); }
  std::size_t input_dim() const { return w_k.dim(0); }
};

QFormerParams init_qformer(std::size_t query_count, std::size_t input_dim,
                           std::size_t embed_dim, RngState& rng);

// Intermediates kept for the backward pass.
struct QFormerCache {
  Tensor input;     // L x C
  Tensor q;         // M x D
  Tensor k, v;      // L x D
  Tensor attn;      // M x L
  Tensor h;         // M x D  queries + attention output
  Tensor ff_pre;    // M x F
  Tensor ff_act;    // M x F
  Tensor ln_in;     // M x D  h + feed-forward
};

struct QFormerGrads {
  Tensor queries, w_q, w_k, w_v, ff_w1, ff_b1, ff_w2, ff_b2, ln_gamma, ln_beta;
};
QFormerGrads zero_grads(const QFormerParams& p);

Tensor qformer_compress(const Tensor& input, const QFormerParams& p,
                        QFormerCache* cache = nullptr);

// Accumulates parameter gradients for one compressed sequence. Gradients
// w.r.t. the input sequence are not produced (inputs are data).
void qformer_backward(const QFormerParams& p, const QFormerCache& c,
                      const Tensor& d_out, QFormerGrads& g);

VideoSemantics extract_video_semantics(const PatchFeatures& vf, const QFormerParams& p,
                                       std::vector<QFormerCache>* caches = nullptr);

TextSemantics extract_text_semantics(const PromptFeatures& pf, const QFormerParams& p,
                                     QFormerCache* cache = nullptr);

}  // namespace stfm
