#pragma once

#include "stfm/qformer.hpp"
#include "stfm/tensor.hpp"

namespace stfm {

// Prompt-based temporal filtering: N trainable query slots are fused with
// the text semantics through one self-attention layer, and the encoded
// visual features are projected into a key/value bank.
struct PbtfParams {
  Tensor queries;                 // N x D trainable slots
  Tensor w_sa_q, w_sa_k, w_sa_v;  // D x D self-attention projections
  Tensor w_out;                   // D x D output projection
  Tensor w_k, w_v;                // D x d key/value projections

  std::size_t token_count() const { return queries.dim(0); }
  std::size_t embed_dim() const { return queries.dim(1); }
  std::size_t kv_dim() const { return w_k.dim(1); }
};

PbtfParams init_pbtf(std::size_t token_count, std::size_t embed_dim, std::size_t kv_dim,
                     RngState& rng);

struct TimeSensitiveQueries {
  Tensor values;  // N x D
  std::size_t token_count() const { return values.dim(0); }
};

struct KeyValueBank {
  // Row i = t*M + m (frame-major flattening of the T x M token grid).
  Tensor keys;    // (T*M) x d
  Tensor values;  // (T*M) x d
  std::size_t token_count() const { return keys.dim(0); }
};

struct PbtfCache {
  Tensor g;         // (N+M) x D concatenated sequence
  Tensor gq, gk, gv;
  Tensor attn;      // (N+M) x (N+M)
  Tensor attn_out;  // (N+M) x D
  Tensor kept;      // N x D rows fed to w_out
  bool has_text = false;
};

struct PbtfGrads {
  Tensor queries, w_sa_q, w_sa_k, w_sa_v, w_out, w_k, w_v;
};
PbtfGrads zero_grads(const PbtfParams& p);

// Self-attention over [trainable queries; pq]; only the outputs at the
// trainable-query positions are kept and projected by w_out. An empty pq
// degrades to self-attention over the trainable queries alone.
TimeSensitiveQueries pbtf_queries(const TextSemantics& pq, const PbtfParams& p,
                                  PbtfCache* cache = nullptr);

// Accumulates gradients for pbtf_queries; d_pq collects the text branch
// contribution (ignored when the cache carries no text).
void pbtf_queries_backward(const PbtfParams& p, const PbtfCache& c, const Tensor& d_vs,
                           PbtfGrads& g, Tensor* d_pq);

Tensor flatten_tokens(const VideoSemantics& vq);                 // (T*M) x D
VideoSemantics unflatten_tokens(const Tensor& flat, std::size_t frames,
                                std::size_t queries);

KeyValueBank project_kv(const VideoSemantics& vq_pe, const PbtfParams& p);

}  // namespace stfm
