#pragma once

#include "stfm/pbtf.hpp"
#include "stfm/qformer.hpp"
#include "stfm/similarity.hpp"
#include "stfm/tensor.hpp"
#include "stfm/vpe.hpp"

namespace stfm {

// Hybrid spatial-temporal filtering: cross-attention whose logits carry an
// alpha-weighted log-similarity bias, with a beta-weighted, layer-normalized
// output. Similarities are clamped to [h_floor, 1] before log and power.
struct HstfParams {
  Tensor w_q;                // D x d query projection
  Tensor ln_gamma, ln_beta;  // d
  double alpha = 1.0;
  double beta = 0.0;
  double h_floor = 1e-6;

  std::size_t embed_dim() const { return w_q.dim(0); }
  std::size_t kv_dim() const { return w_q.dim(1); }
};

HstfParams init_hstf(std::size_t embed_dim, std::size_t kv_dim, RngState& rng);

struct AttentionMap {
  Tensor values;  // N x (T*M), rows sum to 1
  std::size_t query_count() const { return values.dim(0); }
  std::size_t token_count() const { return values.dim(1); }
};

struct FilteredTokens {
  Tensor values;  // N x d
};

struct HstfCache {
  Tensor q;      // N x d
  Tensor hc;     // T*M clamped similarities
  Tensor hb;     // T*M beta powers of hc
  Tensor ln_in;  // N x d pre-norm weighted sum
};

struct HstfGrads {
  Tensor w_q, ln_gamma, ln_beta;
};
HstfGrads zero_grads(const HstfParams& p);

// SAM = row softmax of alpha*log(clamp(H)) + (vs*w_q)K^T / sqrt(d).
AttentionMap hstf_sam(const TimeSensitiveQueries& vs, const KeyValueBank& kv,
                      const SimilarityMatrix& h, const HstfParams& p,
                      HstfCache* cache = nullptr);

// Z[j] = layer_norm(sum_i clamp(H_i)^beta * SAM[j][i] * values[i]).
FilteredTokens hstf_output(const AttentionMap& sam, const KeyValueBank& kv,
                           const SimilarityMatrix& h, const HstfParams& p,
                           HstfCache* cache = nullptr);

// Accumulates d_vs, d_keys, d_values and d_h (T x M) for the whole
// sam + output stage.
void hstf_backward(const HstfParams& p, const HstfCache& c, const AttentionMap& sam,
                   const KeyValueBank& kv, const TimeSensitiveQueries& vs,
                   const SimilarityMatrix& h, const Tensor& d_z, Tensor& d_vs,
                   Tensor& d_keys, Tensor& d_values, Tensor& d_h, HstfGrads& g);

struct StfmOptions {
  bool vpe = true;
  bool pbtf = true;
  bool similarity_after_vpe = false;
};

struct StfmOutput {
  SimilarityMatrix h;
  AttentionMap sam;
  FilteredTokens z;
};

struct StfmCache {
  VideoSemantics vq_pe;
  SimilarityCache sim;
  SimilarityMatrix h;
  Tensor flat;  // (T*M) x D encoded tokens
  KeyValueBank kv;
  TimeSensitiveQueries vs;
  PbtfCache pbtf;
  HstfCache hstf;
  AttentionMap sam;
  FilteredTokens z;
};

// Full filtering pipeline from compressed semantics to filtered tokens.
// pos_table, when given, replaces the sinusoidal encoding with a learned
// per-frame embedding (the options.vpe == false path).
StfmOutput stfm_forward(const VideoSemantics& vq, const TextSemantics& pq,
                        const PbtfParams& pbtf, const HstfParams& hstf,
                        const VpeConfig& vpe, const StfmOptions& options = {},
                        const Tensor* pos_table = nullptr, StfmCache* cache = nullptr);

}  // namespace stfm
