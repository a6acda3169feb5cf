#pragma once

#include "stfm/qformer.hpp"
#include "stfm/tensor.hpp"

namespace stfm {

struct SimilarityMatrix {
  Tensor values;  // T x M, every entry in [0, 1]
  std::size_t frame_count() const { return values.dim(0); }
  std::size_t query_count() const { return values.dim(1); }
};

// Cosine similarity mapped to [0, 1]: (cos + 1) / 2, clamped against
// floating-point spill. A zero-norm input carries no direction, so it maps
// to 0.5 (the orthogonal value) and sets *degenerate when provided.
double cosine01(std::span<const double> u, std::span<const double> v,
                bool* degenerate = nullptr);

// Norms and dots kept for the backward pass.
struct SimilarityCache {
  Tensor norm_u;  // T x M
  Tensor norm_v;  // M
  Tensor dot;     // T x M
};

// H[t][i] pairs the i-th visual vector of frame t with the i-th text vector.
SimilarityMatrix similarity_matrix(const VideoSemantics& vq, const TextSemantics& pq,
                                   SimilarityCache* cache = nullptr,
                                   std::size_t* degenerate_count = nullptr);

// Accumulates d(vq) and d(pq) given d(H). Entries that were degenerate
// (zero norm) receive no gradient.
void similarity_backward(const VideoSemantics& vq, const TextSemantics& pq,
                         const SimilarityCache& cache, const Tensor& d_h,
                         Tensor& d_vq, Tensor& d_pq);

}  // namespace stfm
