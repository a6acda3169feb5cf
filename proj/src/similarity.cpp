#include "stfm/similarity.hpp"

#include <cmath>

#include "stfm/errors.hpp"

namespace stfm {

double cosine01(std::span<const double> u, std::span<const double> v, bool* degenerate) {
  if (u.size() != v.size())
    throw Error::dimension("cosine01: vector lengths disagree: " +
                           std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (degenerate) *degenerate = false;
  if (uu == 0.0 || vv == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.5;
  }
  double s = (dot / (std::sqrt(uu) * std::sqrt(vv)) + 1.0) * 0.5;
  if (s < 0.0) s = 0.0;
  if (s > 1.0) s = 1.0;
  return s;
}

SimilarityMatrix similarity_matrix(const VideoSemantics& vq, const TextSemantics& pq,
                                   SimilarityCache* cache, std::size_t* degenerate_count) {
  const std::size_t t_count = vq.frame_count();
  const std::size_t m = vq.query_count();
  if (pq.values.rank() != 2 || pq.query_count() != m)
    throw Error::dimension("similarity_matrix: query counts disagree: " +
                           vq.values.shape_str() + " vs " + pq.values.shape_str());
  if (pq.embed_dim() != vq.embed_dim())
    throw Error::dimension("similarity_matrix: feature dims disagree: " +
                           vq.values.shape_str() + " vs " + pq.values.shape_str());

  SimilarityMatrix h{Tensor({t_count, m})};
  if (cache) {
    cache->norm_u = Tensor({t_count, m});
    cache->norm_v = Tensor({m});
    cache->dot = Tensor({t_count, m});
  }
  if (degenerate_count) *degenerate_count = 0;

  for (std::size_t i = 0; i < m; ++i) {
    auto v = pq.values.row(i);
    double vv = 0.0;
    for (double x : v) vv += x * x;
    const double nv = std::sqrt(vv);
    if (cache) cache->norm_v.at(i) = nv;
    for (std::size_t t = 0; t < t_count; ++t) {
      auto u = vq.values.row(t, i);
      double dot = 0.0, uu = 0.0;
      for (std::size_t j = 0; j < u.size(); ++j) {
        dot += u[j] * v[j];
        uu += u[j] * u[j];
      }
      const double nu = std::sqrt(uu);
      if (cache) {
        cache->norm_u.at(t, i) = nu;
        cache->dot.at(t, i) = dot;
      }
      if (nu == 0.0 || nv == 0.0) {
        h.values.at(t, i) = 0.5;
        if (degenerate_count) ++*degenerate_count;
        continue;
      }
      double s = (dot / (nu * nv) + 1.0) * 0.5;
      if (s < 0.0) s = 0.0;
      if (s > 1.0) s = 1.0;
      h.values.at(t, i) = s;
    }
  }
  return h;
}

void similarity_backward(const VideoSemantics& vq, const TextSemantics& pq,
                         const SimilarityCache& cache, const Tensor& d_h,
                         Tensor& d_vq, Tensor& d_pq) {
  const std::size_t t_count = vq.frame_count();
  const std::size_t m = vq.query_count();
  const std::size_t d = vq.embed_dim();
  for (std::size_t i = 0; i < m; ++i) {
    const double nv = cache.norm_v.at(i);
    if (nv == 0.0) continue;
    auto v = pq.values.row(i);
    auto dv = d_pq.row(i);
    for (std::size_t t = 0; t < t_count; ++t) {
      const double nu = cache.norm_u.at(t, i);
      if (nu == 0.0) continue;
      const double g = 0.5 * d_h.at(t, i);
      if (g == 0.0) continue;
      const double dot = cache.dot.at(t, i);
      const double inv = 1.0 / (nu * nv);
      const double cosv = dot * inv;
      auto u = vq.values.row(t, i);
      auto du = d_vq.row(t, i);
      for (std::size_t j = 0; j < d; ++j) {
        du[j] += g * (v[j] * inv - cosv * u[j] / (nu * nu));
        dv[j] += g * (u[j] * inv - cosv * v[j] / (nv * nv));
      }
    }
  }
}

}  // namespace stfm
