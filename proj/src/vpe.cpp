#include "stfm/vpe.hpp"

#include <cmath>

#include "stfm/errors.hpp"

namespace stfm {

namespace {
void check_cfg(const VpeConfig& cfg) {
  if (cfg.scale <= 0.0) throw Error::config("vpe: scale must be positive");
  if (cfg.dim < 2 || cfg.dim % 2 != 0)
    throw Error::config("vpe: encoding dimension must be even and >= 2, got " +
                        std::to_string(cfg.dim));
}
}  // namespace

void vpe_encode(std::size_t pos, std::size_t frames, const VpeConfig& cfg,
                std::span<double> out) {
  check_cfg(cfg);
  if (frames < 1) throw Error::invalid_argument("vpe_encode: frame count must be >= 1");
  if (pos >= frames)
    throw Error::invalid_argument("vpe_encode: position " + std::to_string(pos) +
                                  " out of range for " + std::to_string(frames) + " frames");
  if (out.size() != cfg.dim)
    throw Error::dimension("vpe_encode: output length " + std::to_string(out.size()) +
                           " does not match encoding dimension " + std::to_string(cfg.dim));
  // pos/frames is divided first: the quotient is the correctly rounded value
  // of the exact ratio, so (k*pos, k*frames) yields bit-identical encodings.
  const double p =
      (static_cast<double>(pos) / static_cast<double>(frames)) * cfg.scale;
  const double d = static_cast<double>(cfg.dim);
  for (std::size_t i = 0; 2 * i < cfg.dim; ++i) {
    const double rate = std::pow(10000.0, (2.0 * static_cast<double>(i)) / d);
    out[2 * i] = std::sin(p / rate);
    out[2 * i + 1] = std::cos(p / rate);
  }
}

Tensor vpe_encode(std::size_t pos, std::size_t frames, const VpeConfig& cfg) {
  Tensor enc({cfg.dim});
  vpe_encode(pos, frames, cfg, enc.flat());
  return enc;
}

VideoSemantics add_temporal_encoding(const VideoSemantics& vq, const VpeConfig& cfg) {
  if (vq.embed_dim() != cfg.dim)
    throw Error::dimension("add_temporal_encoding: feature dim " +
                           std::to_string(vq.embed_dim()) +
                           " does not match encoding dimension " + std::to_string(cfg.dim));
  const std::size_t t_count = vq.frame_count();
  const std::size_t m = vq.query_count();
  VideoSemantics out{vq.values};
  Tensor enc({cfg.dim});
  for (std::size_t t = 0; t < t_count; ++t) {
    vpe_encode(t, t_count, cfg, enc.flat());
    for (std::size_t i = 0; i < m; ++i) {
      auto row = out.values.row(t, i);
      for (std::size_t j = 0; j < cfg.dim; ++j) row[j] += enc.at(j);
    }
  }
  return out;
}

}  // namespace stfm
