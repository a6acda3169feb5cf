#pragma once

#include "stfm/qformer.hpp"
#include "stfm/tensor.hpp"

namespace stfm {

// Sinusoidal frame encoding evaluated at the rescaled position
// pos * (scale / frames), so the encoding depends on the relative position
// within the clip rather than the raw frame index.
struct VpeConfig {
  double scale = 500.0;  // S
  std::size_t dim = 32;  // must be even and >= 2
};

void vpe_encode(std::size_t pos, std::size_t frames, const VpeConfig& cfg,
                std::span<double> out);
Tensor vpe_encode(std::size_t pos, std::size_t frames, const VpeConfig& cfg);

// Adds the frame encoding to every query slot of the frame. cfg.dim must
// equal the feature dimension of vq.
VideoSemantics add_temporal_encoding(const VideoSemantics& vq, const VpeConfig& cfg);

}  // namespace stfm
