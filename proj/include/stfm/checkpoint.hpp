#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stfm/model.hpp"
#include "stfm/tensor.hpp"

namespace stfm {

// Versioned binary container: magic "STFM", format version u32 LE, then one
// record per tensor: name length u64 LE, name bytes, rank u64 LE, extents
// u64 LE each, payload f64 LE. Tensors are written in the canonical
// parameter order, so saving a loaded set reproduces the file byte for byte.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void checkpoint_save(const std::vector<NamedTensorRef>& tensors, const std::string& path);
void checkpoint_save(ModelParams& params, const std::string& path);

struct LoadedCheckpoint {
  std::vector<std::pair<std::string, Tensor>> tensors;
};

// Validates magic, version and internal consistency; a partial record
// raises a truncation error and nothing is returned.
LoadedCheckpoint checkpoint_load(const std::string& path);

// Congruence check against the model's expected names and shapes.
void checkpoint_assign(ModelParams& params, const LoadedCheckpoint& loaded);

}  // namespace stfm
