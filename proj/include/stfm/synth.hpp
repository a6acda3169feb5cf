#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stfm/config.hpp"
#include "stfm/qformer.hpp"
#include "stfm/tensor.hpp"

namespace stfm {

// Planted-relevance instance: every frame carries a latent vector mapped
// into patch space; relevant frames share the prompt's latent (plus jitter)
// while irrelevant frames draw independent latents. The target is a fixed
// linear readout of the mean relevant latent, so solving the task requires
// attending to the right frames.
struct SyntheticInstance {
  PatchFeatures patches;               // T x N_v x C
  PromptFeatures prompt;               // N_p x D
  std::vector<std::uint8_t> relevance; // length T, 1 = relevant
  Tensor target;                       // d
};

// Experiment-level constants shared by all instances of a run, derived
// deterministically from the config seed.
struct TaskMaps {
  Tensor patch_map;  // C x D latent -> patch feature
  Tensor readout;    // d x D latent -> target
};

TaskMaps make_task_maps(const ExperimentConfig& cfg);

SyntheticInstance generate_instance(const ExperimentConfig& cfg, const TaskMaps& maps,
                                    RngState& rng);
// Convenience overload deriving the maps from the config.
SyntheticInstance generate_instance(const ExperimentConfig& cfg, RngState& rng);

std::vector<SyntheticInstance> generate_dataset(const ExperimentConfig& cfg,
                                                const TaskMaps& maps,
                                                std::string_view stream_label,
                                                std::size_t count);

// FNV-1a over all instance bytes; used to prove that sweep cells trained
// on identical data.
std::uint64_t dataset_hash(std::span<const SyntheticInstance> instances);
std::string dataset_hash_hex(std::span<const SyntheticInstance> instances);

}  // namespace stfm
