#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

namespace stfm {

enum class Placement { random_set, prefix, block };
enum class OptimizerChoice { adamw, sgd };

// Full experiment description. JSON keys and CLI flags use the kebab-case
// form of the field names (see field_docs()).
struct ExperimentConfig {
  std::size_t frames = 15;           // T
  std::size_t qformer_queries = 32;  // M, shared by both compressors
  std::size_t video_tokens = 32;     // N, filtered-token budget
  std::size_t embed_dim = 32;        // D
  std::size_t kv_dim = 0;            // d; 0 tracks embed-dim
  std::size_t patches = 12;          // N_v per frame
  std::size_t patch_channels = 32;   // C; equal to embed-dim, patches share the prompt space
  std::size_t prompt_tokens = 6;     // N_p

  double alpha = 1.0;
  double beta = 0.0;
  double vpe_scale = 500.0;  // S
  double h_floor = 1e-6;

  std::size_t relevant_frames = 3;
  Placement relevant_placement = Placement::random_set;
  double noise_level = 0.25;

  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::size_t train_instances = 512;
  std::size_t eval_instances = 64;
  double learning_rate = 1e-3;
  double weight_decay = 0.05;
  std::size_t warmup_steps = 20;
  double warmup_lr = 1e-6;
  OptimizerChoice optimizer = OptimizerChoice::adamw;

  std::uint64_t seed = 42;
  bool vpe = true;
  bool pbtf = true;
  bool similarity_after_vpe = false;
  bool share_qformers = false;

  // Architecture knobs reserved for extension; this build validates 1.
  std::size_t attn_heads = 1;
  std::size_t qformer_blocks = 1;
  std::size_t stfm_depth = 1;

  std::size_t resolved_kv_dim() const { return kv_dim == 0 ? embed_dim : kv_dim; }

  void validate() const;  // throws Error::config

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);

  // Sets one field from its kebab-case key and a string value.
  void set_field(std::string_view key, std::string_view value);
  std::string get_field(std::string_view key) const;
};

const char* placement_name(Placement p);
const char* optimizer_name(OptimizerChoice o);

}  // namespace stfm
