#include "stfm/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>

#include "stfm/errors.hpp"

namespace stfm {

namespace {

std::size_t parse_size(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw Error::config("config: '" + std::string(key) + "' expects a non-negative integer, got '" +
                        std::string(value) + "'");
  return out;
}

std::uint64_t parse_u64(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw Error::config("config: '" + std::string(key) + "' expects a non-negative integer, got '" +
                        std::string(value) + "'");
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    std::size_t pos = 0;
    double out = std::stod(std::string(value), &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw Error::config("config: '" + std::string(key) + "' expects a number, got '" +
                        std::string(value) + "'");
  }
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw Error::config("config: '" + std::string(key) + "' expects a boolean, got '" +
                      std::string(value) + "'");
}

Placement parse_placement(std::string_view value) {
  if (value == "random") return Placement::random_set;
  if (value == "prefix") return Placement::prefix;
  if (value == "block") return Placement::block;
  throw Error::config("config: relevant-placement must be random|prefix|block, got '" +
                      std::string(value) + "'");
}

OptimizerChoice parse_optimizer(std::string_view value) {
  if (value == "adamw") return OptimizerChoice::adamw;
  if (value == "sgd") return OptimizerChoice::sgd;
  throw Error::config("config: optimizer must be adamw|sgd, got '" + std::string(value) + "'");
}

}  // namespace

const char* placement_name(Placement p) {
  switch (p) {
    case Placement::random_set: return "random";
    case Placement::prefix: return "prefix";
    case Placement::block: return "block";
  }
  return "random";
}

const char* optimizer_name(OptimizerChoice o) {
  return o == OptimizerChoice::adamw ? "adamw" : "sgd";
}

void ExperimentConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw Error::config(std::string("config: ") + name + " must be positive");
  };
  positive(frames, "frames");
  positive(qformer_queries, "qformer-queries");
  positive(video_tokens, "video-tokens");
  positive(embed_dim, "embed-dim");
  positive(patches, "patches");
  positive(patch_channels, "patch-channels");
  positive(prompt_tokens, "prompt-tokens");
  positive(resolved_kv_dim(), "kv-dim");
  positive(batch_size, "batch-size");
  positive(train_instances, "train-instances");
  positive(eval_instances, "eval-instances");

  if (alpha < 0.0) throw Error::config("config: alpha must be >= 0");
  if (beta < 0.0) throw Error::config("config: beta must be >= 0");
  if (vpe_scale <= 0.0) throw Error::config("config: vpe-scale must be positive");
  if (h_floor <= 0.0) throw Error::config("config: h-floor must be positive");
  if (noise_level < 0.0) throw Error::config("config: noise-level must be >= 0");
  if (learning_rate < 0.0) throw Error::config("config: learning-rate must be >= 0");
  if (weight_decay < 0.0) throw Error::config("config: weight-decay must be >= 0");
  if (warmup_lr < 0.0) throw Error::config("config: warmup-lr must be >= 0");

  if (relevant_frames == 0)
    throw Error::config("config: relevant-frames must be >= 1");
  if (relevant_frames > frames)
    throw Error::config("config: relevant-frames (" + std::to_string(relevant_frames) +
                        ") exceeds frames (" + std::to_string(frames) + ")");
  if (vpe && embed_dim % 2 != 0)
    throw Error::config("config: embed-dim must be even when vpe is on");
  if (share_qformers && patch_channels != embed_dim)
    throw Error::config("config: share-qformers requires patch-channels == embed-dim");
  if (attn_heads != 1)
    throw Error::config("config: attn-heads other than 1 is not supported by this build");
  if (qformer_blocks != 1)
    throw Error::config("config: qformer-blocks other than 1 is not supported by this build");
  if (stfm_depth != 1)
    throw Error::config("config: stfm-depth other than 1 is not supported by this build");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["frames"] = frames;
  j["qformer-queries"] = qformer_queries;
  j["video-tokens"] = video_tokens;
  j["embed-dim"] = embed_dim;
  j["kv-dim"] = kv_dim;
  j["patches"] = patches;
  j["patch-channels"] = patch_channels;
  j["prompt-tokens"] = prompt_tokens;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["vpe-scale"] = vpe_scale;
  j["h-floor"] = h_floor;
  j["relevant-frames"] = relevant_frames;
  j["relevant-placement"] = placement_name(relevant_placement);
  j["noise-level"] = noise_level;
  j["epochs"] = epochs;
  j["batch-size"] = batch_size;
  j["train-instances"] = train_instances;
  j["eval-instances"] = eval_instances;
  j["learning-rate"] = learning_rate;
  j["weight-decay"] = weight_decay;
  j["warmup-steps"] = warmup_steps;
  j["warmup-lr"] = warmup_lr;
  j["optimizer"] = optimizer_name(optimizer);
  j["seed"] = seed;
  j["vpe"] = vpe;
  j["pbtf"] = pbtf;
  j["similarity-after-vpe"] = similarity_after_vpe;
  j["share-qformers"] = share_qformers;
  j["attn-heads"] = attn_heads;
  j["qformer-blocks"] = qformer_blocks;
  j["stfm-depth"] = stfm_depth;
  return j;
}

void ExperimentConfig::set_field(std::string_view key, std::string_view value) {
  if (key == "frames") frames = parse_size(key, value);
  else if (key == "qformer-queries") qformer_queries = parse_size(key, value);
  else if (key == "video-tokens") video_tokens = parse_size(key, value);
  else if (key == "embed-dim") embed_dim = parse_size(key, value);
  else if (key == "kv-dim") kv_dim = parse_size(key, value);
  else if (key == "patches") patches = parse_size(key, value);
  else if (key == "patch-channels") patch_channels = parse_size(key, value);
  else if (key == "prompt-tokens") prompt_tokens = parse_size(key, value);
  else if (key == "alpha") alpha = parse_double(key, value);
  else if (key == "beta") beta = parse_double(key, value);
  else if (key == "vpe-scale") vpe_scale = parse_double(key, value);
  else if (key == "h-floor") h_floor = parse_double(key, value);
  else if (key == "relevant-frames") relevant_frames = parse_size(key, value);
  else if (key == "relevant-placement") relevant_placement = parse_placement(value);
  else if (key == "noise-level") noise_level = parse_double(key, value);
  else if (key == "epochs") epochs = parse_size(key, value);
  else if (key == "batch-size") batch_size = parse_size(key, value);
  else if (key == "train-instances") train_instances = parse_size(key, value);
  else if (key == "eval-instances") eval_instances = parse_size(key, value);
  else if (key == "learning-rate") learning_rate = parse_double(key, value);
  else if (key == "weight-decay") weight_decay = parse_double(key, value);
  else if (key == "warmup-steps") warmup_steps = parse_size(key, value);
  else if (key == "warmup-lr") warmup_lr = parse_double(key, value);
  else if (key == "optimizer") optimizer = parse_optimizer(value);
  else if (key == "seed") seed = parse_u64(key, value);
  else if (key == "vpe") vpe = parse_bool(key, value);
  else if (key == "pbtf") pbtf = parse_bool(key, value);
  else if (key == "similarity-after-vpe") similarity_after_vpe = parse_bool(key, value);
  else if (key == "share-qformers") share_qformers = parse_bool(key, value);
  else if (key == "attn-heads") attn_heads = parse_size(key, value);
  else if (key == "qformer-blocks") qformer_blocks = parse_size(key, value);
  else if (key == "stfm-depth") stfm_depth = parse_size(key, value);
  else
    throw Error::config("config: unknown key '" + std::string(key) + "'");
}

std::string ExperimentConfig::get_field(std::string_view key) const {
  nlohmann::json j = to_json();
  auto it = j.find(key);
  if (it == j.end())
    throw Error::config("config: unknown key '" + std::string(key) + "'");
  if (it->is_string()) return it->get<std::string>();
  return it->dump();
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error::config("config: expected a JSON object");
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) {
    std::string text;
    if (value.is_string()) text = value.get<std::string>();
    else text = value.dump();
    cfg.set_field(key, text);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error::io("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error::config("config: invalid JSON in '" + path + "': " + e.what());
  }
  return from_json(j);
}

}  // namespace stfm
