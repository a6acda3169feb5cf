#include "stfm/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>

#include "stfm/errors.hpp"

namespace stfm {

namespace {

// Fixed relation between the single noise knob and its three uses.
constexpr double kLatentJitterFactor = 0.5;
constexpr double kPromptJitterFactor = 0.5;

std::vector<std::uint8_t> choose_relevant(const ExperimentConfig& cfg, RngState& rng) {
  const std::size_t t = cfg.frames, r = cfg.relevant_frames;
  std::vector<std::uint8_t> mask(t, 0);
  switch (cfg.relevant_placement) {
    case Placement::prefix:
      for (std::size_t i = 0; i < r; ++i) mask[i] = 1;
      break;
    case Placement::block: {
      const std::size_t start = rng.next_index(t - r + 1);
      for (std::size_t i = 0; i < r; ++i) mask[start + i] = 1;
      break;
    }
    case Placement::random_set: {
      std::vector<std::size_t> idx(t);
      for (std::size_t i = 0; i < t; ++i) idx[i] = i;
      for (std::size_t i = 0; i < r; ++i) {
        const std::size_t j = i + rng.next_index(t - i);
        std::swap(idx[i], idx[j]);
      }
      for (std::size_t i = 0; i < r; ++i) mask[idx[i]] = 1;
      break;
    }
  }
  return mask;
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

TaskMaps make_task_maps(const ExperimentConfig& cfg) {
  const std::size_t d = cfg.embed_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  RngState rng = derive_stream(cfg.seed, "task-maps");
  TaskMaps maps;
  if (cfg.patch_channels == d) {
    // Patches live in the prompt embedding space: relevant patch features
    // are directly cosine-comparable with the prompt features.
    maps.patch_map = Tensor({d, d});
    for (std::size_t i = 0; i < d; ++i) maps.patch_map.at(i, i) = 1.0;
  } else {
    maps.patch_map = gaussian(rng, {cfg.patch_channels, d});
    scale_inplace(maps.patch_map, scale);
  }
  maps.readout = gaussian(rng, {cfg.resolved_kv_dim(), d});
  scale_inplace(maps.readout, scale);
  return maps;
}

SyntheticInstance generate_instance(const ExperimentConfig& cfg, const TaskMaps& maps,
                                    RngState& rng) {
  if (cfg.relevant_frames == 0)
    throw Error::config("generate_instance: at least one relevant frame required");
  if (cfg.relevant_frames > cfg.frames)
    throw Error::config("generate_instance: relevant-frames exceeds frames");

  const std::size_t t_count = cfg.frames;
  const std::size_t n_v = cfg.patches;
  const std::size_t c = cfg.patch_channels;
  const std::size_t d = cfg.embed_dim;
  const std::size_t n_p = cfg.prompt_tokens;
  const double sigma_patch = cfg.noise_level;
  const double sigma_latent = kLatentJitterFactor * cfg.noise_level;
  const double sigma_prompt = kPromptJitterFactor * cfg.noise_level;

  SyntheticInstance inst;
  inst.relevance = choose_relevant(cfg, rng);

  Tensor topic = gaussian(rng, {d});  // the prompt's latent

  // Per-frame latents: relevant frames share the topic up to jitter;
  // irrelevant frames draw independent latents of matching norm so no
  // unconditional statistic separates the two.
  const double bg_scale = std::sqrt(1.0 + sigma_latent * sigma_latent);
  Tensor latents({t_count, d});
  Tensor mean_relevant({d});
  for (std::size_t t = 0; t < t_count; ++t) {
    Tensor noise = gaussian(rng, {d});
    auto row = latents.row(t);
    if (inst.relevance[t]) {
      for (std::size_t j = 0; j < d; ++j) row[j] = topic.at(j) + sigma_latent * noise.at(j);
      for (std::size_t j = 0; j < d; ++j) mean_relevant.at(j) += row[j];
    } else {
      for (std::size_t j = 0; j < d; ++j) row[j] = bg_scale * noise.at(j);
    }
  }
  scale_inplace(mean_relevant, 1.0 / static_cast<double>(cfg.relevant_frames));

  inst.patches.values = Tensor({t_count, n_v, c});
  Tensor frame_latent({d});
  for (std::size_t t = 0; t < t_count; ++t) {
    auto lat = latents.row(t);
    for (std::size_t j = 0; j < d; ++j) frame_latent.at(j) = lat[j];
    Tensor base({c});
    for (std::size_t i = 0; i < c; ++i) {
      double s = 0.0;
      auto mrow = maps.patch_map.row(i);
      for (std::size_t j = 0; j < d; ++j) s += mrow[j] * frame_latent.at(j);
      base.at(i) = s;
    }
    for (std::size_t v = 0; v < n_v; ++v) {
      Tensor noise = gaussian(rng, {c});
      auto dst = inst.patches.values.row(t, v);
      for (std::size_t i = 0; i < c; ++i) dst[i] = base.at(i) + sigma_patch * noise.at(i);
    }
  }

  inst.prompt.values = Tensor({n_p, d});
  for (std::size_t i = 0; i < n_p; ++i) {
    Tensor noise = gaussian(rng, {d});
    auto dst = inst.prompt.values.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = topic.at(j) + sigma_prompt * noise.at(j);
  }

  inst.target = Tensor({cfg.resolved_kv_dim()});
  for (std::size_t i = 0; i < inst.target.size(); ++i) {
    double s = 0.0;
    auto rrow = maps.readout.row(i);
    for (std::size_t j = 0; j < d; ++j) s += rrow[j] * mean_relevant.at(j);
    inst.target.at(i) = s;
  }
  return inst;
}

SyntheticInstance generate_instance(const ExperimentConfig& cfg, RngState& rng) {
  return generate_instance(cfg, make_task_maps(cfg), rng);
}

std::vector<SyntheticInstance> generate_dataset(const ExperimentConfig& cfg,
                                                const TaskMaps& maps,
                                                std::string_view stream_label,
                                                std::size_t count) {
  RngState rng = derive_stream(cfg.seed, stream_label);
  std::vector<SyntheticInstance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_instance(cfg, maps, rng));
  return out;
}

std::uint64_t dataset_hash(std::span<const SyntheticInstance> instances) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& inst : instances) {
    hash_bytes(h, inst.relevance.data(), inst.relevance.size());
    hash_bytes(h, inst.patches.values.data(), inst.patches.values.size() * sizeof(double));
    hash_bytes(h, inst.prompt.values.data(), inst.prompt.values.size() * sizeof(double));
    hash_bytes(h, inst.target.data(), inst.target.size() * sizeof(double));
  }
  return h;
}

std::string dataset_hash_hex(std::span<const SyntheticInstance> instances) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(dataset_hash(instances)));
  return buf;
}

}  // namespace stfm
