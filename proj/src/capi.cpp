#include "stfm.h"

#include <cstring>
#include <filesystem>
#include <string>

#include "stfm/checkpoint.hpp"
#include "stfm/config.hpp"
#include "stfm/errors.hpp"
#include "stfm/gradcheck.hpp"
#include "stfm/harness.hpp"
#include "stfm/heatmap.hpp"
#include "stfm/model.hpp"

struct stfm_config {
  stfm::ExperimentConfig cfg;
};

struct stfm_result {
  std::string report;
  double wall_clock = 0.0;
  bool passed = true;
};

namespace {

thread_local std::string g_last_error;

stfm_status status_from(stfm::ErrorKind kind) {
  using stfm::ErrorKind;
  switch (kind) {
    case ErrorKind::invalid_argument: return STFM_ERR_INVALID_ARGUMENT;
    case ErrorKind::dimension: return STFM_ERR_DIMENSION;
    case ErrorKind::config: return STFM_ERR_CONFIG;
    case ErrorKind::io: return STFM_ERR_IO;
    case ErrorKind::checkpoint_format: return STFM_ERR_CHECKPOINT_FORMAT;
    case ErrorKind::checkpoint_version: return STFM_ERR_CHECKPOINT_VERSION;
    case ErrorKind::checkpoint_truncated: return STFM_ERR_CHECKPOINT_TRUNCATED;
    case ErrorKind::checkpoint_shape: return STFM_ERR_CHECKPOINT_SHAPE;
    case ErrorKind::diverged: return STFM_ERR_DIVERGED;
  }
  return STFM_ERR_INTERNAL;
}

template <typename Fn>
stfm_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return STFM_OK;
  } catch (const stfm::Error& e) {
    g_last_error = e.what();
    return status_from(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return STFM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return STFM_ERR_INTERNAL;
  }
}

stfm_status require(bool ok, const char* message) {
  if (ok) return STFM_OK;
  g_last_error = message;
  return STFM_ERR_INVALID_ARGUMENT;
}

stfm_result* make_result(std::string report, double wall_clock, bool passed = true) {
  auto* r = new stfm_result;
  r->report = std::move(report);
  r->wall_clock = wall_clock;
  r->passed = passed;
  return r;
}

void write_report_file(const stfm::Report& report, const char* out_dir) {
  if (!out_dir) return;
  std::filesystem::create_directories(out_dir);
  report.write(std::string(out_dir) + "/report.json");
}

}  // namespace

extern "C" {

const char* stfm_version(void) { return "0.1.0"; }

const char* stfm_status_name(stfm_status status) {
  switch (status) {
    case STFM_OK: return "ok";
    case STFM_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case STFM_ERR_DIMENSION: return "dimension";
    case STFM_ERR_CONFIG: return "config";
    case STFM_ERR_IO: return "io";
    case STFM_ERR_CHECKPOINT_FORMAT: return "checkpoint-format";
    case STFM_ERR_CHECKPOINT_VERSION: return "checkpoint-version";
    case STFM_ERR_CHECKPOINT_TRUNCATED: return "checkpoint-truncated";
    case STFM_ERR_CHECKPOINT_SHAPE: return "checkpoint-shape";
    case STFM_ERR_DIVERGED: return "diverged";
    case STFM_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* stfm_last_error(void) { return g_last_error.c_str(); }

stfm_config* stfm_config_new(void) { return new stfm_config; }

void stfm_config_free(stfm_config* cfg) { delete cfg; }

stfm_status stfm_config_set(stfm_config* cfg, const char* key, const char* value) {
  if (auto s = require(cfg && key && value, "stfm_config_set: null argument"); s != STFM_OK)
    return s;
  return guarded([&] { cfg->cfg.set_field(key, value); });
}

stfm_status stfm_config_get(const stfm_config* cfg, const char* key, char* buffer,
                            size_t capacity) {
  if (auto s = require(cfg && key && buffer, "stfm_config_get: null argument"); s != STFM_OK)
    return s;
  return guarded([&] {
    const std::string value = cfg->cfg.get_field(key);
    if (value.size() + 1 > capacity)
      throw stfm::Error::invalid_argument("stfm_config_get: buffer too small for '" +
                                          value + "'");
    std::memcpy(buffer, value.c_str(), value.size() + 1);
  });
}

stfm_status stfm_config_load_file(stfm_config* cfg, const char* path) {
  if (auto s = require(cfg && path, "stfm_config_load_file: null argument"); s != STFM_OK)
    return s;
  return guarded([&] { cfg->cfg = stfm::ExperimentConfig::from_file(path); });
}

stfm_status stfm_run_train(const stfm_config* cfg, const char* out_dir, stfm_result** out) {
  if (auto s = require(cfg && out, "stfm_run_train: null argument"); s != STFM_OK) return s;
  return guarded([&] {
    stfm::TrainResult result = stfm::train_experiment(cfg->cfg);
    write_report_file(result.report, out_dir);
    if (out_dir)
      stfm::checkpoint_save(result.params, std::string(out_dir) + "/checkpoint.stfm");
    *out = make_result(result.report.canonical_text(), result.report.wall_clock_seconds);
  });
}

stfm_status stfm_run_ablation(const stfm_config* cfg, const char* out_dir,
                              stfm_result** out) {
  if (auto s = require(cfg && out, "stfm_run_ablation: null argument"); s != STFM_OK)
    return s;
  return guarded([&] {
    stfm::Report report = stfm::run_ablation_grid(cfg->cfg);
    write_report_file(report, out_dir);
    *out = make_result(report.canonical_text(), report.wall_clock_seconds);
  });
}

stfm_status stfm_run_token_sweep(const stfm_config* cfg, const char* out_dir,
                                 stfm_result** out) {
  if (auto s = require(cfg && out, "stfm_run_token_sweep: null argument"); s != STFM_OK)
    return s;
  return guarded([&] {
    stfm::Report report = stfm::token_budget_sweep(cfg->cfg);
    write_report_file(report, out_dir);
    *out = make_result(report.canonical_text(), report.wall_clock_seconds);
  });
}

stfm_status stfm_run_gradcheck(const stfm_config* cfg, stfm_result** out) {
  if (auto s = require(cfg && out, "stfm_run_gradcheck: null argument"); s != STFM_OK)
    return s;
  return guarded([&] {
    stfm::GradCheckResult r = stfm::run_gradcheck(cfg->cfg);
    nlohmann::json body;
    body["kind"] = "gradcheck";
    body["schema"] = 1;
    body["config"] = cfg->cfg.to_json();
    body["step"] = r.step;
    body["tolerance"] = r.tolerance;
    body["coords-per-tensor"] = r.coords_per_tensor;
    body["tensors"] = r.max_rel_err;
    body["max-rel-err"] = r.worst;
    body["worst-tensor"] = r.worst_tensor;
    body["pass"] = r.pass;
    *out = make_result(body.dump(2) + "\n", 0.0, r.pass);
  });
}

stfm_status stfm_run_heatmap_dump(const stfm_config* cfg, const char* checkpoint_path,
                                  const char* out_prefix, stfm_result** out) {
  if (auto s = require(cfg && out_prefix && out, "stfm_run_heatmap_dump: null argument");
      s != STFM_OK)
    return s;
  return guarded([&] {
    const stfm::ExperimentConfig& c = cfg->cfg;
    c.validate();
    stfm::ModelParams params = stfm::init_model_params(c);
    if (checkpoint_path)
      stfm::checkpoint_assign(params, stfm::checkpoint_load(checkpoint_path));
    stfm::TaskMaps maps = stfm::make_task_maps(c);
    stfm::RngState rng = stfm::derive_stream(c.seed, "eval-data");
    stfm::SyntheticInstance inst = stfm::generate_instance(c, maps, rng);
    stfm::ForwardResult r = stfm::model_forward(inst, params, c);
    auto paths = stfm::dump_heatmaps(r.out.h, r.out.sam, out_prefix);

    nlohmann::json body;
    body["kind"] = "heatmap-dump";
    body["schema"] = 1;
    body["config"] = c.to_json();
    body["checkpoint"] = checkpoint_path ? nlohmann::json(checkpoint_path)
                                         : nlohmann::json(nullptr);
    body["files"] = paths;
    *out = make_result(body.dump(2) + "\n", 0.0);
  });
}

const char* stfm_result_report(const stfm_result* result) {
  return result ? result->report.c_str() : "";
}

double stfm_result_wall_clock_seconds(const stfm_result* result) {
  return result ? result->wall_clock : 0.0;
}

int stfm_result_passed(const stfm_result* result) {
  return result && result->passed ? 1 : 0;
}

void stfm_result_free(stfm_result* result) { delete result; }

}  // extern "C"
