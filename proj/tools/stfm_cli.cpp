// Command-line driver for the filtering library. Talks to the core only
// through the C interface in stfm.h.

#include <cstdio>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stfm.h"

namespace {

struct ConfigOption {
  const char* key;
  const char* help;
};

// One CLI flag per configuration key; values are forwarded verbatim and
// parsed by the library.
const std::vector<ConfigOption> kConfigOptions = {
    {"frames", "number of sampled frames per clip"},
    {"qformer-queries", "compressor queries per frame and per prompt"},
    {"video-tokens", "filtered-token budget (32 or 16 presets)"},
    {"embed-dim", "semantic embedding width"},
    {"kv-dim", "key/value width; 0 tracks embed-dim"},
    {"patches", "synthetic patches per frame"},
    {"patch-channels", "synthetic patch feature width"},
    {"prompt-tokens", "synthetic prompt tokens"},
    {"alpha", "similarity-bias weight in the attention logits"},
    {"beta", "similarity power on the attention values"},
    {"vpe-scale", "scale constant of the temporal encoding"},
    {"h-floor", "clamp floor applied to similarities"},
    {"relevant-frames", "planted relevant frames per instance"},
    {"relevant-placement", "relevant-frame placement: random|prefix|block"},
    {"noise-level", "synthetic noise level"},
    {"epochs", "training epochs"},
    {"batch-size", "minibatch size"},
    {"train-instances", "training instances"},
    {"eval-instances", "held-out instances"},
    {"learning-rate", "peak learning rate"},
    {"weight-decay", "decoupled weight decay"},
    {"warmup-steps", "linear warm-up steps"},
    {"warmup-lr", "starting warm-up learning rate"},
    {"optimizer", "adamw|sgd"},
    {"seed", "master seed for data, init and shuffling"},
    {"vpe", "use the sinusoidal temporal encoding (true/false)"},
    {"pbtf", "fuse text into the queries (true/false)"},
    {"similarity-after-vpe", "compute similarities after the encoding"},
    {"share-qformers", "share compressor weights between branches"},
    {"attn-heads", "attention heads (this build supports 1)"},
    {"qformer-blocks", "compressor blocks (this build supports 1)"},
    {"stfm-depth", "filtering stages (this build supports 1)"},
};

void print_error_line(const char* code, const std::string& message) {
  nlohmann::json j;
  j["code"] = code;
  j["message"] = message;
  std::fprintf(stderr, "error: %s\n", j.dump().c_str());
}

int fail(stfm_status status) {
  print_error_line(stfm_status_name(status), stfm_last_error());
  return 1;
}

using ConfigPtr = std::unique_ptr<stfm_config, decltype(&stfm_config_free)>;
using ResultPtr = std::unique_ptr<stfm_result, decltype(&stfm_result_free)>;

struct CommonArgs {
  std::string config_file;
  std::string out_dir = ".";
  std::vector<std::pair<std::string, std::string>> overrides;
};

void register_common(CLI::App* cmd, CommonArgs& args, bool with_out_dir = true) {
  cmd->add_option("--config", args.config_file, "JSON config file with the same keys");
  if (with_out_dir) cmd->add_option("--out-dir", args.out_dir, "output directory");
  for (const auto& opt : kConfigOptions) {
    const std::string flag = "--" + std::string(opt.key);
    cmd->add_option_function<std::string>(
            flag,
            [&args, key = std::string(opt.key)](const std::string& value) {
              args.overrides.emplace_back(key, value);
            },
            opt.help)
        ->take_last();
  }
}

ConfigPtr build_config(const CommonArgs& args, stfm_status& status) {
  ConfigPtr cfg(stfm_config_new(), &stfm_config_free);
  status = STFM_OK;
  if (!args.config_file.empty()) {
    status = stfm_config_load_file(cfg.get(), args.config_file.c_str());
    if (status != STFM_OK) return cfg;
  }
  for (const auto& [key, value] : args.overrides) {
    status = stfm_config_set(cfg.get(), key.c_str(), value.c_str());
    if (status != STFM_OK) return cfg;
  }
  return cfg;
}

void print_summary(const char* report_text) {
  const auto j = nlohmann::json::parse(report_text, nullptr, false);
  if (j.is_discarded()) return;
  if (j.contains("final")) {
    std::printf("final train loss:     %.6g\n", j["final"]["train-loss"].get<double>());
    std::printf("final eval mse:       %.6g\n", j["final"]["eval-mse"].get<double>());
    std::printf("final attention mass: %.4f (uniform %.4f)\n",
                j["final"]["attention-mass"].get<double>(),
                j["data"]["uniform-mass"].get<double>());
  }
  if (j.contains("cells"))
    for (const auto& cell : j["cells"]) {
      const std::string name = cell.contains("name")
                                   ? cell["name"].get<std::string>()
                                   : "tokens-" + cell["video-tokens"].dump();
      std::printf("%-28s loss %.6g  mass %.4f\n", name.c_str(),
                  cell["final"]["eval-mse"].get<double>(),
                  cell["final"]["attention-mass"].get<double>());
    }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"text-guided video token filtering: synthetic experiment runner"};
  app.require_subcommand(1);

  CommonArgs train_args, ablate_args, sweep_args, heatmap_args, gradcheck_args;
  std::string checkpoint_path, out_prefix;

  CLI::App* train = app.add_subcommand("train", "train the filtering stack");
  register_common(train, train_args);
  CLI::App* ablate = app.add_subcommand("ablate", "run the alpha/beta/pbtf/vpe grid");
  register_common(ablate, ablate_args);
  CLI::App* sweep =
      app.add_subcommand("sweep-tokens", "compare the 32- and 16-token budgets");
  register_common(sweep, sweep_args);
  CLI::App* heatmaps =
      app.add_subcommand("dump-heatmaps", "write similarity/attention CSV and PGM files");
  register_common(heatmaps, heatmap_args);
  heatmaps->add_option("--checkpoint", checkpoint_path, "trained checkpoint to visualize");
  heatmaps->add_option("--out-prefix", out_prefix, "path prefix for the dumped files");
  CLI::App* gradcheck =
      app.add_subcommand("gradcheck", "verify analytic gradients against finite differences");
  register_common(gradcheck, gradcheck_args, false);

  CLI11_PARSE(app, argc, argv);

  stfm_status status = STFM_OK;
  ResultPtr result(nullptr, &stfm_result_free);

  if (train->parsed()) {
    ConfigPtr cfg = build_config(train_args, status);
    if (status != STFM_OK) return fail(status);
    stfm_result* raw = nullptr;
    status = stfm_run_train(cfg.get(), train_args.out_dir.c_str(), &raw);
    if (status != STFM_OK) return fail(status);
    result.reset(raw);
    print_summary(stfm_result_report(result.get()));
    std::printf("wall clock: %.2fs\n", stfm_result_wall_clock_seconds(result.get()));
    std::printf("report: %s/report.json\ncheckpoint: %s/checkpoint.stfm\n",
                train_args.out_dir.c_str(), train_args.out_dir.c_str());
  } else if (ablate->parsed()) {
    ConfigPtr cfg = build_config(ablate_args, status);
    if (status != STFM_OK) return fail(status);
    stfm_result* raw = nullptr;
    status = stfm_run_ablation(cfg.get(), ablate_args.out_dir.c_str(), &raw);
    if (status != STFM_OK) return fail(status);
    result.reset(raw);
    print_summary(stfm_result_report(result.get()));
    std::printf("wall clock: %.2fs\n", stfm_result_wall_clock_seconds(result.get()));
    std::printf("report: %s/report.json\n", ablate_args.out_dir.c_str());
  } else if (sweep->parsed()) {
    ConfigPtr cfg = build_config(sweep_args, status);
    if (status != STFM_OK) return fail(status);
    stfm_result* raw = nullptr;
    status = stfm_run_token_sweep(cfg.get(), sweep_args.out_dir.c_str(), &raw);
    if (status != STFM_OK) return fail(status);
    result.reset(raw);
    print_summary(stfm_result_report(result.get()));
    std::printf("wall clock: %.2fs\n", stfm_result_wall_clock_seconds(result.get()));
    std::printf("report: %s/report.json\n", sweep_args.out_dir.c_str());
  } else if (heatmaps->parsed()) {
    ConfigPtr cfg = build_config(heatmap_args, status);
    if (status != STFM_OK) return fail(status);
    if (out_prefix.empty()) out_prefix = heatmap_args.out_dir + "/heatmap";
    stfm_result* raw = nullptr;
    status = stfm_run_heatmap_dump(cfg.get(),
                                   checkpoint_path.empty() ? nullptr : checkpoint_path.c_str(),
                                   out_prefix.c_str(), &raw);
    if (status != STFM_OK) return fail(status);
    result.reset(raw);
    const auto j = nlohmann::json::parse(stfm_result_report(result.get()));
    for (const auto& f : j["files"]) std::printf("wrote %s\n", f.get<std::string>().c_str());
  } else if (gradcheck->parsed()) {
    ConfigPtr cfg = build_config(gradcheck_args, status);
    if (status != STFM_OK) return fail(status);
    stfm_result* raw = nullptr;
    status = stfm_run_gradcheck(cfg.get(), &raw);
    if (status != STFM_OK) return fail(status);
    result.reset(raw);
    const auto j = nlohmann::json::parse(stfm_result_report(result.get()));
    for (const auto& [name, err] : j["tensors"].items())
      std::printf("%-24s max rel err %.3e\n", name.c_str(), err.get<double>());
    const bool pass = j["pass"].get<bool>();
    std::printf("gradcheck %s (worst %.3e, tolerance %.1e)\n", pass ? "PASS" : "FAIL",
                j["max-rel-err"].get<double>(), j["tolerance"].get<double>());
    if (!pass) {
      print_error_line("gradcheck", "analytic gradients exceed tolerance");
      return 1;
    }
  }
  return 0;
}
