#include "stfm/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "stfm/errors.hpp"
#include "stfm/optimizer.hpp"

namespace stfm {

namespace {

constexpr double kDivergenceLimit = 1e6;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

nlohmann::json eval_json(const EvalStats& s, double train_loss) {
  nlohmann::json j;
  j["train-loss"] = train_loss;
  j["eval-mse"] = s.mse;
  j["attention-mass"] = s.mass;
  return j;
}

double mean_train_loss(const ModelParams& params, const ExperimentConfig& cfg,
                       std::span<const SyntheticInstance> instances) {
  double sum = 0.0;
  for (const auto& inst : instances) sum += model_forward(inst, params, cfg).loss;
  return sum / static_cast<double>(instances.size());
}

}  // namespace

double attention_mass(const AttentionMap& sam, std::span<const std::uint8_t> mask,
                      std::size_t queries_per_frame) {
  const std::size_t tokens = sam.token_count();
  if (mask.size() * queries_per_frame != tokens)
    throw Error::dimension("attention_mass: mask length " + std::to_string(mask.size()) +
                           " x " + std::to_string(queries_per_frame) +
                           " queries does not cover " + std::to_string(tokens) + " tokens");
  double total = 0.0;
  for (std::size_t j = 0; j < sam.query_count(); ++j) {
    auto row = sam.values.row(j);
    double mass = 0.0;
    for (std::size_t t = 0; t < mask.size(); ++t) {
      if (!mask[t]) continue;
      const std::size_t base = t * queries_per_frame;
      for (std::size_t i = 0; i < queries_per_frame; ++i) mass += row[base + i];
    }
    total += mass;
  }
  return total / static_cast<double>(sam.query_count());
}

EvalStats evaluate(const ModelParams& params, const ExperimentConfig& cfg,
                   std::span<const SyntheticInstance> instances) {
  EvalStats stats;
  for (const auto& inst : instances) {
    ForwardResult r = model_forward(inst, params, cfg);
    stats.mse += r.loss;
    stats.mass += attention_mass(r.out.sam, inst.relevance, cfg.qformer_queries);
  }
  const double n = static_cast<double>(instances.size());
  stats.mse /= n;
  stats.mass /= n;
  return stats;
}

TrainResult train_experiment(const ExperimentConfig& cfg) {
  return train_experiment(cfg, init_model_params(cfg));
}

TrainResult train_experiment(const ExperimentConfig& cfg, ModelParams params) {
  cfg.validate();
  const auto start = Clock::now();

  TaskMaps maps = make_task_maps(cfg);
  std::vector<SyntheticInstance> train_set =
      generate_dataset(cfg, maps, "data", cfg.train_instances);
  std::vector<SyntheticInstance> eval_set =
      generate_dataset(cfg, maps, "eval-data", cfg.eval_instances);

  auto param_view = named_tensors(params);
  OptimizerState opt(optimizer_config(cfg), param_view);

  const double initial_train_loss = mean_train_loss(params, cfg, train_set);
  const EvalStats initial_eval = evaluate(params, cfg, eval_set);

  std::vector<double> epoch_losses;
  std::vector<double> epoch_masses;
  epoch_losses.reserve(cfg.epochs);
  epoch_masses.reserve(cfg.epochs);
  RngState shuffle_rng = derive_stream(cfg.seed, "shuffle");
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  ModelGrads grads = zero_model_grads(params);
  auto grad_view = named_tensors(grads);
  ModelCache cache;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = shuffle_rng.next_index(i);
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      const double inv_batch = 1.0 / static_cast<double>(end - begin);
      for (auto& ref : grad_view)
        for (double& v : ref.tensor->flat()) v = 0.0;
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const SyntheticInstance& inst = train_set[order[k]];
        model_forward(inst, params, cfg, &cache);
        batch_loss += cache.loss;
        model_backward(inst, params, cfg, cache, inv_batch, grads);
      }
      batch_loss *= inv_batch;
      if (!std::isfinite(batch_loss) || batch_loss > kDivergenceLimit)
        throw Error::diverged("train: loss " + std::to_string(batch_loss) + " at epoch " +
                              std::to_string(epoch + 1) + ", step " +
                              std::to_string(opt.step + 1));
      optimizer_step(param_view, grad_view, opt);
      epoch_loss += batch_loss;
      ++batches;
    }
    epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
    epoch_masses.push_back(evaluate(params, cfg, eval_set).mass);
  }

  const double final_train_loss = mean_train_loss(params, cfg, train_set);
  const EvalStats final_eval = evaluate(params, cfg, eval_set);

  Report report;
  report.body["kind"] = "train";
  report.body["schema"] = 1;
  report.body["config"] = cfg.to_json();
  report.body["seed"] = cfg.seed;
  report.body["data"] = {
      {"hash", dataset_hash_hex(train_set)},
      {"eval-hash", dataset_hash_hex(eval_set)},
      {"train-instances", train_set.size()},
      {"eval-instances", eval_set.size()},
      {"uniform-mass", static_cast<double>(cfg.relevant_frames) /
                           static_cast<double>(cfg.frames)},
  };
  report.body["initial"] = eval_json(initial_eval, initial_train_loss);
  report.body["final"] = eval_json(final_eval, final_train_loss);
  report.body["epoch-loss"] = epoch_losses;
  report.body["epoch-mass"] = epoch_masses;
  report.body["optimizer-steps"] = opt.step;
  report.wall_clock_seconds = seconds_since(start);
  return TrainResult{std::move(params), std::move(report)};
}

Report run_ablation_grid(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();

  struct Cell {
    const char* name;
    double alpha, beta;
    bool pbtf, vpe;
  };
  // Plain learned-query baseline first, then the alpha/beta grid, then the
  // text-fusion and encoding toggles.
  const Cell cells[] = {
      {"baseline", 0.0, 0.0, false, true},
      {"alpha0-beta1", 0.0, 1.0, false, true},
      {"alpha0.5-beta1", 0.5, 1.0, false, true},
      {"alpha1-beta1", 1.0, 1.0, false, true},
      {"alpha1-beta0", 1.0, 0.0, false, true},
      {"alpha1-beta1-pbtf", 1.0, 1.0, true, true},
      {"alpha1-beta0-pbtf", 1.0, 0.0, true, true},
      {"alpha1-beta0-pbtf-no-vpe", 1.0, 0.0, true, false},
  };

  Report report;
  report.body["kind"] = "ablation";
  report.body["schema"] = 1;
  report.body["config"] = cfg.to_json();
  report.body["seed"] = cfg.seed;
  nlohmann::json cell_array = nlohmann::json::array();
  std::string shared_hash;
  bool identical = true;
  for (const Cell& cell : cells) {
    ExperimentConfig cell_cfg = cfg;
    cell_cfg.alpha = cell.alpha;
    cell_cfg.beta = cell.beta;
    cell_cfg.pbtf = cell.pbtf;
    cell_cfg.vpe = cell.vpe;
    TrainResult r = train_experiment(cell_cfg);
    nlohmann::json j;
    j["name"] = cell.name;
    j["alpha"] = cell.alpha;
    j["beta"] = cell.beta;
    j["pbtf"] = cell.pbtf;
    j["vpe"] = cell.vpe;
    j["data-hash"] = r.report.body["data"]["hash"];
    j["initial"] = r.report.body["initial"];
    j["final"] = r.report.body["final"];
    cell_array.push_back(std::move(j));
    const std::string h = cell_array.back()["data-hash"].get<std::string>();
    if (shared_hash.empty()) shared_hash = h;
    else if (h != shared_hash) identical = false;
  }
  report.body["cells"] = std::move(cell_array);
  report.body["identical-data"] = identical;
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

Report token_budget_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = Clock::now();

  Report report;
  report.body["kind"] = "token-sweep";
  report.body["schema"] = 1;
  report.body["config"] = cfg.to_json();
  report.body["seed"] = cfg.seed;
  nlohmann::json cell_array = nlohmann::json::array();
  std::string shared_hash;
  bool identical = true;
  double mse[2] = {0.0, 0.0};
  const std::size_t budgets[2] = {32, 16};
  for (int i = 0; i < 2; ++i) {
    ExperimentConfig cell_cfg = cfg;
    cell_cfg.video_tokens = budgets[i];
    TrainResult r = train_experiment(cell_cfg);
    nlohmann::json j;
    j["video-tokens"] = budgets[i];
    j["data-hash"] = r.report.body["data"]["hash"];
    j["initial"] = r.report.body["initial"];
    j["final"] = r.report.body["final"];
    mse[i] = r.report.body["final"]["eval-mse"].get<double>();
    cell_array.push_back(std::move(j));
    const std::string h = cell_array.back()["data-hash"].get<std::string>();
    if (shared_hash.empty()) shared_hash = h;
    else if (h != shared_hash) identical = false;
  }
  report.body["cells"] = std::move(cell_array);
  report.body["identical-data"] = identical;
  report.body["mse-ratio-16-over-32"] = mse[1] / mse[0];
  report.wall_clock_seconds = seconds_since(start);
  return report;
}

}  // namespace stfm
