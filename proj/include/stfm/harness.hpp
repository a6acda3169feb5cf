#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stfm/config.hpp"
#include "stfm/hstf.hpp"
#include "stfm/model.hpp"
#include "stfm/report.hpp"
#include "stfm/synth.hpp"

namespace stfm {

// Mean over attention rows of the mass falling on tokens of relevant
// frames. 1.0 means everything attends to relevant content.
double attention_mass(const AttentionMap& sam, std::span<const std::uint8_t> mask,
                      std::size_t queries_per_frame);

struct EvalStats {
  double mse = 0.0;
  double mass = 0.0;
};

EvalStats evaluate(const ModelParams& params, const ExperimentConfig& cfg,
                   std::span<const SyntheticInstance> instances);

struct TrainResult {
  ModelParams params;
  Report report;
};

// Deterministic minibatch training of the full pipeline against the planted
// targets. Aborts with a diverged error if the loss explodes.
TrainResult train_experiment(const ExperimentConfig& cfg);
TrainResult train_experiment(const ExperimentConfig& cfg, ModelParams params);

// Trains the fixed grid of alpha/beta/pbtf/vpe cells on shared data.
Report run_ablation_grid(const ExperimentConfig& cfg);

// Trains the 32- and 16-token budgets on identical data and seeds.
Report token_budget_sweep(const ExperimentConfig& cfg);

}  // namespace stfm
