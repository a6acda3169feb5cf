#pragma once

#include <vector>

#include "stfm/config.hpp"
#include "stfm/model.hpp"
#include "stfm/tensor.hpp"

namespace stfm {

struct OptimizerConfig {
  OptimizerChoice kind = OptimizerChoice::adamw;
  double learning_rate = 1e-3;
  double weight_decay = 0.05;  // decoupled, adamw only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t warmup_steps = 0;
  double warmup_lr = 1e-6;
};

OptimizerConfig optimizer_config(const ExperimentConfig& cfg);

struct OptimizerState {
  OptimizerConfig cfg;
  std::size_t step = 0;
  std::vector<Tensor> m, v;  // adamw moments, aligned with the parameter view

  OptimizerState() = default;
  OptimizerState(OptimizerConfig c, const std::vector<NamedTensorRef>& params);
};

// Linear ramp from warmup_lr to learning_rate over warmup_steps.
double scheduled_lr(const OptimizerConfig& cfg, std::size_t step);

// One update; params and grads must be congruent views in canonical order.
void optimizer_step(std::vector<NamedTensorRef>& params,
                    const std::vector<NamedTensorRef>& grads, OptimizerState& state);

}  // namespace stfm
