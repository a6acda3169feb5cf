#include "stfm/optimizer.hpp"

#include <cmath>

#include "stfm/errors.hpp"

namespace stfm {

OptimizerConfig optimizer_config(const ExperimentConfig& cfg) {
  OptimizerConfig oc;
  oc.kind = cfg.optimizer;
  oc.learning_rate = cfg.learning_rate;
  oc.weight_decay = cfg.weight_decay;
  oc.warmup_steps = cfg.warmup_steps;
  oc.warmup_lr = cfg.warmup_lr;
  return oc;
}

OptimizerState::OptimizerState(OptimizerConfig c, const std::vector<NamedTensorRef>& params)
    : cfg(c) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto& p : params) {
    m.emplace_back(p.tensor->shape());
    v.emplace_back(p.tensor->shape());
  }
}

double scheduled_lr(const OptimizerConfig& cfg, std::size_t step) {
  if (cfg.warmup_steps == 0 || step > cfg.warmup_steps) return cfg.learning_rate;
  const double frac = static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
  return cfg.warmup_lr + (cfg.learning_rate - cfg.warmup_lr) * frac;
}

void optimizer_step(std::vector<NamedTensorRef>& params,
                    const std::vector<NamedTensorRef>& grads, OptimizerState& state) {
  if (params.size() != grads.size())
    throw Error::invalid_argument("optimizer_step: parameter/gradient views disagree");
  if (state.cfg.kind == OptimizerChoice::adamw && state.m.size() != params.size())
    throw Error::invalid_argument("optimizer_step: state not initialized for this view");

  ++state.step;
  const double lr = scheduled_lr(state.cfg, state.step);

  if (state.cfg.kind == OptimizerChoice::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      double* p = params[i].tensor->data();
      const double* g = grads[i].tensor->data();
      for (std::size_t k = 0; k < params[i].tensor->size(); ++k) p[k] -= lr * g[k];
    }
    return;
  }

  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].tensor->data();
    const double* g = grads[i].tensor->data();
    double* mi = state.m[i].data();
    double* vi = state.v[i].data();
    for (std::size_t k = 0; k < params[i].tensor->size(); ++k) {
      mi[k] = b1 * mi[k] + (1.0 - b1) * g[k];
      vi[k] = b2 * vi[k] + (1.0 - b2) * g[k] * g[k];
      const double mhat = mi[k] / bc1;
      const double vhat = vi[k] / bc2;
      p[k] -= lr * (mhat / (std::sqrt(vhat) + state.cfg.eps) +
                    state.cfg.weight_decay * p[k]);
    }
  }
}

}  // namespace stfm
