#include "stfm/gradcheck.hpp"

#include <cmath>

#include "stfm/errors.hpp"

namespace stfm {

double finite_diff_grad(const std::function<double()>& eval, double& coordinate,
                        double step) {
  if (step <= 0.0) throw Error::invalid_argument("finite_diff_grad: step must be positive");
  const double saved = coordinate;
  coordinate = saved + step;
  const double up = eval();
  coordinate = saved - step;
  const double down = eval();
  coordinate = saved;
  return (up - down) / (2.0 * step);
}

GradCheckResult run_gradcheck(const ExperimentConfig& cfg, std::size_t coords_per_tensor,
                              double step, double tolerance) {
  cfg.validate();
  GradCheckResult result;
  result.step = step;
  result.tolerance = tolerance;
  result.coords_per_tensor = coords_per_tensor;

  ModelParams params = init_model_params(cfg);
  TaskMaps maps = make_task_maps(cfg);
  RngState data_rng = derive_stream(cfg.seed, "gradcheck-data");
  SyntheticInstance inst = generate_instance(cfg, maps, data_rng);

  ModelCache cache;
  model_forward(inst, params, cfg, &cache);
  ModelGrads grads = zero_model_grads(params);
  model_backward(inst, params, cfg, cache, 1.0, grads);

  auto param_view = named_tensors(params);
  auto grad_view = named_tensors(grads);
  auto eval = [&]() { return model_forward(inst, params, cfg).loss; };

  RngState pick = derive_stream(cfg.seed, "gradcheck-coords");
  result.worst = 0.0;
  for (std::size_t i = 0; i < param_view.size(); ++i) {
    Tensor& t = *param_view[i].tensor;
    const Tensor& g = *grad_view[i].tensor;
    double tensor_worst = 0.0;
    const std::size_t samples = std::min(coords_per_tensor, t.size());
    for (std::size_t s = 0; s < samples; ++s) {
      const std::size_t idx =
          coords_per_tensor >= t.size() ? s : pick.next_index(t.size());
      double& coord = t.flat()[idx];
      const double fd = finite_diff_grad(eval, coord, step);
      const double analytic = g.flat()[idx];
      const double rel =
          std::fabs(analytic - fd) / std::max(std::fabs(fd), 1e-8);
      if (rel > tensor_worst) tensor_worst = rel;
    }
    result.max_rel_err[param_view[i].name] = tensor_worst;
    if (tensor_worst > result.worst) {
      result.worst = tensor_worst;
      result.worst_tensor = param_view[i].name;
    }
  }
  result.pass = result.worst < tolerance;
  return result;
}

}  // namespace stfm
