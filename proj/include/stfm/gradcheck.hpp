#pragma once

#include <functional>
#include <map>
#include <string>

#include "stfm/config.hpp"
#include "stfm/model.hpp"

namespace stfm {

// Central difference (f(x+h) - f(x-h)) / 2h at one coordinate; the
// coordinate is restored afterwards. Verification oracle, independent of
// the backward pass by construction (it only reruns the forward).
double finite_diff_grad(const std::function<double()>& eval, double& coordinate,
                        double step = 1e-5);

struct GradCheckResult {
  std::map<std::string, double> max_rel_err;  // per tensor
  double worst = 0.0;
  std::string worst_tensor;
  bool pass = false;
  double step = 0.0;
  double tolerance = 0.0;
  std::size_t coords_per_tensor = 0;
};

// Compares analytic gradients of the full training loss against central
// finite differences on sampled coordinates of every trainable tensor.
GradCheckResult run_gradcheck(const ExperimentConfig& cfg, std::size_t coords_per_tensor = 20,
                              double step = 1e-5, double tolerance = 1e-4);

}  // namespace stfm
