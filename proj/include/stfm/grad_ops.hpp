#pragma once

#include "stfm/tensor.hpp"

namespace stfm {

// Reverse-mode building blocks shared by the hand-derived module backwards.

// y = softmax_rows(x): dx_i = y_i * (dy_i - sum_j dy_j * y_j) per row.
Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy);

// Backward of layer_norm_rows over the pre-norm input. Accumulates dgamma
// and dbeta, returns d(ln_in).
Tensor layer_norm_rows_backward(const Tensor& ln_in, const Tensor& gamma, double eps,
                                const Tensor& d_out, Tensor& d_gamma, Tensor& d_beta);

// Straight-zero subgradient outside the active region.
Tensor relu_backward(const Tensor& pre, const Tensor& d_act);

}  // namespace stfm
