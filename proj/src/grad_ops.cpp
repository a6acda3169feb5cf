#include "stfm/grad_ops.hpp"

#include <cmath>

#include "stfm/errors.hpp"

namespace stfm {

Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy) {
  if (!y.same_shape(dy))
    throw Error::dimension("softmax_rows_backward: shapes disagree: " + y.shape_str() +
                           " vs " + dy.shape_str());
  Tensor dx({y.dim(0), y.dim(1)});
  for (std::size_t i = 0; i < y.dim(0); ++i) {
    auto yr = y.row(i);
    auto dyr = dy.row(i);
    auto dxr = dx.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < yr.size(); ++j) s += dyr[j] * yr[j];
    for (std::size_t j = 0; j < yr.size(); ++j) dxr[j] = yr[j] * (dyr[j] - s);
  }
  return dx;
}

Tensor layer_norm_rows_backward(const Tensor& ln_in, const Tensor& gamma, double eps,
                                const Tensor& d_out, Tensor& d_gamma, Tensor& d_beta) {
  if (!ln_in.same_shape(d_out))
    throw Error::dimension("layer_norm_rows_backward: shapes disagree: " +
                           ln_in.shape_str() + " vs " + d_out.shape_str());
  const std::size_t rows = ln_in.dim(0), d = ln_in.dim(1);
  const double dn = static_cast<double>(d);
  Tensor dx({rows, d});
  std::vector<double> xhat(d), dxhat(d);
  for (std::size_t r = 0; r < rows; ++r) {
    auto x = ln_in.row(r);
    auto dout = d_out.row(r);
    auto dxr = dx.row(r);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= dn;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= dn;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[j] = (x[j] - mean) * inv;
      d_gamma.at(j) += dout[j] * xhat[j];
      d_beta.at(j) += dout[j];
      dxhat[j] = dout[j] * gamma.at(j);
    }
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      mean_dxhat += dxhat[j];
      mean_dxhat_xhat += dxhat[j] * xhat[j];
    }
    mean_dxhat /= dn;
    mean_dxhat_xhat /= dn;
    for (std::size_t j = 0; j < d; ++j)
      dxr[j] = inv * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
  }
  return dx;
}

Tensor relu_backward(const Tensor& pre, const Tensor& d_act) {
  if (!pre.same_shape(d_act))
    throw Error::dimension("relu_backward: shapes disagree: " + pre.shape_str() + " vs " +
                           d_act.shape_str());
  Tensor dx = d_act;
  const double* p = pre.data();
  double* d = dx.data();
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (p[i] <= 0.0) d[i] = 0.0;
  return dx;
}

}  // namespace stfm
