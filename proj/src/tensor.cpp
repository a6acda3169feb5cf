#include "stfm/tensor.hpp"

#include <cmath>
#include <numbers>

#include "stfm/errors.hpp"

namespace stfm {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

void require_matrix(const Tensor& t, const char* who) {
  if (t.rank() != 2)
    throw Error::dimension(std::string(who) + ": expected a rank-2 tensor, got " + t.shape_str());
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  if (shape_.empty() || shape_.size() > 3)
    throw Error::invalid_argument("tensor rank must be 1..3, got " +
                                  std::to_string(shape_.size()));
  for (std::size_t e : shape_)
    if (e == 0) throw Error::invalid_argument("tensor extents must be positive");
  data_.assign(shape_product(shape_), 0.0);
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = rows.begin()->size();
  Tensor t({r, c});
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c)
      throw Error::invalid_argument("from_rows: ragged row lengths");
    for (double v : row) t.data_[i++] = v;
  }
  return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size())
    throw Error::dimension("tensor axis " + std::to_string(axis) +
                           " out of range for " + shape_str());
  return shape_[axis];
}

std::string Tensor::shape_str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

std::span<double> Tensor::row(std::size_t r) {
  if (rank() != 2) throw Error::dimension("row(r) needs rank 2, got " + shape_str());
  return {data_.data() + r * shape_[1], shape_[1]};
}

std::span<const double> Tensor::row(std::size_t r) const {
  if (rank() != 2) throw Error::dimension("row(r) needs rank 2, got " + shape_str());
  return {data_.data() + r * shape_[1], shape_[1]};
}

std::span<double> Tensor::row(std::size_t t, std::size_t m) {
  if (rank() != 3) throw Error::dimension("row(t,m) needs rank 3, got " + shape_str());
  return {data_.data() + (t * shape_[1] + m) * shape_[2], shape_[2]};
}

std::span<const double> Tensor::row(std::size_t t, std::size_t m) const {
  if (rank() != 3) throw Error::dimension("row(t,m) needs rank 3, got " + shape_str());
  return {data_.data() + (t * shape_[1] + m) * shape_[2], shape_[2]};
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::uint64_t RngState::next_u64() { return mix64(seed ^ mix64(++counter)); }

double RngState::next_unit() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::size_t RngState::next_index(std::size_t bound) {
  return static_cast<std::size_t>(next_u64() % bound);
}

RngState derive_stream(std::uint64_t seed, std::string_view label) {
  return RngState(mix64(seed ^ fnv1a(label)));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.dim(1) != b.dim(0))
    throw Error::dimension("matmul: inner dimensions disagree: " + a.shape_str() +
                           " vs " + b.shape_str());
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  const double* ad = a.data();
  const double* bd = b.data();
  double* cd = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = cd + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = ad[i * k + kk];
      const double* brow = bd + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  if (a.dim(0) != b.dim(0))
    throw Error::dimension("matmul_tn: leading dimensions disagree: " + a.shape_str() +
                           " vs " + b.shape_str());
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  const double* ad = a.data();
  const double* bd = b.data();
  double* cd = c.data();
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double* arow = ad + kk * m;
    const double* brow = bd + kk * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double aki = arow[i];
      double* crow = cd + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  if (a.dim(1) != b.dim(1))
    throw Error::dimension("matmul_nt: trailing dimensions disagree: " + a.shape_str() +
                           " vs " + b.shape_str());
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  Tensor c({m, n});
  const double* ad = a.data();
  const double* bd = b.data();
  double* cd = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = ad + i * k;
    double* crow = cd + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = bd + j * k;
      double s = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
      crow[j] = s;
    }
  }
  return c;
}

Tensor softmax_rows(const Tensor& x) {
  require_matrix(x, "softmax_rows");
  const std::size_t m = x.dim(0), n = x.dim(1);
  Tensor y({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    auto xr = x.row(i);
    auto yr = y.row(i);
    double mx = xr[0];
    for (double v : xr) mx = v > mx ? v : mx;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    for (std::size_t j = 0; j < n; ++j) yr[j] /= sum;
  }
  return y;
}

void layer_norm(std::span<const double> x, std::span<const double> gamma,
                std::span<const double> beta, double eps, std::span<double> out) {
  const std::size_t d = x.size();
  if (d < 2) throw Error::dimension("layer_norm: need at least 2 elements");
  if (gamma.size() != d || beta.size() != d || out.size() != d)
    throw Error::dimension("layer_norm: gamma/beta/out length must match input");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(d);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d);
  const double inv = 1.0 / std::sqrt(var + eps);
  for (std::size_t i = 0; i < d; ++i)
    out[i] = (x[i] - mean) * inv * gamma[i] + beta[i];
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       double eps) {
  require_matrix(x, "layer_norm_rows");
  Tensor y({x.dim(0), x.dim(1)});
  for (std::size_t i = 0; i < x.dim(0); ++i)
    layer_norm(x.row(i), gamma.flat(), beta.flat(), eps, y.row(i));
  return y;
}

Tensor gaussian(RngState& rng, std::vector<std::size_t> shape) {
  Tensor t(std::move(shape));
  auto v = t.flat();
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; i += 2) {
    const double u1 = rng.next_unit();
    const double u2 = rng.next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    v[i] = r * std::cos(a);
    if (i + 1 < n) v[i + 1] = r * std::sin(a);
  }
  return t;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw Error::dimension("add: shapes disagree: " + a.shape_str() + " vs " + b.shape_str());
  Tensor c = a;
  add_inplace(c, b);
  return c;
}

void add_inplace(Tensor& dst, const Tensor& src) {
  if (!dst.same_shape(src))
    throw Error::dimension("add_inplace: shapes disagree: " + dst.shape_str() + " vs " +
                           src.shape_str());
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

void add_scaled_inplace(Tensor& dst, const Tensor& src, double factor) {
  if (!dst.same_shape(src))
    throw Error::dimension("add_scaled_inplace: shapes disagree: " + dst.shape_str() +
                           " vs " + src.shape_str());
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += factor * s[i];
}

void scale_inplace(Tensor& t, double factor) {
  for (double& v : t.flat()) v *= factor;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.flat()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor affine_rows(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor y = matmul(x, w);
  if (b.rank() != 1 || b.dim(0) != y.dim(1))
    throw Error::dimension("affine_rows: bias " + b.shape_str() + " does not match " +
                           y.shape_str());
  for (std::size_t i = 0; i < y.dim(0); ++i) {
    auto yr = y.row(i);
    const double* bd = b.data();
    for (std::size_t j = 0; j < y.dim(1); ++j) yr[j] += bd[j];
  }
  return y;
}

Tensor colsum(const Tensor& x) {
  require_matrix(x, "colsum");
  Tensor s({x.dim(1)});
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    auto xr = x.row(i);
    for (std::size_t j = 0; j < x.dim(1); ++j) s.at(j) += xr[j];
  }
  return s;
}

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::checkpoint_format: return "checkpoint-format";
    case ErrorKind::checkpoint_version: return "checkpoint-version";
    case ErrorKind::checkpoint_truncated: return "checkpoint-truncated";
    case ErrorKind::checkpoint_shape: return "checkpoint-shape";
    case ErrorKind::diverged: return "diverged";
  }
  return "unknown";
}

}  // namespace stfm
