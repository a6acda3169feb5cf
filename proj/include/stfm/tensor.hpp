#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stfm {

// Dense row-major array of doubles, rank 1 to 3. A default-constructed
// tensor is "empty" (rank 0, no data) and is used to represent absent
// optional inputs such as a zero-length text sequence.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::initializer_list<std::size_t> shape)
      : Tensor(std::vector<std::size_t>(shape)) {}

  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

  bool empty() const { return shape_.empty(); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const;
  const std::vector<std::size_t>& shape() const { return shape_; }
  std::string shape_str() const;  // e.g. "[7x5]"

  std::size_t rows() const { return dim(0); }
  std::size_t cols() const { return dim(rank() - 1); }

  double& at(std::size_t i) { return data_[i]; }
  double at(std::size_t i) const { return data_[i]; }
  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  // Innermost row views. row(r) requires rank 2, row(t, m) rank 3.
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;
  std::span<double> row(std::size_t t, std::size_t m);
  std::span<const double> row(std::size_t t, std::size_t m) const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Counter-based generator: draw k is a fixed bit mix of (seed, k), so a
// stream replays bit-exactly from its seed and never depends on how many
// values earlier callers consumed from other streams.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;

  RngState() = default;
  explicit RngState(std::uint64_t s) : seed(s) {}

  std::uint64_t next_u64();
  double next_unit();  // uniform in (0, 1]
  std::size_t next_index(std::size_t bound);
};

// Independent substream for a named purpose ("init", "data", ...).
RngState derive_stream(std::uint64_t seed, std::string_view label);

inline constexpr double kLayerNormEps = 1e-5;

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a^T * b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T

Tensor softmax_rows(const Tensor& x);

// (x - mean) / sqrt(var + eps) * gamma + beta, population variance.
void layer_norm(std::span<const double> x, std::span<const double> gamma,
                std::span<const double> beta, double eps, std::span<double> out);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       double eps);

// i.i.d. standard normal draws (Box-Muller over the counter stream).
Tensor gaussian(RngState& rng, std::vector<std::size_t> shape);

Tensor add(const Tensor& a, const Tensor& b);
void add_inplace(Tensor& dst, const Tensor& src);
void add_scaled_inplace(Tensor& dst, const Tensor& src, double factor);
void scale_inplace(Tensor& t, double factor);
Tensor relu(const Tensor& x);
Tensor affine_rows(const Tensor& x, const Tensor& w, const Tensor& b);  // x*w + b per row
Tensor colsum(const Tensor& x);

}  // namespace stfm
