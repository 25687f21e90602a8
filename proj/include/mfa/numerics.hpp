#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mfa {

using Vec = std::vector<double>;

/// Dense row-major matrix of doubles.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Mat identity(std::size_t n);
  /// Builds a matrix from nested rows; all rows must have equal length.
  static Mat from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  void fill(double v);
  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat matmul(const Mat& a, const Mat& b);

/// y = A x
Vec matvec(const Mat& a, std::span<const double> x);
/// y = Aᵀ x
Vec matvec_t(const Mat& a, std::span<const double> x);
/// y += Aᵀ x
void matvec_t_acc(const Mat& a, std::span<const double> x, std::span<double> y);
/// A += scale · u vᵀ
void add_outer(Mat& a, std::span<const double> u, std::span<const double> v, double scale = 1.0);

double dot(std::span<const double> a, std::span<const double> b);
/// y += scale · x
void axpy(double scale, std::span<const double> x, std::span<double> y);
Vec hadamard(std::span<const double> a, std::span<const double> b);
Vec concat(std::initializer_list<std::span<const double>> parts);

/// Numerically stable softmax (max-subtracted).
Vec softmax(std::span<const double> x);
/// log-softmax, same stabilisation as softmax.
Vec log_softmax(std::span<const double> x);

enum class Activation { sigmoid, tanh, identity };

double activate(double x, Activation kind);
Vec activate(std::span<const double> x, Activation kind);
/// Derivative expressed through the activation's output y = act(x).
double activate_grad_from_output(double y, Activation kind);

Activation parse_activation(const std::string& name);
std::string to_string(Activation kind);

/// xoshiro256** seeded through splitmix64. The raw 64-bit stream depends only on the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n);
  /// Standard normal via Box-Muller.
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t s_[4];
};

using ScalarFn = std::function<double(std::span<const double>)>;

/// Central finite differences (f(θ+εeᵢ) − f(θ−εeᵢ)) / 2ε for every coordinate.
Vec finite_diff_grad(const ScalarFn& f, std::span<const double> theta, double eps);

}  // namespace mfa
