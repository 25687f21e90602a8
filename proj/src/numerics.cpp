#include "mfa/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mfa/errors.hpp"

namespace mfa {

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Mat: data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw ShapeError("Mat::from_rows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Mat(rows.size(), cols, std::move(data));
}

void Mat::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Mat::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string Mat::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  Mat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Vec matvec(const Mat& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw ShapeError("matvec: " + a.shape_string() + " times vector of length " +
                     std::to_string(x.size()));
  }
  Vec y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

Vec matvec_t(const Mat& a, std::span<const double> x) {
  Vec y(a.cols(), 0.0);
  matvec_t_acc(a, x, y);
  return y;
}

void matvec_t_acc(const Mat& a, std::span<const double> x, std::span<double> y) {
  if (a.rows() != x.size() || a.cols() != y.size()) {
    throw ShapeError("matvec_t: transpose of " + a.shape_string() + " times vector of length " +
                     std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (x[i] == 0.0) continue;
    axpy(x[i], a.row(i), y);
  }
}

void add_outer(Mat& a, std::span<const double> u, std::span<const double> v, double scale) {
  if (a.rows() != u.size() || a.cols() != v.size()) {
    throw ShapeError("add_outer: " + a.shape_string() + " vs outer product " +
                     std::to_string(u.size()) + "x" + std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double s = scale * u[i];
    if (s == 0.0) continue;
    axpy(s, v, a.row(i));
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void axpy(double scale, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) {
    throw ShapeError("axpy: lengths " + std::to_string(x.size()) + " and " +
                     std::to_string(y.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += scale * x[i];
}

Vec hadamard(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("hadamard: lengths " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Vec concat(std::initializer_list<std::span<const double>> parts) {
  std::size_t n = 0;
  for (auto p : parts) n += p.size();
  Vec out;
  out.reserve(n);
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

Vec softmax(std::span<const double> x) {
  if (x.empty()) throw DomainError("softmax: empty input");
  const double mx = *std::max_element(x.begin(), x.end());
  Vec out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

Vec log_softmax(std::span<const double> x) {
  if (x.empty()) throw DomainError("log_softmax: empty input");
  const double mx = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
  return out;
}

double activate(double x, Activation kind) {
  switch (kind) {
    case Activation::sigmoid:
      // Split on sign so exp never overflows.
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      {
        const double e = std::exp(x);
        return e / (1.0 + e);
      }
    case Activation::tanh:
      return std::tanh(x);
    case Activation::identity:
      return x;
  }
  return x;
}

Vec activate(std::span<const double> x, Activation kind) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = activate(x[i], kind);
  return out;
}

double activate_grad_from_output(double y, Activation kind) {
  switch (kind) {
    case Activation::sigmoid:
      return y * (1.0 - y);
    case Activation::tanh:
      return 1.0 - y * y;
    case Activation::identity:
      return 1.0;
  }
  return 1.0;
}

Activation parse_activation(const std::string& name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity" || name == "linear") return Activation::identity;
  throw ConfigError("unknown activation '" + name + "'");
}

std::string to_string(Activation kind) {
  switch (kind) {
    case Activation::sigmoid:
      return "sigmoid";
    case Activation::tanh:
      return "tanh";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
  std::uint64_t sm = seed;
  for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) throw DomainError("Rng::uniform_int: n must be positive");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec finite_diff_grad(const ScalarFn& f, std::span<const double> theta, double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) throw DomainError("finite_diff_grad: eps must be in (0, 1e-2]");
  Vec work(theta.begin(), theta.end());
  Vec grad(theta.size(), 0.0);
  for (std::size_t i = 0; i < work.size(); ++i) {
    const double orig = work[i];
    work[i] = orig + eps;
    const double fp = f(work);
    work[i] = orig - eps;
    const double fm = f(work);
    work[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_grad: non-finite function value at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * eps);
  }
  return grad;
}

}  // namespace mfa
