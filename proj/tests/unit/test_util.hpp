#pragma once

#include <cmath>
#include <vector>

#include "creditarf/numerics.hpp"

namespace creditarf::testing {

using Mat = std::vector<std::vector<double>>;

template <class T = double>
nx::Tensor<T> random_tensor(nx::Shape shape, nx::Rng& rng, double lo = -1.0, double hi = 1.0) {
  nx::Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <class T>
Mat to_mat(const nx::Tensor<T>& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = static_cast<double>(t.at(i, j));
  return m;
}

template <class T>
std::vector<double> to_vec(const nx::Tensor<T>& t) {
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) v[i] = static_cast<double>(t[i]);
  return v;
}

// Plain-loop reference math, independent of the autograd kernel.
namespace ref {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y = x W + b with W stored [in x out]
inline std::vector<double> affine(const std::vector<double>& x, const Mat& w, const std::vector<double>& b) {
  std::vector<double> y(b);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) y[j] += x[i] * w[i][j];
  return y;
}

inline std::vector<double> softmax(const std::vector<double>& v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  std::vector<double> out(v.size());
  double z = 0;
  for (std::size_t i = 0; i < v.size(); ++i) z += out[i] = std::exp(v[i] - mx);
  for (auto& x : out) x /= z;
  return out;
}

inline std::vector<double> layer_norm(const std::vector<double>& x, const std::vector<double>& gain,
                                      const std::vector<double>& bias, double eps = 1e-5) {
  double mu = 0, var = 0;
  for (double v : x) mu += v;
  mu /= x.size();
  for (double v : x) var += (v - mu) * (v - mu);
  var /= x.size();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mu) / std::sqrt(var + eps) * gain[i] + bias[i];
  return out;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) d = std::max(d, std::abs(a[i][j] - b[i][j]));
  return d;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace ref
}  // namespace creditarf::testing
