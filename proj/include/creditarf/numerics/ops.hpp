#pragma once

// Differentiable tensor operations. Matrices are rank-2 [rows x cols]; a
// rank-1 tensor is accepted wherever a single row is expected. Image-shaped
// tensors are [batch x channels x height x width].

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "creditarf/numerics/autograd.hpp"
#include "creditarf/numerics/rng.hpp"
#include "creditarf/numerics/tensor.hpp"

namespace creditarf::nx {

namespace detail {

template <class T>
inline bool wants(const Node<T>& n, std::size_t i) {
  return n.parents[i]->requires_grad;
}

template <class T>
inline Tensor<T>& pgrad(Node<T>& n, std::size_t i) {
  return n.parents[i]->grad;
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

// C[m x n] += A[m x k] * B[k x n]
template <class T>
void gemm_nn(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      if (av == T{0}) continue;
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m x k] += A[m x n] * B[k x n]^T
template <class T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T* brow = b + p * n;
      T acc{0};
      for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
      c[i * k + p] += acc;
    }
  }
}

// C[k x n] += A[m x k]^T * B[m x n]
template <class T>
void gemm_tn(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[i * k + p];
      if (av == T{0}) continue;
      T* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <class T, class F, class D>
Var<T> unary(const Var<T>& x, F f, D df) {
  Tensor<T> out(x.shape());
  const auto& xv = x.value();
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return make_result<T>(std::move(out), {x}, [df](Node<T>& n) {
    const auto& xin = n.parents[0]->value;
    auto& gx = pgrad(n, 0);
    for (std::size_t i = 0; i < xin.size(); ++i) gx[i] += n.grad[i] * df(xin[i], n.value[i]);
  });
}

}  // namespace detail

template <class T>
Var<T> constant(Tensor<T> value) {
  return Var<T>(std::move(value), false);
}

template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  const std::size_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  detail::require(a.value().rank() <= 2 && b.value().rank() <= 2, "matmul expects matrices");
  detail::require(k == k2, "matmul inner extents differ: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  Tensor<T> out({m, n});
  detail::gemm_nn(m, k, n, a.value().data(), b.value().data(), out.data());
  return make_result<T>(std::move(out), {a, b}, [m, k, n](Node<T>& node) {
    const T* g = node.grad.data();
    if (detail::wants(node, 0)) {
      detail::gemm_nt(m, n, k, g, node.parents[1]->value.data(), detail::pgrad(node, 0).data());
    }
    if (detail::wants(node, 1)) {
      detail::gemm_tn(m, k, n, node.parents[0]->value.data(), g, detail::pgrad(node, 1).data());
    }
  });
}

template <class T>
Var<T> transpose(const Var<T>& x) {
  const std::size_t r = x.rows(), c = x.cols();
  Tensor<T> out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = x.value()[i * c + j];
  return make_result<T>(std::move(out), {x}, [r, c](Node<T>& n) {
    auto& g = detail::pgrad(n, 0);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += n.grad[j * r + i];
  });
}

template <class T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> out = x.value().reshaped(std::move(shape));
  return make_result<T>(std::move(out), {x}, [](Node<T>& n) {
    auto& g = detail::pgrad(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
  });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::require(a.value().size() == b.value().size(),
                  "add shape mismatch: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (!detail::wants(n, p)) continue;
      auto& g = detail::pgrad(n, p);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  detail::require(a.value().size() == b.value().size(),
                  "sub shape mismatch: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    if (detail::wants(n, 0)) {
      auto& g = detail::pgrad(n, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
    if (detail::wants(n, 1)) {
      auto& g = detail::pgrad(n, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
    }
  });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  detail::require(a.value().size() == b.value().size(),
                  "mul shape mismatch: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& n) {
    const auto& av = n.parents[0]->value;
    const auto& bv = n.parents[1]->value;
    if (detail::wants(n, 0)) {
      auto& g = detail::pgrad(n, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * bv[i];
    }
    if (detail::wants(n, 1)) {
      auto& g = detail::pgrad(n, 1);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * av[i];
    }
  });
}

template <class T>
Var<T> scale(const Var<T>& x, T s) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * s;
  return make_result<T>(std::move(out), {x}, [s](Node<T>& n) {
    auto& g = detail::pgrad(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * s;
  });
}

// x[m x n] + b broadcast over rows; b holds n values.
template <class T>
Var<T> add_bias(const Var<T>& x, const Var<T>& b) {
  const std::size_t m = x.rows(), n = x.cols();
  detail::require(b.value().size() == n, "bias length " + std::to_string(b.value().size()) +
                                             " does not match " + std::to_string(n) + " columns");
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.value()[i * n + j] + b.value()[j];
  return make_result<T>(std::move(out), {x, b}, [m, n](Node<T>& node) {
    if (detail::wants(node, 0)) {
      auto& g = detail::pgrad(node, 0);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i];
    }
    if (detail::wants(node, 1)) {
      auto& g = detail::pgrad(node, 1);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += node.grad[i * n + j];
    }
  });
}

// Row i of x[m x n] multiplied by c[i]; c holds m values.
template <class T>
Var<T> mul_rows(const Var<T>& x, const Var<T>& c) {
  const std::size_t m = x.rows(), n = x.cols();
  detail::require(c.value().size() == m, "row-scale length does not match row count");
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x.value()[i * n + j] * c.value()[i];
  return make_result<T>(std::move(out), {x, c}, [m, n](Node<T>& node) {
    const auto& xv = node.parents[0]->value;
    const auto& cv = node.parents[1]->value;
    if (detail::wants(node, 0)) {
      auto& g = detail::pgrad(node, 0);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += node.grad[i * n + j] * cv[i];
    }
    if (detail::wants(node, 1)) {
      auto& g = detail::pgrad(node, 1);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i] += node.grad[i * n + j] * xv[i * n + j];
    }
  });
}

// Stacks `times` copies of x[m x n] vertically.
template <class T>
Var<T> repeat_rows(const Var<T>& x, std::size_t times) {
  const std::size_t m = x.rows(), n = x.cols();
  Tensor<T> out({m * times, n});
  for (std::size_t t = 0; t < times; ++t)
    std::copy(x.value().data(), x.value().data() + m * n, out.data() + t * m * n);
  return make_result<T>(std::move(out), {x}, [m, n, times](Node<T>& node) {
    auto& g = detail::pgrad(node, 0);
    for (std::size_t t = 0; t < times; ++t)
      for (std::size_t i = 0; i < m * n; ++i) g[i] += node.grad[t * m * n + i];
  });
}

template <class T>
Var<T> sum(const Var<T>& x) {
  T s{0};
  for (T v : x.value().values()) s += v;
  return make_result<T>(Tensor<T>::scalar(s), {x}, [](Node<T>& n) {
    auto& g = detail::pgrad(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0];
  });
}

template <class T>
Var<T> mean(const Var<T>& x) {
  return scale(sum(x), T{1} / static_cast<T>(x.value().size()));
}

// Consecutive groups of `group` rows averaged: [g*k x n] -> [k x n].
template <class T>
Var<T> group_mean_rows(const Var<T>& x, std::size_t group) {
  const std::size_t m = x.rows(), n = x.cols();
  detail::require(group > 0 && m % group == 0, "row count not divisible by group size");
  const std::size_t k = m / group;
  const T inv = T{1} / static_cast<T>(group);
  Tensor<T> out({k, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[(i / group) * n + j] += x.value()[i * n + j] * inv;
  return make_result<T>(std::move(out), {x}, [m, n, group, inv](Node<T>& node) {
    auto& g = detail::pgrad(node, 0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += node.grad[(i / group) * n + j] * inv;
  });
}

template <class T>
Var<T> mean_rows(const Var<T>& x) {
  return group_mean_rows(x, x.rows());
}

template <class T>
Var<T> tanh(const Var<T>& x) {
  return detail::unary(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T{1} - y * y; });
}

template <class T>
Var<T> sigmoid(const Var<T>& x) {
  return detail::unary(
      x,
      [](T v) {
        if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
        const T e = std::exp(v);
        return e / (T{1} + e);
      },
      [](T, T y) { return y * (T{1} - y); });
}

template <class T>
Var<T> relu(const Var<T>& x) {
  return detail::unary(
      x, [](T v) { return v > T{0} ? v : T{0}; }, [](T v, T) { return v > T{0} ? T{1} : T{0}; });
}

template <class T>
Var<T> leaky_relu(const Var<T>& x, T slope = T(0.2)) {
  return detail::unary(
      x, [slope](T v) { return v > T{0} ? v : slope * v; },
      [slope](T v, T) { return v > T{0} ? T{1} : slope; });
}

template <class T>
Var<T> elu(const Var<T>& x, T alpha = T{1}) {
  return detail::unary(
      x, [alpha](T v) { return v > T{0} ? v : alpha * (std::exp(v) - T{1}); },
      [alpha](T v, T y) { return v > T{0} ? T{1} : y + alpha; });
}

// Row-wise softmax with max subtraction. Keeps the input shape, so a rank-1
// vector is normalised as a whole.
template <class T>
Var<T> softmax_rows(const Var<T>& x) {
  const std::size_t m = x.rows(), n = x.cols();
  const auto& xv = x.value();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = xv.data() + i * n;
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(row[j])) throw NumericError("softmax input contains NaN");
      mx = std::max(mx, row[j]);
    }
    T z{0};
    for (std::size_t j = 0; j < n; ++j) z += (out[i * n + j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  return make_result<T>(std::move(out), {x}, [m, n](Node<T>& node) {
    auto& g = detail::pgrad(node, 0);
    for (std::size_t i = 0; i < m; ++i) {
      const T* y = node.value.data() + i * n;
      const T* gy = node.grad.data() + i * n;
      T dot{0};
      for (std::size_t j = 0; j < n; ++j) dot += y[j] * gy[j];
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += y[j] * (gy[j] - dot);
    }
  });
}

template <class T>
Var<T> softmax(const Var<T>& v) {
  return softmax_rows(v);
}

inline constexpr double kProbFloor = 1e-12;

// Mean over rows of -log(max(p[label], 1e-12)).
template <class T>
Var<T> cross_entropy(const Var<T>& probs, const std::vector<std::size_t>& labels) {
  const std::size_t m = probs.rows(), n = probs.cols();
  detail::require(labels.size() == m, "cross_entropy: one label per row expected");
  T loss{0};
  for (std::size_t i = 0; i < m; ++i) {
    if (labels[i] >= n) {
      throw std::out_of_range("class label " + std::to_string(labels[i]) + " out of range 0.." +
                              std::to_string(n - 1));
    }
    const T p = probs.value()[i * n + labels[i]];
    loss -= std::log(std::max(p, static_cast<T>(kProbFloor)));
  }
  loss /= static_cast<T>(m);
  return make_result<T>(Tensor<T>::scalar(loss), {probs}, [m, n, labels](Node<T>& node) {
    auto& g = detail::pgrad(node, 0);
    const auto& pv = node.parents[0]->value;
    for (std::size_t i = 0; i < m; ++i) {
      const T p = pv[i * n + labels[i]];
      if (p > static_cast<T>(kProbFloor)) g[i * n + labels[i]] -= node.grad[0] / (p * static_cast<T>(m));
    }
  });
}

template <class T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  detail::require(!parts.empty(), "concat_cols of nothing");
  const std::size_t m = parts[0].rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    detail::require(p.rows() == m, "concat_cols row counts differ");
    widths.push_back(p.cols());
    total += p.cols();
  }
  Tensor<T> out({m, total});
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(parts[k].value().data() + i * widths[k], widths[k], out.data() + i * total + off);
    off += widths[k];
  }
  return make_result<T>(std::move(out), parts, [m, total, widths](Node<T>& node) {
    std::size_t o = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      if (detail::wants(node, k)) {
        auto& g = detail::pgrad(node, k);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) g[i * widths[k] + j] += node.grad[i * total + o + j];
      }
      o += widths[k];
    }
  });
}

template <class T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  detail::require(!parts.empty(), "concat_rows of nothing");
  const std::size_t n = parts[0].cols();
  std::size_t total = 0;
  std::vector<std::size_t> sizes;
  for (const auto& p : parts) {
    detail::require(p.cols() == n, "concat_rows column counts differ");
    sizes.push_back(p.value().size());
    total += p.rows();
  }
  Tensor<T> out({total, n});
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy_n(p.value().data(), p.value().size(), out.data() + off);
    off += p.value().size();
  }
  return make_result<T>(std::move(out), parts, [sizes](Node<T>& node) {
    std::size_t o = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (detail::wants(node, k)) {
        auto& g = detail::pgrad(node, k);
        for (std::size_t i = 0; i < sizes[k]; ++i) g[i] += node.grad[o + i];
      }
      o += sizes[k];
    }
  });
}

template <class T>
Var<T> slice_cols(const Var<T>& x, std::size_t start, std::size_t len) {
  const std::size_t m = x.rows(), n = x.cols();
  detail::require(start + len <= n && len > 0, "slice_cols out of range");
  Tensor<T> out({m, len});
  for (std::size_t i = 0; i < m; ++i) std::copy_n(x.value().data() + i * n + start, len, out.data() + i * len);
  return make_result<T>(std::move(out), {x}, [m, n, start, len](Node<T>& node) {
    auto& g = detail::pgrad(node, 0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < len; ++j) g[i * n + start + j] += node.grad[i * len + j];
  });
}

template <class T>
Var<T> slice_rows(const Var<T>& x, std::size_t start, std::size_t len) {
  const std::size_t m = x.rows(), n = x.cols();
  detail::require(start + len <= m && len > 0, "slice_rows out of range");
  Tensor<T> out({len, n});
  std::copy_n(x.value().data() + start * n, len * n, out.data());
  return make_result<T>(std::move(out), {x}, [n, start, len](Node<T>& node) {
    auto& g = detail::pgrad(node, 0);
    for (std::size_t i = 0; i < len * n; ++i) g[start * n + i] += node.grad[i];
  });
}

// Row-wise layer normalisation with learned gain and bias (biased variance).
template <class T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias, T eps = T(1e-5)) {
  const std::size_t m = x.rows(), n = x.cols();
  detail::require(gain.value().size() == n && bias.value().size() == n, "layer_norm parameter width mismatch");
  Tensor<T> out(x.shape());
  Tensor<T> xhat({m, n});
  std::vector<T> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const T* row = x.value().data() + i * n;
    T mu{0};
    for (std::size_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<T>(n);
    T var{0};
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(n);
    inv_std[i] = T{1} / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mu) * inv_std[i];
      out[i * n + j] = xhat[i * n + j] * gain.value()[j] + bias.value()[j];
    }
  }
  return make_result<T>(std::move(out), {x, gain, bias},
                        [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& node) {
                          const auto& gv = node.parents[1]->value;
                          for (std::size_t i = 0; i < m; ++i) {
                            const T* gy = node.grad.data() + i * n;
                            const T* xh = xhat.data() + i * n;
                            if (detail::wants(node, 1)) {
                              auto& gg = detail::pgrad(node, 1);
                              for (std::size_t j = 0; j < n; ++j) gg[j] += gy[j] * xh[j];
                            }
                            if (detail::wants(node, 2)) {
                              auto& gb = detail::pgrad(node, 2);
                              for (std::size_t j = 0; j < n; ++j) gb[j] += gy[j];
                            }
                            if (detail::wants(node, 0)) {
                              T s1{0}, s2{0};
                              for (std::size_t j = 0; j < n; ++j) {
                                const T d = gy[j] * gv[j];
                                s1 += d;
                                s2 += d * xh[j];
                              }
                              auto& gx = detail::pgrad(node, 0);
                              const T inv_n = T{1} / static_cast<T>(n);
                              for (std::size_t j = 0; j < n; ++j) {
                                const T d = gy[j] * gv[j];
                                gx[i * n + j] += inv_std[i] * (d - inv_n * s1 - xh[j] * inv_n * s2);
                              }
                            }
                          }
                        });
}

// Inverted dropout: kept entries are scaled by 1 / (1 - p).
template <class T>
Var<T> dropout(const Var<T>& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  Tensor<T> mask(x.shape());
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    mask[i] = rng.uniform() >= p ? keep_scale : T{0};
    out[i] = x.value()[i] * mask[i];
  }
  return make_result<T>(std::move(out), {x}, [mask = std::move(mask)](Node<T>& node) {
    auto& g = detail::pgrad(node, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i] * mask[i];
  });
}

struct Conv2dGeometry {
  std::size_t batch, in_ch, height, width, out_ch, kernel, stride, padding, out_h, out_w;
};

// Cross-correlation of x[B x C x H x W] (or [C x H x W]) with
// kernels[F x C x k x k] plus bias[F]:
//   out[b,f,y,x] = bias[f] + sum_{c,i,j} in[b,c,y*s+i-p,x*s+j-p] * kern[f,c,i,j]
// with zero padding. Output is [B x F x H' x W'], H' = (H + 2p - k)/s + 1.
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernels, const Var<T>& bias, std::size_t stride = 1,
              std::size_t padding = 0) {
  const auto& xs = x.shape();
  const auto& ks = kernels.shape();
  detail::require(xs.size() == 3 || xs.size() == 4, "conv2d input must be [C,H,W] or [B,C,H,W]");
  detail::require(ks.size() == 4 && ks[2] == ks[3], "conv2d kernels must be [F,C,k,k]");
  const bool batched = xs.size() == 4;
  Conv2dGeometry g{};
  g.batch = batched ? xs[0] : 1;
  g.in_ch = xs[batched ? 1 : 0];
  g.height = xs[batched ? 2 : 1];
  g.width = xs[batched ? 3 : 2];
  g.out_ch = ks[0];
  g.kernel = ks[2];
  g.stride = stride;
  g.padding = padding;
  detail::require(ks[1] == g.in_ch, "conv2d kernel channels do not match input channels");
  detail::require(g.kernel % 2 == 1, "conv2d kernel size must be odd");
  detail::require(stride >= 1, "conv2d stride must be positive");
  detail::require(bias.value().size() == g.out_ch, "conv2d bias length must equal filter count");
  const std::size_t ph = g.height + 2 * padding, pw = g.width + 2 * padding;
  detail::require(ph >= g.kernel && pw >= g.kernel, "conv2d input smaller than kernel after padding");
  detail::require((ph - g.kernel) % stride == 0 && (pw - g.kernel) % stride == 0,
                  "conv2d stride does not divide the padded extent");
  g.out_h = (ph - g.kernel) / stride + 1;
  g.out_w = (pw - g.kernel) / stride + 1;

  Shape out_shape = batched ? Shape{g.batch, g.out_ch, g.out_h, g.out_w} : Shape{g.out_ch, g.out_h, g.out_w};
  Tensor<T> out(out_shape);
  const T* in = x.value().data();
  const T* kw = kernels.value().data();
  const T* bv = bias.value().data();
  const std::size_t kk = g.kernel;
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t f = 0; f < g.out_ch; ++f)
      for (std::size_t oy = 0; oy < g.out_h; ++oy)
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          T acc = bv[f];
          for (std::size_t c = 0; c < g.in_ch; ++c)
            for (std::size_t i = 0; i < kk; ++i) {
              const long iy = static_cast<long>(oy * stride + i) - static_cast<long>(padding);
              if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
              for (std::size_t j = 0; j < kk; ++j) {
                const long ix = static_cast<long>(ox * stride + j) - static_cast<long>(padding);
                if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
                acc += in[((b * g.in_ch + c) * g.height + iy) * g.width + ix] *
                       kw[((f * g.in_ch + c) * kk + i) * kk + j];
              }
            }
          out[((b * g.out_ch + f) * g.out_h + oy) * g.out_w + ox] = acc;
        }

  return make_result<T>(std::move(out), {x, kernels, bias}, [g](Node<T>& node) {
    const T* in = node.parents[0]->value.data();
    const T* kw = node.parents[1]->value.data();
    const bool gx = detail::wants(node, 0), gk = detail::wants(node, 1), gb = detail::wants(node, 2);
    T* dx = gx ? detail::pgrad(node, 0).data() : nullptr;
    T* dk = gk ? detail::pgrad(node, 1).data() : nullptr;
    T* db = gb ? detail::pgrad(node, 2).data() : nullptr;
    const std::size_t kk = g.kernel;
    for (std::size_t b = 0; b < g.batch; ++b)
      for (std::size_t f = 0; f < g.out_ch; ++f)
        for (std::size_t oy = 0; oy < g.out_h; ++oy)
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const T go = node.grad[((b * g.out_ch + f) * g.out_h + oy) * g.out_w + ox];
            if (go == T{0}) continue;
            if (gb) db[f] += go;
            for (std::size_t c = 0; c < g.in_ch; ++c)
              for (std::size_t i = 0; i < kk; ++i) {
                const long iy = static_cast<long>(oy * g.stride + i) - static_cast<long>(g.padding);
                if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
                for (std::size_t j = 0; j < kk; ++j) {
                  const long ix = static_cast<long>(ox * g.stride + j) - static_cast<long>(g.padding);
                  if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
                  const std::size_t ii = ((b * g.in_ch + c) * g.height + iy) * g.width + ix;
                  const std::size_t ki = ((f * g.in_ch + c) * kk + i) * kk + j;
                  if (gk) dk[ki] += go * in[ii];
                  if (gx) dx[ii] += go * kw[ki];
                }
              }
          }
  });
}

// 2x2 max pooling with stride 2 over [B x C x H x W] (or [C x H x W]). The
// gradient goes to the first maximal position in row-major window order.
template <class T>
Var<T> maxpool2d(const Var<T>& x) {
  const auto& xs = x.shape();
  detail::require(xs.size() == 3 || xs.size() == 4, "maxpool2d input must be [C,H,W] or [B,C,H,W]");
  const bool batched = xs.size() == 4;
  const std::size_t planes = batched ? xs[0] * xs[1] : xs[0];
  const std::size_t h = xs[batched ? 2 : 1], w = xs[batched ? 3 : 2];
  detail::require(h % 2 == 0 && w % 2 == 0, "maxpool2d needs even spatial extents, got " + to_string(xs));
  const std::size_t oh = h / 2, ow = w / 2;
  Shape os = xs;
  os[os.size() - 2] = oh;
  os[os.size() - 1] = ow;
  Tensor<T> out(os);
  std::vector<std::size_t> argmax(out.size());
  const T* in = x.value().data();
  for (std::size_t p = 0; p < planes; ++p)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = p * h * w + (2 * oy) * w + 2 * ox;
        for (std::size_t i = 0; i < 2; ++i)
          for (std::size_t j = 0; j < 2; ++j) {
            const std::size_t idx = p * h * w + (2 * oy + i) * w + (2 * ox + j);
            if (in[idx] > in[best]) best = idx;
          }
        const std::size_t o = p * oh * ow + oy * ow + ox;
        out[o] = in[best];
        argmax[o] = best;
      }
  return make_result<T>(std::move(out), {x}, [argmax = std::move(argmax)](Node<T>& node) {
    auto& g = detail::pgrad(node, 0);
    for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += node.grad[o];
  });
}

// Graph attention aggregation over complete graphs with self-loops. Rows of
// `h` are nodes, grouped `group` at a time into independent graphs (one per
// sample). With e_ij = leaky_relu(src_i + dst_j) for i, j in the same graph,
//   alpha_ij = exp(e_ij) / sum_k exp(e_ik),   out_i = sum_j alpha_ij h_j.
// `src` and `dst` are [rows x 1] (a_1^T h_i and a_2^T h_j). When `alpha_out`
// is given it receives the [rows x group] coefficient matrix.
template <class T>
Var<T> graph_attention(const Var<T>& h, const Var<T>& src, const Var<T>& dst, std::size_t group, T slope,
                       Tensor<T>* alpha_out = nullptr) {
  const std::size_t rows = h.rows(), f = h.cols();
  detail::require(group > 0 && rows % group == 0, "graph_attention: row count not divisible by node count");
  detail::require(src.value().size() == rows && dst.value().size() == rows, "graph_attention score length mismatch");
  const std::size_t graphs = rows / group;
  Tensor<T> alpha({rows, group});
  Tensor<T> pre({rows, group});
  Tensor<T> out({rows, f});
  const auto& hv = h.value();
  for (std::size_t b = 0; b < graphs; ++b)
    for (std::size_t i = 0; i < group; ++i) {
      const std::size_t r = b * group + i;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t j = 0; j < group; ++j) {
        const T e = src.value()[r] + dst.value()[b * group + j];
        pre[r * group + j] = e;
        const T l = e > T{0} ? e : slope * e;
        alpha[r * group + j] = l;
        mx = std::max(mx, l);
      }
      T z{0};
      for (std::size_t j = 0; j < group; ++j) z += (alpha[r * group + j] = std::exp(alpha[r * group + j] - mx));
      for (std::size_t j = 0; j < group; ++j) {
        const T a = (alpha[r * group + j] /= z);
        const T* hj = hv.data() + (b * group + j) * f;
        for (std::size_t c = 0; c < f; ++c) out[r * f + c] += a * hj[c];
      }
    }
  if (alpha_out) *alpha_out = alpha;
  return make_result<T>(
      std::move(out), {h, src, dst},
      [rows, f, group, slope, alpha = std::move(alpha), pre = std::move(pre)](Node<T>& node) {
        const auto& hv = node.parents[0]->value;
        const bool gh = detail::wants(node, 0), gs = detail::wants(node, 1), gd = detail::wants(node, 2);
        std::vector<T> dalpha(group);
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t base = (r / group) * group;
          const T* go = node.grad.data() + r * f;
          T weighted{0};
          for (std::size_t j = 0; j < group; ++j) {
            const T* hj = hv.data() + (base + j) * f;
            T d{0};
            for (std::size_t c = 0; c < f; ++c) d += go[c] * hj[c];
            dalpha[j] = d;
            weighted += alpha[r * group + j] * d;
            if (gh) {
              auto& g = detail::pgrad(node, 0);
              const T a = alpha[r * group + j];
              for (std::size_t c = 0; c < f; ++c) g[(base + j) * f + c] += a * go[c];
            }
          }
          for (std::size_t j = 0; j < group; ++j) {
            const T dl = alpha[r * group + j] * (dalpha[j] - weighted);
            const T de = dl * (pre[r * group + j] > T{0} ? T{1} : slope);
            if (gs) detail::pgrad(node, 1)[r] += de;
            if (gd) detail::pgrad(node, 2)[base + j] += de;
          }
        }
      });
}

}  // namespace creditarf::nx
