#include "creditarf/numerics/layers.hpp"

#include <cmath>

namespace creditarf::nx {

template <class T>
Tensor<T> init_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor<T> t(std::move(shape));
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in == 0 ? 1 : fan_in));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <class T>
Linear<T>::Linear(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : in_(in), out_(out) {
  weight_ = params.add(name + ".weight", init_uniform<T>({in, out}, in, rng));
  bias_ = params.add(name + ".bias", init_uniform<T>({out}, in, rng));
}

template <class T>
Var<T> Linear<T>::forward(const Var<T>& x) const {
  return add_bias(matmul(x, weight_), bias_);
}

template <class T>
GruCell<T>::GruCell(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng)
    : in_(in), hidden_(hidden) {
  wx_ = params.add(name + ".wx", init_uniform<T>({in, 3 * hidden}, in, rng));
  wh_ = params.add(name + ".wh", init_uniform<T>({hidden, 3 * hidden}, hidden, rng));
  bx_ = params.add(name + ".bx", init_uniform<T>({3 * hidden}, hidden, rng));
  bh_ = params.add(name + ".bh", init_uniform<T>({3 * hidden}, hidden, rng));
}

template <class T>
Var<T> GruCell<T>::step(const Var<T>& x, const Var<T>& h) const {
  const std::size_t n = hidden_;
  auto gx = add_bias(matmul(x, wx_), bx_);
  auto gh = add_bias(matmul(h, wh_), bh_);
  auto r = sigmoid(add(slice_cols(gx, 0, n), slice_cols(gh, 0, n)));
  auto z = sigmoid(add(slice_cols(gx, n, n), slice_cols(gh, n, n)));
  auto cand = tanh(add(slice_cols(gx, 2 * n, n), mul(r, slice_cols(gh, 2 * n, n))));
  // (1 - z) * cand + z * h  ==  cand + z * (h - cand)
  return add(cand, mul(z, sub(h, cand)));
}

template <class T>
BiGru<T>::BiGru(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng)
    : fwd_(params, name + ".fwd", in, hidden, rng), bwd_(params, name + ".bwd", in, hidden, rng) {}

template <class T>
Var<T> BiGru<T>::forward(const Var<T>& seq) const {
  if (!seq.defined() || seq.value().empty()) throw ShapeError("bi-GRU over an empty sequence");
  const std::size_t len = seq.rows();
  std::vector<Var<T>> rows(len);
  for (std::size_t s = 0; s < len; ++s) rows[s] = slice_rows(seq, s, 1);

  std::vector<Var<T>> fwd(len), bwd(len);
  Var<T> h = constant(Tensor<T>({1, fwd_.hidden()}));
  for (std::size_t s = 0; s < len; ++s) h = fwd[s] = fwd_.step(rows[s], h);
  h = constant(Tensor<T>({1, bwd_.hidden()}));
  for (std::size_t s = len; s-- > 0;) h = bwd[s] = bwd_.step(rows[s], h);
  return concat_cols<T>({concat_rows(fwd), concat_rows(bwd)});
}

template <class T>
LstmCell<T>::LstmCell(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t hidden,
                      Rng& rng)
    : in_(in), hidden_(hidden) {
  wx_ = params.add(name + ".wx", init_uniform<T>({in, 4 * hidden}, in, rng));
  wh_ = params.add(name + ".wh", init_uniform<T>({hidden, 4 * hidden}, hidden, rng));
  auto bias = init_uniform<T>({4 * hidden}, hidden, rng);
  // Forget-gate bias starts at 1 so early steps survive a long sequence.
  for (std::size_t k = hidden; k < 2 * hidden; ++k) bias[k] += T{1};
  b_ = params.add(name + ".b", std::move(bias));
}

template <class T>
std::pair<Var<T>, Var<T>> LstmCell<T>::step(const Var<T>& x, const Var<T>& h, const Var<T>& c) const {
  const std::size_t n = hidden_;
  auto gates = add_bias(add(matmul(x, wx_), matmul(h, wh_)), b_);
  auto i = sigmoid(slice_cols(gates, 0, n));
  auto f = sigmoid(slice_cols(gates, n, n));
  auto g = tanh(slice_cols(gates, 2 * n, n));
  auto o = sigmoid(slice_cols(gates, 3 * n, n));
  auto c_next = add(mul(f, c), mul(i, g));
  auto h_next = mul(o, tanh(c_next));
  return {h_next, c_next};
}

template <class T>
Lstm<T>::Lstm(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng)
    : cell_(params, name, in, hidden, rng) {}

template <class T>
Var<T> Lstm<T>::forward(const std::vector<Var<T>>& steps) const {
  if (steps.empty()) throw ShapeError("LSTM over an empty sequence");
  const std::size_t batch = steps.front().rows();
  Var<T> h = constant(Tensor<T>({batch, cell_.hidden()}));
  Var<T> c = constant(Tensor<T>({batch, cell_.hidden()}));
  for (const auto& x : steps) std::tie(h, c) = cell_.step(x, h, c);
  return h;
}

template <class T>
Var<T> Lstm<T>::forward(const Var<T>& seq) const {
  if (!seq.defined() || seq.value().empty()) throw ShapeError("LSTM over an empty sequence");
  std::vector<Var<T>> steps;
  for (std::size_t t = 0; t < seq.rows(); ++t) steps.push_back(slice_rows(seq, t, 1));
  return forward(steps);
}

template <class T>
LayerNorm<T>::LayerNorm(ParameterSet<T>& params, const std::string& name, std::size_t dim) {
  gain_ = params.add(name + ".gain", Tensor<T>({dim}, T{1}));
  bias_ = params.add(name + ".bias", Tensor<T>({dim}, T{0}));
}

template <class T>
MultiHeadSelfAttention<T>::MultiHeadSelfAttention(ParameterSet<T>& params, const std::string& name, std::size_t dim,
                                                  std::size_t heads, Rng& rng)
    : dim_(dim), heads_(heads) {
  if (heads == 0 || dim % heads != 0) {
    throw ShapeError("attention width " + std::to_string(dim) + " is not divisible by " + std::to_string(heads) +
                     " heads");
  }
  q_ = Linear<T>(params, name + ".q", dim, dim, rng);
  k_ = Linear<T>(params, name + ".k", dim, dim, rng);
  v_ = Linear<T>(params, name + ".v", dim, dim, rng);
  o_ = Linear<T>(params, name + ".o", dim, dim, rng);
}

template <class T>
Var<T> MultiHeadSelfAttention<T>::forward(const Var<T>& x) const {
  if (x.cols() != dim_) throw ShapeError("attention input width mismatch");
  const std::size_t dh = dim_ / heads_;
  const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  auto q = q_.forward(x);
  auto k = k_.forward(x);
  auto v = v_.forward(x);
  std::vector<Var<T>> outs;
  outs.reserve(heads_);
  for (std::size_t h = 0; h < heads_; ++h) {
    auto qh = slice_cols(q, h * dh, dh);
    auto kh = slice_cols(k, h * dh, dh);
    auto vh = slice_cols(v, h * dh, dh);
    auto weights = softmax_rows(scale(matmul(qh, transpose(kh)), inv_sqrt));
    outs.push_back(matmul(weights, vh));
  }
  return o_.forward(heads_ == 1 ? outs.front() : concat_cols(outs));
}

template <class T>
TransformerBlock<T>::TransformerBlock(ParameterSet<T>& params, const std::string& name, std::size_t dim,
                                      std::size_t heads, std::size_t ffn_dim, Rng& rng)
    : attn_(params, name + ".attn", dim, heads, rng),
      ln1_(params, name + ".ln1", dim),
      ln2_(params, name + ".ln2", dim),
      ff1_(params, name + ".ff1", dim, ffn_dim, rng),
      ff2_(params, name + ".ff2", ffn_dim, dim, rng) {}

template <class T>
Var<T> TransformerBlock<T>::forward(const Var<T>& x) const {
  auto y = ln1_.forward(add(x, attn_.forward(x)));
  return ln2_.forward(add(y, ff2_.forward(relu(ff1_.forward(y)))));
}

template <class T>
GatLayer<T>::GatLayer(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t out,
                      double slope, Rng& rng)
    : slope_(slope) {
  theta_ = params.add(name + ".theta", init_uniform<T>({in, out}, in, rng));
  a_src_ = params.add(name + ".a_src", init_uniform<T>({out, 1}, 2 * out, rng));
  a_dst_ = params.add(name + ".a_dst", init_uniform<T>({out, 1}, 2 * out, rng));
}

template <class T>
Var<T> GatLayer<T>::forward(const Var<T>& nodes, std::size_t graph_size, Tensor<T>* alpha_out) const {
  auto projected = matmul(nodes, theta_);
  auto src = matmul(projected, a_src_);
  auto dst = matmul(projected, a_dst_);
  return graph_attention(projected, src, dst, graph_size, static_cast<T>(slope_), alpha_out);
}

template <class T>
SentenceAttention<T>::SentenceAttention(ParameterSet<T>& params, const std::string& name, std::size_t in,
                                        std::size_t att_dim, Rng& rng) {
  w_ = params.add(name + ".w", init_uniform<T>({in, att_dim}, in, rng));
  b_ = params.add(name + ".b", init_uniform<T>({att_dim}, in, rng));
  u_ = params.add(name + ".u", init_uniform<T>({att_dim, 1}, att_dim, rng));
}

template <class T>
typename SentenceAttention<T>::Result SentenceAttention<T>::forward(const Var<T>& context) const {
  const std::size_t len = context.rows();
  auto u = tanh(add_bias(matmul(context, w_), b_));
  auto scores = reshape(matmul(u, u_), {1, len});
  auto weights = softmax_rows(scores);
  return {weights, matmul(weights, context)};
}

#define CREDITARF_INSTANTIATE_LAYERS(T)                                     \
  template Tensor<T> init_uniform<T>(Shape, std::size_t, Rng&);           \
  template class Linear<T>;                                                \
  template class GruCell<T>;                                               \
  template class BiGru<T>;                                                 \
  template class LstmCell<T>;                                              \
  template class Lstm<T>;                                                  \
  template class LayerNorm<T>;                                             \
  template class MultiHeadSelfAttention<T>;                                \
  template class TransformerBlock<T>;                                      \
  template class GatLayer<T>;                                              \
  template class SentenceAttention<T>;

CREDITARF_INSTANTIATE_LAYERS(float)
CREDITARF_INSTANTIATE_LAYERS(double)

}  // namespace creditarf::nx
