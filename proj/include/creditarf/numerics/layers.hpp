#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "creditarf/numerics/autograd.hpp"
#include "creditarf/numerics/ops.hpp"
#include "creditarf/numerics/rng.hpp"

namespace creditarf::nx {

enum class ActivationKind { tanh, relu, leaky_relu };

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double slope = 0.2;  // leaky_relu only
};

template <class T>
Var<T> activate(const Var<T>& x, Activation act) {
  switch (act.kind) {
    case ActivationKind::tanh:
      return tanh(x);
    case ActivationKind::relu:
      return relu(x);
    case ActivationKind::leaky_relu:
      return leaky_relu(x, static_cast<T>(act.slope));
  }
  return x;
}

// uniform(-sqrt(1/fan_in), +sqrt(1/fan_in))
template <class T>
Tensor<T> init_uniform(Shape shape, std::size_t fan_in, Rng& rng);

template <class T>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t out, Rng& rng);

  // x[B x in] -> [B x out]
  Var<T> forward(const Var<T>& x) const;

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  const Var<T>& weight() const { return weight_; }
  const Var<T>& bias() const { return bias_; }

 private:
  std::size_t in_ = 0, out_ = 0;
  Var<T> weight_;  // [in x out]
  Var<T> bias_;    // [out]
};

// Gated recurrent unit, gate blocks ordered (r, z, n):
//   r  = sigmoid(x Wx_r + bx_r + h Wh_r + bh_r)
//   z  = sigmoid(x Wx_z + bx_z + h Wh_z + bh_z)
//   n  = tanh(x Wx_n + bx_n + r * (h Wh_n + bh_n))
//   h' = (1 - z) * n + z * h
template <class T>
class GruCell {
 public:
  GruCell() = default;
  GruCell(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);

  // x[B x in], h[B x hidden] -> h'[B x hidden]
  Var<T> step(const Var<T>& x, const Var<T>& h) const;

  std::size_t hidden() const { return hidden_; }
  std::size_t input() const { return in_; }

 private:
  std::size_t in_ = 0, hidden_ = 0;
  Var<T> wx_, wh_, bx_, bh_;  // [in x 3h], [h x 3h], [3h], [3h]
};

// Forward and backward GRUs over one sequence, zero initial states. Row s of
// the output is fwd_s (+) bwd_s, where bwd runs from the last row to the first.
template <class T>
class BiGru {
 public:
  BiGru() = default;
  BiGru(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);

  // seq[L x in] -> [L x 2*hidden]
  Var<T> forward(const Var<T>& seq) const;

  const GruCell<T>& forward_cell() const { return fwd_; }
  const GruCell<T>& backward_cell() const { return bwd_; }

 private:
  GruCell<T> fwd_, bwd_;
};

// Long short-term memory cell, gate blocks ordered (i, f, g, o):
//   i = sigmoid(x Wx_i + h Wh_i + b_i)     f = sigmoid(x Wx_f + h Wh_f + b_f)
//   g = tanh(x Wx_g + h Wh_g + b_g)        o = sigmoid(x Wx_o + h Wh_o + b_o)
//   c' = f * c + i * g                     h' = o * tanh(c')
template <class T>
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);

  std::pair<Var<T>, Var<T>> step(const Var<T>& x, const Var<T>& h, const Var<T>& c) const;

  std::size_t hidden() const { return hidden_; }
  std::size_t input() const { return in_; }

 private:
  std::size_t in_ = 0, hidden_ = 0;
  Var<T> wx_, wh_, b_;  // [in x 4h], [h x 4h], [4h]
};

template <class T>
class Lstm {
 public:
  Lstm() = default;
  Lstm(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t hidden, Rng& rng);

  // One [B x in] input per time step; returns the final hidden state [B x hidden].
  Var<T> forward(const std::vector<Var<T>>& steps) const;
  // seq[T x in] as a single sequence; returns [1 x hidden].
  Var<T> forward(const Var<T>& seq) const;

  const LstmCell<T>& cell() const { return cell_; }

 private:
  LstmCell<T> cell_;
};

template <class T>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterSet<T>& params, const std::string& name, std::size_t dim);
  Var<T> forward(const Var<T>& x) const { return layer_norm(x, gain_, bias_); }

 private:
  Var<T> gain_, bias_;
};

// Scaled dot-product self-attention split over `heads` column blocks.
template <class T>
class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(ParameterSet<T>& params, const std::string& name, std::size_t dim, std::size_t heads,
                         Rng& rng);

  // x[N x d] -> [N x d]
  Var<T> forward(const Var<T>& x) const;

  const Linear<T>& query() const { return q_; }
  const Linear<T>& key() const { return k_; }
  const Linear<T>& value() const { return v_; }
  const Linear<T>& output() const { return o_; }
  std::size_t heads() const { return heads_; }

 private:
  std::size_t dim_ = 0, heads_ = 1;
  Linear<T> q_, k_, v_, o_;
};

// Post-norm encoder block without positional encoding:
//   y = LN1(x + MHA(x));  out = LN2(y + W2 relu(W1 y + b1) + b2)
template <class T>
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(ParameterSet<T>& params, const std::string& name, std::size_t dim, std::size_t heads,
                   std::size_t ffn_dim, Rng& rng);

  Var<T> forward(const Var<T>& x) const;

  const MultiHeadSelfAttention<T>& attention() const { return attn_; }
  const Linear<T>& ffn_in() const { return ff1_; }
  const Linear<T>& ffn_out() const { return ff2_; }
  const LayerNorm<T>& norm1() const { return ln1_; }
  const LayerNorm<T>& norm2() const { return ln2_; }

 private:
  MultiHeadSelfAttention<T> attn_;
  LayerNorm<T> ln1_, ln2_;
  Linear<T> ff1_, ff2_;
};

// One graph attention layer over complete graphs with self-loops. Parameters
// are the shared projection Theta [in x out] and the attention vector
// a = [a_src ; a_dst] of length 2*out.
template <class T>
class GatLayer {
 public:
  GatLayer() = default;
  GatLayer(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t out, double slope,
           Rng& rng);

  // nodes[B*d x in] holding B graphs of d nodes -> [B*d x out]
  Var<T> forward(const Var<T>& nodes, std::size_t graph_size, Tensor<T>* alpha_out = nullptr) const;

  const Var<T>& theta() const { return theta_; }
  const Var<T>& attn_src() const { return a_src_; }
  const Var<T>& attn_dst() const { return a_dst_; }
  double slope() const { return slope_; }

 private:
  double slope_ = 0.2;
  Var<T> theta_, a_src_, a_dst_;  // [in x out], [out x 1], [out x 1]
};

// Sentence-level additive attention:
//   u_s = tanh(x_s W + b),  alpha = softmax_s(u_s . U),  p = sum_s alpha_s x_s
template <class T>
class SentenceAttention {
 public:
  SentenceAttention() = default;
  SentenceAttention(ParameterSet<T>& params, const std::string& name, std::size_t in, std::size_t att_dim,
                    Rng& rng);

  struct Result {
    Var<T> weights;    // [1 x L]
    Var<T> paragraph;  // [1 x in]
  };
  Result forward(const Var<T>& context) const;

  const Var<T>& w() const { return w_; }
  const Var<T>& b() const { return b_; }
  const Var<T>& u() const { return u_; }

 private:
  Var<T> w_, b_, u_;  // [in x att], [att], [att x 1]
};

}  // namespace creditarf::nx
