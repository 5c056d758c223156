#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "creditarf/numerics.hpp"

namespace creditarf::fnf {

using nx::ParameterSet;
using nx::Rng;
using nx::Tensor;
using nx::Var;

// identity passes the standardized vector through; it backs the
// logistic-regression baseline.
enum class EncoderKind { identity, cnn, gnn, rnn };

std::string_view to_string(EncoderKind kind);
EncoderKind encoder_kind_from_string(std::string_view name);

struct FnfConfig {
  EncoderKind kind = EncoderKind::cnn;
  std::size_t output_dim = 64;
  // cnn
  std::size_t image_side = 8;
  std::size_t conv1_channels = 16;
  std::size_t conv2_channels = 32;
  std::size_t kernel = 3;
  // gnn
  std::size_t node_dim = 16;
  std::size_t gat_hidden = 16;
  double gat_slope = 0.2;
  // rnn
  std::size_t lstm_hidden = 64;
  std::size_t step_dim = 16;  // feature-index embedding plus one value slot

  void validate() const;
};

// Three channels of side x side integer cells in [0, 255], channel-major.
struct ImageEncoding {
  std::size_t side = 0;
  std::vector<std::uint8_t> cells;

  std::uint8_t at(std::size_t channel, std::size_t y, std::size_t x) const {
    return cells[(channel * side + y) * side + x];
  }
};

// Frozen seeded map from n features to 3*side^2 channel values; entries are
// normal(0, 1) / sqrt(n).
Tensor<double> make_projection(std::size_t n_features, std::size_t side, std::uint64_t seed);

std::vector<double> project_channels(const std::vector<double>& x, const Tensor<double>& projection);

// Per channel: round((v - min) / (max - min) * 255); a constant channel is all
// zeros.
ImageEncoding encode_image(const std::vector<double>& channels, std::size_t side);

template <class T>
class FinancialEncoder {
 public:
  virtual ~FinancialEncoder() = default;

  // x[B x n_features] -> [B x output_dim()]
  virtual Var<T> forward(const Var<T>& x) const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual EncoderKind kind() const = 0;
};

template <class T>
class IdentityEncoder final : public FinancialEncoder<T> {
 public:
  explicit IdentityEncoder(std::size_t n_features) : n_(n_features) {}
  Var<T> forward(const Var<T>& x) const override;
  std::size_t output_dim() const override { return n_; }
  EncoderKind kind() const override { return EncoderKind::identity; }

 private:
  std::size_t n_;
};

// conv -> relu -> pool -> conv -> relu -> pool -> flatten -> linear, applied
// to the frozen image encoding scaled to [0, 1].
template <class T>
class CnnEncoder final : public FinancialEncoder<T> {
 public:
  CnnEncoder(ParameterSet<T>& params, const std::string& name, const FnfConfig& config, std::size_t n_features,
             std::uint64_t projection_seed, Rng& rng);

  Var<T> forward(const Var<T>& x) const override;
  std::size_t output_dim() const override { return head_.out_features(); }
  EncoderKind kind() const override { return EncoderKind::cnn; }

  // [B x 3 x S x S] network input for a batch, no gradient.
  Tensor<T> images(const Tensor<T>& x) const;

  const Tensor<double>& projection() const { return projection_; }
  const Var<T>& conv1_kernels() const { return k1_; }
  const Var<T>& conv1_bias() const { return b1_; }
  const Var<T>& conv2_kernels() const { return k2_; }
  const Var<T>& conv2_bias() const { return b2_; }
  const nx::Linear<T>& head() const { return head_; }

 private:
  std::size_t side_, n_features_;
  Tensor<double> projection_;
  Var<T> k1_, b1_, k2_, b2_;
  nx::Linear<T> head_;
};

// Complete feature graph with self-loops. Node j of a sample carries its
// learned embedding scaled by the sample's j-th value; two GAT layers with ELU
// between them, mean-pool over nodes, linear head.
template <class T>
class GnnEncoder final : public FinancialEncoder<T> {
 public:
  GnnEncoder(ParameterSet<T>& params, const std::string& name, const FnfConfig& config, std::size_t n_features,
             Rng& rng);

  Var<T> forward(const Var<T>& x) const override;
  std::size_t output_dim() const override { return head_.out_features(); }
  EncoderKind kind() const override { return EncoderKind::gnn; }

  // [B*N x node_dim] initial node features.
  Var<T> node_features(const Var<T>& x) const;

  const Var<T>& embedding() const { return embedding_; }
  const nx::GatLayer<T>& layer1() const { return gat1_; }
  const nx::GatLayer<T>& layer2() const { return gat2_; }
  const nx::Linear<T>& head() const { return head_; }

 private:
  std::size_t n_features_;
  Var<T> embedding_;  // [N x node_dim]
  nx::GatLayer<T> gat1_, gat2_;
  nx::Linear<T> head_;
};

// Feature-index sequence: step j is (embedding_j (+) x_j); LSTM over the N
// steps, final hidden state through a linear head.
template <class T>
class RnnEncoder final : public FinancialEncoder<T> {
 public:
  RnnEncoder(ParameterSet<T>& params, const std::string& name, const FnfConfig& config, std::size_t n_features,
             Rng& rng);

  Var<T> forward(const Var<T>& x) const override;
  std::size_t output_dim() const override { return head_.out_features(); }
  EncoderKind kind() const override { return EncoderKind::rnn; }

  // One [B x step_dim] input per feature.
  std::vector<Var<T>> steps(const Var<T>& x) const;

  const Var<T>& embedding() const { return embedding_; }
  const nx::Lstm<T>& lstm() const { return lstm_; }
  const nx::Linear<T>& head() const { return head_; }

 private:
  std::size_t n_features_;
  Var<T> embedding_;  // [N x (step_dim - 1)]
  nx::Lstm<T> lstm_;
  nx::Linear<T> head_;
};

template <class T>
std::unique_ptr<FinancialEncoder<T>> make_encoder(ParameterSet<T>& params, const std::string& name,
                                                  const FnfConfig& config, std::size_t n_features,
                                                  std::uint64_t projection_seed, Rng& rng);

}  // namespace creditarf::fnf
