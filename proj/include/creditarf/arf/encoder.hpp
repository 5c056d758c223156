#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "creditarf/arf/embedding.hpp"
#include "creditarf/arf/text.hpp"
#include "creditarf/numerics.hpp"

namespace creditarf::arf {

using nx::ParameterSet;
using nx::Rng;
using nx::Var;

struct ArfConfig {
  std::size_t embed_dim = 32;  // m
  std::size_t att_dim = 16;
  std::size_t max_tokens = 512;
  std::size_t batch_size = 50;
  std::size_t min_tokens = 2;
  std::size_t blocks = 2;
  std::size_t heads = 4;
  std::size_t output_dim = 1536;  // d_A
  std::uint64_t provider_seed = 0;

  // m = 1024, attention dimension 128
  static ArfConfig paper_scale();
  void validate() const;
};

// Hierarchical report encoder. Per batch of at most batch_size sentence rows:
// bidirectional GRU context, then sentence attention pooling to one paragraph
// row. Paragraph rows pass through transformer blocks, are mean-pooled and
// projected to output_dim.
template <class T>
class ReportEncoder {
 public:
  ReportEncoder() = default;
  ReportEncoder(ParameterSet<T>& params, const std::string& name, const ArfConfig& config, Rng& rng);

  // Per-stage intermediates of one forward pass.
  struct Trace {
    std::vector<Var<T>> contexts;           // [L x 2m] per batch
    std::vector<Var<T>> attention_weights;  // [1 x L] per batch
    Var<T> paragraphs;                      // [N_b x 2m]
    Var<T> transformed;                     // [N_b x 2m]
    Var<T> pooled;                          // [1 x 2m]
  };

  // embeddings[n x m] -> [1 x output_dim]
  Var<T> forward(const Var<T>& embeddings, Trace* trace = nullptr) const;

  // paragraphs[N_b x 2m] -> [1 x output_dim]
  Var<T> document(const Var<T>& paragraphs, Trace* trace = nullptr) const;

  const ArfConfig& config() const { return config_; }
  const nx::BiGru<T>& context() const { return context_; }
  const nx::SentenceAttention<T>& attention() const { return attention_; }
  const std::vector<nx::TransformerBlock<T>>& blocks() const { return blocks_; }
  const nx::Linear<T>& projection() const { return projection_; }

 private:
  ArfConfig config_;
  nx::BiGru<T> context_;
  nx::SentenceAttention<T> attention_;
  std::vector<nx::TransformerBlock<T>> blocks_;
  nx::Linear<T> projection_;
};

// Embeds the document with the provider and runs the encoder without
// recording gradients.
std::vector<float> extract_arf(const ReportEncoder<float>& encoder, const EmbeddingProvider& provider,
                               const ReportDocument& doc);

}  // namespace creditarf::arf
