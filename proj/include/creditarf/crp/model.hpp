#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "creditarf/arf/embedding.hpp"
#include "creditarf/arf/encoder.hpp"
#include "creditarf/dataset/rating.hpp"
#include "creditarf/dataset/sample.hpp"
#include "creditarf/fnf/encoders.hpp"
#include "creditarf/numerics.hpp"

namespace creditarf::crp {

using nx::ParameterSet;
using nx::Rng;
using nx::Tensor;
using nx::Var;

// precompute: stored report vectors pass through a trainable adapter.
// end_to_end: the report encoder runs on sentence embeddings and trains.
enum class PipelineMode { precompute, end_to_end };

std::string_view to_string(PipelineMode mode);
PipelineMode pipeline_mode_from_string(std::string_view name);

struct CrpConfig {
  std::vector<std::size_t> hidden = {256, 64};  // empty: multinomial logistic regression
  double dropout = 0.2;
  std::size_t adapter_dim = 128;
  PipelineMode mode = PipelineMode::precompute;
  bool financial_only = false;

  void validate() const;
};

struct ModelSpec {
  fnf::FnfConfig fnf;
  arf::ArfConfig arf;
  CrpConfig crp;
  std::size_t n_features = 16;
  std::size_t arf_input_dim = 1536;  // stored report vector length, precompute mode
  std::uint64_t init_seed = 0;
  std::uint64_t projection_seed = 0;

  // Width of the fused vector fed to the head.
  std::size_t fused_dim() const;
  void validate() const;
  // FNV-1a of the canonical JSON form.
  std::uint64_t digest() const;
};

// Z = [xf ; xa]; an undefined xa yields xf.
template <class T>
Var<T> fuse(const Var<T>& xf, const Var<T>& xa) {
  if (!xa.defined()) return xf;
  return nx::concat_cols<T>({xf, xa});
}

// relu hidden layers with inverted dropout while training, then a linear
// layer to the class logits.
template <class T>
class MlpHead {
 public:
  MlpHead() = default;
  MlpHead(ParameterSet<T>& params, const std::string& name, std::size_t in, const std::vector<std::size_t>& hidden,
          std::size_t classes, double dropout, Rng& rng);

  Var<T> logits(const Var<T>& z, bool training = false, Rng* dropout_rng = nullptr) const;
  Var<T> forward(const Var<T>& z, bool training = false, Rng* dropout_rng = nullptr) const {
    return nx::softmax_rows(logits(z, training, dropout_rng));
  }

  const std::vector<nx::Linear<T>>& hidden_layers() const { return hidden_; }
  const nx::Linear<T>& output_layer() const { return out_; }
  std::size_t input_dim() const { return in_; }

 private:
  std::size_t in_ = 0;
  double dropout_ = 0.0;
  std::vector<nx::Linear<T>> hidden_;
  nx::Linear<T> out_;
};

// argmax, ties to the lowest index
template <class T>
data::RatingClass predict_class(std::span<const T> probs) {
  if (probs.size() != data::kNumClasses) throw ShapeError("expected 7 class probabilities");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return data::class_from_index(best);
}

template <class T>
struct Batch {
  Tensor<T> financial;                  // [B x n_features]
  Tensor<T> arf;                        // [B x arf_input_dim], precompute mode
  std::vector<Tensor<float>> sentences;  // per sample [n x m], end-to-end mode
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }
};

// Gathers samples[idx] into model inputs. Throws ModeError when a sample
// lacks what the spec's mode needs, InputError for a missing cache entry.
template <class T>
Batch<T> make_batch(const std::vector<data::Sample>& samples, std::span<const std::size_t> idx, const ModelSpec& spec,
                    const arf::ArfeCache* sentence_cache = nullptr);

template <class T>
class CreditModel {
 public:
  explicit CreditModel(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  ParameterSet<T>& parameters() { return params_; }
  const ParameterSet<T>& parameters() const { return params_; }

  // Fused feature matrix Z for a batch.
  Var<T> fused(const Batch<T>& batch) const;
  Var<T> logits(const Batch<T>& batch, bool training = false, Rng* dropout_rng = nullptr) const;
  Var<T> probabilities(const Batch<T>& batch, bool training = false, Rng* dropout_rng = nullptr) const {
    return nx::softmax_rows(logits(batch, training, dropout_rng));
  }

  const fnf::FinancialEncoder<T>& encoder() const { return *encoder_; }
  const nx::Linear<T>* adapter() const { return adapter_ ? &*adapter_ : nullptr; }
  const arf::ReportEncoder<T>* report_encoder() const { return report_.get(); }
  const MlpHead<T>& head() const { return head_; }

 private:
  ModelSpec spec_;
  ParameterSet<T> params_;
  std::unique_ptr<fnf::FinancialEncoder<T>> encoder_;
  std::optional<nx::Linear<T>> adapter_;
  std::unique_ptr<arf::ReportEncoder<T>> report_;
  MlpHead<T> head_;
};

}  // namespace creditarf::crp
