#include "creditarf/arf/encoder.hpp"

#include "creditarf/error.hpp"

namespace creditarf::arf {

ArfConfig ArfConfig::paper_scale() {
  ArfConfig c;
  c.embed_dim = 1024;
  c.att_dim = 128;
  return c;
}

void ArfConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw InputError("arf config: " + what);
  };
  need(embed_dim >= 1, "embed_dim must be >= 1");
  need(att_dim >= 1, "att_dim must be >= 1");
  need(output_dim >= 1, "output_dim must be >= 1");
  need(max_tokens >= 1, "max_tokens must be >= 1");
  need(batch_size >= 1, "batch_size must be >= 1");
  need(min_tokens >= 1, "min_tokens must be >= 1");
  need(heads >= 1 && (2 * embed_dim) % heads == 0, "2 * embed_dim must be divisible by heads");
}

template <class T>
ReportEncoder<T>::ReportEncoder(ParameterSet<T>& params, const std::string& name, const ArfConfig& config, Rng& rng)
    : config_(config) {
  config.validate();
  const std::size_t m = config.embed_dim, d = 2 * m;
  context_ = nx::BiGru<T>(params, name + ".context", m, m, rng);
  attention_ = nx::SentenceAttention<T>(params, name + ".attention", d, config.att_dim, rng);
  for (std::size_t b = 0; b < config.blocks; ++b) {
    blocks_.emplace_back(params, name + ".block" + std::to_string(b), d, config.heads, 2 * d, rng);
  }
  projection_ = nx::Linear<T>(params, name + ".projection", d, config.output_dim, rng);
}

template <class T>
Var<T> ReportEncoder<T>::forward(const Var<T>& embeddings, Trace* trace) const {
  if (!embeddings.defined() || embeddings.value().empty()) throw InputError("report has no sentence embeddings");
  if (embeddings.value().rank() != 2 || embeddings.cols() != config_.embed_dim) {
    throw ShapeError("sentence embeddings must be [n x " + std::to_string(config_.embed_dim) + "], got " +
                     nx::to_string(embeddings.shape()));
  }
  std::vector<Var<T>> paragraphs;
  for (const auto& r : batch_ranges(embeddings.rows(), config_.batch_size)) {
    auto ctx = context_.forward(nx::slice_rows(embeddings, r.begin, r.end - r.begin));
    auto att = attention_.forward(ctx);
    if (trace) {
      trace->contexts.push_back(ctx);
      trace->attention_weights.push_back(att.weights);
    }
    paragraphs.push_back(att.paragraph);
  }
  return document(nx::concat_rows(paragraphs), trace);
}

template <class T>
Var<T> ReportEncoder<T>::document(const Var<T>& paragraphs, Trace* trace) const {
  Var<T> h = paragraphs;
  for (const auto& block : blocks_) h = block.forward(h);
  auto pooled = nx::mean_rows(h);
  if (trace) {
    trace->paragraphs = paragraphs;
    trace->transformed = h;
    trace->pooled = pooled;
  }
  return projection_.forward(pooled);
}

template class ReportEncoder<float>;
template class ReportEncoder<double>;

std::vector<float> extract_arf(const ReportEncoder<float>& encoder, const EmbeddingProvider& provider,
                               const ReportDocument& doc) {
  if (provider.dim() != encoder.config().embed_dim) {
    throw InputError("embedding provider dimension " + std::to_string(provider.dim()) +
                     " does not match configured m = " + std::to_string(encoder.config().embed_dim));
  }
  nx::NoGradGuard no_grad;
  auto rows = provider.embed(doc);
  if (!rows.all_finite()) throw NumericError("non-finite sentence embedding for " + doc.key());
  const auto out = encoder.forward(nx::constant(std::move(rows)));
  if (!out.value().all_finite()) throw NumericError("non-finite report vector for " + doc.key());
  return out.value().values();
}

}  // namespace creditarf::arf
