#include "creditarf/crp/model.hpp"

#include "creditarf/config.hpp"
#include "creditarf/error.hpp"

namespace creditarf::crp {

std::string_view to_string(PipelineMode mode) {
  return mode == PipelineMode::precompute ? "precompute" : "end_to_end";
}

PipelineMode pipeline_mode_from_string(std::string_view name) {
  if (name == "precompute") return PipelineMode::precompute;
  if (name == "end_to_end") return PipelineMode::end_to_end;
  throw InputError("unknown pipeline mode '" + std::string(name) + "' (expected precompute or end_to_end)");
}

void CrpConfig::validate() const {
  for (auto w : hidden) {
    if (w == 0) throw InputError("crp config: hidden widths must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("crp config: dropout must be in [0, 1)");
  if (adapter_dim == 0) throw InputError("crp config: adapter_dim must be >= 1");
}

std::size_t ModelSpec::fused_dim() const {
  const std::size_t f = fnf.kind == fnf::EncoderKind::identity ? n_features : fnf.output_dim;
  if (crp.financial_only) return f;
  return f + (crp.mode == PipelineMode::precompute ? crp.adapter_dim : arf.output_dim);
}

void ModelSpec::validate() const {
  fnf.validate();
  arf.validate();
  crp.validate();
  if (n_features == 0) throw InputError("model spec: n_features must be >= 1");
  // Only the logistic-regression baseline (identity encoder) may skip hidden layers.
  if (crp.hidden.empty() && fnf.kind != fnf::EncoderKind::identity) {
    throw InputError("crp config: at least one hidden layer is required");
  }
  if (crp.mode == PipelineMode::precompute && !crp.financial_only && arf_input_dim == 0) {
    throw InputError("model spec: arf_input_dim must be >= 1 in precompute mode");
  }
}

std::uint64_t ModelSpec::digest() const { return arf::fnv1a64(config::to_json(*this).dump()); }

template <class T>
MlpHead<T>::MlpHead(ParameterSet<T>& params, const std::string& name, std::size_t in,
                    const std::vector<std::size_t>& hidden, std::size_t classes, double dropout, Rng& rng)
    : in_(in), dropout_(dropout) {
  std::size_t width = in;
  for (std::size_t k = 0; k < hidden.size(); ++k) {
    hidden_.emplace_back(params, name + ".hidden" + std::to_string(k), width, hidden[k], rng);
    width = hidden[k];
  }
  out_ = nx::Linear<T>(params, name + ".out", width, classes, rng);
}

template <class T>
Var<T> MlpHead<T>::logits(const Var<T>& z, bool training, Rng* dropout_rng) const {
  if (z.value().rank() != 2 || z.cols() != in_) {
    throw ShapeError("head expects [B x " + std::to_string(in_) + "], got " + nx::to_string(z.shape()));
  }
  if (training && dropout_ > 0.0 && !dropout_rng) throw std::invalid_argument("training dropout needs an rng");
  Var<T> h = z;
  for (const auto& layer : hidden_) {
    h = nx::relu(layer.forward(h));
    if (training && dropout_ > 0.0) h = nx::dropout(h, dropout_, *dropout_rng);
  }
  return out_.forward(h);
}

template <class T>
Batch<T> make_batch(const std::vector<data::Sample>& samples, std::span<const std::size_t> idx, const ModelSpec& spec,
                    const arf::ArfeCache* sentence_cache) {
  if (idx.empty()) throw InputError("empty batch");
  const std::size_t n = spec.n_features;
  const bool wants_arf = !spec.crp.financial_only;
  const bool precompute = spec.crp.mode == PipelineMode::precompute;
  if (wants_arf && !precompute) {
    if (!sentence_cache) throw ModeError("end_to_end mode needs sentence embeddings (an ARFE cache)");
    if (sentence_cache->dim != spec.arf.embed_dim) {
      throw ModeError("sentence embedding dimension " + std::to_string(sentence_cache->dim) +
                      " does not match arf.embed_dim " + std::to_string(spec.arf.embed_dim));
    }
  }

  Batch<T> b;
  b.financial = Tensor<T>({idx.size(), n});
  if (wants_arf && precompute) b.arf = Tensor<T>({idx.size(), spec.arf_input_dim});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& s = samples.at(idx[r]);
    if (s.financial.size() != n) {
      throw InputError("sample " + s.key() + " has " + std::to_string(s.financial.size()) +
                       " financial values, model expects " + std::to_string(n));
    }
    for (std::size_t j = 0; j < n; ++j) b.financial.at(r, j) = static_cast<T>(s.financial[j]);
    if (wants_arf && precompute) {
      if (!s.arf) throw ModeError("sample " + s.key() + " has no stored ARF vector (precompute mode)");
      if (s.arf->size() != spec.arf_input_dim) {
        throw ModeError("sample " + s.key() + " ARF vector has length " + std::to_string(s.arf->size()) +
                        ", model expects " + std::to_string(spec.arf_input_dim));
      }
      for (std::size_t j = 0; j < spec.arf_input_dim; ++j) b.arf.at(r, j) = static_cast<T>((*s.arf)[j]);
    } else if (wants_arf) {
      b.sentences.push_back(sentence_cache->at(s.key()));
    }
    b.labels.push_back(data::index_of(s.label));
  }
  return b;
}

template <class T>
CreditModel<T>::CreditModel(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(spec_.init_seed);
  encoder_ = fnf::make_encoder<T>(params_, "fnf", spec_.fnf, spec_.n_features, spec_.projection_seed, rng);
  if (!spec_.crp.financial_only) {
    if (spec_.crp.mode == PipelineMode::precompute) {
      adapter_.emplace(params_, "arf.adapter", spec_.arf_input_dim, spec_.crp.adapter_dim, rng);
    } else {
      report_ = std::make_unique<arf::ReportEncoder<T>>(params_, "arf.encoder", spec_.arf, rng);
    }
  }
  head_ = MlpHead<T>(params_, "crp", spec_.fused_dim(), spec_.crp.hidden, data::kNumClasses, spec_.crp.dropout, rng);
}

template <class T>
Var<T> CreditModel<T>::fused(const Batch<T>& batch) const {
  if (batch.financial.rank() != 2 || batch.financial.cols() != spec_.n_features) {
    throw ShapeError("financial batch must be [B x " + std::to_string(spec_.n_features) + "]");
  }
  const auto xf = encoder_->forward(Var<T>(batch.financial));
  Var<T> xa;
  if (adapter_) {
    if (batch.arf.empty() || batch.arf.rows() != batch.financial.rows()) {
      throw ModeError("batch lacks stored ARF vectors required by precompute mode");
    }
    xa = nx::relu(adapter_->forward(Var<T>(batch.arf)));
  } else if (report_) {
    if (batch.sentences.size() != batch.financial.rows()) {
      throw ModeError("batch lacks sentence embeddings required by end_to_end mode");
    }
    std::vector<Var<T>> rows;
    rows.reserve(batch.sentences.size());
    for (const auto& s : batch.sentences) rows.push_back(report_->forward(Var<T>(s.template cast<T>())));
    xa = nx::concat_rows(rows);
  }
  return fuse(xf, xa);
}

template <class T>
Var<T> CreditModel<T>::logits(const Batch<T>& batch, bool training, Rng* dropout_rng) const {
  return head_.logits(fused(batch), training, dropout_rng);
}

template class MlpHead<float>;
template class MlpHead<double>;
template class CreditModel<float>;
template class CreditModel<double>;
template Batch<float> make_batch<float>(const std::vector<data::Sample>&, std::span<const std::size_t>,
                                        const ModelSpec&, const arf::ArfeCache*);
template Batch<double> make_batch<double>(const std::vector<data::Sample>&, std::span<const std::size_t>,
                                          const ModelSpec&, const arf::ArfeCache*);

}  // namespace creditarf::crp
