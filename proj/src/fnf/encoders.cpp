#include "creditarf/fnf/encoders.hpp"

#include <algorithm>
#include <cmath>

#include "creditarf/error.hpp"

namespace creditarf::fnf {

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::identity:
      return "identity";
    case EncoderKind::cnn:
      return "cnn";
    case EncoderKind::gnn:
      return "gnn";
    case EncoderKind::rnn:
      return "rnn";
  }
  return "?";
}

EncoderKind encoder_kind_from_string(std::string_view name) {
  for (auto k : {EncoderKind::identity, EncoderKind::cnn, EncoderKind::gnn, EncoderKind::rnn}) {
    if (to_string(k) == name) return k;
  }
  throw InputError("unknown financial encoder '" + std::string(name) + "' (expected cnn, gnn, rnn or identity)");
}

void FnfConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw InputError("fnf config: " + what);
  };
  need(output_dim >= 1, "output_dim must be >= 1");
  need(image_side >= 4 && image_side % 4 == 0, "image_side must be a positive multiple of 4");
  need(conv1_channels >= 1 && conv2_channels >= 1, "conv channels must be >= 1");
  need(kernel % 2 == 1, "kernel must be odd");
  need(node_dim >= 1 && gat_hidden >= 1, "gnn dimensions must be >= 1");
  need(gat_slope >= 0, "gat_slope must be >= 0");
  need(lstm_hidden >= 1, "lstm_hidden must be >= 1");
  need(step_dim >= 2, "step_dim must be >= 2");
}

Tensor<double> make_projection(std::size_t n_features, std::size_t side, std::uint64_t seed) {
  if (n_features == 0) throw ShapeError("projection needs at least one feature");
  Tensor<double> p({n_features, 3 * side * side});
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(n_features));
  for (auto& v : p.values()) v = rng.normal() * s;
  return p;
}

std::vector<double> project_channels(const std::vector<double>& x, const Tensor<double>& projection) {
  if (x.size() != projection.rows()) {
    throw ShapeError("projection expects " + std::to_string(projection.rows()) + " features, got " +
                     std::to_string(x.size()));
  }
  const std::size_t out = projection.cols();
  std::vector<double> y(out, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double* row = projection.data() + i * out;
    for (std::size_t j = 0; j < out; ++j) y[j] += x[i] * row[j];
  }
  return y;
}

ImageEncoding encode_image(const std::vector<double>& channels, std::size_t side) {
  const std::size_t plane = side * side;
  if (side == 0 || channels.size() != 3 * plane) {
    throw ShapeError("image encoding expects 3*" + std::to_string(side) + "^2 values, got " +
                     std::to_string(channels.size()));
  }
  ImageEncoding img{side, std::vector<std::uint8_t>(channels.size(), 0)};
  for (std::size_t c = 0; c < 3; ++c) {
    const auto first = channels.begin() + static_cast<std::ptrdiff_t>(c * plane);
    const auto [lo, hi] = std::minmax_element(first, first + static_cast<std::ptrdiff_t>(plane));
    const double mn = *lo, mx = *hi;
    if (!(mx > mn)) continue;
    for (std::size_t i = 0; i < plane; ++i) {
      const double v = std::round((channels[c * plane + i] - mn) / (mx - mn) * 255.0);
      img.cells[c * plane + i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
    }
  }
  return img;
}

template <class T>
Var<T> IdentityEncoder<T>::forward(const Var<T>& x) const {
  if (x.cols() != n_) throw ShapeError("identity encoder expects " + std::to_string(n_) + " features");
  return x;
}

template <class T>
CnnEncoder<T>::CnnEncoder(ParameterSet<T>& params, const std::string& name, const FnfConfig& config,
                          std::size_t n_features, std::uint64_t projection_seed, Rng& rng)
    : side_(config.image_side),
      n_features_(n_features),
      projection_(make_projection(n_features, config.image_side, projection_seed)) {
  const std::size_t k = config.kernel, c1 = config.conv1_channels, c2 = config.conv2_channels;
  k1_ = params.add(name + ".conv1.kernels", nx::init_uniform<T>({c1, 3, k, k}, 3 * k * k, rng));
  b1_ = params.add(name + ".conv1.bias", nx::init_uniform<T>({c1}, 3 * k * k, rng));
  k2_ = params.add(name + ".conv2.kernels", nx::init_uniform<T>({c2, c1, k, k}, c1 * k * k, rng));
  b2_ = params.add(name + ".conv2.bias", nx::init_uniform<T>({c2}, c1 * k * k, rng));
  const std::size_t flat = c2 * (side_ / 4) * (side_ / 4);
  head_ = nx::Linear<T>(params, name + ".head", flat, config.output_dim, rng);
}

template <class T>
Tensor<T> CnnEncoder<T>::images(const Tensor<T>& x) const {
  if (x.cols() != n_features_) {
    throw ShapeError("cnn encoder expects " + std::to_string(n_features_) + " features, got " +
                     std::to_string(x.cols()));
  }
  const std::size_t batch = x.rows(), cells = 3 * side_ * side_;
  Tensor<T> out({batch, 3, side_, side_});
  std::vector<double> row(n_features_);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < n_features_; ++j) row[j] = static_cast<double>(x.at(b, j));
    const auto img = encode_image(project_channels(row, projection_), side_);
    for (std::size_t i = 0; i < cells; ++i) out[b * cells + i] = static_cast<T>(img.cells[i]) / T{255};
  }
  return out;
}

template <class T>
Var<T> CnnEncoder<T>::forward(const Var<T>& x) const {
  const std::size_t pad = k1_.shape()[2] / 2;
  auto h = nx::constant(images(x.value()));
  h = nx::maxpool2d(nx::relu(nx::conv2d(h, k1_, b1_, 1, pad)));
  h = nx::maxpool2d(nx::relu(nx::conv2d(h, k2_, b2_, 1, pad)));
  h = nx::reshape(h, {x.rows(), head_.in_features()});
  return head_.forward(h);
}

template <class T>
GnnEncoder<T>::GnnEncoder(ParameterSet<T>& params, const std::string& name, const FnfConfig& config,
                          std::size_t n_features, Rng& rng)
    : n_features_(n_features) {
  embedding_ = params.add(name + ".embedding", nx::init_uniform<T>({n_features, config.node_dim}, 1, rng));
  gat1_ = nx::GatLayer<T>(params, name + ".gat1", config.node_dim, config.gat_hidden, config.gat_slope, rng);
  gat2_ = nx::GatLayer<T>(params, name + ".gat2", config.gat_hidden, config.gat_hidden, config.gat_slope, rng);
  head_ = nx::Linear<T>(params, name + ".head", config.gat_hidden, config.output_dim, rng);
}

template <class T>
Var<T> GnnEncoder<T>::node_features(const Var<T>& x) const {
  if (x.cols() != n_features_) {
    throw ShapeError("gnn encoder expects " + std::to_string(n_features_) + " features, got " +
                     std::to_string(x.cols()));
  }
  // x flattened row-major lines up with the tiled embedding rows
  auto values = nx::reshape(x, {x.rows() * n_features_, 1});
  return nx::mul_rows(nx::repeat_rows(embedding_, x.rows()), values);
}

template <class T>
Var<T> GnnEncoder<T>::forward(const Var<T>& x) const {
  auto h = gat1_.forward(node_features(x), n_features_);
  h = gat2_.forward(nx::elu(h), n_features_);
  return head_.forward(nx::group_mean_rows(h, n_features_));
}

template <class T>
RnnEncoder<T>::RnnEncoder(ParameterSet<T>& params, const std::string& name, const FnfConfig& config,
                          std::size_t n_features, Rng& rng)
    : n_features_(n_features) {
  embedding_ = params.add(name + ".embedding", nx::init_uniform<T>({n_features, config.step_dim - 1}, 1, rng));
  lstm_ = nx::Lstm<T>(params, name + ".lstm", config.step_dim, config.lstm_hidden, rng);
  head_ = nx::Linear<T>(params, name + ".head", config.lstm_hidden, config.output_dim, rng);
}

template <class T>
std::vector<Var<T>> RnnEncoder<T>::steps(const Var<T>& x) const {
  if (x.cols() != n_features_) {
    throw ShapeError("rnn encoder expects " + std::to_string(n_features_) + " features, got " +
                     std::to_string(x.cols()));
  }
  std::vector<Var<T>> out;
  out.reserve(n_features_);
  for (std::size_t j = 0; j < n_features_; ++j) {
    auto index = nx::repeat_rows(nx::slice_rows(embedding_, j, 1), x.rows());
    out.push_back(nx::concat_cols<T>({index, nx::slice_cols(x, j, 1)}));
  }
  return out;
}

template <class T>
Var<T> RnnEncoder<T>::forward(const Var<T>& x) const {
  return head_.forward(lstm_.forward(steps(x)));
}

template <class T>
std::unique_ptr<FinancialEncoder<T>> make_encoder(ParameterSet<T>& params, const std::string& name,
                                                  const FnfConfig& config, std::size_t n_features,
                                                  std::uint64_t projection_seed, Rng& rng) {
  config.validate();
  if (n_features == 0) throw ShapeError("financial encoder needs at least one feature");
  switch (config.kind) {
    case EncoderKind::identity:
      return std::make_unique<IdentityEncoder<T>>(n_features);
    case EncoderKind::cnn:
      return std::make_unique<CnnEncoder<T>>(params, name, config, n_features, projection_seed, rng);
    case EncoderKind::gnn:
      return std::make_unique<GnnEncoder<T>>(params, name, config, n_features, rng);
    case EncoderKind::rnn:
      return std::make_unique<RnnEncoder<T>>(params, name, config, n_features, rng);
  }
  throw InputError("unknown financial encoder kind");
}

#define CREDITARF_INSTANTIATE_FNF(T)                                                                        \
  template class IdentityEncoder<T>;                                                                        \
  template class CnnEncoder<T>;                                                                             \
  template class GnnEncoder<T>;                                                                             \
  template class RnnEncoder<T>;                                                                             \
  template std::unique_ptr<FinancialEncoder<T>> make_encoder<T>(ParameterSet<T>&, const std::string&,      \
                                                                const FnfConfig&, std::size_t, std::uint64_t, \
                                                                Rng&);

CREDITARF_INSTANTIATE_FNF(float)
CREDITARF_INSTANTIATE_FNF(double)

}  // namespace creditarf::fnf
