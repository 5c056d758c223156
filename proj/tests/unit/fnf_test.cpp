#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "creditarf/error.hpp"
#include "creditarf/fnf/encoders.hpp"
#include "test_util.hpp"

namespace creditarf {
namespace {

using fnf::EncoderKind;
using fnf::FnfConfig;
using nx::ParameterSet;
using nx::Rng;
using nx::Tensor;
using nx::Var;
using testing::random_tensor;

constexpr std::size_t kFeatures = 16;

FnfConfig config_for(EncoderKind kind) {
  FnfConfig c;
  c.kind = kind;
  return c;
}

void zero_all(ParameterSet<double>& params) {
  for (const auto& p : params) nx::Var<double>(p.var).mutable_value().fill(0.0);
}

// ---- plain-loop reference math ----

using Vol = std::vector<double>;  // [C x H x W]

Vol ref_conv(const Vol& in, std::size_t c_in, std::size_t hw, const Tensor<double>& k, const Tensor<double>& b) {
  const std::size_t f_out = k.shape()[0], kk = k.shape()[2];
  const long pad = static_cast<long>(kk / 2);
  Vol out(f_out * hw * hw, 0.0);
  for (std::size_t f = 0; f < f_out; ++f)
    for (std::size_t y = 0; y < hw; ++y)
      for (std::size_t x = 0; x < hw; ++x) {
        double acc = b[f];
        for (std::size_t c = 0; c < c_in; ++c)
          for (std::size_t i = 0; i < kk; ++i)
            for (std::size_t j = 0; j < kk; ++j) {
              const long yy = static_cast<long>(y + i) - pad, xx = static_cast<long>(x + j) - pad;
              if (yy < 0 || xx < 0 || yy >= static_cast<long>(hw) || xx >= static_cast<long>(hw)) continue;
              acc += in[(c * hw + yy) * hw + xx] * k[((f * c_in + c) * kk + i) * kk + j];
            }
        out[(f * hw + y) * hw + x] = acc;
      }
  return out;
}

Vol ref_relu_pool(const Vol& in, std::size_t ch, std::size_t hw) {
  const std::size_t o = hw / 2;
  Vol out(ch * o * o);
  for (std::size_t c = 0; c < ch; ++c)
    for (std::size_t y = 0; y < o; ++y)
      for (std::size_t x = 0; x < o; ++x) {
        double m = -1e300;
        for (std::size_t i = 0; i < 2; ++i)
          for (std::size_t j = 0; j < 2; ++j) m = std::max(m, in[(c * hw + 2 * y + i) * hw + 2 * x + j]);
        out[(c * o + y) * o + x] = std::max(m, 0.0);
      }
  return out;
}

std::vector<double> ref_linear(const std::vector<double>& x, const nx::Linear<double>& lin) {
  return testing::ref::affine(x, testing::to_mat(lin.weight().value()), testing::to_vec(lin.bias().value()));
}

// alpha and output of one GAT layer for a single graph of d nodes
struct GatRef {
  std::vector<std::vector<double>> alpha;
  std::vector<std::vector<double>> out;
};

GatRef ref_gat(const std::vector<std::vector<double>>& nodes, const nx::GatLayer<double>& layer) {
  const auto theta = testing::to_mat(layer.theta().value());
  const auto a1 = testing::to_vec(layer.attn_src().value());
  const auto a2 = testing::to_vec(layer.attn_dst().value());
  const std::size_t d = nodes.size(), f = theta[0].size();
  std::vector<std::vector<double>> h(d, std::vector<double>(f, 0.0));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < theta.size(); ++k)
      for (std::size_t c = 0; c < f; ++c) h[i][c] += nodes[i][k] * theta[k][c];
  GatRef r;
  r.alpha.assign(d, std::vector<double>(d));
  r.out.assign(d, std::vector<double>(f, 0.0));
  for (std::size_t i = 0; i < d; ++i) {
    double z = 0;
    for (std::size_t j = 0; j < d; ++j) {
      double e = 0;
      for (std::size_t c = 0; c < f; ++c) e += a1[c] * h[i][c] + a2[c] * h[j][c];
      e = e > 0 ? e : layer.slope() * e;
      r.alpha[i][j] = std::exp(e);
      z += r.alpha[i][j];
    }
    for (std::size_t j = 0; j < d; ++j) {
      r.alpha[i][j] /= z;
      for (std::size_t c = 0; c < f; ++c) r.out[i][c] += r.alpha[i][j] * h[j][c];
    }
  }
  return r;
}

std::vector<double> ref_lstm_final(const std::vector<std::vector<double>>& steps, const nx::LstmCell<double>& cell,
                                   const ParameterSet<double>& params, const std::string& name) {
  const auto wx = testing::to_mat(params.get(name + ".wx").value());
  const auto wh = testing::to_mat(params.get(name + ".wh").value());
  const auto b = testing::to_vec(params.get(name + ".b").value());
  const std::size_t hd = cell.hidden();
  std::vector<double> h(hd, 0.0), c(hd, 0.0);
  for (const auto& x : steps) {
    std::vector<double> g = b;
    for (std::size_t k = 0; k < x.size(); ++k)
      for (std::size_t j = 0; j < 4 * hd; ++j) g[j] += x[k] * wx[k][j];
    for (std::size_t k = 0; k < hd; ++k)
      for (std::size_t j = 0; j < 4 * hd; ++j) g[j] += h[k] * wh[k][j];
    for (std::size_t j = 0; j < hd; ++j) {
      const double i = testing::ref::sigmoid(g[j]), f = testing::ref::sigmoid(g[hd + j]);
      const double gg = std::tanh(g[2 * hd + j]), o = testing::ref::sigmoid(g[3 * hd + j]);
      c[j] = f * c[j] + i * gg;
      h[j] = o * std::tanh(c[j]);
    }
  }
  return h;
}

// ---- projection and image encoding ----

TEST(ProjectChannels, ZeroVectorMapsToZero) {
  const auto p = fnf::make_projection(kFeatures, 8, 3);
  const auto y = fnf::project_channels(std::vector<double>(kFeatures, 0.0), p);
  ASSERT_EQ(y.size(), 192u);
  for (double v : y) EXPECT_EQ(v, 0.0);
}

TEST(ProjectChannels, SameSeedSameMatrix) {
  EXPECT_EQ(fnf::make_projection(kFeatures, 8, 42), fnf::make_projection(kFeatures, 8, 42));
  EXPECT_FALSE(fnf::make_projection(kFeatures, 8, 42) == fnf::make_projection(kFeatures, 8, 43));
}

TEST(ProjectChannels, WrongLengthRejected) {
  const auto p = fnf::make_projection(4, 8, 1);
  EXPECT_THROW(fnf::project_channels({1.0, 2.0}, p), ShapeError);
}

TEST(EncodeImage, AnalyticChannel) {
  // side 2: each channel holds 4 cells
  const auto img = fnf::encode_image({0, 1, 2, 3, 5, 5, 5, 5, -1, 1, 0, 1}, 2);
  EXPECT_EQ(std::vector<int>(img.cells.begin(), img.cells.begin() + 4), (std::vector<int>{0, 85, 170, 255}));
  for (std::size_t i = 4; i < 8; ++i) EXPECT_EQ(img.cells[i], 0);
  EXPECT_EQ(img.at(2, 0, 0), 0);
  EXPECT_EQ(img.at(2, 0, 1), 255);
  EXPECT_EQ(img.at(2, 1, 0), 128);  // round(127.5)
}

TEST(EncodeImage, EndpointsAndRangeProperty) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> ch(192);
    for (auto& v : ch) v = rng.normal() * std::exp(rng.uniform(-5, 5));
    const auto img = fnf::encode_image(ch, 8);
    for (std::size_t c = 0; c < 3; ++c) {
      const auto first = ch.begin() + static_cast<long>(c * 64);
      const auto mn = std::min_element(first, first + 64) - ch.begin();
      const auto mx = std::max_element(first, first + 64) - ch.begin();
      EXPECT_EQ(img.cells[static_cast<std::size_t>(mn)], 0);
      EXPECT_EQ(img.cells[static_cast<std::size_t>(mx)], 255);
      for (std::size_t i = 0; i < 64; ++i) {
        const double expect = std::round((ch[c * 64 + i] - ch[mn]) / (ch[mx] - ch[mn]) * 255.0);
        EXPECT_EQ(img.cells[c * 64 + i], static_cast<int>(expect));
      }
    }
  }
}

TEST(EncodeImage, ScaleInvariantThroughLinearProjection) {
  Rng rng(23);
  const auto p = fnf::make_projection(kFeatures, 8, 5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(kFeatures);
    for (auto& v : x) v = rng.normal();
    const double s = rng.uniform(0.1, 10.0);
    std::vector<double> xs = x;
    for (auto& v : xs) v *= s;
    const auto a = fnf::encode_image(fnf::project_channels(x, p), 8);
    const auto b = fnf::encode_image(fnf::project_channels(xs, p), 8);
    EXPECT_EQ(a.cells, b.cells);
  }
}

// ---- CNN ----

TEST(CnnEncoder, OutputLength) {
  ParameterSet<float> params;
  Rng rng(1);
  auto enc = fnf::make_encoder<float>(params, "fnf", config_for(EncoderKind::cnn), kFeatures, 9, rng);
  auto x = random_tensor<float>({5, kFeatures}, rng);
  const auto y = enc->forward(nx::constant(x));
  EXPECT_EQ(y.shape(), (nx::Shape{5, 64}));
}

TEST(CnnEncoder, ZeroImageZeroBiasesGiveZero) {
  ParameterSet<double> params;
  Rng rng(2);
  fnf::CnnEncoder<double> enc(params, "fnf", config_for(EncoderKind::cnn), kFeatures, 9, rng);
  for (auto& p : params) {
    if (p.name.find("bias") != std::string::npos) Var<double>(p.var).mutable_value().fill(0.0);
  }
  const auto y = enc.forward(nx::constant(Tensor<double>({2, kFeatures}, 0.0)));
  for (double v : y.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(CnnEncoder, MatchesStepwiseOracle) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    ParameterSet<double> params;
    Rng rng(100 + seed);
    const auto cfg = config_for(EncoderKind::cnn);
    fnf::CnnEncoder<double> enc(params, "fnf", cfg, kFeatures, seed, rng);
    auto x = random_tensor<double>({3, kFeatures}, rng);
    const auto y = enc.forward(nx::constant(x));
    for (std::size_t b = 0; b < 3; ++b) {
      std::vector<double> row(kFeatures);
      for (std::size_t j = 0; j < kFeatures; ++j) row[j] = x.at(b, j);
      const auto img = fnf::encode_image(fnf::project_channels(row, enc.projection()), 8);
      Vol v(img.cells.begin(), img.cells.end());
      for (auto& c : v) c /= 255.0;
      v = ref_relu_pool(ref_conv(v, 3, 8, enc.conv1_kernels().value(), enc.conv1_bias().value()), 16, 8);
      v = ref_relu_pool(ref_conv(v, 16, 4, enc.conv2_kernels().value(), enc.conv2_bias().value()), 32, 4);
      const auto expect = ref_linear(v, enc.head());
      for (std::size_t k = 0; k < 64; ++k) EXPECT_NEAR(y.value().at(b, k), expect[k], 1e-10);
    }
  }
}

// ---- GAT ----

TEST(GatLayer, SingleNodeAttendsToItself) {
  ParameterSet<double> params;
  Rng rng(4);
  nx::GatLayer<double> layer(params, "g", 3, 2, 0.2, rng);
  auto x = random_tensor<double>({1, 3}, rng);
  Tensor<double> alpha;
  const auto y = layer.forward(nx::constant(x), 1, &alpha);
  EXPECT_DOUBLE_EQ(alpha[0], 1.0);
  const auto expect = nx::matmul(nx::constant(x), layer.theta()).value();
  for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(y.value()[c], expect[c], 1e-12);
}

TEST(GatLayer, IdenticalNodesSplitAttentionEvenly) {
  ParameterSet<double> params;
  Rng rng(5);
  nx::GatLayer<double> layer(params, "g", 3, 4, 0.2, rng);
  auto row = random_tensor<double>({1, 3}, rng);
  Tensor<double> alpha;
  layer.forward(nx::repeat_rows(nx::constant(row), 2), 2, &alpha);
  for (double a : alpha.values()) EXPECT_NEAR(a, 0.5, 1e-12);
}

TEST(GatLayer, AttentionMatchesDirectFormula) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ParameterSet<double> params;
    Rng rng(200 + seed);
    nx::GatLayer<double> layer(params, "g", 5, 3, 0.2, rng);
    auto x = random_tensor<double>({4, 5}, rng, -2, 2);
    Tensor<double> alpha;
    const auto y = layer.forward(nx::constant(x), 4, &alpha);
    const auto r = ref_gat(testing::to_mat(x), layer);
    for (std::size_t i = 0; i < 4; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_NEAR(alpha.at(i, j), r.alpha[i][j], 1e-6);
        EXPECT_GE(alpha.at(i, j), 0.0);
        s += alpha.at(i, j);
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
      for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(y.value().at(i, c), r.out[i][c], 1e-10);
    }
  }
}

TEST(GatLayer, BatchedGraphsStayIndependent) {
  ParameterSet<double> params;
  Rng rng(6);
  nx::GatLayer<double> layer(params, "g", 3, 3, 0.2, rng);
  auto x = random_tensor<double>({6, 3}, rng);
  const auto both = layer.forward(nx::constant(x), 3).value();
  const auto second = layer.forward(nx::slice_rows(nx::constant(x), 3, 3), 3).value();
  for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(both[9 + i], second[i], 1e-12);
}

// ---- GNN ----

TEST(GnnEncoder, OutputLength) {
  ParameterSet<float> params;
  Rng rng(7);
  auto enc = fnf::make_encoder<float>(params, "fnf", config_for(EncoderKind::gnn), kFeatures, 0, rng);
  EXPECT_EQ(enc->forward(nx::constant(random_tensor<float>({4, kFeatures}, rng))).shape(), (nx::Shape{4, 64}));
}

TEST(GnnEncoder, NodePermutationLeavesOutputUnchanged) {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    ParameterSet<double> params;
    fnf::GnnEncoder<double> enc(params, "fnf", config_for(EncoderKind::gnn), kFeatures, rng);
    auto x = random_tensor<double>({2, kFeatures}, rng);
    const auto before = enc.forward(nx::constant(x)).value();

    std::vector<std::size_t> perm(kFeatures);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    auto px = x;
    const auto emb = enc.embedding().value();
    auto& emb_mut = params.get("fnf.embedding").mutable_value();
    const std::size_t d = emb.cols();
    for (std::size_t j = 0; j < kFeatures; ++j) {
      for (std::size_t b = 0; b < 2; ++b) px[b * kFeatures + j] = x[b * kFeatures + perm[j]];
      for (std::size_t c = 0; c < d; ++c) emb_mut[j * d + c] = emb[perm[j] * d + c];
    }
    const auto after = enc.forward(nx::constant(px)).value();
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(after[i], before[i], 1e-10);
  }
}

TEST(GnnEncoder, MatchesLayerByLayerOracle) {
  ParameterSet<double> params;
  Rng rng(9);
  fnf::GnnEncoder<double> enc(params, "fnf", config_for(EncoderKind::gnn), kFeatures, rng);
  auto x = random_tensor<double>({2, kFeatures}, rng);
  const auto y = enc.forward(nx::constant(x)).value();
  const auto emb = testing::to_mat(enc.embedding().value());
  for (std::size_t b = 0; b < 2; ++b) {
    std::vector<std::vector<double>> nodes(kFeatures);
    for (std::size_t j = 0; j < kFeatures; ++j) {
      nodes[j] = emb[j];
      for (auto& v : nodes[j]) v *= x.at(b, j);
    }
    auto h = ref_gat(nodes, enc.layer1()).out;
    for (auto& row : h)
      for (auto& v : row) v = v > 0 ? v : std::exp(v) - 1.0;
    h = ref_gat(h, enc.layer2()).out;
    std::vector<double> pooled(h[0].size(), 0.0);
    for (const auto& row : h)
      for (std::size_t c = 0; c < row.size(); ++c) pooled[c] += row[c] / kFeatures;
    const auto expect = ref_linear(pooled, enc.head());
    for (std::size_t k = 0; k < 64; ++k) EXPECT_NEAR(y.at(b, k), expect[k], 1e-10);
  }
}

// ---- RNN ----

TEST(RnnEncoder, OutputLength) {
  ParameterSet<float> params;
  Rng rng(10);
  auto enc = fnf::make_encoder<float>(params, "fnf", config_for(EncoderKind::rnn), kFeatures, 0, rng);
  EXPECT_EQ(enc->forward(nx::constant(random_tensor<float>({3, kFeatures}, rng))).shape(), (nx::Shape{3, 64}));
}

TEST(RnnEncoder, ZeroParametersGiveZero) {
  ParameterSet<double> params;
  Rng rng(11);
  fnf::RnnEncoder<double> enc(params, "fnf", config_for(EncoderKind::rnn), kFeatures, rng);
  zero_all(params);
  const auto y = enc.forward(nx::constant(random_tensor<double>({2, kFeatures}, rng)));
  for (double v : y.value().values()) EXPECT_EQ(v, 0.0);
}

TEST(RnnEncoder, MatchesUnrolledLstmOracle) {
  ParameterSet<double> params;
  Rng rng(12);
  fnf::RnnEncoder<double> enc(params, "fnf", config_for(EncoderKind::rnn), kFeatures, rng);
  auto x = random_tensor<double>({2, kFeatures}, rng);
  const auto y = enc.forward(nx::constant(x)).value();
  const auto emb = testing::to_mat(enc.embedding().value());
  for (std::size_t b = 0; b < 2; ++b) {
    std::vector<std::vector<double>> steps;
    for (std::size_t j = 0; j < kFeatures; ++j) {
      auto s = emb[j];
      s.push_back(x.at(b, j));
      steps.push_back(s);
    }
    const auto h = ref_lstm_final(steps, enc.lstm().cell(), params, "fnf.lstm");
    const auto expect = ref_linear(h, enc.head());
    for (std::size_t k = 0; k < 64; ++k) EXPECT_NEAR(y.at(b, k), expect[k], 1e-10);
  }
}

// ---- shared contracts ----

TEST(Encoders, SameOutputDimensionAcrossKinds) {
  for (std::size_t f : {8u, 64u}) {
    for (auto kind : {EncoderKind::cnn, EncoderKind::gnn, EncoderKind::rnn}) {
      ParameterSet<float> params;
      Rng rng(13);
      auto cfg = config_for(kind);
      cfg.output_dim = f;
      auto enc = fnf::make_encoder<float>(params, "fnf", cfg, kFeatures, 1, rng);
      EXPECT_EQ(enc->output_dim(), f);
      EXPECT_EQ(enc->forward(nx::constant(random_tensor<float>({2, kFeatures}, rng))).cols(), f);
    }
  }
}

TEST(Encoders, EveryParameterReceivesGradient) {
  for (auto kind : {EncoderKind::cnn, EncoderKind::gnn, EncoderKind::rnn}) {
    ParameterSet<float> params;
    Rng init(14);
    auto enc = fnf::make_encoder<float>(params, "fnf", config_for(kind), kFeatures, 3, init);
    std::vector<bool> touched(params.size(), false);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      auto x = random_tensor<float>({8, kFeatures}, rng, -2, 2);
      nx::backward(nx::sum(nx::mul(enc->forward(nx::constant(x)),
                                   nx::constant(random_tensor<float>({8, 64}, rng)))));
      for (std::size_t i = 0; i < params.size(); ++i) {
        for (float g : params[i].var.grad().values()) touched[i] = touched[i] || g != 0.0f;
      }
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      EXPECT_TRUE(touched[i]) << fnf::to_string(kind) << " " << params[i].name;
    }
  }
}

TEST(Encoders, ParameterGradientsMatchFiniteDifferences) {
  FnfConfig small;
  small.output_dim = 4;
  small.conv1_channels = 2;
  small.conv2_channels = 3;
  small.node_dim = 3;
  small.gat_hidden = 3;
  small.lstm_hidden = 3;
  small.step_dim = 3;
  for (auto kind : {EncoderKind::gnn, EncoderKind::rnn, EncoderKind::cnn}) {
    small.kind = kind;
    ParameterSet<double> params;
    Rng rng(15);
    auto enc = fnf::make_encoder<double>(params, "fnf", small, 5, 2, rng);
    auto x = nx::constant(random_tensor<double>({2, 5}, rng, -2, 2));
    std::vector<Var<double>> inputs;
    for (auto& p : params) inputs.push_back(p.var);
    const auto r = nx::grad_check([&](const std::vector<Var<double>>&) { return enc->forward(x); }, inputs, 3);
    EXPECT_LT(r.max_rel_error, 1e-3) << fnf::to_string(kind) << " worst " << r.worst;
  }
}

TEST(Encoders, WrongFeatureCountRejected) {
  for (auto kind : {EncoderKind::identity, EncoderKind::cnn, EncoderKind::gnn, EncoderKind::rnn}) {
    ParameterSet<float> params;
    Rng rng(16);
    auto enc = fnf::make_encoder<float>(params, "fnf", config_for(kind), kFeatures, 1, rng);
    EXPECT_THROW(enc->forward(nx::constant(Tensor<float>({1, kFeatures + 1}, 0.0f))), ShapeError);
  }
}

TEST(Encoders, KindNamesRoundTrip) {
  for (auto kind : {EncoderKind::identity, EncoderKind::cnn, EncoderKind::gnn, EncoderKind::rnn}) {
    EXPECT_EQ(fnf::encoder_kind_from_string(fnf::to_string(kind)), kind);
  }
  EXPECT_THROW(fnf::encoder_kind_from_string("mlp"), InputError);
}

}  // namespace
}  // namespace creditarf
