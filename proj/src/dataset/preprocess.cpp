#include "creditarf/dataset/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "creditarf/error.hpp"
#include "creditarf/numerics/rng.hpp"

namespace creditarf::data {

Standardization Standardization::fit(const std::vector<Sample>& train) {
  if (train.empty()) throw InputError("standardization needs a non-empty training split");
  const std::size_t d = train.front().financial.size();
  Standardization s;
  s.mean.assign(d, 0.0);
  s.std.assign(d, 0.0);
  for (const auto& x : train) {
    if (x.financial.size() != d) throw ShapeError("financial vectors differ in length");
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += x.financial[j];
  }
  const double n = static_cast<double>(train.size());
  for (auto& m : s.mean) m /= n;
  for (const auto& x : train) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x.financial[j] - s.mean[j];
      s.std[j] += c * c;
    }
  }
  for (auto& v : s.std) v = std::sqrt(v / n);
  return s;
}

std::vector<double> Standardization::apply(const std::vector<double>& x) const {
  if (x.size() != mean.size()) throw ShapeError("financial vector length does not match standardization stats");
  std::vector<double> z(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) z[j] = std[j] > 0 ? (x[j] - mean[j]) / std[j] : 0.0;
  return z;
}

std::vector<double> Standardization::invert(const std::vector<double>& z) const {
  if (z.size() != mean.size()) throw ShapeError("financial vector length does not match standardization stats");
  std::vector<double> x(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) x[j] = z[j] * std[j] + mean[j];
  return x;
}

void standardize(std::vector<Sample>& samples, const Standardization& stats) {
  for (auto& s : samples) s.financial = stats.apply(s.financial);
}

SplitIndices stratified_split(const std::vector<RatingClass>& labels, double train_fraction, std::uint64_t seed) {
  if (labels.empty()) throw InputError("cannot split an empty dataset");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InputError("train fraction must lie in (0, 1)");
  std::vector<std::vector<std::size_t>> by_class(kNumClasses);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[index_of(labels[i])].push_back(i);

  SplitIndices out;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& members = by_class[c];
    const std::size_t n = members.size();
    if (n == 0) continue;
    nx::Rng rng(nx::derive_seed(seed, c));
    rng.shuffle(members);
    std::size_t n_train = n;
    if (n >= 2) {
      const auto r = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
      n_train = std::clamp<std::size_t>(r, 1, n - 1);
    }
    out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

SplitIndices stratified_split(const std::vector<Sample>& samples, double train_fraction, std::uint64_t seed) {
  std::vector<RatingClass> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  return stratified_split(labels, train_fraction, seed);
}

std::vector<double> joint_features(const Sample& s) {
  std::vector<double> v = s.financial;
  if (s.arf) v.insert(v.end(), s.arf->begin(), s.arf->end());
  return v;
}

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

// Neighbors of members[i] among members, nearest first, ties by position.
std::vector<std::size_t> nearest(const std::vector<std::vector<double>>& x, const std::vector<std::size_t>& members,
                                 std::size_t i, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(members.size() - 1);
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (j != i) d.emplace_back(squared_distance(x[members[i]], x[members[j]]), j);
  }
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t t = 0; t < k; ++t) out[t] = members[d[t].second];
  return out;
}

Sample synthesize(const Sample& base, const Sample& neighbor, double lambda) {
  Sample s = base;
  s.report.clear();
  for (std::size_t j = 0; j < s.financial.size(); ++j) {
    s.financial[j] = base.financial[j] + lambda * (neighbor.financial[j] - base.financial[j]);
  }
  if (s.arf) {
    const auto& a = *base.arf;
    const auto& b = *neighbor.arf;
    for (std::size_t j = 0; j < a.size(); ++j) {
      (*s.arf)[j] = static_cast<float>(a[j] + lambda * (static_cast<double>(b[j]) - a[j]));
    }
  }
  return s;
}

}  // namespace

SmoteResult smote(const std::vector<Sample>& train, const SmoteConfig& config) {
  if (config.k_neighbors < 1) throw InputError("SMOTE needs k_neighbors >= 1");
  SmoteResult result;
  result.samples = train;
  if (train.empty()) return result;

  const bool with_arf = train.front().arf.has_value();
  const std::size_t fin_dim = train.front().financial.size();
  const std::size_t arf_dim = with_arf ? train.front().arf->size() : 0;
  for (const auto& s : train) {
    if (s.financial.size() != fin_dim || s.arf.has_value() != with_arf || (with_arf && s.arf->size() != arf_dim)) {
      throw ShapeError("SMOTE needs every sample to share one joint feature layout");
    }
  }

  std::vector<std::vector<double>> x;
  x.reserve(train.size());
  for (const auto& s : train) x.push_back(joint_features(s));

  std::vector<std::vector<std::size_t>> by_class(kNumClasses);
  for (std::size_t i = 0; i < train.size(); ++i) by_class[index_of(train[i].label)].push_back(i);
  std::size_t majority = 0;
  for (const auto& m : by_class) majority = std::max(majority, m.size());

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& members = by_class[c];
    if (members.empty() || members.size() == majority) continue;
    const std::size_t need = majority - members.size();
    nx::Rng rng(nx::derive_seed(config.seed, c));
    if (members.size() == 1) {
      result.warnings.push_back("class " + std::string(class_name(class_from_index(c))) +
                                " has a single training sample; duplicated " + std::to_string(need) + " times");
      for (std::size_t t = 0; t < need; ++t) {
        result.samples.push_back(synthesize(train[members[0]], train[members[0]], 0.0));
        result.origins.push_back({members[0], members[0]});
      }
      continue;
    }
    const std::size_t k = std::min(config.k_neighbors, members.size() - 1);
    std::vector<std::vector<std::size_t>> knn(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) knn[i] = nearest(x, members, i, k);
    for (std::size_t t = 0; t < need; ++t) {
      const std::size_t bi = rng.below(members.size());
      const std::size_t nb = knn[bi][rng.below(k)];
      const double lambda = rng.uniform();
      result.samples.push_back(synthesize(train[members[bi]], train[nb], lambda));
      result.origins.push_back({members[bi], nb});
    }
  }
  return result;
}

}  // namespace creditarf::data
